//! Shows how each bundled mutant of the corpus is caught.

use eventb_kernel::checker::check_refinement;
use eventb_kernel::corpus::load_corpus;
use eventb_kernel::obligations::{self, PoStatus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let cfg = &corpus.manifest.config;
    for mutant in &corpus.manifest.mutants {
        let project = corpus.with_mutant(mutant)?;
        let machine = corpus.mutant_machine(mutant).expect("listed unit");
        println!(
            "{} ({machine}, expected {:?})",
            mutant.file, mutant.detected_by
        );
        let po = obligations::report(&project, machine, cfg)?;
        for p in &po.obligations {
            if matches!(p.status, PoStatus::Failed(_)) {
                println!("  obligation {} fails", p.id);
            }
        }
        if let Some(abs) = &project.flatten_machine(machine)?.abstract_machine {
            let r = check_refinement(&project, abs, machine, cfg)?;
            for f in &r.failures {
                println!(
                    "  refinement {:?} fails on {:?}: {}",
                    f.check, f.event, f.detail
                );
            }
        }
    }
    Ok(())
}
