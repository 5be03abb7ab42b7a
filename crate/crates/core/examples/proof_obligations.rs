//! Generates and discharges the proof obligations of MBP1, then shows the
//! counterexample of a mutant that raises the wrong alarm.

use eventb_kernel::corpus::load_corpus;
use eventb_kernel::obligations::{self, render_table, PoStatus};
use eventb_kernel::semantics::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let cfg = &corpus.manifest.config;
    let report = obligations::report(&corpus.project, "MBP1", cfg)?;
    for po in &report.obligations {
        println!("{:<4} {:<11} {}", po.kind, po.status.name(), po.id);
    }
    print!("{}", render_table(std::slice::from_ref(&report), cfg));

    let mutant = corpus
        .manifest
        .mutants
        .iter()
        .find(|m| m.file.ends_with("mbp1_wrong_alarm.ebs"))
        .expect("listed");
    let project = corpus.with_mutant(mutant)?;
    let model = Model::new(&project, "MBP1", &cfg.consts)?;
    let report = obligations::report(&project, "MBP1", cfg)?;
    for po in &report.obligations {
        if let PoStatus::Failed(state) = &po.status {
            println!("\n{} fails; counterexample:", po.id);
            for (var, value) in model.render_state(state) {
                println!("  {var} = {value}");
            }
        }
    }
    Ok(())
}
