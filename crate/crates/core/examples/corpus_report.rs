//! Checks every machine of the bundled corpus: proof obligations, closed and
//! driven exploration, and refinement along each chain.

use std::time::Instant;

use eventb_kernel::checker::{check_refinement, explore, Mode};
use eventb_kernel::corpus::load_corpus;
use eventb_kernel::obligations::{self, render_table, PoStatus};
use eventb_kernel::semantics::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let start = Instant::now();
    let corpus = load_corpus()?;
    let cfg = &corpus.manifest.config;
    let mut reports = Vec::new();
    for m in corpus.manifest.machines() {
        let r = obligations::report(&corpus.project, m, cfg)?;
        let model = Model::new(&corpus.project, m, &cfg.consts)?;
        for po in &r.obligations {
            if let PoStatus::Failed(s) = &po.status {
                println!("  {m} {} failed at {:?}", po.id, model.render_state(s));
            }
        }
        reports.push(r);
    }
    print!("{}", render_table(&reports, cfg));
    for m in corpus.manifest.machines() {
        let model = Model::new(&corpus.project, m, &cfg.consts)?;
        for mode in [Mode::Closed, Mode::Driven] {
            let r = explore(&model, cfg, mode)?;
            println!(
                "{m} {mode}: {} states, {} violations, {} deadlocks, {} unanswered, uncovered {:?}, {} ms",
                r.states,
                r.violations.len(),
                r.deadlock_count,
                r.unanswered_count,
                r.uncovered(),
                r.elapsed.as_millis()
            );
            if !r.violations.is_empty() || (mode == Mode::Driven && r.deadlock_count > 0) {
                print!("{}", r.render(&model));
            }
        }
    }
    for chain in &corpus.manifest.chains {
        for pair in chain.windows(2) {
            let r = check_refinement(&corpus.project, &pair[0], &pair[1], cfg)?;
            println!(
                "{} refines {}: {}",
                pair[1],
                pair[0],
                if r.passed() { "ok" } else { "FAILED" }
            );
            if !r.passed() {
                print!("{}", r.render());
            }
        }
    }
    println!("total {} ms", start.elapsed().as_millis());
    Ok(())
}
