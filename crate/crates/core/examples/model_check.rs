//! Explores MTM0 in closed and in driven mode. Without sensor stimuli the
//! machine deadlocks at once; with them every monitor fires.

use eventb_kernel::checker::{explore, Mode};
use eventb_kernel::corpus::load_corpus;
use eventb_kernel::semantics::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let cfg = &corpus.manifest.config;
    let model = Model::new(&corpus.project, "MTM0", &cfg.consts)?;
    for mode in [Mode::Closed, Mode::Driven] {
        let report = explore(&model, cfg, mode)?;
        print!("{}", report.render(&model));
        for (event, n) in &report.coverage {
            if model.event(event).is_some_and(|e| !e.is_environment()) {
                println!("  {event}: fired on {n} transition(s)");
            }
        }
        if let Some(h) = report.unanswered.first() {
            println!(
                "  e.g. stimuli {} break {:?} with no monitor able to react",
                h.trace.events().join(" -> "),
                h.invariants
            );
        }
    }
    Ok(())
}
