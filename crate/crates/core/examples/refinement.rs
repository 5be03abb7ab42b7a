//! Checks the three refinement chains, then a mutant whose new event writes
//! a sensor variable of the abstract machine.

use eventb_kernel::checker::check_refinement;
use eventb_kernel::corpus::load_corpus;
use eventb_kernel::semantics::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let cfg = &corpus.manifest.config;
    for chain in &corpus.manifest.chains {
        for pair in chain.windows(2) {
            print!(
                "{}",
                check_refinement(&corpus.project, &pair[0], &pair[1], cfg)?.render()
            );
        }
    }

    let mutant = corpus
        .manifest
        .mutants
        .iter()
        .find(|m| m.file.ends_with("mtm1_writes_temperature.ebs"))
        .expect("listed");
    let project = corpus.with_mutant(mutant)?;
    let report = check_refinement(&project, "MTM0", "MTM1", cfg)?;
    print!("{}", report.render());
    // The witness is a trace: replaying it reproduces the offending state.
    let model = Model::new(&project, "MTM1", &cfg.consts)?;
    let witness = &report.failures[0].trace;
    assert_eq!(witness.replay(&model)?, *witness.last_state());
    println!("witness replays: {}", witness.events().join(" -> "));

    match check_refinement(&corpus.project, "MCP0", "MTM0", cfg) {
        Err(e) => println!("{e}"),
        Ok(_) => unreachable!("unrelated machines"),
    }
    Ok(())
}
