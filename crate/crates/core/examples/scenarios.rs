//! Runs the threshold scenarios bundled with the corpus.

use eventb_kernel::animator::{run_scenario, Scenario};
use eventb_kernel::corpus::load_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    for entry in &corpus.manifest.scenarios {
        let text = corpus.scenario_text(entry).expect("embedded");
        let scenario = Scenario::parse(text)?;
        let report = run_scenario(&scenario, &corpus.project, &corpus.manifest.config)?;
        let verdict = if report.passed() { "pass" } else { "fail" };
        let expected = if entry.expect_pass { "pass" } else { "fail" };
        println!(
            "{:<45} {verdict} (expected {expected}, {} steps)",
            entry.file, report.steps_executed
        );
        if let Some(f) = &report.failure {
            println!("    line {}: {}", f.line, f.reason);
        }
    }
    Ok(())
}
