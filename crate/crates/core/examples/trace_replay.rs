//! Records a scenario trace as JSON lines, reads it back and replays it.

use eventb_kernel::animator::{run_scenario, Scenario};
use eventb_kernel::corpus::load_corpus;
use eventb_kernel::semantics::Model;
use eventb_kernel::trace::Trace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let scenario = Scenario::parse(
        "machine MTM1\nfire connectDialyser\nfire enterTherapy\nperturb dialysateTemperature 33\n\
         fire coolDialysate\nfire disconnectDialyserTherapyII\n",
    )?;
    let report = run_scenario(&scenario, &corpus.project, &corpus.manifest.config)?;
    let model = Model::new(&corpus.project, "MTM1", &corpus.manifest.config.consts)?;
    let text = report.trace.to_json_lines(&model);
    print!("{text}");

    let back = Trace::from_json_lines(&model, &text)?;
    assert_eq!(back, report.trace);
    let end = back.replay(&model)?;
    println!(
        "replayed {} steps, alarm = {}",
        back.len(),
        model.render_state(&end)["alarm"]
    );
    Ok(())
}
