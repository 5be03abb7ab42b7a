//! Steps MCP1 by hand: fire events, perturb a sensor, watch hazards and
//! undo.

use eventb_kernel::animator::Session;
use eventb_kernel::corpus::load_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let mut s = Session::new(&corpus.project, "MCP1", corpus.manifest.config.clone())?;
    println!("enabled: {:?}", s.enabled());
    s.fire("startBloodPumping")?;
    s.perturb("fillingBloodVolume", "401")?;
    println!("after overfill, hazards: {:?}", s.hazards());
    println!("enabled: {:?}", s.enabled());
    s.fire("fillingBloodVolumeMonitoring")?;
    println!(
        "alarm = {}, hazards: {:?}",
        s.render("alarm").unwrap(),
        s.hazards()
    );

    if let Err(e) = s.fire("fillingBloodVolumeMonitoring") {
        println!("refused: {e}");
    }
    if let Err(e) = s.perturb("fillingBloodVolume", "9999") {
        println!("refused: {e}");
    }
    s.undo()?;
    println!("after undo, alarm = {}", s.render("alarm").unwrap());
    print!("{}", s.trace().to_json_lines(s.model()));
    Ok(())
}
