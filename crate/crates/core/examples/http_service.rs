//! Drives the HTTP API in process. Pass `--serve` to listen on port 8080
//! instead.

use eventb_kernel::corpus::load_corpus;
use eventb_kernel::service::{serve, Service};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let service = Service::new(corpus.project, corpus.manifest.config);
    if std::env::args().any(|a| a == "--serve") {
        serve(service, 8080)?;
        return Ok(());
    }
    let show = |method: &str, path: &str, body: &str| {
        let r = service.handle(method, path, body);
        println!("{method} {path} -> {}\n{}\n", r.status, r.body);
        r
    };
    show("GET", "/machines", "");
    let created = show("POST", "/sessions", r#"{"machine":"MTM0"}"#);
    let id = created.body["id"].as_str().expect("id").to_string();
    show(
        "POST",
        &format!("/sessions/{id}/fire"),
        r#"{"event":"startBloodPumping"}"#,
    );
    show(
        "POST",
        &format!("/sessions/{id}/fire"),
        r#"{"event":"disconnectDialyserTherapy"}"#,
    );
    show(
        "POST",
        &format!("/sessions/{id}/perturb"),
        r#"{"variable":"dialysateTemperature","value":"hot"}"#,
    );
    show(
        "POST",
        &format!("/sessions/{id}/fire"),
        r#"{"event":"connectDialyser"}"#,
    );
    show("GET", &format!("/sessions/{id}"), "");
    show("POST", "/scenarios/run", "machine MBP1\nfire startBloodPumping\nperturb actualBloodFlow 69\nfire lessBloodFlowMonitoring\nassert alarm = ALM755\n");
    Ok(())
}
