//! HTTP API contract over the bundled corpus.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use eventb_kernel::corpus::{self, load_corpus};
use eventb_kernel::service::{router, Service};
use serde_json::Value;

fn service() -> Service {
    let c = load_corpus().unwrap();
    Service::new(c.project, c.manifest.config)
}

fn session(s: &Service, machine: &str) -> String {
    let r = s.handle(
        "POST",
        "/sessions",
        &format!(r#"{{"machine":"{machine}"}}"#),
    );
    assert_eq!(r.status, 201, "{}", r.body);
    r.body["id"].as_str().unwrap().to_string()
}

#[test]
fn machines_lists_units_and_refinements() {
    let s = service();
    let r = s.handle("GET", "/machines", "");
    assert_eq!(r.status, 200);
    assert_eq!(r.body["machines"].as_array().unwrap().len(), 11);
    let edges = r.body["refinements"].as_array().unwrap();
    assert!(edges
        .iter()
        .any(|e| e["abstract"] == "MCP0" && e["concrete"] == "MCP1"));

    let m = s.handle("GET", "/machines/MBP1", "");
    assert_eq!(m.status, 200);
    assert_eq!(m.body["refines"], "MBP0");
    assert!(m.body["sees"].as_array().unwrap().contains(&"CBP1".into()));
    let events = m.body["events"].as_array().unwrap();
    assert!(events.iter().any(|e| e["kind"] == "environment"));
    assert_eq!(s.handle("GET", "/machines/NOPE", "").status, 404);
}

#[test]
fn monitor_reacts_to_a_perturbed_volume() {
    let s = service();
    let id = session(&s, "MCP1");
    let post =
        |action: &str, body: &str| s.handle("POST", &format!("/sessions/{id}/{action}"), body);
    assert_eq!(post("fire", r#"{"event":"startBloodPumping"}"#).status, 200);
    let r = post(
        "perturb",
        r#"{"variable":"fillingBloodVolume","value":401}"#,
    );
    assert_eq!(r.status, 200, "{}", r.body);
    assert!(r.body["enabled"]
        .as_array()
        .unwrap()
        .contains(&"fillingBloodVolumeMonitoring".into()));
    assert!(!r.body["hazards"].as_array().unwrap().is_empty());
    let r = post("fire", r#"{"event":"fillingBloodVolumeMonitoring"}"#);
    assert_eq!(r.body["state"]["alarm"], "ALM344");
    assert_eq!(r.body["state"]["bloodPumping"], "BPStopped");

    let t = s.handle("GET", &format!("/sessions/{id}/trace"), "");
    let records = t.body["records"].as_array().unwrap();
    let actions: Vec<&str> = records
        .iter()
        .map(|r| r["action"].as_str().unwrap())
        .collect();
    assert_eq!(actions, ["init", "fire", "perturb", "fire"]);
    assert_eq!(records[2]["perturbed"], true);
}

#[test]
fn error_statuses() {
    let s = service();
    let id = session(&s, "MCP1");
    let post =
        |action: &str, body: &str| s.handle("POST", &format!("/sessions/{id}/{action}"), body);
    assert_eq!(post("fire", r#"{"event":"stopBloodPumping"}"#).status, 409);
    assert_eq!(post("fire", r#"{"event":"nope"}"#).status, 404);
    assert_eq!(post("undo", "").status, 409);
    assert_eq!(
        post("perturb", r#"{"variable":"nope","value":1}"#).status,
        404
    );
    assert_eq!(
        post(
            "perturb",
            r#"{"variable":"fillingBloodVolume","value":9999}"#
        )
        .status,
        422
    );
    assert_eq!(
        post(
            "perturb",
            r#"{"variable":"fillingBloodVolume","value":true}"#
        )
        .status,
        422
    );
    assert_eq!(post("fire", "not json").status, 400);
    assert_eq!(s.handle("DELETE", "/machines", "").status, 405);
    assert_eq!(s.handle("GET", "/nowhere", "").status, 404);
    assert_eq!(
        s.handle("POST", "/sessions", r#"{"machine":"NOPE"}"#)
            .status,
        404
    );
}

#[test]
fn scenarios_run_over_http() {
    let s = service();
    let text = corpus::file("scenarios/mbp1_flow_69.scn").unwrap();
    let r = s.handle("POST", "/scenarios/run", text);
    assert_eq!(r.status, 200);
    assert_eq!(r.body["passed"], true);
    assert_eq!(r.body["final_state"]["alarm"], "ALM755");

    let r = s.handle("POST", "/scenarios/run", "machine MCP0\nfire\n");
    assert_eq!(r.status, 422);
    assert_eq!(r.body["line"], 2);
}

fn request(addr: std::net::SocketAddr, method: &str, path: &str, body: &str) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\n\
         Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).unwrap();
    let status = raw[9..12].parse().unwrap();
    let (_, payload) = raw.split_once("\r\n\r\n").unwrap();
    (status, serde_json::from_str(payload).unwrap())
}

#[test]
fn router_serves_over_tcp() {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(Arc::new(service()));
    runtime.spawn(async move { axum::serve(listener, app).await });

    let (status, body) = request(addr, "GET", "/machines", "");
    assert_eq!(status, 200);
    assert_eq!(body["machines"].as_array().unwrap().len(), 11);
    let (status, body) = request(addr, "POST", "/sessions", r#"{"machine":"MTM0"}"#);
    assert_eq!(status, 201);
    let id = body["id"].as_str().unwrap();
    let (status, _) = request(addr, "GET", &format!("/sessions/{id}"), "");
    assert_eq!(status, 200);
    let (status, _) = request(addr, "PUT", "/sessions", "");
    assert_eq!(status, 405);
}
