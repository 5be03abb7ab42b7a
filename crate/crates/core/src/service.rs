//! HTTP+JSON API over animator sessions.
//!
//! [`Service::handle`] does all routing and error mapping on plain strings,
//! so it can be exercised without a socket. [`serve`] wraps it in axum.
//!
//! Status codes: 404 unknown machine, session, event or variable; 409 guard
//! not enabled or nothing to undo; 422 type, bounds or scenario errors.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Deserialize;
use serde_json::{json, Value as Json};

use crate::animator::{run_scenario_model, AnimatorError, Scenario, ScenarioError, Session};
use crate::config::CheckConfig;
use crate::parser::print_expr;
use crate::project::Project;
use crate::semantics::{Model, SemanticError};

pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub body: Json,
}

impl Response {
    fn ok(body: Json) -> Self {
        Response { status: 200, body }
    }

    fn error(status: u16, kind: &str, message: impl ToString) -> Self {
        Response {
            status,
            body: json!({ "error": kind, "message": message.to_string() }),
        }
    }

    fn not_found(what: &str, name: &str) -> Self {
        Response::error(404, "not-found", format!("unknown {what} `{name}`"))
    }
}

struct Entry {
    machine: String,
    created: u64,
    last_used: Instant,
    session: Arc<Mutex<Session>>,
}

pub struct Service {
    project: Project,
    config: CheckConfig,
    models: Mutex<HashMap<String, Arc<Model>>>,
    sessions: Mutex<HashMap<String, Entry>>,
    next_id: AtomicU64,
    idle_timeout: Duration,
}

#[derive(Deserialize)]
struct NewSession {
    machine: String,
}

#[derive(Deserialize)]
struct Fire {
    event: String,
}

#[derive(Deserialize)]
struct Perturb {
    variable: String,
    value: Json,
}

impl Service {
    pub fn new(project: Project, config: CheckConfig) -> Self {
        Service {
            project,
            config,
            models: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            idle_timeout: IDLE_TIMEOUT,
        }
    }

    pub fn with_idle_timeout(mut self, idle: Duration) -> Self {
        self.idle_timeout = idle;
        self
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("poisoned").len()
    }

    /// Drops sessions idle for longer than the timeout as of `now`.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.lock().expect("poisoned");
        let before = sessions.len();
        sessions.retain(|_, e| now.saturating_duration_since(e.last_used) <= self.idle_timeout);
        before - sessions.len()
    }

    pub fn handle(&self, method: &str, path: &str, body: &str) -> Response {
        self.evict_idle(Instant::now());
        let path = path.split('?').next().unwrap_or("");
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        match (method, parts.as_slice()) {
            ("GET", ["machines"]) => self.machines(),
            ("GET", ["machines", m]) => self.machine(m),
            ("POST", ["sessions"]) => match parse_body::<NewSession>(body) {
                Ok(req) => self.create(&req.machine),
                Err(r) => r,
            },
            ("GET", ["sessions", id]) => self.with_session(id, |s| Ok(view(id, s))),
            ("POST", ["sessions", id, "fire"]) => match parse_body::<Fire>(body) {
                Ok(req) => self.with_session(id, |s| {
                    s.fire(&req.event)?;
                    Ok(view(id, s))
                }),
                Err(r) => r,
            },
            ("POST", ["sessions", id, "perturb"]) => match parse_body::<Perturb>(body) {
                Ok(req) => {
                    let text = match &req.value {
                        Json::String(s) => s.clone(),
                        Json::Bool(true) => "TRUE".into(),
                        Json::Bool(false) => "FALSE".into(),
                        other => other.to_string(),
                    };
                    self.with_session(id, |s| {
                        s.perturb(&req.variable, &text)?;
                        Ok(view(id, s))
                    })
                }
                Err(r) => r,
            },
            ("POST", ["sessions", id, "undo"]) => self.with_session(id, |s| {
                s.undo()?;
                Ok(view(id, s))
            }),
            ("GET", ["sessions", id, "trace"]) => self.with_session(id, |s| {
                Ok(json!({ "id": id, "records": s.trace().records(s.model()) }))
            }),
            ("POST", ["scenarios", "run"]) => self.run_scenario(body),
            (_, ["machines"] | ["machines", _] | ["sessions"] | ["sessions", _]) => {
                method_not_allowed()
            }
            (_, ["sessions", _, "fire" | "perturb" | "undo" | "trace"] | ["scenarios", "run"]) => {
                method_not_allowed()
            }
            _ => Response::error(404, "not-found", format!("no route for {method} {path}")),
        }
    }

    fn model(&self, machine: &str) -> Result<Arc<Model>, Response> {
        if self.project.machine(machine).is_none() {
            return Err(Response::not_found("machine", machine));
        }
        let mut models = self.models.lock().expect("poisoned");
        if let Some(m) = models.get(machine) {
            return Ok(m.clone());
        }
        let model = Model::new(&self.project, machine, &self.config.consts)
            .map_err(|e| Response::error(422, "semantic", e))?;
        let model = Arc::new(model);
        models.insert(machine.to_string(), model.clone());
        Ok(model)
    }

    fn machines(&self) -> Response {
        let refinements: Vec<Json> = self
            .project
            .refinement_edges()
            .into_iter()
            .map(|(c, a)| json!({ "abstract": a, "concrete": c }))
            .collect();
        Response::ok(json!({
            "machines": self.project.machine_names(),
            "refinements": refinements,
        }))
    }

    fn machine(&self, name: &str) -> Response {
        let model = match self.model(name) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let variables: Vec<Json> = model
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| json!({ "name": v.name, "type": model.render_ty(i) }))
            .collect();
        let invariants: Vec<Json> = model
            .invariants
            .iter()
            .map(|p| json!({ "label": p.label, "predicate": print_expr(&p.expr) }))
            .collect();
        let events: Vec<Json> = model
            .flat
            .transitions()
            .map(|e| {
                json!({
                    "name": e.name(),
                    "kind": e.def.kind,
                    "refines": e.refines,
                    "guards": e.def.guards.iter()
                        .map(|g| json!({ "label": g.label, "predicate": print_expr(&g.body) }))
                        .collect::<Vec<_>>(),
                    "actions": e.def.actions.iter()
                        .map(|a| json!({
                            "label": a.label,
                            "assignment": format!("{} := {}", a.variable, print_expr(&a.value)),
                        }))
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        Response::ok(json!({
            "name": model.name(),
            "refines": model.flat.abstract_machine,
            "sees": self.project.machine(name).map(|m| m.sees.clone()),
            "variables": variables,
            "invariants": invariants,
            "events": events,
        }))
    }

    fn create(&self, machine: &str) -> Response {
        let model = match self.model(machine) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let session = match Session::from_model(model, self.config.clone()) {
            Ok(s) => s,
            Err(e) => return animator_error(e),
        };
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut body = view(&id, &session);
        body["created"] = json!(created);
        self.sessions.lock().expect("poisoned").insert(
            id,
            Entry {
                machine: machine.to_string(),
                created,
                last_used: Instant::now(),
                session: Arc::new(Mutex::new(session)),
            },
        );
        Response { status: 201, body }
    }

    /// Runs `f` on the session, serialized against other requests for it.
    fn with_session(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<Json, AnimatorError>,
    ) -> Response {
        let (session, machine, created) = {
            let mut sessions = self.sessions.lock().expect("poisoned");
            match sessions.get_mut(id) {
                Some(e) => {
                    e.last_used = Instant::now();
                    (e.session.clone(), e.machine.clone(), e.created)
                }
                None => return Response::not_found("session", id),
            }
        };
        let mut s = session.lock().expect("poisoned");
        match f(&mut s) {
            Ok(mut body) => {
                if body.get("state").is_some() {
                    body["machine"] = json!(machine);
                    body["created"] = json!(created);
                }
                Response::ok(body)
            }
            Err(e) => animator_error(e),
        }
    }

    fn run_scenario(&self, body: &str) -> Response {
        let scenario = match Scenario::parse(body) {
            Ok(s) => s,
            Err(e) => return scenario_error(e),
        };
        let config = self.config.clone().merged(&scenario.config);
        if self.project.machine(&scenario.machine).is_none() {
            return Response::not_found("machine", &scenario.machine);
        }
        let model = match Model::new(&self.project, &scenario.machine, &config.consts) {
            Ok(m) => Arc::new(m),
            Err(e) => return Response::error(422, "semantic", e),
        };
        match run_scenario_model(&scenario, model.clone(), config) {
            Ok(r) => Response::ok(r.to_json(&model)),
            Err(e) => scenario_error(e),
        }
    }
}

fn view(id: &str, s: &Session) -> Json {
    json!({
        "id": id,
        "state": s.model().render_state(s.state()),
        "enabled": s.enabled(),
        "hazards": s.hazards(),
        "history": s.history().len(),
    })
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, Response> {
    serde_json::from_str(body).map_err(|e| Response::error(400, "bad-request", e))
}

fn method_not_allowed() -> Response {
    Response::error(405, "method-not-allowed", "method not allowed")
}

fn animator_error(e: AnimatorError) -> Response {
    match &e {
        AnimatorError::UnknownVariable(v) => Response::not_found("variable", v),
        AnimatorError::Semantic(SemanticError::UnknownEvent(ev)) => {
            Response::not_found("event", ev)
        }
        AnimatorError::Semantic(SemanticError::GuardNotEnabled { .. }) => {
            Response::error(409, "guard-not-enabled", e)
        }
        AnimatorError::EmptyHistory => Response::error(409, "empty-history", e),
        AnimatorError::TypeMismatch { .. } => Response::error(422, "type-mismatch", e),
        AnimatorError::OutOfBounds { .. } => Response::error(422, "out-of-bounds", e),
        AnimatorError::InitWd(_) | AnimatorError::Semantic(_) => {
            Response::error(422, "semantic", e)
        }
    }
}

fn scenario_error(e: ScenarioError) -> Response {
    match e {
        ScenarioError::Setup(a) => animator_error(a),
        ScenarioError::Syntax { line, .. } | ScenarioError::Invalid { line, .. } => {
            let mut r = Response::error(422, "invalid-scenario", &e);
            r.body["line"] = json!(line);
            r
        }
        ScenarioError::MissingMachine => Response::error(422, "invalid-scenario", e),
    }
}

/// Serves `service` on 127.0.0.1:`port` until interrupted.
pub fn serve(service: Service, port: u16) -> std::io::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        let service = Arc::new(service);
        let sweeper = service.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                sweeper.evict_idle(Instant::now());
            }
        });
        axum::serve(listener, router(service))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

/// The axum router: one fallback handler forwarding to [`Service::handle`].
pub fn router(service: Arc<Service>) -> axum::Router {
    use axum::http::{Method, StatusCode, Uri};
    use axum::response::IntoResponse;

    axum::Router::new().fallback(move |method: Method, uri: Uri, body: String| {
        let service = service.clone();
        async move {
            let r = tokio::task::spawn_blocking(move || {
                service.handle(method.as_str(), uri.path(), &body)
            })
            .await
            .unwrap_or_else(|e| Response::error(500, "internal", e));
            let status =
                StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, axum::Json(r.body)).into_response()
        }
    })
}
