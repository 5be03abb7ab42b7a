//! Scripted scenarios.
//!
//! ```text
//! machine MBP0
//! bound noFlowDetectionTime 0 130
//! fire startBloodPumping
//! perturb bloodFlow FALSE
//! fire tick x121
//! fire noFlowMonitoring
//! assert alarm = ALM382 & bloodPumping = BPStopped
//! ```
//!
//! Header lines (`machine`, `const`, `bound`, `cap`) may appear anywhere.
//! Execution stops at the first failing step; failures are data in the
//! report, only a scenario that does not fit its machine is an error.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::Expr;
use crate::config::{strip_comment, CheckConfig};
use crate::parser::parse_expr;
use crate::project::Project;
use crate::semantics::{Model, SemanticError, State, Term};
use crate::trace::Trace;

use super::{AnimatorError, Session};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioStep {
    Fire { event: String, repeat: usize },
    Perturb { variable: String, value: String },
    Assert { text: String, predicate: Expr },
    ExpectEnabled(String),
    ExpectDisabled(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub machine: String,
    pub config: CheckConfig,
    /// Steps with their 1-based source line.
    pub steps: Vec<(usize, ScenarioStep)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("scenario names no machine")]
    MissingMachine,
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Setup(#[from] AnimatorError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioFailure {
    /// Index of the failing step in the expanded step list, 1-based.
    pub step: usize,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub machine: String,
    pub steps_executed: usize,
    pub failure: Option<ScenarioFailure>,
    pub final_state: State,
    pub trace: Trace,
    /// One line per executed step.
    pub log: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_json(&self, model: &Model) -> serde_json::Value {
        serde_json::json!({
            "machine": self.machine,
            "passed": self.passed(),
            "steps_executed": self.steps_executed,
            "failure": self.failure,
            "final_state": model.render_state(&self.final_state),
            "trace": self.trace.records(model),
            "log": self.log,
        })
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut machine = None;
        let mut config = CheckConfig::default();
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = strip_comment(raw);
            if body.is_empty() {
                continue;
            }
            let syntax = |message: String| ScenarioError::Syntax { line, message };
            let (word, rest) = body
                .split_once(char::is_whitespace)
                .map(|(w, r)| (w, r.trim()))
                .unwrap_or((body, ""));
            let one_word = |what: &str| -> Result<String, ScenarioError> {
                match rest.split_whitespace().collect::<Vec<_>>()[..] {
                    [w] => Ok(w.to_string()),
                    _ => Err(syntax(format!("expected `{word} <{what}>`"))),
                }
            };
            let step = match word {
                "machine" => {
                    machine = Some(one_word("name")?);
                    continue;
                }
                "const" | "bound" | "cap" => {
                    config.apply_line(body).map_err(syntax)?;
                    continue;
                }
                "fire" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let (event, repeat) = match parts[..] {
                        [e] => (e, 1),
                        [e, n] => (
                            e,
                            parse_repeat(n).ok_or_else(|| {
                                syntax(format!("bad repetition `{n}` (expected xN)"))
                            })?,
                        ),
                        _ => return Err(syntax("expected `fire <event> [xN]`".into())),
                    };
                    ScenarioStep::Fire {
                        event: event.to_string(),
                        repeat,
                    }
                }
                "perturb" => {
                    let Some((variable, value)) = rest.split_once(char::is_whitespace) else {
                        return Err(syntax("expected `perturb <variable> <value>`".into()));
                    };
                    ScenarioStep::Perturb {
                        variable: variable.to_string(),
                        value: value.trim().to_string(),
                    }
                }
                "assert" => {
                    if rest.is_empty() {
                        return Err(syntax("expected `assert <predicate>`".into()));
                    }
                    let predicate = parse_expr(rest).map_err(|e| syntax(e.to_string()))?;
                    ScenarioStep::Assert {
                        text: rest.to_string(),
                        predicate,
                    }
                }
                "expect_enabled" => ScenarioStep::ExpectEnabled(one_word("event")?),
                "expect_disabled" => ScenarioStep::ExpectDisabled(one_word("event")?),
                _ => return Err(syntax(format!("unknown step `{word}`"))),
            };
            steps.push((line, step));
        }
        Ok(Scenario {
            machine: machine.ok_or(ScenarioError::MissingMachine)?,
            config,
            steps,
        })
    }

    /// Checks that every referenced event and variable exists and every
    /// assertion is well typed; returns the compiled assertions in step order.
    pub fn validate(&self, model: &Model) -> Result<Vec<Option<Term>>, ScenarioError> {
        let scope = model.scope();
        self.steps
            .iter()
            .map(|(line, step)| {
                let invalid = |message: String| ScenarioError::Invalid {
                    line: *line,
                    message,
                };
                match step {
                    ScenarioStep::Fire { event, .. }
                    | ScenarioStep::ExpectEnabled(event)
                    | ScenarioStep::ExpectDisabled(event) => {
                        if model.event(event).is_none() {
                            return Err(invalid(format!(
                                "unknown event `{event}` in {}",
                                model.name()
                            )));
                        }
                        Ok(None)
                    }
                    ScenarioStep::Perturb { variable, .. } => {
                        if model.var_index(variable).is_none() {
                            return Err(invalid(format!(
                                "unknown variable `{variable}` in {}",
                                model.name()
                            )));
                        }
                        Ok(None)
                    }
                    ScenarioStep::Assert { predicate, .. } => scope
                        .predicate(predicate)
                        .map(Some)
                        .map_err(|e: SemanticError| invalid(e.to_string())),
                }
            })
            .collect()
    }
}

fn parse_repeat(s: &str) -> Option<usize> {
    let n = s
        .strip_prefix('x')
        .or_else(|| s.strip_prefix('×'))
        .or_else(|| s.strip_prefix('*'))?;
    n.parse().ok().filter(|&n| n > 0)
}

/// Runs `scenario` against `project`; scenario header settings override
/// `defaults`.
pub fn run_scenario(
    scenario: &Scenario,
    project: &Project,
    defaults: &CheckConfig,
) -> Result<ScenarioReport, ScenarioError> {
    let config = defaults.clone().merged(&scenario.config);
    let model =
        Model::new(project, &scenario.machine, &config.consts).map_err(AnimatorError::from)?;
    run_scenario_model(scenario, Arc::new(model), config)
}

pub fn run_scenario_model(
    scenario: &Scenario,
    model: Arc<Model>,
    config: CheckConfig,
) -> Result<ScenarioReport, ScenarioError> {
    let asserts = scenario.validate(&model)?;
    let mut session = Session::from_model(model.clone(), config)?;
    let mut log = Vec::new();
    let mut failure = None;
    let mut executed = 0;

    'steps: for ((line, step), check) in scenario.steps.iter().zip(&asserts) {
        let repeat = match step {
            ScenarioStep::Fire { repeat, .. } => *repeat,
            _ => 1,
        };
        for _ in 0..repeat {
            executed += 1;
            let outcome: Result<String, String> = match step {
                ScenarioStep::Fire { event, .. } => session
                    .fire(event)
                    .map(|_| format!("fire {event}"))
                    .map_err(|e| e.to_string()),
                ScenarioStep::Perturb { variable, value } => session
                    .perturb(variable, value)
                    .map(|_| format!("perturb {variable} := {value}"))
                    .map_err(|e| e.to_string()),
                ScenarioStep::Assert { text, .. } => {
                    let term = check.as_ref().expect("compiled");
                    match term.eval_bool(session.state()) {
                        Ok(true) => Ok(format!("assert {text}: ok")),
                        Ok(false) => Err(format!("assertion `{text}` is false")),
                        Err(w) => Err(format!("assertion `{text}` is ill-defined: {w}")),
                    }
                }
                ScenarioStep::ExpectEnabled(event) => {
                    if session.enabled().contains(&event.as_str()) {
                        Ok(format!("expect_enabled {event}: ok"))
                    } else {
                        let ev = model.event(event).expect("validated");
                        Err(format!(
                            "`{event}` is not enabled (failing guards: {})",
                            model.failing_guards(ev, session.state()).join(", ")
                        ))
                    }
                }
                ScenarioStep::ExpectDisabled(event) => {
                    if session.enabled().contains(&event.as_str()) {
                        Err(format!("`{event}` is enabled"))
                    } else {
                        Ok(format!("expect_disabled {event}: ok"))
                    }
                }
            };
            match outcome {
                Ok(msg) => log.push(format!("{executed:>4} ok   {msg}")),
                Err(reason) => {
                    log.push(format!("{executed:>4} FAIL line {line}: {reason}"));
                    failure = Some(ScenarioFailure {
                        step: executed,
                        line: *line,
                        reason,
                    });
                    break 'steps;
                }
            }
        }
    }

    Ok(ScenarioReport {
        machine: scenario.machine.clone(),
        steps_executed: executed,
        failure,
        final_state: session.state().clone(),
        trace: session.trace(),
        log,
    })
}
