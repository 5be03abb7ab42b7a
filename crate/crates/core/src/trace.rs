//! Execution traces shared by the checker and the animator.
//!
//! The exchange format is JSON lines, one record per step:
//!
//! ```text
//! {"step":0,"action":"init","event":null,"perturbed":false,"state":{"bloodFlow":"FALSE",...}}
//! {"step":1,"action":"fire","event":"startBloodPumping","perturbed":false,"state":{...}}
//! {"step":2,"action":"perturb","event":null,"variable":"bloodFlow","perturbed":true,"state":{...}}
//! ```
//!
//! Environment events and perturbations are marked `perturbed` so exported
//! evidence separates model behavior from injected stimuli.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{Model, SemanticError, State};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Fire {
        event: String,
        environment: bool,
        state: State,
    },
    Perturb {
        variable: String,
        state: State,
    },
}

impl Step {
    pub fn state(&self) -> &State {
        match self {
            Step::Fire { state, .. } | Step::Perturb { state, .. } => state,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: State,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Init,
    Fire,
    Perturb,
}

/// One serialized trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub action: Action,
    pub event: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    pub perturbed: bool,
    pub state: IndexMap<String, String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("step {step}: {source}")]
    Replay { step: usize, source: SemanticError },
    #[error("step {step}: replayed state differs from the recorded one")]
    Mismatch { step: usize },
}

impl Trace {
    pub fn new(initial: State) -> Self {
        Trace {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> &State {
        self.steps.last().map(Step::state).unwrap_or(&self.initial)
    }

    /// Event names of fire steps, in order.
    pub fn events(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Fire { event, .. } => Some(event.as_str()),
                Step::Perturb { .. } => None,
            })
            .collect()
    }

    pub fn records(&self, model: &Model) -> Vec<TraceRecord> {
        let mut out = vec![TraceRecord {
            step: 0,
            action: Action::Init,
            event: None,
            variable: None,
            perturbed: false,
            state: model.render_state(&self.initial),
        }];
        for (i, s) in self.steps.iter().enumerate() {
            out.push(match s {
                Step::Fire {
                    event,
                    environment,
                    state,
                } => TraceRecord {
                    step: i + 1,
                    action: Action::Fire,
                    event: Some(event.clone()),
                    variable: None,
                    perturbed: *environment,
                    state: model.render_state(state),
                },
                Step::Perturb { variable, state } => TraceRecord {
                    step: i + 1,
                    action: Action::Perturb,
                    event: None,
                    variable: Some(variable.clone()),
                    perturbed: true,
                    state: model.render_state(state),
                },
            });
        }
        out
    }

    pub fn to_json_lines(&self, model: &Model) -> String {
        self.records(model)
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }

    /// Reads a trace written by [`Trace::to_json_lines`].
    pub fn from_json_lines(model: &Model, text: &str) -> Result<Trace, TraceError> {
        let mut trace: Option<Trace> = None;
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let err = |message: String| TraceError::Format {
                line: i + 1,
                message,
            };
            let rec: TraceRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let mut state = Vec::with_capacity(model.vars.len());
            for (k, v) in model.vars.iter().enumerate() {
                let text = rec
                    .state
                    .get(&v.name)
                    .ok_or_else(|| err(format!("missing variable `{}`", v.name)))?;
                state.push(model.parse_value(k, text).map_err(|e| err(e.to_string()))?);
            }
            match (rec.action, trace.as_mut()) {
                (Action::Init, None) => trace = Some(Trace::new(state)),
                (Action::Fire, Some(t)) => {
                    let event = rec
                        .event
                        .ok_or_else(|| err("fire step without event".into()))?;
                    t.steps.push(Step::Fire {
                        event,
                        environment: rec.perturbed,
                        state,
                    })
                }
                (Action::Perturb, Some(t)) => {
                    let variable = rec
                        .variable
                        .ok_or_else(|| err("perturb step without variable".into()))?;
                    t.steps.push(Step::Perturb { variable, state })
                }
                _ => return Err(err("trace must start with exactly one init record".into())),
            }
        }
        trace.ok_or(TraceError::Format {
            line: 0,
            message: "empty trace".into(),
        })
    }

    /// Re-executes every fire step through the semantics and checks each
    /// recorded state. Perturbations are taken as recorded.
    pub fn replay(&self, model: &Model) -> Result<State, TraceError> {
        let init = model.initial_state().map_err(|e| TraceError::Replay {
            step: 0,
            source: e.into(),
        })?;
        if init != self.initial {
            return Err(TraceError::Mismatch { step: 0 });
        }
        let mut cur = init;
        for (i, s) in self.steps.iter().enumerate() {
            cur = match s {
                Step::Fire { event, state, .. } => {
                    let next = model
                        .fire(event, &cur)
                        .map_err(|source| TraceError::Replay {
                            step: i + 1,
                            source,
                        })?;
                    if &next != state {
                        return Err(TraceError::Mismatch { step: i + 1 });
                    }
                    next
                }
                Step::Perturb { state, .. } => state.clone(),
            };
        }
        Ok(cur)
    }
}
