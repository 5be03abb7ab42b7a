//! Interactive execution: sessions with step, perturb and undo.
//!
//! A session never refuses to continue from a bad state. Invariants that a
//! perturbation breaks are tracked as pending hazards until some step
//! restores them.

mod scenario;

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::config::CheckConfig;
use crate::project::Project;
use crate::semantics::{Model, SemanticError, State, Value, WdFailure};
use crate::trace::{Step, Trace};

pub use scenario::{
    run_scenario, run_scenario_model, Scenario, ScenarioError, ScenarioFailure, ScenarioReport,
    ScenarioStep,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnimatorError {
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error("initialisation is not well defined: {0}")]
    InitWd(WdFailure),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{value}` is not a value of type {expected} for `{variable}`: {reason}")]
    TypeMismatch {
        variable: String,
        expected: String,
        value: String,
        reason: String,
    },
    #[error("`{value}` lies outside the bound {lo}..{hi} of `{variable}`")]
    OutOfBounds {
        variable: String,
        value: String,
        lo: u64,
        hi: u64,
    },
    #[error("nothing to undo")]
    EmptyHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub step: Step,
    pub pre: State,
}

#[derive(Debug, Clone)]
pub struct Session {
    model: Arc<Model>,
    config: CheckConfig,
    initial: State,
    state: State,
    history: Vec<HistoryEntry>,
    hazards: BTreeSet<String>,
}

impl Session {
    pub fn new(
        project: &Project,
        machine: &str,
        config: CheckConfig,
    ) -> Result<Self, AnimatorError> {
        let model = Model::new(project, machine, &config.consts)?;
        Session::from_model(Arc::new(model), config)
    }

    pub fn from_model(model: Arc<Model>, config: CheckConfig) -> Result<Self, AnimatorError> {
        let initial = model.initial_state().map_err(AnimatorError::InitWd)?;
        let hazards = model.violated_invariants(&initial).into_iter().collect();
        Ok(Session {
            model,
            config,
            state: initial.clone(),
            initial,
            history: Vec::new(),
            hazards,
        })
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn config(&self) -> &CheckConfig {
        &self.config
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// Labels of invariants false in the current state.
    pub fn hazards(&self) -> &BTreeSet<String> {
        &self.hazards
    }

    /// Enabled events in declaration order; guards that fail to evaluate
    /// count as disabled.
    pub fn enabled(&self) -> Vec<&str> {
        self.model
            .enabled_events(&self.state)
            .0
            .into_iter()
            .map(|i| self.model.events[i].name.as_str())
            .collect()
    }

    pub fn value(&self, variable: &str) -> Option<&Value> {
        self.model.var_index(variable).map(|i| &self.state[i])
    }

    /// Current value of `variable` as DSL text.
    pub fn render(&self, variable: &str) -> Option<String> {
        self.value(variable).map(|v| self.model.sig.render(v))
    }

    pub fn fire(&mut self, event: &str) -> Result<&State, AnimatorError> {
        let next = self.model.fire(event, &self.state)?;
        let environment = self.model.event(event).is_some_and(|e| e.is_environment());
        self.push(
            Step::Fire {
                event: event.to_string(),
                environment,
                state: next.clone(),
            },
            next,
        );
        Ok(&self.state)
    }

    /// Assigns `value` (DSL text) to `variable` directly.
    pub fn perturb(&mut self, variable: &str, value: &str) -> Result<&State, AnimatorError> {
        let var = self
            .model
            .var_index(variable)
            .ok_or_else(|| AnimatorError::UnknownVariable(variable.to_string()))?;
        let v = self
            .model
            .parse_value(var, value)
            .map_err(|e| AnimatorError::TypeMismatch {
                variable: variable.to_string(),
                expected: self.model.render_ty(var),
                value: value.to_string(),
                reason: e.to_string(),
            })?;
        self.perturb_value(variable, v)
    }

    pub fn perturb_value(&mut self, variable: &str, value: Value) -> Result<&State, AnimatorError> {
        let var = self
            .model
            .var_index(variable)
            .ok_or_else(|| AnimatorError::UnknownVariable(variable.to_string()))?;
        if !self.model.sig.has_type(&value, &self.model.vars[var].ty) {
            return Err(AnimatorError::TypeMismatch {
                variable: variable.to_string(),
                expected: self.model.render_ty(var),
                value: self.model.sig.render(&value),
                reason: "wrong type".into(),
            });
        }
        if !self.config.value_in_bounds(&self.model, var, &value) {
            let (lo, hi) = self.config.bounds[variable];
            return Err(AnimatorError::OutOfBounds {
                variable: variable.to_string(),
                value: self.model.sig.render(&value),
                lo,
                hi,
            });
        }
        let mut next = self.state.clone();
        next[var] = value;
        self.push(
            Step::Perturb {
                variable: variable.to_string(),
                state: next.clone(),
            },
            next,
        );
        Ok(&self.state)
    }

    /// Reverts the last step.
    pub fn undo(&mut self) -> Result<&State, AnimatorError> {
        let last = self.history.pop().ok_or(AnimatorError::EmptyHistory)?;
        self.set_state(last.pre);
        Ok(&self.state)
    }

    /// Everything executed so far, from the initial state.
    pub fn trace(&self) -> Trace {
        Trace {
            initial: self.initial.clone(),
            steps: self.history.iter().map(|h| h.step.clone()).collect(),
        }
    }

    fn push(&mut self, step: Step, next: State) {
        let pre = std::mem::replace(&mut self.state, next);
        self.history.push(HistoryEntry { step, pre });
        self.hazards = self
            .model
            .violated_invariants(&self.state)
            .into_iter()
            .collect();
    }

    fn set_state(&mut self, s: State) {
        self.hazards = self.model.violated_invariants(&s).into_iter().collect();
        self.state = s;
    }
}
