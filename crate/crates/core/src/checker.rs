//! Bounded explicit-state exploration: invariant violations, hazards,
//! deadlocks, event coverage and superposition refinement checks.
//!
//! Two modes drive the search. `Closed` fires model events only; `Driven`
//! also fires environment events, which stand for stimuli the machine must
//! be able to answer. Successors outside the configured bounds are pruned
//! and counted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::{CheckConfig, ConfigError};
use crate::project::{FlatMachine, Project};
use crate::semantics::{Model, SemanticError, State, Term, WdFailure, WdWarning};
use crate::trace::{Step, Trace};

/// How many example traces a report keeps per finding category.
pub const REPORT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Closed,
    Driven,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Closed => "closed",
            Mode::Driven => "driven",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed" => Ok(Mode::Closed),
            "driven" => Ok(Mode::Driven),
            _ => Err(format!("unknown mode `{s}` (expected closed or driven)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initialisation is not well defined: {0}")]
    InitWd(WdFailure),
    #[error("the initial state lies outside the configured bounds")]
    InitOutOfBounds,
    #[error("exploration exceeded the cap of {0} states")]
    ExplorationCapExceeded(usize),
    #[error("`{concrete}` does not refine `{abstract_machine}` by superposition: {reason}")]
    NotSuperposition {
        abstract_machine: String,
        concrete: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: String,
    /// Last event of the trace; `None` when the initial state is bad.
    pub event: Option<String>,
    pub trace: Trace,
}

/// Reachable state with a false invariant that no model step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Hazard {
    pub invariants: Vec<String>,
    pub trace: Trace,
}

/// An action whose right-hand side is ill-defined in a reachable state.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionWd {
    pub event: String,
    pub failure: WdFailure,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct ReachReport {
    pub machine: String,
    pub mode: Mode,
    pub states: usize,
    pub transitions: usize,
    /// Successors dropped because they leave the bounds.
    pub pruned: usize,
    /// Transitions per event, every event of the mode listed.
    pub coverage: IndexMap<String, usize>,
    /// Shortest violation per invariant label.
    pub violations: Vec<Violation>,
    pub hazards: usize,
    /// Hazards from which no enabled model event restores the invariants.
    pub unanswered: Vec<Hazard>,
    pub unanswered_count: usize,
    pub deadlocks: Vec<Trace>,
    pub deadlock_count: usize,
    pub wd_warnings: Vec<WdWarning>,
    pub action_wd: Vec<ActionWd>,
    pub elapsed: Duration,
}

impl ReachReport {
    /// Violations and ill-defined actions always fail; deadlocks fail only
    /// when the environment is driving.
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && self.action_wd.is_empty()
            && (self.mode == Mode::Closed || self.deadlock_count == 0)
    }

    pub fn uncovered(&self) -> Vec<&str> {
        self.coverage
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self, model: &Model) -> serde_json::Value {
        let trace = |t: &Trace| serde_json::to_value(t.records(model)).expect("serializable");
        json!({
            "machine": self.machine,
            "mode": self.mode,
            "passed": self.passed(),
            "states": self.states,
            "transitions": self.transitions,
            "pruned": self.pruned,
            "coverage": self.coverage,
            "violations": self.violations.iter().map(|v| json!({
                "invariant": v.invariant,
                "event": v.event,
                "trace": trace(&v.trace),
            })).collect::<Vec<_>>(),
            "hazards": self.hazards,
            "unanswered_hazards": self.unanswered_count,
            "unanswered": self.unanswered.iter().map(|h| json!({
                "invariants": h.invariants,
                "trace": trace(&h.trace),
            })).collect::<Vec<_>>(),
            "deadlocks": self.deadlock_count,
            "deadlock_traces": self.deadlocks.iter().map(trace).collect::<Vec<_>>(),
            "wd_warnings": self.wd_warnings.iter().map(|w| json!({
                "event": w.event,
                "guard": w.guard,
                "reason": w.failure.reason,
                "at": w.failure.span.to_string(),
            })).collect::<Vec<_>>(),
            "action_wd": self.action_wd.iter().map(|a| json!({
                "event": a.event,
                "reason": a.failure.reason,
                "at": a.failure.span.to_string(),
                "trace": trace(&a.trace),
            })).collect::<Vec<_>>(),
            "elapsed_ms": self.elapsed.as_millis() as u64,
        })
    }

    /// Human-readable summary.
    pub fn render(&self, model: &Model) -> String {
        let mut out = format!(
            "{} [{}]: {} states, {} transitions, {} pruned, {}\n",
            self.machine,
            self.mode,
            self.states,
            self.transitions,
            self.pruned,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for v in &self.violations {
            out.push_str(&format!(
                "  violation of {} after {} step(s): {}\n",
                v.invariant,
                v.trace.len(),
                v.trace.events().join(" -> ")
            ));
            out.push_str(&format!(
                "    state: {}\n",
                render_state(model, v.trace.last_state())
            ));
        }
        for a in &self.action_wd {
            out.push_str(&format!(
                "  ill-defined action in {}: {} ({})\n",
                a.event, a.failure.reason, a.failure.span
            ));
        }
        if self.deadlock_count > 0 {
            out.push_str(&format!("  deadlocks: {}\n", self.deadlock_count));
            if let Some(t) = self.deadlocks.first() {
                out.push_str(&format!(
                    "    first: {}\n",
                    render_state(model, t.last_state())
                ));
            }
        }
        if self.hazards > 0 {
            out.push_str(&format!(
                "  hazards: {} ({} unanswered)\n",
                self.hazards, self.unanswered_count
            ));
        }
        for w in &self.wd_warnings {
            out.push_str(&format!(
                "  warning: guard {} of {} is ill-defined ({})\n",
                w.guard, w.event, w.failure.reason
            ));
        }
        let uncovered = self.uncovered();
        if !uncovered.is_empty() {
            out.push_str(&format!("  never fired: {}\n", uncovered.join(", ")));
        }
        out
    }
}

fn render_state(model: &Model, s: &State) -> String {
    model
        .render_state(s)
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Breadth-first reachability graph.
struct Graph {
    states: IndexSet<State>,
    /// Predecessor and event index into [`Model::events`].
    parent: Vec<Option<(usize, usize)>>,
    ok: Vec<bool>,
}

impl Graph {
    fn trace(&self, model: &Model, mut i: usize) -> Trace {
        let mut rev = Vec::new();
        while let Some((p, e)) = self.parent[i] {
            let ev = &model.events[e];
            rev.push(Step::Fire {
                event: ev.name.clone(),
                environment: ev.is_environment(),
                state: self.states[i].clone(),
            });
            i = p;
        }
        rev.reverse();
        Trace {
            initial: self.states[0].clone(),
            steps: rev,
        }
    }

    /// Trace to `i` extended by firing `e` into `next`.
    fn trace_then(&self, model: &Model, i: usize, e: usize, next: State) -> Trace {
        let mut t = self.trace(model, i);
        let ev = &model.events[e];
        t.steps.push(Step::Fire {
            event: ev.name.clone(),
            environment: ev.is_environment(),
            state: next,
        });
        t
    }
}

fn mode_events(model: &Model, mode: Mode) -> Vec<usize> {
    (0..model.events.len())
        .filter(|&i| mode == Mode::Driven || !model.events[i].is_environment())
        .collect()
}

fn enabled_in_mode(model: &Model, mode: Mode, s: &State) -> (Vec<usize>, Vec<WdWarning>) {
    let (on, warnings) = model.enabled_events(s);
    let on = on
        .into_iter()
        .filter(|&i| mode == Mode::Driven || !model.events[i].is_environment())
        .collect();
    let warnings = warnings
        .into_iter()
        .filter(|w| {
            mode == Mode::Driven || model.event(&w.event).is_some_and(|e| !e.is_environment())
        })
        .collect();
    (on, warnings)
}

/// Explores every state reachable within the bounds of `cfg`.
pub fn explore(model: &Model, cfg: &CheckConfig, mode: Mode) -> Result<ReachReport, CheckError> {
    explore_graph(model, cfg, mode).map(|(r, _)| r)
}

fn explore_graph(
    model: &Model,
    cfg: &CheckConfig,
    mode: Mode,
) -> Result<(ReachReport, Graph), CheckError> {
    let start = Instant::now();
    cfg.validate(model)?;
    let init = model.initial_state().map_err(CheckError::InitWd)?;
    if !cfg.in_bounds(model, &init) {
        return Err(CheckError::InitOutOfBounds);
    }

    let mut report = ReachReport {
        machine: model.name().to_string(),
        mode,
        states: 0,
        transitions: 0,
        pruned: 0,
        coverage: mode_events(model, mode)
            .into_iter()
            .map(|i| (model.events[i].name.clone(), 0))
            .collect(),
        violations: Vec::new(),
        hazards: 0,
        unanswered: Vec::new(),
        unanswered_count: 0,
        deadlocks: Vec::new(),
        deadlock_count: 0,
        wd_warnings: Vec::new(),
        action_wd: Vec::new(),
        elapsed: Duration::ZERO,
    };

    let mut g = Graph {
        states: IndexSet::new(),
        parent: vec![None],
        ok: vec![model.invariants_hold(&init)],
    };
    g.states.insert(init);
    // states that some model step from a good state made bad
    let mut violated_into: HashSet<usize> = HashSet::new();
    let mut seen_labels: BTreeSet<String> = BTreeSet::new();
    let mut seen_warnings: HashSet<(String, String)> = HashSet::new();
    let mut seen_action_wd: HashSet<String> = HashSet::new();

    if !g.ok[0] {
        violated_into.insert(0);
        for label in model.violated_invariants(&g.states[0]) {
            seen_labels.insert(label.clone());
            report.violations.push(Violation {
                invariant: label,
                event: None,
                trace: g.trace(model, 0),
            });
        }
    }

    let mut i = 0;
    while i < g.states.len() {
        let s = g.states[i].clone();
        let (enabled, warnings) = enabled_in_mode(model, mode, &s);
        for w in warnings {
            if seen_warnings.insert((w.event.clone(), w.guard.clone())) {
                report.wd_warnings.push(w);
            }
        }
        if enabled.is_empty() {
            report.deadlock_count += 1;
            if report.deadlocks.len() < REPORT_LIMIT {
                report.deadlocks.push(g.trace(model, i));
            }
        }
        for e in enabled {
            let ev = &model.events[e];
            let next = match model.apply(ev, &s) {
                Ok(n) => n,
                Err(failure) => {
                    if seen_action_wd.insert(ev.name.clone()) {
                        report.action_wd.push(ActionWd {
                            event: ev.name.clone(),
                            failure,
                            trace: g.trace(model, i),
                        });
                    }
                    continue;
                }
            };
            if !cfg.in_bounds(model, &next) {
                report.pruned += 1;
                continue;
            }
            report.transitions += 1;
            *report.coverage.get_mut(&ev.name).expect("listed") += 1;
            let (j, fresh) = g.states.insert_full(next);
            if fresh {
                if g.states.len() > cfg.max_states {
                    return Err(CheckError::ExplorationCapExceeded(cfg.max_states));
                }
                g.parent.push(Some((i, e)));
                g.ok.push(model.invariants_hold(&g.states[j]));
            }
            if !ev.is_environment() && g.ok[i] && !g.ok[j] {
                violated_into.insert(j);
                for label in model.violated_invariants(&g.states[j]) {
                    if seen_labels.insert(label.clone()) {
                        report.violations.push(Violation {
                            invariant: label,
                            event: Some(ev.name.clone()),
                            trace: g.trace_then(model, i, e, g.states[j].clone()),
                        });
                    }
                }
            }
        }
        i += 1;
    }

    for j in 0..g.states.len() {
        if g.ok[j] || violated_into.contains(&j) {
            continue;
        }
        report.hazards += 1;
        let s = &g.states[j];
        let answered = model.enabled_events(s).0.into_iter().any(|e| {
            let ev = &model.events[e];
            !ev.is_environment() && model.apply(ev, s).is_ok_and(|n| model.invariants_hold(&n))
        });
        if !answered {
            report.unanswered_count += 1;
            if report.unanswered.len() < REPORT_LIMIT {
                report.unanswered.push(Hazard {
                    invariants: model.violated_invariants(s),
                    trace: g.trace(model, j),
                });
            }
        }
    }

    report.states = g.states.len();
    report.elapsed = start.elapsed();
    Ok((report, g))
}

/// Shortest trace from the initial state to an invariant violation.
pub fn check_invariants(
    model: &Model,
    cfg: &CheckConfig,
    mode: Mode,
) -> Result<Option<Trace>, CheckError> {
    let r = explore(model, cfg, mode)?;
    Ok(r.violations
        .into_iter()
        .map(|v| v.trace)
        .min_by_key(Trace::len))
}

/// Events never fired during exploration.
pub fn coverage(model: &Model, cfg: &CheckConfig, mode: Mode) -> Result<Vec<String>, CheckError> {
    let r = explore(model, cfg, mode)?;
    Ok(r.uncovered().into_iter().map(String::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefinementCheck {
    /// Abstract invariants hold after every concrete model step.
    AbstractInvariant,
    /// A refining event's guard implies its abstract event's guard.
    GuardStrengthening,
    /// A refining event updates the abstract variables as its abstract event does.
    Simulation,
    /// New events leave the abstract inputs untouched.
    NewEventFrame,
}

impl fmt::Display for RefinementCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefinementCheck::AbstractInvariant => "abstract invariant",
            RefinementCheck::GuardStrengthening => "guard strengthening",
            RefinementCheck::Simulation => "simulation",
            RefinementCheck::NewEventFrame => "new event frame",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementFailure {
    pub check: RefinementCheck,
    pub event: Option<String>,
    /// Invariant label, abstract event or variable involved.
    pub detail: String,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub abstract_machine: String,
    pub concrete: String,
    pub states: usize,
    /// (state, event) pairs examined.
    pub pairs_checked: usize,
    pub failures: Vec<RefinementFailure>,
    pub elapsed: Duration,
}

impl RefinementReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self, model: &Model) -> serde_json::Value {
        json!({
            "abstract": self.abstract_machine,
            "concrete": self.concrete,
            "passed": self.passed(),
            "states": self.states,
            "pairs_checked": self.pairs_checked,
            "failures": self.failures.iter().map(|f| json!({
                "check": f.check,
                "event": f.event,
                "detail": f.detail,
                "trace": f.trace.records(model),
            })).collect::<Vec<_>>(),
            "elapsed_ms": self.elapsed.as_millis() as u64,
        })
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{} refines {}: {} states, {} steps checked, {}\n",
            self.concrete,
            self.abstract_machine,
            self.states,
            self.pairs_checked,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for f in &self.failures {
            out.push_str(&format!(
                "  {} fails for {} ({}) after {} step(s): {}\n",
                f.check,
                f.event.as_deref().unwrap_or("INITIALISATION"),
                f.detail,
                f.trace.len(),
                f.trace.events().join(" -> ")
            ));
        }
        out
    }
}

struct AbstractEvent {
    name: String,
    guards: Vec<Term>,
    /// (concrete slot, right-hand side)
    actions: Vec<(usize, Term)>,
}

/// For each event of the last machine in `chain`, the events of the first
/// machine it descends from.
fn correspondence(chain: &[&FlatMachine]) -> BTreeMap<String, BTreeSet<String>> {
    let mut map: BTreeMap<String, BTreeSet<String>> = chain[0]
        .transitions()
        .map(|e| (e.name().to_string(), BTreeSet::from([e.name().to_string()])))
        .collect();
    for m in &chain[1..] {
        map = m
            .transitions()
            .map(|e| {
                let origins = e
                    .refines
                    .iter()
                    .filter_map(|r| map.get(r))
                    .flatten()
                    .cloned()
                    .collect();
                (e.name().to_string(), origins)
            })
            .collect();
    }
    map
}

/// Checks that `concrete` refines its ancestor `abstract_machine` over the
/// states reachable in driven mode.
pub fn check_refinement(
    project: &Project,
    abstract_machine: &str,
    concrete: &str,
    cfg: &CheckConfig,
) -> Result<RefinementReport, CheckError> {
    let model = Model::new(project, concrete, &cfg.consts)?;
    check_refinement_model(project, abstract_machine, &model, cfg)
}

pub fn check_refinement_model(
    project: &Project,
    abstract_machine: &str,
    model: &Model,
    cfg: &CheckConfig,
) -> Result<RefinementReport, CheckError> {
    let start = Instant::now();
    let not_sup = |reason: String| CheckError::NotSuperposition {
        abstract_machine: abstract_machine.to_string(),
        concrete: model.name().to_string(),
        reason,
    };
    let abs = project
        .flatten_machine(abstract_machine)
        .map_err(SemanticError::from)?;
    let conc = &model.flat;
    let Some(pos) = conc.ancestry.iter().position(|m| m == abstract_machine) else {
        return Err(not_sup("not a refinement ancestor".into()));
    };
    if abstract_machine == conc.name {
        return Err(not_sup("a machine does not refine itself".into()));
    }
    for v in &abs.variables {
        if !conc.variables.contains(v) {
            return Err(not_sup(format!("abstract variable `{v}` is not kept")));
        }
    }

    let chain = conc.ancestry[pos..]
        .iter()
        .map(|m| project.flatten_machine(m).map_err(SemanticError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let corr = correspondence(&chain);

    let scope = model.scope();
    let abs_invariants = abs
        .invariants
        .iter()
        .map(|i| Ok((i.label.clone(), scope.predicate(&i.body)?)))
        .collect::<Result<Vec<_>, SemanticError>>()?;
    let mut abs_events: BTreeMap<String, AbstractEvent> = BTreeMap::new();
    for e in abs.transitions() {
        let guards = e
            .def
            .guards
            .iter()
            .map(|g| scope.predicate(&g.body))
            .collect::<Result<Vec<_>, _>>()?;
        let actions = e
            .def
            .actions
            .iter()
            .map(|a| {
                let slot = model.var_index(&a.variable).expect("kept variable");
                Ok((slot, scope.typed(&a.value, &model.vars[slot].ty)?))
            })
            .collect::<Result<Vec<_>, SemanticError>>()?;
        abs_events.insert(
            e.name().to_string(),
            AbstractEvent {
                name: e.name().to_string(),
                guards,
                actions,
            },
        );
    }
    let abs_slots: Vec<usize> = abs
        .variables
        .iter()
        .map(|v| model.var_index(v).expect("kept variable"))
        .collect();
    // abstract variables that only the environment changes
    let written: BTreeSet<&str> = abs
        .transitions()
        .filter(|e| !e.is_environment())
        .flat_map(|e| e.def.actions.iter().map(|a| a.variable.as_str()))
        .collect();
    let inputs: Vec<usize> = abs
        .variables
        .iter()
        .filter(|v| !written.contains(v.as_str()))
        .map(|v| model.var_index(v).expect("kept variable"))
        .collect();

    let (reach, g) = explore_graph(model, cfg, Mode::Driven)?;
    let mut report = RefinementReport {
        abstract_machine: abstract_machine.to_string(),
        concrete: model.name().to_string(),
        states: reach.states,
        pairs_checked: 0,
        failures: Vec::new(),
        elapsed: Duration::ZERO,
    };
    let mut seen: HashSet<(RefinementCheck, Option<String>, String)> = HashSet::new();
    let mut fail = |report: &mut RefinementReport,
                    check: RefinementCheck,
                    event: Option<&str>,
                    detail: String,
                    trace: &dyn Fn() -> Trace| {
        if seen.insert((check, event.map(String::from), detail.clone())) {
            report.failures.push(RefinementFailure {
                check,
                event: event.map(String::from),
                detail,
                trace: trace(),
            });
        }
    };
    let holds = |t: &Term, s: &State| t.eval_bool(s).unwrap_or(false);

    for (label, inv) in &abs_invariants {
        if !holds(inv, &g.states[0]) {
            fail(
                &mut report,
                RefinementCheck::AbstractInvariant,
                None,
                label.clone(),
                &|| g.trace(model, 0),
            );
        }
    }

    // Monitors typically fire only from hazard states, so guard, simulation
    // and frame checks cover every reachable state; the invariant check
    // only steps that start where the invariants hold.
    for i in 0..g.states.len() {
        let s = &g.states[i];
        for e in model.enabled_events(s).0 {
            let ev = &model.events[e];
            if ev.is_environment() {
                continue;
            }
            let Ok(next) = model.apply(ev, s) else {
                continue;
            };
            report.pairs_checked += 1;
            let trace = || g.trace_then(model, i, e, next.clone());
            let name = Some(ev.name.as_str());

            for (label, inv) in &abs_invariants {
                if g.ok[i] && !holds(inv, &next) {
                    fail(
                        &mut report,
                        RefinementCheck::AbstractInvariant,
                        name,
                        label.clone(),
                        &trace,
                    );
                }
            }

            let origins = corr.get(&ev.name).cloned().unwrap_or_default();
            if origins.is_empty() {
                for &v in &inputs {
                    if next[v] != s[v] {
                        fail(
                            &mut report,
                            RefinementCheck::NewEventFrame,
                            name,
                            model.vars[v].name.clone(),
                            &trace,
                        );
                    }
                }
                continue;
            }

            let matched = origins
                .iter()
                .filter_map(|o| abs_events.get(o))
                .find(|a| a.guards.iter().all(|gd| holds(gd, s)));
            let Some(a) = matched else {
                let names: Vec<&str> = origins.iter().map(String::as_str).collect();
                fail(
                    &mut report,
                    RefinementCheck::GuardStrengthening,
                    name,
                    names.join(", "),
                    &trace,
                );
                continue;
            };
            let mut expect = s.clone();
            let mut ill_defined = false;
            for (slot, rhs) in &a.actions {
                match rhs.eval(s) {
                    Ok(v) => expect[*slot] = v,
                    Err(_) => ill_defined = true,
                }
            }
            if ill_defined {
                fail(
                    &mut report,
                    RefinementCheck::Simulation,
                    name,
                    format!("{}: ill-defined action", a.name),
                    &trace,
                );
                continue;
            }
            for &v in &abs_slots {
                if next[v] != expect[v] {
                    fail(
                        &mut report,
                        RefinementCheck::Simulation,
                        name,
                        model.vars[v].name.clone(),
                        &trace,
                    );
                }
            }
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}
