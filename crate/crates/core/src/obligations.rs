//! Proof obligations and their bounded discharge.
//!
//! Obligations are discharged by exhaustive enumeration of every
//! type-correct state within the configured bounds, so a "discharged"
//! verdict means "holds up to the bounds", never an unbounded proof.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{BinOp, EventDef, Expr, ExprKind, LabeledPredicate};
use crate::config::{CheckConfig, ConfigError};
use crate::project::{FlatMachine, Project};
use crate::semantics::{Model, SemanticError, State, Term, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PoKind {
    INV,
    WD,
    GRD,
    EQL,
    VAR,
    THM,
}

impl fmt::Display for PoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoStatus {
    Pending,
    Discharged,
    /// First counterexample in enumeration order.
    Failed(State),
    /// No state satisfies the hypotheses.
    Vacuous,
}

impl PoStatus {
    pub fn name(&self) -> &'static str {
        match self {
            PoStatus::Pending => "pending",
            PoStatus::Discharged => "discharged",
            PoStatus::Failed(_) => "failed",
            PoStatus::Vacuous => "vacuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofObligation {
    /// `Machine/event/label/KIND`.
    pub id: String,
    pub kind: PoKind,
    pub hypotheses: Vec<Expr>,
    pub goal: Expr,
    pub status: PoStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DischargeError {
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("exploration cap exceeded after {0} states")]
    ExplorationCapExceeded(usize),
}

/// Generates obligations for `model`. `abs` is the flattened abstract
/// machine when `model` refines one. Environment events get no obligations.
pub fn generate_pos(model: &Model, abs: Option<&FlatMachine>) -> Vec<ProofObligation> {
    let m = &model.flat;
    let mut out = Vec::new();
    let invariants: Vec<Expr> = m.invariants.iter().map(|i| i.body.clone()).collect();
    let typing: Vec<bool> = model.invariants.iter().map(|i| i.typing).collect();

    // WD of invariants
    for inv in &m.invariants {
        wd_sites(&m.name, "invariants", inv, &[], &mut out);
    }

    for ev in m.events.iter().filter(|e| !e.is_environment()) {
        let d = &ev.def;
        let init = d.is_initialisation();
        let guards: Vec<Expr> = d.guards.iter().map(|g| g.body.clone()).collect();
        let base_hyps: Vec<Expr> = if init {
            Vec::new()
        } else {
            invariants
                .iter()
                .cloned()
                .chain(guards.iter().cloned())
                .collect()
        };

        // INV
        let assigned: Vec<&str> = d.assigned().collect();
        let subst: BTreeMap<String, Expr> = d
            .actions
            .iter()
            .map(|a| (a.variable.clone(), a.value.clone()))
            .collect();
        for (inv, is_typing) in m.invariants.iter().zip(&typing) {
            if *is_typing {
                continue;
            }
            let ids = inv.body.identifiers();
            if !assigned.iter().any(|v| ids.contains(*v)) {
                continue;
            }
            out.push(po(
                format!("{}/{}/{}/INV", m.name, d.name, inv.label),
                PoKind::INV,
                base_hyps.clone(),
                inv.body.substitute(&subst),
            ));
        }

        // WD of guards and actions
        if !init {
            for (k, g) in d.guards.iter().enumerate() {
                let hyps: Vec<Expr> = invariants
                    .iter()
                    .cloned()
                    .chain(guards[..k].iter().cloned())
                    .collect();
                wd_sites(&m.name, &d.name, g, &hyps, &mut out);
            }
        }
        for a in &d.actions {
            let lp = LabeledPredicate::new(a.label.clone(), a.value.clone());
            wd_sites(&m.name, &d.name, &lp, &base_hyps, &mut out);
        }

        // VAR
        if d.convergent {
            let goal = match &m.variant {
                Some(v) => Expr::binary(BinOp::Lt, v.substitute(&subst), v.clone()),
                None => Expr::synth(ExprKind::Bool(false)),
            };
            out.push(po(
                format!("{}/{}/variant/VAR", m.name, d.name),
                PoKind::VAR,
                base_hyps.clone(),
                goal,
            ));
        }

        // GRD and EQL against the abstract events this one refines
        let Some(a) = abs else { continue };
        if ev.origin != m.name || ev.refines.is_empty() {
            continue;
        }
        for target in &ev.refines {
            let Some(aev) = a.event(target) else { continue };
            let prefix = if ev.refines.len() > 1 {
                format!("{target}.")
            } else {
                String::new()
            };
            for g in &aev.def.guards {
                if guards.contains(&g.body) {
                    continue;
                }
                out.push(po(
                    format!("{}/{}/{prefix}{}/GRD", m.name, d.name, g.label),
                    PoKind::GRD,
                    base_hyps.clone(),
                    g.body.clone(),
                ));
            }
            for goal in eql_goals(&aev.def, d, &a.variables) {
                out.push(po(
                    format!("{}/{}/{prefix}{}/EQL", m.name, d.name, goal.0),
                    PoKind::EQL,
                    base_hyps.clone(),
                    goal.1,
                ));
            }
        }
    }

    // THM under the axioms
    let axioms: Vec<Expr> = m.context.axioms.iter().map(|a| a.body.clone()).collect();
    for t in &m.context.theorems {
        out.push(po(
            format!("{}/theorems/{}/THM", m.name, t.label),
            PoKind::THM,
            axioms.clone(),
            t.body.clone(),
        ));
    }
    out
}

fn po(id: String, kind: PoKind, hypotheses: Vec<Expr>, goal: Expr) -> ProofObligation {
    ProofObligation {
        id,
        kind,
        hypotheses,
        goal,
        status: PoStatus::Pending,
    }
}

/// For each abstract variable assigned by either event: concrete value
/// equals abstract value.
fn eql_goals(abs: &EventDef, conc: &EventDef, abs_vars: &[String]) -> Vec<(String, Expr)> {
    let mut out = Vec::new();
    for v in abs_vars {
        let a = abs.actions.iter().find(|x| &x.variable == v);
        let c = conc.actions.iter().find(|x| &x.variable == v);
        if a.is_none() && c.is_none() {
            continue;
        }
        let lhs = c
            .map(|x| x.value.clone())
            .unwrap_or_else(|| Expr::ident(v.clone()));
        let rhs = a
            .map(|x| x.value.clone())
            .unwrap_or_else(|| Expr::ident(v.clone()));
        out.push((v.clone(), Expr::binary(BinOp::Eq, lhs, rhs)));
    }
    out
}

/// One WD obligation per division or subtraction in `pred`. Conditions
/// from enclosing connectives (left conjunct, implication antecedent,
/// negated left disjunct) become hypotheses.
fn wd_sites(
    machine: &str,
    container: &str,
    pred: &LabeledPredicate,
    hyps: &[Expr],
    out: &mut Vec<ProofObligation>,
) {
    let mut found: Vec<(Vec<Expr>, Expr)> = Vec::new();
    collect_wd(&pred.body, &mut Vec::new(), &mut found);
    let many = found.len() > 1;
    for (i, (local, goal)) in found.into_iter().enumerate() {
        let label = if many {
            format!("{}.{}", pred.label, i + 1)
        } else {
            pred.label.clone()
        };
        let hypotheses = hyps.iter().cloned().chain(local).collect();
        out.push(po(
            format!("{machine}/{container}/{label}/WD"),
            PoKind::WD,
            hypotheses,
            goal,
        ));
    }
}

fn collect_wd(e: &Expr, ctx: &mut Vec<Expr>, out: &mut Vec<(Vec<Expr>, Expr)>) {
    match &e.kind {
        ExprKind::Binary(op, l, r) => {
            collect_wd(l, ctx, out);
            let guard = match op {
                BinOp::And | BinOp::Implies => Some(l.as_ref().clone()),
                BinOp::Or => Some(Expr::negation(l.as_ref().clone())),
                _ => None,
            };
            let pushed = guard.is_some();
            if let Some(g) = guard {
                ctx.push(g);
            }
            collect_wd(r, ctx, out);
            if pushed {
                ctx.pop();
            }
            match op {
                BinOp::Div => out.push((
                    ctx.clone(),
                    Expr::binary(
                        BinOp::Neq,
                        r.as_ref().clone(),
                        Expr::synth(ExprKind::Int(0)),
                    ),
                )),
                BinOp::Sub => out.push((
                    ctx.clone(),
                    Expr::binary(BinOp::Ge, l.as_ref().clone(), r.as_ref().clone()),
                )),
                _ => {}
            }
        }
        ExprKind::Not(x) => collect_wd(x, ctx, out),
        ExprKind::SetLit(items) => items.iter().for_each(|i| collect_wd(i, ctx, out)),
        ExprKind::Partition(s, parts) => {
            collect_wd(s, ctx, out);
            parts.iter().for_each(|p| collect_wd(p, ctx, out));
        }
        _ => {}
    }
}

/// Outcome of one discharge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discharge {
    pub status: PoStatus,
    /// Search nodes visited.
    pub visited: usize,
}

/// Discharges `po` by exhaustive enumeration over the bounded domain.
///
/// Variables are enumerated in declaration order with values ascending;
/// the reported counterexample is the first in that order. Variables
/// mentioned by no hypothesis or goal take the first value of their domain.
pub fn discharge(
    po: &ProofObligation,
    model: &Model,
    cfg: &CheckConfig,
) -> Result<Discharge, DischargeError> {
    let scope = model.scope();
    let mut conjuncts: Vec<Term> = Vec::new();
    for h in &po.hypotheses {
        for c in h.conjuncts() {
            conjuncts.push(scope.predicate(c)?);
        }
    }
    let goal = scope.predicate(&po.goal)?;
    let n = model.vars.len();
    let domains: Vec<Vec<Value>> = (0..n)
        .map(|i| cfg.domain(model, i))
        .collect::<Result<_, _>>()?;

    let mut search = Search {
        visited: 0,
        cap: cfg.max_states,
    };

    let slots_of = |t: &Term| {
        let mut s = Vec::new();
        t.slots(&mut s);
        s.sort_unstable();
        s
    };
    let hyp_slots: Vec<Vec<usize>> = conjuncts.iter().map(slots_of).collect();
    let goal_slots = slots_of(&goal);

    // closed hypotheses are decided once
    let placeholder: State = domains
        .iter()
        .map(|d| d.first().cloned().unwrap_or(Value::Bool(false)))
        .collect();
    for (t, s) in conjuncts.iter().zip(&hyp_slots) {
        if s.is_empty() && !t.eval_bool(&placeholder).unwrap_or(false) {
            return Ok(Discharge {
                status: PoStatus::Vacuous,
                visited: 0,
            });
        }
    }

    // union-find over variables linked by a conjunct or the goal
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for s in hyp_slots.iter().chain(std::iter::once(&goal_slots)) {
        for w in s.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut mentioned = vec![false; n];
    for s in hyp_slots.iter().chain(std::iter::once(&goal_slots)) {
        for &v in s {
            mentioned[v] = true;
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    let mut components: IndexMap<usize, Vec<usize>> = IndexMap::new();
    for v in (0..n).filter(|&v| mentioned[v]) {
        components.entry(roots[v]).or_default().push(v);
    }
    let goal_root = goal_slots.first().map(|&v| roots[v]);

    let mut witness = placeholder.clone();
    let mut goal_search = None;
    for (root, vars) in &components {
        let checks: Vec<Check> = conjuncts
            .iter()
            .zip(&hyp_slots)
            .filter(|(_, s)| s.first().is_some_and(|&v| roots[v] == *root))
            .map(|(t, s)| Check {
                term: t,
                slots: s.clone(),
                violate: false,
            })
            .collect();
        let mut probed: Vec<&Term> = checks.iter().map(|c| c.term).collect();
        if Some(*root) == goal_root {
            probed.push(&goal);
        }
        let doms: Vec<Vec<Value>> = vars
            .iter()
            .map(|&v| representatives(v, &domains[v], &probed, &placeholder))
            .collect();

        let Some(sat) = search.first(vars, &doms, &checks, &placeholder)? else {
            return Ok(Discharge {
                status: PoStatus::Vacuous,
                visited: search.visited,
            });
        };
        for (&v, val) in vars.iter().zip(sat) {
            witness[v] = val;
        }
        if Some(*root) == goal_root {
            goal_search = Some((vars, doms, checks));
        }
    }

    let violated = match goal_search {
        Some((vars, doms, mut checks)) => {
            checks.push(Check {
                term: &goal,
                slots: goal_slots.clone(),
                violate: true,
            });
            match search.first(vars, &doms, &checks, &placeholder)? {
                Some(cex) => {
                    for (&v, val) in vars.iter().zip(cex) {
                        witness[v] = val;
                    }
                    true
                }
                None => false,
            }
        }
        // the goal mentions no variable
        None => {
            search.tick()?;
            !goal.eval_bool(&witness).unwrap_or(false)
        }
    };
    Ok(Discharge {
        status: if violated {
            PoStatus::Failed(witness)
        } else {
            PoStatus::Discharged
        },
        visited: search.visited,
    })
}

#[derive(Clone)]
struct Check<'a> {
    term: &'a Term,
    slots: Vec<usize>,
    /// Satisfied when the term is false or ill-defined.
    violate: bool,
}

impl Check<'_> {
    fn ok(&self, env: &[Value]) -> bool {
        match self.term.eval_bool(env) {
            Ok(b) => b != self.violate,
            Err(_) => self.violate,
        }
    }
}

struct Search {
    visited: usize,
    cap: usize,
}

impl Search {
    fn tick(&mut self) -> Result<(), DischargeError> {
        self.visited += 1;
        if self.visited > self.cap {
            return Err(DischargeError::ExplorationCapExceeded(self.visited - 1));
        }
        Ok(())
    }

    /// Lexicographically first assignment to `vars` passing every check.
    fn first(
        &mut self,
        vars: &[usize],
        doms: &[Vec<Value>],
        checks: &[Check],
        base: &State,
    ) -> Result<Option<Vec<Value>>, DischargeError> {
        // a check runs at the depth where its last variable is assigned
        let mut at_depth: Vec<Vec<&Check>> = vec![Vec::new(); vars.len()];
        for c in checks {
            let depth = c
                .slots
                .iter()
                .map(|s| vars.iter().position(|v| v == s).expect("slot in component"))
                .max()
                .unwrap_or(0);
            at_depth[depth].push(c);
        }
        let mut env = base.clone();
        let mut idx = vec![0usize; vars.len()];
        let mut depth = 0usize;
        loop {
            if idx[depth] == doms[depth].len() {
                if depth == 0 {
                    return Ok(None);
                }
                idx[depth] = 0;
                depth -= 1;
                idx[depth] += 1;
                continue;
            }
            self.tick()?;
            env[vars[depth]] = doms[depth][idx[depth]].clone();
            if at_depth[depth].iter().all(|c| c.ok(&env)) {
                if depth + 1 == vars.len() {
                    return Ok(Some(vars.iter().map(|&v| env[v].clone()).collect()));
                }
                depth += 1;
            } else {
                idx[depth] += 1;
            }
        }
    }
}

/// Ascending representatives of `dom`: the least value of each class of
/// values that every maximal subterm reading only `var` maps to the same
/// outcome. Any counterexample stays one when `var` is replaced by its
/// representative, so the first counterexample is unchanged.
fn representatives(var: usize, dom: &[Value], terms: &[&Term], base: &State) -> Vec<Value> {
    let mut probes: Vec<&Term> = Vec::new();
    for t in terms {
        maximal_only(t, var, &mut probes);
    }
    if probes.iter().any(|p| matches!(p, Term::Slot(_))) {
        return dom.to_vec();
    }
    let mut env = base.clone();
    let mut seen: HashMap<Vec<Result<Value, crate::semantics::WdReason>>, ()> = HashMap::new();
    let mut out = Vec::new();
    for v in dom {
        env[var] = v.clone();
        let key: Vec<_> = probes
            .iter()
            .map(|p| p.eval(&env).map_err(|e| e.reason))
            .collect();
        if seen.insert(key, ()).is_none() {
            out.push(v.clone());
        }
    }
    out
}

fn maximal_only<'a>(t: &'a Term, var: usize, out: &mut Vec<&'a Term>) {
    let mut s = Vec::new();
    t.slots(&mut s);
    if !s.contains(&var) {
        return;
    }
    if s.len() == 1 {
        out.push(t);
        return;
    }
    match t {
        Term::Not(x) => maximal_only(x, var, out),
        Term::And(l, r)
        | Term::Or(l, r)
        | Term::Implies(l, r)
        | Term::Arith(_, l, r, _)
        | Term::Eq(l, r)
        | Term::Neq(l, r)
        | Term::Cmp(_, l, r) => {
            maximal_only(l, var, out);
            maximal_only(r, var, out);
        }
        Term::In(x, set) => {
            maximal_only(x, var, out);
            if let crate::semantics::SetTerm::Value(st) = set {
                maximal_only(st, var, out);
            }
        }
        Term::FuncLit { pairs, .. } => {
            for (k, v) in pairs {
                maximal_only(k, var, out);
                maximal_only(v, var, out);
            }
        }
        Term::SetLit(items) => items.iter().for_each(|i| maximal_only(i, var, out)),
        Term::Partition(_, parts) => parts.iter().for_each(|p| maximal_only(p, var, out)),
        Term::Slot(_) | Term::Lit(_) => {}
    }
}

/// Per-machine obligation counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoReport {
    pub machine: String,
    pub total: usize,
    pub discharged: usize,
    pub failed: usize,
    pub vacuous: usize,
    #[serde(serialize_with = "millis")]
    pub elapsed: Duration,
    #[serde(skip)]
    pub obligations: Vec<ProofObligation>,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_millis() as u64)
}

/// Generates and discharges every obligation of `machine`.
pub fn report(
    project: &Project,
    machine: &str,
    cfg: &CheckConfig,
) -> Result<PoReport, DischargeError> {
    let start = Instant::now();
    let model = Model::new(project, machine, &cfg.consts)?;
    cfg.validate(&model)?;
    let abs = match &model.flat.abstract_machine {
        Some(a) => Some(project.flatten_machine(a).map_err(SemanticError::from)?),
        None => None,
    };
    let mut pos = generate_pos(&model, abs);
    for p in &mut pos {
        p.status = discharge(p, &model, cfg)?.status;
    }
    let count = |f: fn(&PoStatus) -> bool| pos.iter().filter(|p| f(&p.status)).count();
    Ok(PoReport {
        machine: machine.to_string(),
        total: pos.len(),
        discharged: count(|s| *s == PoStatus::Discharged),
        failed: count(|s| matches!(s, PoStatus::Failed(_))),
        vacuous: count(|s| *s == PoStatus::Vacuous),
        elapsed: start.elapsed(),
        obligations: pos,
    })
}

/// One machine-readable record per obligation.
#[derive(Debug, Clone, Serialize)]
pub struct PoRecord {
    pub id: String,
    pub kind: PoKind,
    pub status: &'static str,
    pub counterexample: Option<IndexMap<String, String>>,
}

impl PoReport {
    pub fn records(&self, model: &Model) -> Vec<PoRecord> {
        self.obligations
            .iter()
            .map(|p| PoRecord {
                id: p.id.clone(),
                kind: p.kind,
                status: p.status.name(),
                counterexample: match &p.status {
                    PoStatus::Failed(s) => Some(model.render_state(s)),
                    _ => None,
                },
            })
            .collect()
    }

    /// JSON lines, one record per obligation.
    pub fn to_json_lines(&self, model: &Model) -> String {
        self.records(model)
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }
}

/// Human-readable table over several machines.
pub fn render_table(reports: &[PoReport], cfg: &CheckConfig) -> String {
    let mut out = format!(
        "{:<8} {:>6} {:>11} {:>7} {:>8} {:>9}\n",
        "machine", "total", "discharged", "failed", "vacuous", "time(ms)"
    );
    let mut sum = [0usize; 4];
    for r in reports {
        out.push_str(&format!(
            "{:<8} {:>6} {:>11} {:>7} {:>8} {:>9}\n",
            r.machine,
            r.total,
            r.discharged,
            r.failed,
            r.vacuous,
            r.elapsed.as_millis()
        ));
        sum[0] += r.total;
        sum[1] += r.discharged;
        sum[2] += r.failed;
        sum[3] += r.vacuous;
    }
    out.push_str(&format!(
        "{:<8} {:>6} {:>11} {:>7} {:>8}\n",
        "total", sum[0], sum[1], sum[2], sum[3]
    ));
    let bounds: Vec<String> = cfg
        .bounds
        .iter()
        .map(|(k, (lo, hi))| format!("{k} {lo}..{hi}"))
        .collect();
    out.push_str(&format!("bounded up to: {}\n", bounds.join(", ")));
    out
}
