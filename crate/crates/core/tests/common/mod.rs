//! Brute-force reference implementation shared by the integration tests.
//!
//! It interprets the AST directly over string-keyed states and enumerates
//! every state of the bounded domain, sharing nothing with the library's
//! compiler, discharger or explorer.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use eventb_kernel::ast::{BinOp, Expr, ExprKind};
use eventb_kernel::obligations::{PoStatus, ProofObligation};
use eventb_kernel::project::{FlatContext, Project};
use eventb_kernel::semantics::Model;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum V {
    B(bool),
    N(u64),
    S(String),
    /// A finite function as its sorted maplets.
    F(Vec<(V, V)>),
}

impl V {
    pub fn render(&self) -> String {
        match self {
            V::B(true) => "TRUE".into(),
            V::B(false) => "FALSE".into(),
            V::N(n) => n.to_string(),
            V::S(s) => s.clone(),
            V::F(pairs) => format!(
                "{{{}}}",
                pairs
                    .iter()
                    .map(|(k, v)| format!("{} |-> {}", k.render(), v.render()))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }
}

/// Ill-defined evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Undefined;

type R<T> = Result<T, Undefined>;

/// Carrier sets in declaration order of their partition axiom.
#[derive(Debug, Clone, Default)]
pub struct Universe {
    pub sets: BTreeMap<String, Vec<String>>,
    /// Constants that are not set elements, already evaluated.
    pub constants: BTreeMap<String, V>,
}

impl Universe {
    /// Reads the `partition(S, {a}, {b}, ...)` axioms a machine sees.
    pub fn of(ctx: &FlatContext, consts: &[(&str, u64)]) -> Universe {
        let mut u = Universe::default();
        for ax in &ctx.axioms {
            if let ExprKind::Partition(set, parts) = &ax.body.kind {
                let ExprKind::Ident(name) = &set.kind else {
                    continue;
                };
                let mut elems = Vec::new();
                let mut all_singletons = true;
                for p in parts {
                    match &p.kind {
                        ExprKind::SetLit(items) if items.len() == 1 => match &items[0].kind {
                            ExprKind::Ident(e) => elems.push(e.clone()),
                            _ => all_singletons = false,
                        },
                        _ => all_singletons = false,
                    }
                }
                if all_singletons && ctx.sets.contains(name) {
                    u.sets.insert(name.clone(), elems);
                }
            }
        }
        for (k, v) in consts {
            u.constants.insert(k.to_string(), V::N(*v));
        }
        // constants fixed by `c = e` axioms, in dependency order
        let mut progress = true;
        while progress {
            progress = false;
            for ax in &ctx.axioms {
                let ExprKind::Binary(BinOp::Eq, l, r) = &ax.body.kind else {
                    continue;
                };
                let ExprKind::Ident(c) = &l.kind else {
                    continue;
                };
                if !ctx.constants.contains(c)
                    || u.constants.contains_key(c)
                    || u.element(c).is_some()
                {
                    continue;
                }
                let mut deps = BTreeSet::new();
                collect_idents(r, &mut deps);
                if deps
                    .iter()
                    .all(|d| u.constants.contains_key(d) || u.element(d).is_some())
                {
                    if let Ok(v) = eval(r, &Env::new(), &u) {
                        u.constants.insert(c.clone(), v);
                        progress = true;
                    }
                }
            }
        }
        u
    }

    /// As [`Universe::of`] with numeric constants taken from a check
    /// configuration.
    pub fn with_config(ctx: &FlatContext, consts: &BTreeMap<String, String>) -> Universe {
        let parsed: Vec<(&str, u64)> = consts
            .iter()
            .map(|(k, v)| (k.as_str(), v.trim().parse().expect("numeric constant")))
            .collect();
        Universe::of(ctx, &parsed)
    }

    fn element(&self, name: &str) -> Option<V> {
        self.sets
            .values()
            .any(|es| es.iter().any(|e| e == name))
            .then(|| V::S(name.to_string()))
    }

    fn set_elements(&self, e: &Expr) -> Option<Vec<V>> {
        match &e.kind {
            ExprKind::BoolSet => Some(vec![V::B(false), V::B(true)]),
            ExprKind::Ident(s) => self
                .sets
                .get(s)
                .map(|es| es.iter().map(|x| V::S(x.clone())).collect()),
            _ => None,
        }
    }
}

pub type Env = HashMap<String, V>;

pub fn eval(e: &Expr, env: &Env, u: &Universe) -> R<V> {
    Ok(match &e.kind {
        ExprKind::Int(n) => V::N(*n),
        ExprKind::Bool(b) => V::B(*b),
        ExprKind::Ident(name) => env
            .get(name)
            .cloned()
            .or_else(|| u.constants.get(name).cloned())
            .or_else(|| u.element(name))
            .unwrap_or_else(|| panic!("oracle: unknown identifier {name}")),
        ExprKind::Not(x) => V::B(!truth(x, env, u)?),
        ExprKind::SetLit(items) => {
            let mut pairs = Vec::new();
            for i in items {
                let ExprKind::Binary(BinOp::Maplet, k, v) = &i.kind else {
                    panic!("oracle: only maplet sets are values")
                };
                let k = eval(k, env, u)?;
                let v = eval(v, env, u)?;
                if let Some((_, old)) = pairs.iter().find(|(k2, _)| *k2 == k) {
                    if *old != v {
                        return Err(Undefined);
                    }
                    continue;
                }
                pairs.push((k, v));
            }
            pairs.sort();
            V::F(pairs)
        }
        ExprKind::Binary(op, l, r) => match op {
            BinOp::And => V::B(truth(l, env, u)? && truth(r, env, u)?),
            BinOp::Or => V::B(truth(l, env, u)? || truth(r, env, u)?),
            BinOp::Implies => V::B(!truth(l, env, u)? || truth(r, env, u)?),
            BinOp::Eq => V::B(eval(l, env, u)? == eval(r, env, u)?),
            BinOp::Neq => V::B(eval(l, env, u)? != eval(r, env, u)?),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let (a, b) = (nat(l, env, u)?, nat(r, env, u)?);
                V::B(match op {
                    BinOp::Lt => a < b,
                    BinOp::Le => a <= b,
                    BinOp::Gt => a > b,
                    _ => a >= b,
                })
            }
            BinOp::Add => V::N(
                nat(l, env, u)?
                    .checked_add(nat(r, env, u)?)
                    .ok_or(Undefined)?,
            ),
            BinOp::Sub => V::N(
                nat(l, env, u)?
                    .checked_sub(nat(r, env, u)?)
                    .ok_or(Undefined)?,
            ),
            BinOp::Mul => V::N(
                nat(l, env, u)?
                    .checked_mul(nat(r, env, u)?)
                    .ok_or(Undefined)?,
            ),
            BinOp::Div => {
                let (a, b) = (nat(l, env, u)?, nat(r, env, u)?);
                if b == 0 {
                    return Err(Undefined);
                }
                V::N(a / b)
            }
            BinOp::In => {
                let x = eval(l, env, u)?;
                V::B(match &r.kind {
                    ExprKind::NatSet => matches!(x, V::N(_)),
                    ExprKind::Binary(BinOp::TotalFn, d, rg) => {
                        let dom = u.set_elements(d).expect("oracle: finite domain");
                        match &x {
                            V::F(pairs) => {
                                pairs.len() == dom.len()
                                    && dom.iter().all(|k| pairs.iter().any(|(k2, _)| k2 == k))
                                    && pairs.iter().all(|(_, v)| in_set(v, rg, u))
                            }
                            _ => false,
                        }
                    }
                    _ => in_set(&x, r, u),
                })
            }
            BinOp::TotalFn | BinOp::Maplet => panic!("oracle: not a value"),
        },
        ExprKind::BoolSet | ExprKind::NatSet | ExprKind::Partition(..) => {
            panic!("oracle: unsupported expression")
        }
    })
}

fn in_set(x: &V, set: &Expr, u: &Universe) -> bool {
    match &set.kind {
        ExprKind::NatSet => matches!(x, V::N(_)),
        _ => u.set_elements(set).expect("oracle: known set").contains(x),
    }
}

fn nat(e: &Expr, env: &Env, u: &Universe) -> R<u64> {
    match eval(e, env, u)? {
        V::N(n) => Ok(n),
        other => panic!("oracle: expected a number, found {other:?}"),
    }
}

pub fn truth(e: &Expr, env: &Env, u: &Universe) -> R<bool> {
    match eval(e, env, u)? {
        V::B(b) => Ok(b),
        other => panic!("oracle: expected a truth value, found {other:?}"),
    }
}

/// Values of one variable, ascending.
pub fn domain(ty: &str, bound: Option<(u64, u64)>, u: &Universe) -> Vec<V> {
    match ty {
        "BOOL" => vec![V::B(false), V::B(true)],
        "NAT" => {
            let (lo, hi) = bound.expect("bounded natural");
            (lo..=hi).map(V::N).collect()
        }
        set => u.sets[set].iter().map(|e| V::S(e.clone())).collect(),
    }
}

/// (name, environment, guards, actions)
pub type OEvent = (String, bool, Vec<Expr>, Vec<(String, Expr)>);

/// A machine as the oracle sees it.
pub struct OMachine {
    pub vars: Vec<String>,
    pub domains: Vec<Vec<V>>,
    pub bounds: BTreeMap<String, (u64, u64)>,
    pub invariants: Vec<(String, Expr)>,
    pub init: Vec<(String, Expr)>,
    pub events: Vec<OEvent>,
    pub universe: Universe,
}

impl OMachine {
    /// Reads the flattened machine; `types` gives each variable's carrier
    /// (`NAT`, `BOOL` or a set name).
    pub fn new(
        project: &Project,
        name: &str,
        types: &[(&str, &str)],
        bounds: &[(&str, u64, u64)],
        consts: &[(&str, u64)],
    ) -> OMachine {
        let flat = project.flatten_machine(name).expect("machine");
        let universe = Universe::of(&flat.context, consts);
        let bounds: BTreeMap<String, (u64, u64)> = bounds
            .iter()
            .map(|(v, lo, hi)| (v.to_string(), (*lo, *hi)))
            .collect();
        let vars = flat.variables.clone();
        let domains = vars
            .iter()
            .map(|v| {
                let ty = types.iter().find(|(n, _)| n == v).expect("typed").1;
                domain(ty, bounds.get(v).copied(), &universe)
            })
            .collect();
        OMachine {
            vars,
            domains,
            bounds,
            invariants: flat
                .invariants
                .iter()
                .map(|i| (i.label.clone(), i.body.clone()))
                .collect(),
            init: flat
                .initialisation()
                .actions
                .iter()
                .map(|a| (a.variable.clone(), a.value.clone()))
                .collect(),
            events: flat
                .transitions()
                .map(|e| {
                    (
                        e.name().to_string(),
                        e.is_environment(),
                        e.def.guards.iter().map(|g| g.body.clone()).collect(),
                        e.def
                            .actions
                            .iter()
                            .map(|a| (a.variable.clone(), a.value.clone()))
                            .collect(),
                    )
                })
                .collect(),
            universe,
        }
    }

    fn env(&self, s: &[V]) -> Env {
        self.vars.iter().cloned().zip(s.iter().cloned()).collect()
    }

    pub fn render(&self, s: &[V]) -> Vec<(String, String)> {
        self.vars
            .iter()
            .cloned()
            .zip(s.iter().map(V::render))
            .collect()
    }

    /// Status of `po` by enumeration of every state in lexicographic order
    /// (first variable most significant); variables the obligation does not
    /// mention stay at the least value of their domain.
    pub fn discharge(&self, po: &ProofObligation) -> OStatus {
        let mut mentioned = BTreeSet::new();
        for e in po.hypotheses.iter().chain(std::iter::once(&po.goal)) {
            collect_idents(e, &mut mentioned);
        }
        let free: Vec<usize> = (0..self.vars.len())
            .filter(|&i| mentioned.contains(&self.vars[i]))
            .collect();
        let mut state: Vec<V> = self.domains.iter().map(|d| d[0].clone()).collect();
        let mut idx = vec![0usize; free.len()];
        let mut any_sat = false;
        loop {
            for (k, &v) in free.iter().enumerate() {
                state[v] = self.domains[v][idx[k]].clone();
            }
            let env = self.env(&state);
            let sat = po
                .hypotheses
                .iter()
                .all(|h| truth(h, &env, &self.universe) == Ok(true));
            if sat {
                any_sat = true;
                if truth(&po.goal, &env, &self.universe) != Ok(true) {
                    return OStatus::Failed(self.render(&state));
                }
            }
            // odometer, last variable fastest
            let mut k = free.len();
            loop {
                if k == 0 {
                    return if any_sat {
                        OStatus::Discharged
                    } else {
                        OStatus::Vacuous
                    };
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.domains[free[k]].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    fn invariants_hold(&self, s: &[V]) -> bool {
        self.violated(s).is_empty()
    }

    fn violated(&self, s: &[V]) -> Vec<String> {
        let env = self.env(s);
        self.invariants
            .iter()
            .filter(|(_, i)| truth(i, &env, &self.universe) != Ok(true))
            .map(|(l, _)| l.clone())
            .collect()
    }

    fn in_bounds(&self, s: &[V]) -> bool {
        self.vars
            .iter()
            .zip(s)
            .all(|(v, x)| match (self.bounds.get(v), x) {
                (Some(&(lo, hi)), V::N(n)) => lo <= *n && *n <= hi,
                _ => true,
            })
    }

    fn enabled(&self, s: &[V], driven: bool) -> Vec<usize> {
        let env = self.env(s);
        (0..self.events.len())
            .filter(|&e| driven || !self.events[e].1)
            .filter(|&e| {
                self.events[e]
                    .2
                    .iter()
                    .all(|g| truth(g, &env, &self.universe) == Ok(true))
            })
            .collect()
    }

    fn apply(&self, e: usize, s: &[V]) -> R<Vec<V>> {
        let env = self.env(s);
        let mut next = s.to_vec();
        for (var, rhs) in &self.events[e].3 {
            let i = self.vars.iter().position(|v| v == var).expect("variable");
            next[i] = eval(rhs, &env, &self.universe)?;
        }
        Ok(next)
    }

    /// Breadth-first exploration with the same counting rules as the
    /// checker's report.
    pub fn explore(&self, driven: bool) -> OReach {
        let env = Env::new();
        let init: Vec<V> = self
            .vars
            .iter()
            .map(|v| {
                let (_, rhs) = self.init.iter().find(|(x, _)| x == v).expect("initialised");
                eval(rhs, &env, &self.universe).expect("well-defined init")
            })
            .collect();
        let mut depth: HashMap<Vec<V>, usize> = HashMap::new();
        let mut order: Vec<Vec<V>> = Vec::new();
        let mut queue = VecDeque::new();
        depth.insert(init.clone(), 0);
        order.push(init.clone());
        queue.push_back(init.clone());
        let mut r = OReach::default();
        let mut violated_into: BTreeSet<Vec<V>> = BTreeSet::new();
        if !self.invariants_hold(&init) {
            violated_into.insert(init.clone());
            for l in self.violated(&init) {
                r.violations.entry(l).or_insert(0);
            }
        }
        for (name, env_event, _, _) in &self.events {
            if driven || !env_event {
                r.coverage.insert(name.clone(), 0);
            }
        }
        while let Some(s) = queue.pop_front() {
            let d = depth[&s];
            let on = self.enabled(&s, driven);
            if on.is_empty() {
                r.deadlocks += 1;
            }
            for e in on {
                let Ok(next) = self.apply(e, &s) else {
                    r.action_wd.insert(self.events[e].0.clone());
                    continue;
                };
                if !self.in_bounds(&next) {
                    r.pruned += 1;
                    continue;
                }
                r.transitions += 1;
                *r.coverage.get_mut(&self.events[e].0).expect("listed") += 1;
                if !depth.contains_key(&next) {
                    depth.insert(next.clone(), d + 1);
                    order.push(next.clone());
                    queue.push_back(next.clone());
                }
                if !self.events[e].1 && self.invariants_hold(&s) && !self.invariants_hold(&next) {
                    violated_into.insert(next.clone());
                    for l in self.violated(&next) {
                        let len = r.violations.entry(l).or_insert(d + 1);
                        *len = (*len).min(d + 1);
                    }
                }
            }
        }
        for s in &order {
            if self.invariants_hold(s) || violated_into.contains(s) {
                continue;
            }
            r.hazards += 1;
            let answered = self.enabled(s, true).into_iter().any(|e| {
                !self.events[e].1 && self.apply(e, s).is_ok_and(|n| self.invariants_hold(&n))
            });
            if !answered {
                r.unanswered += 1;
            }
        }
        r.states = order.len();
        r
    }
}

fn collect_idents(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Ident(n) => {
            out.insert(n.clone());
        }
        ExprKind::Not(x) => collect_idents(x, out),
        ExprKind::Binary(_, l, r) => {
            collect_idents(l, out);
            collect_idents(r, out);
        }
        ExprKind::SetLit(items) => items.iter().for_each(|i| collect_idents(i, out)),
        ExprKind::Partition(s, parts) => {
            collect_idents(s, out);
            parts.iter().for_each(|p| collect_idents(p, out));
        }
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OStatus {
    Discharged,
    Vacuous,
    Failed(Vec<(String, String)>),
}

/// The library's status in the oracle's terms.
pub fn lib_status(model: &Model, s: &PoStatus) -> OStatus {
    match s {
        PoStatus::Discharged => OStatus::Discharged,
        PoStatus::Vacuous => OStatus::Vacuous,
        PoStatus::Failed(st) => OStatus::Failed(model.render_state(st).into_iter().collect()),
        #[allow(unreachable_patterns)]
        other => panic!("unexpected status {other:?}"),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OReach {
    pub states: usize,
    pub transitions: usize,
    pub pruned: usize,
    pub deadlocks: usize,
    pub hazards: usize,
    pub unanswered: usize,
    /// Shortest violating trace length per invariant label.
    pub violations: BTreeMap<String, usize>,
    pub coverage: BTreeMap<String, usize>,
    pub action_wd: BTreeSet<String>,
}

pub const X_MAX: u64 = 5;

/// A random machine over `x : NAT` (bounded 0..5), `b : BOOL` and
/// `c : Color` with one environment event.
pub fn random_machine(seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = String::from(
        "CONTEXT Colors SETS Color CONSTANTS red, green, blue\n\
         AXIOMS typ1 partition(Color, {red}, {green}, {blue}) END\n\
         MACHINE R SEES Colors VARIABLES x, b, c\n\
         INVARIANTS inv1 x : NAT inv2 b : BOOL inv3 c : Color\n",
    );
    for i in 0..rng.gen_range(1..=2) {
        out.push_str(&format!("  inv{} {}\n", 4 + i, pred(&mut rng, 2)));
    }
    out.push_str(&format!(
        "EVENTS\n  Event INITIALISATION Then act1 x := {} act2 b := {} act3 c := {} End\n",
        rng.gen_range(0..=3),
        if rng.gen() { "TRUE" } else { "FALSE" },
        COLORS[rng.gen_range(0..3)]
    ));
    let n = rng.gen_range(2..=4);
    for e in 0..=n {
        let env = e == n;
        out.push_str(&format!(
            "  Event {}e{e}",
            if env { "environment " } else { "" }
        ));
        let guards = rng.gen_range(0..=2);
        if guards > 0 {
            out.push_str(" Where");
            for g in 0..guards {
                out.push_str(&format!(" grd{} {}", g + 1, pred(&mut rng, 1)));
            }
        }
        out.push_str(" Then");
        let mut vars = vec!["x", "b", "c"];
        for a in 0..rng.gen_range(1..=2) {
            let v = vars.remove(rng.gen_range(0..vars.len()));
            out.push_str(&format!(" act{} {v} := {}", a + 1, rhs(&mut rng, v)));
        }
        out.push_str(" End\n");
    }
    out.push_str("END\n");
    out
}

const COLORS: [&str; 3] = ["red", "green", "blue"];

fn nat_term(rng: &mut StdRng) -> String {
    match rng.gen_range(0..6) {
        0 => "x + 1".into(),
        1 => "x - 1".into(),
        2 => "6 / x".into(),
        3 => "2 * x".into(),
        _ => "x".into(),
    }
}

fn atom(rng: &mut StdRng) -> String {
    let k = rng.gen_range(0..=X_MAX);
    match rng.gen_range(0..8) {
        0 => format!("{} < {k}", nat_term(rng)),
        1 => format!("{} <= {k}", nat_term(rng)),
        2 => format!("{} = {k}", nat_term(rng)),
        3 => format!("{} /= {k}", nat_term(rng)),
        4 => format!("{} >= {k}", nat_term(rng)),
        5 => format!("b = {}", if rng.gen() { "TRUE" } else { "FALSE" }),
        6 => format!("c = {}", COLORS[rng.gen_range(0..3)]),
        _ => format!("c /= {}", COLORS[rng.gen_range(0..3)]),
    }
}

fn pred(rng: &mut StdRng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return atom(rng);
    }
    match rng.gen_range(0..4) {
        0 => format!("not({})", pred(rng, depth - 1)),
        1 => format!("({} & {})", pred(rng, depth - 1), pred(rng, depth - 1)),
        2 => format!("({} or {})", pred(rng, depth - 1), pred(rng, depth - 1)),
        _ => format!("({} => {})", pred(rng, depth - 1), pred(rng, depth - 1)),
    }
}

fn rhs(rng: &mut StdRng, var: &str) -> String {
    match var {
        "x" => match rng.gen_range(0..5) {
            0 => "x + 1".into(),
            1 => "x - 1".into(),
            2 => "x / 2".into(),
            3 => format!("{}", rng.gen_range(0..=X_MAX)),
            _ => "6 / x".into(),
        },
        "b" => match rng.gen_range(0..3) {
            0 => "TRUE".into(),
            1 => "FALSE".into(),
            _ => "b".into(),
        },
        _ => COLORS[rng.gen_range(0..3)].into(),
    }
}

pub const RANDOM_TYPES: [(&str, &str); 3] = [("x", "NAT"), ("b", "BOOL"), ("c", "Color")];

/// Outcome of one comparison: disagreements as readable lines plus a
/// tally of what the oracle saw, so callers can tell a vacuous run apart.
#[derive(Debug, Default)]
pub struct Comparison {
    pub diffs: Vec<String>,
    pub pos: usize,
    pub failed: usize,
    pub vacuous: usize,
    pub violations: usize,
    pub deadlocks: usize,
    pub pruned: usize,
    pub action_wd: usize,
}

impl Comparison {
    pub fn absorb(&mut self, other: Comparison) {
        self.diffs.extend(other.diffs);
        self.pos += other.pos;
        self.failed += other.failed;
        self.vacuous += other.vacuous;
        self.violations += other.violations;
        self.deadlocks += other.deadlocks;
        self.pruned += other.pruned;
        self.action_wd += other.action_wd;
    }
}

/// Runs discharge on every obligation and exploration in both modes, then
/// compares each result with the oracle.
pub fn compare(
    project: &Project,
    machine: &str,
    types: &[(&str, &str)],
    bounds: &[(&str, u64, u64)],
) -> Comparison {
    use eventb_kernel::checker::{explore, Mode};
    use eventb_kernel::config::CheckConfig;
    use eventb_kernel::obligations::{discharge, generate_pos};

    let mut cfg = CheckConfig::default();
    for (v, lo, hi) in bounds {
        cfg = cfg.bound(v, *lo, *hi);
    }
    let model = Model::new(project, machine, &cfg.consts).expect("model");
    let oracle = OMachine::new(project, machine, types, bounds, &[]);
    let mut c = Comparison::default();
    for po in generate_pos(&model, None) {
        let lib = discharge(&po, &model, &cfg).expect("discharge").status;
        let lib = lib_status(&model, &lib);
        let want = oracle.discharge(&po);
        c.pos += 1;
        match want {
            OStatus::Failed(_) => c.failed += 1,
            OStatus::Vacuous => c.vacuous += 1,
            OStatus::Discharged => {}
        }
        if lib != want {
            c.diffs.push(format!(
                "{machine} {}: library {lib:?}, oracle {want:?}",
                po.id
            ));
        }
    }
    for (mode, driven) in [(Mode::Closed, false), (Mode::Driven, true)] {
        let r = explore(&model, &cfg, mode).expect("explore");
        let got = OReach {
            states: r.states,
            transitions: r.transitions,
            pruned: r.pruned,
            deadlocks: r.deadlock_count,
            hazards: r.hazards,
            unanswered: r.unanswered_count,
            violations: r
                .violations
                .iter()
                .map(|v| (v.invariant.clone(), v.trace.len()))
                .collect(),
            coverage: r.coverage.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            action_wd: r.action_wd.iter().map(|a| a.event.clone()).collect(),
        };
        let want = oracle.explore(driven);
        c.violations += want.violations.len();
        c.deadlocks += want.deadlocks;
        c.pruned += want.pruned;
        c.action_wd += want.action_wd.len();
        if got != want {
            c.diffs.push(format!(
                "{machine} {mode}: library {got:?}, oracle {want:?}"
            ));
        }
    }
    c
}

/// Reads a rendered value back through the parser and the oracle's own
/// evaluator.
pub fn value_of(text: &str, u: &Universe) -> V {
    let e = eventb_kernel::parser::parse_expr(text).expect("rendered value parses");
    eval(&e, &Env::new(), u).expect("rendered value is defined")
}

/// A library state as an oracle environment.
pub fn env_of(model: &Model, s: &eventb_kernel::semantics::State, u: &Universe) -> Env {
    model
        .render_state(s)
        .into_iter()
        .map(|(k, v)| {
            let v = value_of(&v, u);
            (k, v)
        })
        .collect()
}
