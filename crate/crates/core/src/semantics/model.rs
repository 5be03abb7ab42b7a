use std::collections::BTreeMap;

use indexmap::IndexMap;

use crate::ast::{as_typing, EventKind, Expr, ExprKind, PredicateKind};
use crate::parser::parse_expr;
use crate::project::{FlatContext, FlatMachine, Project};

use super::{Binding, Scope, SemanticError, Signature, Term, Ty, Value, WdFailure};

/// Total valuation of a machine's variables, in declaration order.
pub type State = Vec<Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPred {
    pub label: String,
    pub kind: PredicateKind,
    /// `v : T` where `T` is exactly the type of `v`; always true.
    pub typing: bool,
    pub expr: Expr,
    pub term: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub label: String,
    pub slot: usize,
    pub term: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledEvent {
    pub name: String,
    pub kind: EventKind,
    pub convergent: bool,
    pub guards: Vec<CompiledPred>,
    pub actions: Vec<Action>,
}

impl CompiledEvent {
    pub fn is_environment(&self) -> bool {
        self.kind == EventKind::Environment
    }
}

/// A guard that could not be evaluated; the event is treated as disabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WdWarning {
    pub event: String,
    pub guard: String,
    pub failure: WdFailure,
}

/// Constant name to value, in declaration order. Enumeration elements are
/// not listed; they live in the [`Signature`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstValuation {
    pub values: IndexMap<String, (Value, Ty)>,
}

/// A flattened machine compiled against its constants.
#[derive(Debug, Clone)]
pub struct Model {
    pub flat: FlatMachine,
    pub sig: Signature,
    pub consts: ConstValuation,
    pub vars: Vec<VarInfo>,
    pub invariants: Vec<CompiledPred>,
    pub init: CompiledEvent,
    /// Every event except the initialisation, in declaration order.
    pub events: Vec<CompiledEvent>,
    pub variant: Option<Term>,
}

/// Builds the enumeration signature of a flattened context.
pub fn signature(ctx: &FlatContext) -> Result<Signature, SemanticError> {
    let mut sig = Signature::default();
    for set in &ctx.sets {
        let mut elements = None;
        for ax in &ctx.axioms {
            let ExprKind::Partition(s, parts) = &ax.body.kind else {
                continue;
            };
            if !matches!(&s.kind, ExprKind::Ident(n) if n == set) {
                continue;
            }
            let mut els = Vec::new();
            for p in parts {
                let ExprKind::SetLit(items) = &p.kind else {
                    return Err(SemanticError::ty(
                        "partition parts must be set literals",
                        p.span,
                    ));
                };
                for i in items {
                    match &i.kind {
                        ExprKind::Ident(n) if ctx.constants.contains(n) => {
                            if sig.elem_id(n).is_some() || els.contains(n) {
                                return Err(SemanticError::ConflictingTypes(n.clone()));
                            }
                            els.push(n.clone())
                        }
                        _ => {
                            return Err(SemanticError::ty(
                                "partition parts must list declared constants",
                                i.span,
                            ))
                        }
                    }
                }
            }
            elements = Some(els);
            break;
        }
        sig.add_set(set, elements.as_deref());
    }
    Ok(sig)
}

/// Types and values every non-element constant: user values come from
/// `overrides` (DSL expression text); the rest must be the unique solution
/// of the axioms over a finite type.
pub fn solve_constants(
    ctx: &FlatContext,
    sig: &Signature,
    overrides: &BTreeMap<String, String>,
) -> Result<ConstValuation, SemanticError> {
    let base = Scope::new(sig);
    let mut typed: Vec<(String, Ty)> = Vec::new();
    for c in ctx.constants.iter().filter(|c| sig.elem_id(c).is_none()) {
        let mut ty: Option<Ty> = None;
        for ax in &ctx.axioms {
            if let Some((name, set)) = as_typing(&ax.body) {
                if name == c {
                    let (_, t) = base.set_term(set)?;
                    if ty.as_ref().is_some_and(|old| *old != t) {
                        return Err(SemanticError::ConflictingTypes(c.clone()));
                    }
                    ty = Some(t);
                }
            }
        }
        typed.push((
            c.clone(),
            ty.ok_or_else(|| SemanticError::UntypedConstant(c.clone()))?,
        ));
    }

    let mut values = IndexMap::new();
    let mut unknown = Vec::new();
    for (name, ty) in &typed {
        if let Some(text) = overrides.get(name) {
            let e = parse_expr(text)
                .map_err(|e| SemanticError::ty(e.to_string(), Default::default()))?;
            let v = base.typed(&e, ty)?.eval(&[])?;
            values.insert(name.clone(), v);
        } else {
            let dom = sig
                .values_of(ty, None)
                .ok_or_else(|| SemanticError::UnvaluedConstant(name.clone()))?;
            unknown.push((name.clone(), dom));
        }
    }

    let mut scope = Scope::new(sig);
    for (name, ty) in &typed {
        match values.get(name) {
            Some(v) => scope.bind(name, Binding::Value(v.clone(), ty.clone())),
            None => {
                let slot = unknown
                    .iter()
                    .position(|u| &u.0 == name)
                    .expect("unknown constant");
                scope.bind(name, Binding::Slot(slot, ty.clone()));
            }
        }
    }
    let axioms = ctx
        .axioms
        .iter()
        .map(|a| Ok((a.label.clone(), scope.predicate(&a.body)?)))
        .collect::<Result<Vec<_>, SemanticError>>()?;

    let holds = |env: &[Value]| -> Option<String> {
        axioms
            .iter()
            .find(|(_, t)| !t.eval_bool(env).unwrap_or(false))
            .map(|(l, _)| l.clone())
    };

    let mut solutions: Vec<Vec<Value>> = Vec::new();
    let mut first_failure = None;
    let mut idx = vec![0usize; unknown.len()];
    if unknown.iter().all(|u| !u.1.is_empty()) {
        'search: loop {
            let env: Vec<Value> = idx
                .iter()
                .zip(&unknown)
                .map(|(&i, u)| u.1[i].clone())
                .collect();
            match holds(&env) {
                None => {
                    solutions.push(env);
                    if solutions.len() > 1 {
                        break;
                    }
                }
                Some(l) => {
                    first_failure.get_or_insert(l);
                }
            }
            let mut k = idx.len();
            loop {
                if k == 0 {
                    break 'search;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < unknown[k].1.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    match solutions.len() {
        0 => {
            return Err(SemanticError::AxiomViolated(
                first_failure.unwrap_or_default(),
            ))
        }
        1 => {
            for ((name, _), v) in unknown.iter().zip(solutions.pop().unwrap()) {
                values.insert(name.clone(), v);
            }
        }
        _ => {
            let names: Vec<_> = unknown.iter().map(|u| u.0.as_str()).collect();
            return Err(SemanticError::AmbiguousConstants(names.join(", ")));
        }
    }
    Ok(ConstValuation {
        values: typed
            .into_iter()
            .map(|(n, t)| {
                let v = values[&n].clone();
                (n, (v, t))
            })
            .collect(),
    })
}

impl Model {
    pub fn new(
        project: &Project,
        machine: &str,
        consts: &BTreeMap<String, String>,
    ) -> Result<Model, SemanticError> {
        Model::from_flat(project.flatten_machine(machine)?.clone(), consts)
    }

    pub fn from_flat(
        flat: FlatMachine,
        consts: &BTreeMap<String, String>,
    ) -> Result<Model, SemanticError> {
        let sig = signature(&flat.context)?;
        let consts = solve_constants(&flat.context, &sig, consts)?;
        let var_types = infer_types(&flat, &sig, &consts)?;

        let mut scope = const_scope(&sig, &consts);
        let vars: Vec<VarInfo> = flat
            .variables
            .iter()
            .zip(var_types)
            .enumerate()
            .map(|(i, (name, ty))| {
                scope.bind(name, Binding::Slot(i, ty.clone()));
                VarInfo {
                    name: name.clone(),
                    ty,
                }
            })
            .collect();

        let compile_pred = |label: &str, e: &Expr| -> Result<CompiledPred, SemanticError> {
            let typing = match as_typing(e) {
                Some((v, set)) => match vars.iter().find(|x| x.name == v) {
                    Some(_) => scope.set_term(set)?.0.is_whole_type(),
                    None => false,
                },
                None => false,
            };
            Ok(CompiledPred {
                label: label.to_string(),
                kind: PredicateKind::from_label(label),
                typing,
                expr: e.clone(),
                term: scope.predicate(e)?,
            })
        };

        let invariants = flat
            .invariants
            .iter()
            .map(|i| compile_pred(&i.label, &i.body))
            .collect::<Result<Vec<_>, _>>()?;

        let mut init = None;
        let mut events = Vec::new();
        for ev in &flat.events {
            let guards = ev
                .def
                .guards
                .iter()
                .map(|g| compile_pred(&g.label, &g.body))
                .collect::<Result<Vec<_>, _>>()?;
            let actions = ev
                .def
                .actions
                .iter()
                .map(|a| {
                    let slot = vars
                        .iter()
                        .position(|v| v.name == a.variable)
                        .expect("validated");
                    Ok(Action {
                        label: a.label.clone(),
                        slot,
                        term: scope.typed(&a.value, &vars[slot].ty)?,
                    })
                })
                .collect::<Result<Vec<_>, SemanticError>>()?;
            let ce = CompiledEvent {
                name: ev.def.name.clone(),
                kind: ev.def.kind,
                convergent: ev.def.convergent,
                guards,
                actions,
            };
            if ev.def.is_initialisation() {
                init = Some(ce);
            } else {
                events.push(ce);
            }
        }
        let variant = flat
            .variant
            .as_ref()
            .map(|v| scope.typed(v, &Ty::Nat))
            .transpose()?;

        Ok(Model {
            init: init.expect("validated by resolve"),
            flat,
            sig,
            consts,
            vars,
            invariants,
            events,
            variant,
        })
    }

    pub fn name(&self) -> &str {
        &self.flat.name
    }

    /// Compilation scope with constants inlined and variables as slots.
    pub fn scope(&self) -> Scope<'_> {
        let mut s = const_scope(&self.sig, &self.consts);
        for (i, v) in self.vars.iter().enumerate() {
            s.bind(&v.name, Binding::Slot(i, v.ty.clone()));
        }
        s
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn event(&self, name: &str) -> Option<&CompiledEvent> {
        self.events.iter().find(|e| e.name == name)
    }

    /// Parses a constant DSL expression as a value of variable `var`'s type.
    pub fn parse_value(&self, var: usize, text: &str) -> Result<Value, SemanticError> {
        let e =
            parse_expr(text).map_err(|e| SemanticError::ty(e.to_string(), Default::default()))?;
        let scope = const_scope(&self.sig, &self.consts);
        Ok(scope.typed(&e, &self.vars[var].ty)?.eval(&[])?)
    }

    /// The state produced by INITIALISATION.
    pub fn initial_state(&self) -> Result<State, WdFailure> {
        let blank: State = vec![Value::Bool(false); self.vars.len()];
        self.apply(&self.init, &blank)
    }

    /// Simultaneous assignment: every right-hand side is evaluated in `s`.
    pub fn apply(&self, ev: &CompiledEvent, s: &State) -> Result<State, WdFailure> {
        let mut next = s.clone();
        for a in &ev.actions {
            next[a.slot] = a.term.eval(s)?;
        }
        Ok(next)
    }

    /// Whether every guard holds; a guard WD failure is returned as an error.
    pub fn guard_holds(&self, ev: &CompiledEvent, s: &State) -> Result<bool, (String, WdFailure)> {
        for g in &ev.guards {
            match g.term.eval_bool(s) {
                Ok(true) => {}
                Ok(false) => return Ok(false),
                Err(w) => return Err((g.label.clone(), w)),
            }
        }
        Ok(true)
    }

    /// Indices into [`Model::events`] enabled in `s`, plus WD warnings for
    /// guards that could not be evaluated.
    pub fn enabled_events(&self, s: &State) -> (Vec<usize>, Vec<WdWarning>) {
        let mut on = Vec::new();
        let mut warnings = Vec::new();
        for (i, ev) in self.events.iter().enumerate() {
            match self.guard_holds(ev, s) {
                Ok(true) => on.push(i),
                Ok(false) => {}
                Err((guard, failure)) => warnings.push(WdWarning {
                    event: ev.name.clone(),
                    guard,
                    failure,
                }),
            }
        }
        (on, warnings)
    }

    pub fn failing_guards(&self, ev: &CompiledEvent, s: &State) -> Vec<String> {
        ev.guards
            .iter()
            .filter(|g| !g.term.eval_bool(s).unwrap_or(false))
            .map(|g| g.label.clone())
            .collect()
    }

    /// Fires `name` if it is enabled.
    pub fn fire(&self, name: &str, s: &State) -> Result<State, SemanticError> {
        let ev = self
            .event(name)
            .ok_or_else(|| SemanticError::UnknownEvent(name.to_string()))?;
        let failing = self.failing_guards(ev, s);
        if !failing.is_empty() {
            return Err(SemanticError::GuardNotEnabled {
                event: name.to_string(),
                guards: failing,
            });
        }
        Ok(self.apply(ev, s)?)
    }

    /// Labels of invariants that are false (or ill-defined) in `s`.
    pub fn violated_invariants(&self, s: &State) -> Vec<String> {
        self.invariants
            .iter()
            .filter(|i| !i.term.eval_bool(s).unwrap_or(false))
            .map(|i| i.label.clone())
            .collect()
    }

    pub fn invariants_hold(&self, s: &State) -> bool {
        self.invariants
            .iter()
            .all(|i| i.term.eval_bool(s).unwrap_or(false))
    }

    /// Variable name to DSL text, in declaration order.
    pub fn render_state(&self, s: &State) -> IndexMap<String, String> {
        self.vars
            .iter()
            .zip(s)
            .map(|(v, x)| (v.name.clone(), self.sig.render(x)))
            .collect()
    }

    pub fn render_ty(&self, var: usize) -> String {
        self.sig.render_ty(&self.vars[var].ty)
    }
}

fn const_scope<'a>(sig: &'a Signature, consts: &ConstValuation) -> Scope<'a> {
    let mut s = Scope::new(sig);
    for (name, (v, ty)) in &consts.values {
        s.bind(name, Binding::Value(v.clone(), ty.clone()));
    }
    s
}

/// Types each variable from its typing invariants (`v : T`).
pub fn infer_types(
    flat: &FlatMachine,
    sig: &Signature,
    consts: &ConstValuation,
) -> Result<Vec<Ty>, SemanticError> {
    let scope = const_scope(sig, consts);
    flat.variables
        .iter()
        .map(|v| {
            let mut ty: Option<Ty> = None;
            for inv in &flat.invariants {
                if let Some((name, set)) = as_typing(&inv.body) {
                    if name == v {
                        let (_, t) = scope.set_term(set)?;
                        if ty.as_ref().is_some_and(|old| *old != t) {
                            return Err(SemanticError::ConflictingTypes(v.clone()));
                        }
                        ty = Some(t);
                    }
                }
            }
            ty.ok_or_else(|| SemanticError::UntypedVariable(v.clone()))
        })
        .collect()
}
