//! Typing and evaluation: carrier sets become finite enumerations, every
//! expression is compiled to a slot-indexed [`Term`] and evaluated over
//! states with well-definedness checks.

mod compile;
mod model;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::Span;
use crate::project::ResolveError;

pub use compile::{Binding, Scope, SetTerm, Term};
pub use model::{
    infer_types, signature, solve_constants, Action, CompiledEvent, CompiledPred, ConstValuation,
    Model, State, VarInfo, WdWarning,
};

/// Static types. Function domains are always `Bool` or an enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Bool,
    Nat,
    Enum(u32),
    Func(Box<Ty>, Box<Ty>),
    Set(Box<Ty>),
}

/// Domain of a function value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dom {
    Bool,
    Set(u32),
}

/// Runtime values. Enumeration elements are global ids into the
/// [`Signature`]; functions are stored as their range values in domain order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Nat(u64),
    Elem(u32),
    Func(Dom, Arc<[Value]>),
    /// Sorted, deduplicated.
    Set(Arc<[Value]>),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Value::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn set(mut items: Vec<Value>) -> Value {
        items.sort();
        items.dedup();
        Value::Set(items.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WdReason {
    DivisionByZero,
    NaturalUnderflow,
    FunctionOutsideDomain,
    Overflow,
}

impl fmt::Display for WdReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WdReason::DivisionByZero => "division by zero",
            WdReason::NaturalUnderflow => "natural underflow",
            WdReason::FunctionOutsideDomain => "function applied outside its domain",
            WdReason::Overflow => "arithmetic overflow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{span}: {reason}")]
pub struct WdFailure {
    pub span: Span,
    pub reason: WdReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticError {
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("variable `{0}` has no typing invariant")]
    UntypedVariable(String),
    #[error("constant `{0}` has no typing axiom")]
    UntypedConstant(String),
    #[error("`{0}` has conflicting typings")]
    ConflictingTypes(String),
    #[error("carrier set `{0}` is not made finite by a partition axiom")]
    NonFiniteCarrier(String),
    #[error("{span}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, span: Span },
    #[error("{span}: type error: {message}")]
    Type { message: String, span: Span },
    #[error("constant `{0}` needs a value (supply one in the configuration)")]
    UnvaluedConstant(String),
    #[error("constants {0} are not uniquely determined by the axioms")]
    AmbiguousConstants(String),
    #[error("axiom `{0}` does not hold")]
    AxiomViolated(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error(transparent)]
    Wd(#[from] WdFailure),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("event `{event}` is not enabled (failing guards: {})", .guards.join(", "))]
    GuardNotEnabled { event: String, guards: Vec<String> },
}

impl SemanticError {
    pub(crate) fn ty(message: impl Into<String>, span: Span) -> Self {
        SemanticError::Type {
            message: message.into(),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarrierSet {
    pub name: String,
    pub first: u32,
    pub len: u32,
    pub finite: bool,
}

/// Carrier sets and their elements for one flattened view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub sets: Vec<CarrierSet>,
    /// (set id, element name), indexed by global element id.
    pub elems: Vec<(u32, String)>,
    set_index: HashMap<String, u32>,
    elem_index: HashMap<String, u32>,
}

impl Signature {
    /// Registers a carrier set; `elements` is `None` when no partition
    /// enumerates it.
    pub fn add_set(&mut self, name: &str, elements: Option<&[String]>) -> u32 {
        let id = self.sets.len() as u32;
        let first = self.elems.len() as u32;
        let els = elements.unwrap_or(&[]);
        for e in els {
            self.elem_index.insert(e.clone(), self.elems.len() as u32);
            self.elems.push((id, e.clone()));
        }
        self.sets.push(CarrierSet {
            name: name.to_string(),
            first,
            len: els.len() as u32,
            finite: elements.is_some(),
        });
        self.set_index.insert(name.to_string(), id);
        id
    }

    pub fn set_id(&self, name: &str) -> Option<u32> {
        self.set_index.get(name).copied()
    }

    pub fn elem_id(&self, name: &str) -> Option<u32> {
        self.elem_index.get(name).copied()
    }

    pub fn elem_name(&self, id: u32) -> &str {
        &self.elems[id as usize].1
    }

    pub fn elements(&self, set: u32) -> impl Iterator<Item = u32> {
        let s = &self.sets[set as usize];
        s.first..s.first + s.len
    }

    pub fn dom_values(&self, dom: Dom) -> Vec<Value> {
        match dom {
            Dom::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Dom::Set(s) => self.elements(s).map(Value::Elem).collect(),
        }
    }

    /// Every value of `ty` in ascending order; `nat` bounds naturals
    /// (including function ranges). `None` for unbounded or set types.
    pub fn values_of(&self, ty: &Ty, nat: Option<(u64, u64)>) -> Option<Vec<Value>> {
        Some(match ty {
            Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Ty::Nat => {
                let (lo, hi) = nat?;
                (lo..=hi).map(Value::Nat).collect()
            }
            Ty::Enum(s) => self.elements(*s).map(Value::Elem).collect(),
            Ty::Func(d, r) => {
                let dom = ty_dom(d)?;
                let n = self.dom_values(dom).len();
                let range = self.values_of(r, nat)?;
                let mut out = Vec::new();
                let mut idx = vec![0usize; n];
                if range.is_empty() && n > 0 {
                    return Some(out);
                }
                loop {
                    out.push(Value::Func(
                        dom,
                        idx.iter().map(|&i| range[i].clone()).collect(),
                    ));
                    // odometer, last position fastest
                    let mut k = n;
                    loop {
                        if k == 0 {
                            return Some(out);
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < range.len() {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            }
            Ty::Set(_) => return None,
        })
    }

    /// Renders a value in DSL syntax.
    pub fn render(&self, v: &Value) -> String {
        match v {
            Value::Bool(true) => "TRUE".into(),
            Value::Bool(false) => "FALSE".into(),
            Value::Nat(n) => n.to_string(),
            Value::Elem(e) => self.elem_name(*e).to_string(),
            Value::Func(dom, vals) => {
                let keys = self.dom_values(*dom);
                let parts: Vec<String> = keys
                    .iter()
                    .zip(vals.iter())
                    .map(|(k, v)| format!("{} |-> {}", self.render(k), self.render(v)))
                    .collect();
                format!("{{{}}}", parts.join(", "))
            }
            Value::Set(items) => {
                let parts: Vec<String> = items.iter().map(|i| self.render(i)).collect();
                format!("{{{}}}", parts.join(", "))
            }
        }
    }

    pub fn render_ty(&self, ty: &Ty) -> String {
        match ty {
            Ty::Bool => "BOOL".into(),
            Ty::Nat => "NAT".into(),
            Ty::Enum(s) => self.sets[*s as usize].name.clone(),
            Ty::Func(d, r) => format!("{} --> {}", self.render_ty(d), self.render_ty(r)),
            Ty::Set(t) => format!("set of {}", self.render_ty(t)),
        }
    }

    /// Whether `v` inhabits `ty`.
    pub fn has_type(&self, v: &Value, ty: &Ty) -> bool {
        match (v, ty) {
            (Value::Bool(_), Ty::Bool) | (Value::Nat(_), Ty::Nat) => true,
            (Value::Elem(e), Ty::Enum(s)) => self.elems.get(*e as usize).is_some_and(|x| x.0 == *s),
            (Value::Func(dom, vals), Ty::Func(d, r)) => {
                ty_dom(d) == Some(*dom)
                    && vals.len() == self.dom_values(*dom).len()
                    && vals.iter().all(|x| self.has_type(x, r))
            }
            (Value::Set(items), Ty::Set(t)) => items.iter().all(|x| self.has_type(x, t)),
            _ => false,
        }
    }
}

pub(crate) fn ty_dom(ty: &Ty) -> Option<Dom> {
    match ty {
        Ty::Bool => Some(Dom::Bool),
        Ty::Enum(s) => Some(Dom::Set(*s)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::default();
        s.add_set("S", Some(&["a".to_string(), "b".to_string()]));
        s.add_set(
            "T",
            Some(&["x".to_string(), "y".to_string(), "z".to_string()]),
        );
        s
    }

    #[test]
    fn function_space_enumeration_is_ascending() {
        let s = sig();
        let ty = Ty::Func(Box::new(Ty::Enum(0)), Box::new(Ty::Enum(1)));
        let vals = s.values_of(&ty, None).unwrap();
        assert_eq!(vals.len(), 9);
        let mut sorted = vals.clone();
        sorted.sort();
        assert_eq!(vals, sorted);
        assert_eq!(s.render(&vals[1]), "{a |-> x, b |-> y}");
        assert!(vals.iter().all(|v| s.has_type(v, &ty)));
    }

    #[test]
    fn unbounded_naturals_cannot_be_enumerated() {
        assert!(sig().values_of(&Ty::Nat, None).is_none());
        assert_eq!(sig().values_of(&Ty::Nat, Some((2, 4))).unwrap().len(), 3);
    }
}
