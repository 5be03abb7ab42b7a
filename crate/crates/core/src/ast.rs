//! Abstract syntax for contexts, machines, events and the expression language.
//!
//! Expressions and predicates share a single recursive tree. Every node carries
//! the span it was parsed from; spans never take part in equality, so a tree
//! that went through the pretty-printer and back compares equal to the original.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A 1-based (line, column) position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.line, self.start.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    /// Set membership `e : S`.
    In,
    /// Total-function type `A --> B`.
    TotalFn,
    /// Maplet `a |-> b`.
    Maplet,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Neq => "/=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "or",
            BinOp::Implies => "=>",
            BinOp::In => ":",
            BinOp::TotalFn => "-->",
            BinOp::Maplet => "|->",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            // 4 is `not`
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::In => 5,
            BinOp::TotalFn => 6,
            BinOp::Maplet => 7,
            BinOp::Add | BinOp::Sub => 8,
            BinOp::Mul | BinOp::Div => 9,
        }
    }

    pub fn is_relational(self) -> bool {
        self.precedence() == 5
    }
}

pub const NOT_PRECEDENCE: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Int(u64),
    Bool(bool),
    Ident(String),
    /// The predefined set `BOOL`.
    BoolSet,
    /// The predefined set `NAT`.
    NatSet,
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    SetLit(Vec<Expr>),
    /// `partition(S, {a}, {b}, ...)`
    Partition(Box<Expr>, Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}
impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Builds a node with an empty span; used for synthesized obligations.
    pub fn synth(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Ident(name.into()))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        let span = lhs.span.join(rhs.span);
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    pub fn negation(e: Expr) -> Self {
        let span = e.span;
        Expr::new(ExprKind::Not(Box::new(e)), span)
    }

    /// Right-nested conjunction of `parts`; `TRUE` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut parts: Vec<Expr> = parts.into_iter().collect();
        match parts.pop() {
            None => Expr::synth(ExprKind::Bool(true)),
            Some(last) => parts
                .into_iter()
                .rev()
                .fold(last, |acc, p| Expr::binary(BinOp::And, p, acc)),
        }
    }

    /// Splits top-level conjunctions into their conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match &e.kind {
                ExprKind::Binary(BinOp::And, l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                _ => out.push(e),
            }
        }
        out
    }

    /// Every identifier occurring in the tree.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let ExprKind::Ident(name) = &e.kind {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Not(e) => e.visit(f),
            ExprKind::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            ExprKind::SetLit(items) => items.iter().for_each(|i| i.visit(f)),
            ExprKind::Partition(s, parts) => {
                s.visit(f);
                parts.iter().for_each(|p| p.visit(f));
            }
            ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Ident(_)
            | ExprKind::BoolSet
            | ExprKind::NatSet => {}
        }
    }

    /// Simultaneous substitution of identifiers.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        let kind = match &self.kind {
            ExprKind::Ident(name) => match map.get(name) {
                Some(replacement) => return replacement.clone(),
                None => ExprKind::Ident(name.clone()),
            },
            ExprKind::Not(e) => ExprKind::Not(Box::new(e.substitute(map))),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(
                *op,
                Box::new(l.substitute(map)),
                Box::new(r.substitute(map)),
            ),
            ExprKind::SetLit(items) => {
                ExprKind::SetLit(items.iter().map(|i| i.substitute(map)).collect())
            }
            ExprKind::Partition(s, parts) => ExprKind::Partition(
                Box::new(s.substitute(map)),
                parts.iter().map(|p| p.substitute(map)).collect(),
            ),
            other => other.clone(),
        };
        Expr::new(kind, self.span)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::print_expr(self))
    }
}

/// Axiom / invariant classification by label prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateKind {
    Typing,
    Technical,
    Property,
}

impl PredicateKind {
    pub fn from_label(label: &str) -> Self {
        if label.starts_with("typ") {
            PredicateKind::Typing
        } else if label.starts_with("tec") {
            PredicateKind::Technical
        } else {
            PredicateKind::Property
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPredicate {
    pub label: String,
    pub body: Expr,
}

impl LabeledPredicate {
    pub fn new(label: impl Into<String>, body: Expr) -> Self {
        LabeledPredicate {
            label: label.into(),
            body,
        }
    }

    pub fn kind(&self) -> PredicateKind {
        PredicateKind::from_label(&self.label)
    }

    pub fn span(&self) -> Span {
        self.body.span
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub label: String,
    pub variable: String,
    pub value: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    #[default]
    Model,
    /// Stimulus event standing in for the physical environment (sensors).
    Environment,
}

pub const INITIALISATION: &str = "INITIALISATION";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDef {
    pub name: String,
    pub refines: Vec<String>,
    pub kind: EventKind,
    pub convergent: bool,
    pub guards: Vec<LabeledPredicate>,
    pub actions: Vec<Assignment>,
}

impl EventDef {
    pub fn new(name: impl Into<String>) -> Self {
        EventDef {
            name: name.into(),
            refines: Vec::new(),
            kind: EventKind::Model,
            convergent: false,
            guards: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn is_initialisation(&self) -> bool {
        self.name == INITIALISATION
    }

    pub fn assigned(&self) -> impl Iterator<Item = &str> {
        self.actions.iter().map(|a| a.variable.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextDef {
    pub name: String,
    pub extends: Vec<String>,
    pub sets: Vec<String>,
    pub constants: Vec<String>,
    pub axioms: Vec<LabeledPredicate>,
    pub theorems: Vec<LabeledPredicate>,
    pub span: Span,
}

impl ContextDef {
    pub fn new(name: impl Into<String>) -> Self {
        ContextDef {
            name: name.into(),
            extends: Vec::new(),
            sets: Vec::new(),
            constants: Vec::new(),
            axioms: Vec::new(),
            theorems: Vec::new(),
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineDef {
    pub name: String,
    pub refines: Option<String>,
    pub sees: Vec<String>,
    pub variables: Vec<String>,
    pub invariants: Vec<LabeledPredicate>,
    pub variant: Option<Expr>,
    pub events: Vec<EventDef>,
    pub span: Span,
}

impl MachineDef {
    pub fn new(name: impl Into<String>) -> Self {
        MachineDef {
            name: name.into(),
            refines: None,
            sees: Vec::new(),
            variables: Vec::new(),
            invariants: Vec::new(),
            variant: None,
            events: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn event(&self, name: &str) -> Option<&EventDef> {
        self.events.iter().find(|e| e.name == name)
    }
}

/// One top-level block of a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    Context(ContextDef),
    Machine(MachineDef),
}

impl Component {
    pub fn name(&self) -> &str {
        match self {
            Component::Context(c) => &c.name,
            Component::Machine(m) => &m.name,
        }
    }
}

/// If `pred` has the shape `v : T` with `v` an identifier, returns `(v, T)`.
pub fn as_typing(pred: &Expr) -> Option<(&str, &Expr)> {
    match &pred.kind {
        ExprKind::Binary(BinOp::In, lhs, rhs) => match &lhs.kind {
            ExprKind::Ident(v) => Some((v.as_str(), rhs)),
            _ => None,
        },
        _ => None,
    }
}
