use std::collections::HashMap;

use crate::ast::{BinOp, Expr, ExprKind, Span};

use super::{ty_dom, Dom, SemanticError, Signature, Ty, Value, WdFailure, WdReason};

/// What an identifier denotes while compiling.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    /// Read from the evaluation environment at this index.
    Slot(usize, Ty),
    /// Inlined constant.
    Value(Value, Ty),
}

/// Name environment for compilation. Enumeration elements and carrier sets
/// of the signature are always visible.
#[derive(Debug, Clone)]
pub struct Scope<'a> {
    pub sig: &'a Signature,
    names: HashMap<String, Binding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// Compiled expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Lit(Value),
    Slot(usize),
    Not(Box<Term>),
    And(Box<Term>, Box<Term>),
    Or(Box<Term>, Box<Term>),
    Implies(Box<Term>, Box<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>, Span),
    Eq(Box<Term>, Box<Term>),
    Neq(Box<Term>, Box<Term>),
    Cmp(CmpOp, Box<Term>, Box<Term>),
    In(Box<Term>, SetTerm),
    /// Maplet-set literal; must cover the whole domain exactly once.
    FuncLit {
        dom: Dom,
        first: u32,
        len: u32,
        pairs: Vec<(Term, Term)>,
        span: Span,
    },
    SetLit(Vec<Term>),
    /// Parts pairwise disjoint and union equal to the set.
    Partition(SetTerm, Vec<Term>),
}

/// Right-hand side of a membership test.
#[derive(Debug, Clone, PartialEq)]
pub enum SetTerm {
    Bool,
    Nat,
    Carrier { first: u32, len: u32 },
    FnSpace(Box<SetTerm>, Box<SetTerm>),
    Value(Box<Term>),
}

impl<'a> Scope<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Scope {
            sig,
            names: HashMap::new(),
        }
    }

    pub fn bind(&mut self, name: impl Into<String>, b: Binding) {
        self.names.insert(name.into(), b);
    }

    pub fn lookup(&self, name: &str) -> Option<Binding> {
        if let Some(b) = self.names.get(name) {
            return Some(b.clone());
        }
        if let Some(e) = self.sig.elem_id(name) {
            let set = self.sig.elems[e as usize].0;
            return Some(Binding::Value(Value::Elem(e), Ty::Enum(set)));
        }
        None
    }

    /// Compiles a predicate (boolean-typed expression).
    pub fn predicate(&self, e: &Expr) -> Result<Term, SemanticError> {
        let (t, ty) = self.expr(e, Some(&Ty::Bool))?;
        expect(&ty, &Ty::Bool, e.span)?;
        Ok(t)
    }

    /// Compiles an expression whose type must be `ty`.
    pub fn typed(&self, e: &Expr, ty: &Ty) -> Result<Term, SemanticError> {
        let (t, got) = self.expr(e, Some(ty))?;
        if &got != ty {
            return Err(SemanticError::ty(
                format!(
                    "expected {}, found {}",
                    self.sig.render_ty(ty),
                    self.sig.render_ty(&got)
                ),
                e.span,
            ));
        }
        Ok(t)
    }

    fn carrier(&self, name: &str) -> Result<Option<(u32, u32, u32)>, SemanticError> {
        let Some(id) = self.sig.set_id(name) else {
            return Ok(None);
        };
        let s = &self.sig.sets[id as usize];
        if !s.finite {
            return Err(SemanticError::NonFiniteCarrier(name.to_string()));
        }
        Ok(Some((id, s.first, s.len)))
    }

    /// Compiles the right-hand side of `x : S`, returning the element type.
    pub fn set_term(&self, e: &Expr) -> Result<(SetTerm, Ty), SemanticError> {
        match &e.kind {
            ExprKind::BoolSet => Ok((SetTerm::Bool, Ty::Bool)),
            ExprKind::NatSet => Ok((SetTerm::Nat, Ty::Nat)),
            ExprKind::Ident(n) if !self.names.contains_key(n) && self.sig.set_id(n).is_some() => {
                let (id, first, len) = self.carrier(n)?.expect("checked above");
                Ok((SetTerm::Carrier { first, len }, Ty::Enum(id)))
            }
            ExprKind::Binary(BinOp::TotalFn, d, r) => {
                let (ds, dt) = self.set_term(d)?;
                if !matches!(ds, SetTerm::Bool | SetTerm::Carrier { .. }) {
                    return Err(SemanticError::ty(
                        "function domain must be BOOL or a carrier set",
                        d.span,
                    ));
                }
                let (rs, rt) = self.set_term(r)?;
                Ok((
                    SetTerm::FnSpace(Box::new(ds), Box::new(rs)),
                    Ty::Func(Box::new(dt), Box::new(rt)),
                ))
            }
            _ => {
                let (t, ty) = self.expr(e, None)?;
                match ty {
                    Ty::Set(inner) => Ok((SetTerm::Value(Box::new(t)), *inner)),
                    other => Err(SemanticError::ty(
                        format!("expected a set, found {}", self.sig.render_ty(&other)),
                        e.span,
                    )),
                }
            }
        }
    }

    /// Type-directed compilation; `hint` resolves empty and maplet literals.
    pub fn expr(&self, e: &Expr, hint: Option<&Ty>) -> Result<(Term, Ty), SemanticError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Int(n) => Ok((Term::Lit(Value::Nat(*n)), Ty::Nat)),
            ExprKind::Bool(b) => Ok((Term::Lit(Value::Bool(*b)), Ty::Bool)),
            ExprKind::Ident(name) => match self.lookup(name) {
                Some(Binding::Slot(i, ty)) => Ok((Term::Slot(i), ty)),
                Some(Binding::Value(v, ty)) => Ok((Term::Lit(v), ty)),
                None => match self.carrier(name)? {
                    Some((id, _, _)) => {
                        let all = self.sig.elements(id).map(Value::Elem).collect();
                        Ok((Term::Lit(Value::set(all)), Ty::Set(Box::new(Ty::Enum(id)))))
                    }
                    None => Err(SemanticError::UnknownIdentifier {
                        name: name.clone(),
                        span,
                    }),
                },
            },
            ExprKind::BoolSet => Ok((
                Term::Lit(Value::set(vec![Value::Bool(false), Value::Bool(true)])),
                Ty::Set(Box::new(Ty::Bool)),
            )),
            ExprKind::NatSet => Err(SemanticError::ty(
                "NAT may only appear on the right of a membership",
                span,
            )),
            ExprKind::Not(inner) => {
                let t = self.predicate(inner)?;
                Ok((Term::Not(Box::new(t)), Ty::Bool))
            }
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, span, hint),
            ExprKind::SetLit(items) => self.set_lit(items, span, hint),
            ExprKind::Partition(s, parts) => {
                let (st, elem) = self.set_term(s)?;
                if matches!(st, SetTerm::Nat | SetTerm::FnSpace(..)) {
                    return Err(SemanticError::ty("partition of an infinite set", s.span));
                }
                let set_ty = Ty::Set(Box::new(elem));
                let parts = parts
                    .iter()
                    .map(|p| self.typed(p, &set_ty))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((Term::Partition(st, parts), Ty::Bool))
            }
        }
    }

    fn binary(
        &self,
        op: BinOp,
        l: &Expr,
        r: &Expr,
        span: Span,
        _hint: Option<&Ty>,
    ) -> Result<(Term, Ty), SemanticError> {
        let b = Box::new;
        match op {
            BinOp::And | BinOp::Or | BinOp::Implies => {
                let lt = b(self.predicate(l)?);
                let rt = b(self.predicate(r)?);
                let t = match op {
                    BinOp::And => Term::And(lt, rt),
                    BinOp::Or => Term::Or(lt, rt),
                    _ => Term::Implies(lt, rt),
                };
                Ok((t, Ty::Bool))
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let lt = b(self.typed(l, &Ty::Nat)?);
                let rt = b(self.typed(r, &Ty::Nat)?);
                let aop = match op {
                    BinOp::Add => ArithOp::Add,
                    BinOp::Sub => ArithOp::Sub,
                    BinOp::Mul => ArithOp::Mul,
                    _ => ArithOp::Div,
                };
                Ok((Term::Arith(aop, lt, rt, span), Ty::Nat))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let lt = b(self.typed(l, &Ty::Nat)?);
                let rt = b(self.typed(r, &Ty::Nat)?);
                let cop = match op {
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Le => CmpOp::Le,
                    BinOp::Gt => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                Ok((Term::Cmp(cop, lt, rt), Ty::Bool))
            }
            BinOp::Eq | BinOp::Neq => {
                // literals on the left take their type from the right side
                let (lt, rt) = if needs_hint(l) {
                    let (rt, ty) = self.expr(r, None)?;
                    (self.typed(l, &ty)?, rt)
                } else {
                    let (lt, ty) = self.expr(l, None)?;
                    (lt, self.typed(r, &ty)?)
                };
                let t = if op == BinOp::Eq {
                    Term::Eq(b(lt), b(rt))
                } else {
                    Term::Neq(b(lt), b(rt))
                };
                Ok((t, Ty::Bool))
            }
            BinOp::In => {
                let (st, elem) = self.set_term(r)?;
                let lt = self.typed(l, &elem)?;
                Ok((Term::In(b(lt), st), Ty::Bool))
            }
            BinOp::TotalFn => Err(SemanticError::ty(
                "a function space may only appear on the right of a membership",
                span,
            )),
            BinOp::Maplet => Err(SemanticError::ty(
                "a maplet may only appear inside a set literal",
                span,
            )),
        }
    }

    fn set_lit(
        &self,
        items: &[Expr],
        span: Span,
        hint: Option<&Ty>,
    ) -> Result<(Term, Ty), SemanticError> {
        let maplets = !items.is_empty()
            && items
                .iter()
                .all(|i| matches!(i.kind, ExprKind::Binary(BinOp::Maplet, _, _)));
        let func_hint = match hint {
            Some(Ty::Func(d, r)) => Some((d.as_ref().clone(), r.as_ref().clone())),
            _ => None,
        };
        if maplets || (items.is_empty() && func_hint.is_some()) {
            let pairs_src: Vec<(&Expr, &Expr)> = items
                .iter()
                .map(|i| match &i.kind {
                    ExprKind::Binary(BinOp::Maplet, k, v) => (k.as_ref(), v.as_ref()),
                    _ => unreachable!("checked above"),
                })
                .collect();
            let (dty, rty) = match func_hint {
                Some(h) => h,
                None => {
                    let (_, dty) = self.expr(pairs_src[0].0, None)?;
                    let (_, rty) = self.expr(pairs_src[0].1, None)?;
                    (dty, rty)
                }
            };
            let dom = ty_dom(&dty).ok_or_else(|| {
                SemanticError::ty("maplet keys must be BOOL or enumeration elements", span)
            })?;
            let (first, len) = match dom {
                Dom::Bool => (0, 2),
                Dom::Set(s) => {
                    let c = &self.sig.sets[s as usize];
                    (c.first, c.len)
                }
            };
            let mut pairs = Vec::new();
            for (k, v) in pairs_src {
                pairs.push((self.typed(k, &dty)?, self.typed(v, &rty)?));
            }
            return Ok((
                Term::FuncLit {
                    dom,
                    first,
                    len,
                    pairs,
                    span,
                },
                Ty::Func(Box::new(dty), Box::new(rty)),
            ));
        }
        let elem_hint = match hint {
            Some(Ty::Set(t)) => Some(t.as_ref().clone()),
            _ => None,
        };
        let elem = match (items.first(), elem_hint) {
            (_, Some(t)) => t,
            (Some(first), None) => self.expr(first, None)?.1,
            (None, None) => return Err(SemanticError::ty("cannot infer the type of {}", span)),
        };
        let terms = items
            .iter()
            .map(|i| self.typed(i, &elem))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((Term::SetLit(terms), Ty::Set(Box::new(elem))))
    }
}

fn needs_hint(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::SetLit(_))
}

fn expect(got: &Ty, want: &Ty, span: Span) -> Result<(), SemanticError> {
    if got == want {
        Ok(())
    } else {
        Err(SemanticError::ty(
            format!("expected {want:?}, found {got:?}"),
            span,
        ))
    }
}

fn wd(span: Span, reason: WdReason) -> WdFailure {
    WdFailure { span, reason }
}

impl Term {
    /// Evaluates over `env`.
    pub fn eval(&self, env: &[Value]) -> Result<Value, WdFailure> {
        Ok(match self {
            Term::Lit(v) => v.clone(),
            Term::Slot(i) => env[*i].clone(),
            Term::Arith(op, l, r, span) => {
                let a = l.eval_nat(env)?;
                let b = r.eval_nat(env)?;
                Value::Nat(match op {
                    ArithOp::Add => a.checked_add(b).ok_or(wd(*span, WdReason::Overflow))?,
                    ArithOp::Sub => a
                        .checked_sub(b)
                        .ok_or(wd(*span, WdReason::NaturalUnderflow))?,
                    ArithOp::Mul => a.checked_mul(b).ok_or(wd(*span, WdReason::Overflow))?,
                    ArithOp::Div => {
                        if b == 0 {
                            return Err(wd(*span, WdReason::DivisionByZero));
                        }
                        a / b
                    }
                })
            }
            Term::FuncLit {
                dom,
                first,
                len,
                pairs,
                span,
            } => {
                let mut slots: Vec<Option<Value>> = vec![None; *len as usize];
                for (k, v) in pairs {
                    let idx = match k.eval(env)? {
                        Value::Bool(b) => b as usize,
                        Value::Elem(e) => (e - first) as usize,
                        _ => unreachable!("typed key"),
                    };
                    let v = v.eval(env)?;
                    match &slots[idx] {
                        Some(old) if *old != v => {
                            return Err(wd(*span, WdReason::FunctionOutsideDomain))
                        }
                        _ => slots[idx] = Some(v),
                    }
                }
                let vals: Option<Vec<Value>> = slots.into_iter().collect();
                match vals {
                    Some(vals) => Value::Func(*dom, vals.into()),
                    // a partial literal is not a total function
                    None => return Err(wd(*span, WdReason::FunctionOutsideDomain)),
                }
            }
            Term::SetLit(items) => Value::set(
                items
                    .iter()
                    .map(|i| i.eval(env))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            _ => Value::Bool(self.eval_bool(env)?),
        })
    }

    pub fn eval_nat(&self, env: &[Value]) -> Result<u64, WdFailure> {
        match self {
            Term::Lit(Value::Nat(n)) => Ok(*n),
            Term::Slot(i) => Ok(env[*i].as_nat().expect("typed natural")),
            _ => Ok(self.eval(env)?.as_nat().expect("typed natural")),
        }
    }

    /// Evaluates a predicate. Connectives are left-to-right short-circuit,
    /// so `x /= 0 & 10 / x > 1` is well defined.
    pub fn eval_bool(&self, env: &[Value]) -> Result<bool, WdFailure> {
        Ok(match self {
            Term::Lit(Value::Bool(b)) => *b,
            Term::Slot(i) => env[*i].as_bool().expect("typed boolean"),
            Term::Not(t) => !t.eval_bool(env)?,
            Term::And(l, r) => l.eval_bool(env)? && r.eval_bool(env)?,
            Term::Or(l, r) => l.eval_bool(env)? || r.eval_bool(env)?,
            Term::Implies(l, r) => !l.eval_bool(env)? || r.eval_bool(env)?,
            Term::Eq(l, r) => l.eval(env)? == r.eval(env)?,
            Term::Neq(l, r) => l.eval(env)? != r.eval(env)?,
            Term::Cmp(op, l, r) => {
                let a = l.eval_nat(env)?;
                let b = r.eval_nat(env)?;
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                }
            }
            Term::In(x, s) => {
                let v = x.eval(env)?;
                s.contains(&v, env)?
            }
            Term::Partition(s, parts) => {
                let whole = s.materialize(env)?;
                let mut seen: Vec<Value> = Vec::new();
                for p in parts {
                    let Value::Set(items) = p.eval(env)? else {
                        unreachable!("typed set")
                    };
                    for i in items.iter() {
                        if seen.contains(i) {
                            return Ok(false);
                        }
                        seen.push(i.clone());
                    }
                }
                seen.sort();
                seen == whole
            }
            other => other.eval(env)?.as_bool().expect("typed boolean"),
        })
    }

    /// Slots read by this term.
    pub fn slots(&self, out: &mut Vec<usize>) {
        match self {
            Term::Lit(_) => {}
            Term::Slot(i) => {
                if !out.contains(i) {
                    out.push(*i)
                }
            }
            Term::Not(t) => t.slots(out),
            Term::And(l, r)
            | Term::Or(l, r)
            | Term::Implies(l, r)
            | Term::Arith(_, l, r, _)
            | Term::Eq(l, r)
            | Term::Neq(l, r)
            | Term::Cmp(_, l, r) => {
                l.slots(out);
                r.slots(out);
            }
            Term::In(x, s) => {
                x.slots(out);
                s.slots(out);
            }
            Term::FuncLit { pairs, .. } => {
                for (k, v) in pairs {
                    k.slots(out);
                    v.slots(out);
                }
            }
            Term::SetLit(items) => items.iter().for_each(|i| i.slots(out)),
            Term::Partition(s, parts) => {
                s.slots(out);
                parts.iter().for_each(|p| p.slots(out));
            }
        }
    }
}

impl SetTerm {
    pub fn contains(&self, v: &Value, env: &[Value]) -> Result<bool, WdFailure> {
        Ok(match (self, v) {
            (SetTerm::Bool, Value::Bool(_)) | (SetTerm::Nat, Value::Nat(_)) => true,
            (SetTerm::Carrier { first, len }, Value::Elem(e)) => *e >= *first && *e < first + len,
            (SetTerm::FnSpace(_, r), Value::Func(_, vals)) => {
                for x in vals.iter() {
                    if !r.contains(x, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            (SetTerm::Value(t), _) => match t.eval(env)? {
                Value::Set(items) => items.binary_search(v).is_ok(),
                _ => unreachable!("typed set"),
            },
            _ => false,
        })
    }

    fn materialize(&self, env: &[Value]) -> Result<Vec<Value>, WdFailure> {
        Ok(match self {
            SetTerm::Bool => vec![Value::Bool(false), Value::Bool(true)],
            SetTerm::Carrier { first, len } => (*first..first + len).map(Value::Elem).collect(),
            SetTerm::Value(t) => match t.eval(env)? {
                Value::Set(items) => items.to_vec(),
                _ => unreachable!("typed set"),
            },
            SetTerm::Nat | SetTerm::FnSpace(..) => unreachable!("rejected at compile time"),
        })
    }

    fn slots(&self, out: &mut Vec<usize>) {
        match self {
            SetTerm::FnSpace(d, r) => {
                d.slots(out);
                r.slots(out);
            }
            SetTerm::Value(t) => t.slots(out),
            _ => {}
        }
    }

    /// True when membership is decided by the type alone.
    pub fn is_whole_type(&self) -> bool {
        match self {
            SetTerm::Bool | SetTerm::Nat | SetTerm::Carrier { .. } => true,
            SetTerm::FnSpace(d, r) => d.is_whole_type() && r.is_whole_type(),
            SetTerm::Value(_) => false,
        }
    }
}
