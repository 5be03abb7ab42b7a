//! Block-keyword surface syntax (`.ebs` files) for contexts and machines.
//!
//! ```text
//! CONTEXT CCP0
//! SETS BloodPumpingValues, Alarms
//! CONSTANTS BPStarted, BPStopped, ALM382, Null
//! AXIOMS
//!   typ1 partition(BloodPumpingValues, {BPStarted}, {BPStopped})
//! END
//! ```
//!
//! Operator precedence, loosest first: `=>` (right associative), `or`/`|`,
//! `&`, `not`, relations (`= /= < <= > >= :`, non-associative), `-->`
//! (right associative), `|->`, `+ -`, `* /`.

mod lexer;
mod printer;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{
    Assignment, BinOp, Component, ContextDef, EventDef, EventKind, Expr, ExprKind,
    LabeledPredicate, MachineDef, Pos, Span, INITIALISATION,
};
use lexer::{tokenize, Keyword, Tok, Token};

pub use printer::{print_component, print_components, print_expr};

/// A span tied to the file it points into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub start: Pos,
    pub end: Pos,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start.line, self.start.col)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: expected {expected}, found `{found}`")]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

/// Parses every CONTEXT/MACHINE block in `text`.
///
/// On failure the parser skips to the next top-level block and keeps going,
/// so one call reports at most one error per block.
pub fn parse_source(text: &str) -> Result<Vec<Component>, Vec<ParseError>> {
    parse_named("<input>", text)
}

pub fn parse_named(file: &str, text: &str) -> Result<Vec<Component>, Vec<ParseError>> {
    let mut p = Parser {
        toks: tokenize(text),
        idx: 0,
        file: Arc::from(file),
    };
    let mut out = Vec::new();
    let mut errors = Vec::new();
    while !p.at(&Tok::Eof) {
        match p.component() {
            Ok(c) => out.push(c),
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Parses a standalone expression or predicate (scenario lines, API bodies).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: tokenize(text),
        idx: 0,
        file: Arc::from("<expr>"),
    };
    let e = p.expr()?;
    if !p.at(&Tok::Eof) {
        return Err(p.error("end of expression"));
    }
    Ok(e)
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<Token>,
    idx: usize,
    file: Arc<str>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.idx.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        &self.toks[(self.idx + ahead).min(self.toks.len() - 1)]
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.at(&Tok::Kw(kw))
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.idx < self.toks.len() - 1 {
            self.idx += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError {
            span: SourceSpan {
                file: self.file.clone(),
                start: t.span.start,
                end: t.span.end,
            },
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn error_at(&self, span: Span, expected: &str, found: &str) -> ParseError {
        ParseError {
            span: SourceSpan {
                file: self.file.clone(),
                start: span.start,
                end: span.end,
            },
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Token> {
        if self.at(&tok) {
            Ok(self.advance())
        } else {
            Err(self.error(what))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Token> {
        self.expect(Tok::Kw(kw), kw.as_str())
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Ident(name) => {
                let name = name.clone();
                let span = self.advance().span;
                Ok((name, span))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.ident()?.0];
        while self.at(&Tok::Comma) {
            self.advance();
            out.push(self.ident()?.0);
        }
        Ok(out)
    }

    /// Skip to the next CONTEXT/MACHINE keyword (always consumes something).
    fn recover(&mut self) {
        self.advance();
        while !self.at(&Tok::Eof) && !self.at_kw(Keyword::Machine) && !self.at_kw(Keyword::Context)
        {
            self.advance();
        }
    }

    fn component(&mut self) -> PResult<Component> {
        if self.at_kw(Keyword::Context) {
            self.context().map(Component::Context)
        } else if self.at_kw(Keyword::Machine) {
            self.machine().map(Component::Machine)
        } else {
            Err(self.error("CONTEXT or MACHINE"))
        }
    }

    fn context(&mut self) -> PResult<ContextDef> {
        let start = self.expect_kw(Keyword::Context)?.span;
        let (name, _) = self.ident()?;
        let mut ctx = ContextDef::new(name);
        if self.at_kw(Keyword::Extends) {
            self.advance();
            ctx.extends = self.ident_list()?;
        }
        if self.at_kw(Keyword::Sets) {
            self.advance();
            ctx.sets = self.ident_list()?;
        }
        if self.at_kw(Keyword::Constants) {
            self.advance();
            ctx.constants = self.ident_list()?;
        }
        let mut labels = HashSet::new();
        if self.at_kw(Keyword::Axioms) {
            self.advance();
            ctx.axioms = self.labeled_predicates(&mut labels)?;
        }
        if self.at_kw(Keyword::Theorems) {
            self.advance();
            ctx.theorems = self.labeled_predicates(&mut labels)?;
        }
        let end = self.expect_kw(Keyword::End)?.span;
        ctx.span = start.join(end);
        Ok(ctx)
    }

    fn machine(&mut self) -> PResult<MachineDef> {
        let start = self.expect_kw(Keyword::Machine)?.span;
        let (name, _) = self.ident()?;
        let mut m = MachineDef::new(name);
        if self.at_kw(Keyword::Refines) {
            self.advance();
            m.refines = Some(self.ident()?.0);
        }
        if self.at_kw(Keyword::Sees) {
            self.advance();
            m.sees = self.ident_list()?;
        }
        if self.at_kw(Keyword::Variables) {
            self.advance();
            m.variables = self.ident_list()?;
        }
        if self.at_kw(Keyword::Invariants) {
            self.advance();
            m.invariants = self.labeled_predicates(&mut HashSet::new())?;
        }
        if self.at_kw(Keyword::Variant) {
            self.advance();
            m.variant = Some(self.expr()?);
        }
        if self.at_kw(Keyword::Events) {
            self.advance();
            let mut names = HashSet::new();
            while self.at_kw(Keyword::Event) {
                let ev_span = self.peek().span;
                let ev = self.event()?;
                if !names.insert(ev.name.clone()) {
                    return Err(self.error_at(ev_span, "unique event name", &ev.name));
                }
                m.events.push(ev);
            }
        }
        let end = self.expect_kw(Keyword::End)?.span;
        m.span = start.join(end);
        Ok(m)
    }

    fn event(&mut self) -> PResult<EventDef> {
        self.expect_kw(Keyword::Event)?;
        let mut kind = EventKind::Model;
        let mut convergent = false;
        loop {
            let modifier = match &self.peek().tok {
                Tok::Ident(w) if matches!(self.peek_at(1).tok, Tok::Ident(_)) => w.clone(),
                _ => break,
            };
            match modifier.as_str() {
                "environment" => kind = EventKind::Environment,
                "convergent" => convergent = true,
                _ => break,
            }
            self.advance();
        }
        let (raw_name, _) = self.ident()?;
        let name = normalize_event_name(raw_name);
        let mut ev = EventDef::new(name);
        ev.kind = kind;
        ev.convergent = convergent;
        if self.at_kw(Keyword::Refines) {
            self.advance();
            ev.refines = self.ident_list()?;
        }
        let mut labels = HashSet::new();
        if self.at_kw(Keyword::Where) {
            self.advance();
            ev.guards = self.labeled_predicates(&mut labels)?;
        }
        if self.at_kw(Keyword::Then) {
            self.advance();
            while matches!(self.peek().tok, Tok::Ident(_)) {
                let (label, span) = self.ident()?;
                if !labels.insert(label.clone()) {
                    return Err(self.error_at(span, "unique label", &label));
                }
                let (variable, _) = self.ident()?;
                self.expect(Tok::Assign, ":=")?;
                let value = self.expr()?;
                ev.actions.push(Assignment {
                    label,
                    variable,
                    value,
                });
            }
        }
        self.expect_kw(Keyword::End)?;
        Ok(ev)
    }

    fn labeled_predicates(
        &mut self,
        labels: &mut HashSet<String>,
    ) -> PResult<Vec<LabeledPredicate>> {
        let mut out = Vec::new();
        while matches!(self.peek().tok, Tok::Ident(_)) {
            let (label, span) = self.ident()?;
            if !labels.insert(label.clone()) {
                return Err(self.error_at(span, "unique label", &label));
            }
            let body = self.expr()?;
            out.push(LabeledPredicate { label, body });
        }
        Ok(out)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.or_expr()?;
        if self.at(&Tok::Implies) {
            self.advance();
            let rhs = self.expr()?;
            return Ok(Expr::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.at(&Tok::Or) {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.at(&Tok::And) {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Not) {
            let start = self.advance().span;
            let inner = self.not_expr()?;
            let span = start.join(inner.span);
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        self.rel_expr()
    }

    fn rel_expr(&mut self) -> PResult<Expr> {
        let lhs = self.fn_expr()?;
        let op = match self.peek().tok {
            Tok::Eq => BinOp::Eq,
            Tok::Neq => BinOp::Neq,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Colon => BinOp::In,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.fn_expr()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn fn_expr(&mut self) -> PResult<Expr> {
        let lhs = self.maplet_expr()?;
        if self.at(&Tok::TotalFn) {
            self.advance();
            let rhs = self.fn_expr()?;
            return Ok(Expr::binary(BinOp::TotalFn, lhs, rhs));
        }
        Ok(lhs)
    }

    fn maplet_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.add_expr()?;
        while self.at(&Tok::Maplet) {
            self.advance();
            let rhs = self.add_expr()?;
            lhs = Expr::binary(BinOp::Maplet, lhs, rhs);
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.atom()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.atom()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let simple = |kind| Ok(Expr::new(kind, t.span));
        match t.tok {
            Tok::Int(n) => {
                self.advance();
                simple(ExprKind::Int(n))
            }
            Tok::True => {
                self.advance();
                simple(ExprKind::Bool(true))
            }
            Tok::False => {
                self.advance();
                simple(ExprKind::Bool(false))
            }
            Tok::BoolSet => {
                self.advance();
                simple(ExprKind::BoolSet)
            }
            Tok::NatSet => {
                self.advance();
                simple(ExprKind::NatSet)
            }
            Tok::Ident(name) => {
                self.advance();
                simple(ExprKind::Ident(name))
            }
            Tok::LParen => {
                self.advance();
                let mut inner = self.expr()?;
                let end = self.expect(Tok::RParen, ")")?.span;
                inner.span = t.span.join(end);
                Ok(inner)
            }
            Tok::LBrace => {
                self.advance();
                let mut items = Vec::new();
                if !self.at(&Tok::RBrace) {
                    items.push(self.expr()?);
                    while self.at(&Tok::Comma) {
                        self.advance();
                        items.push(self.expr()?);
                    }
                }
                let end = self.expect(Tok::RBrace, "}")?.span;
                Ok(Expr::new(ExprKind::SetLit(items), t.span.join(end)))
            }
            Tok::Partition => {
                self.advance();
                self.expect(Tok::LParen, "(")?;
                let set = self.expr()?;
                let mut parts = Vec::new();
                while self.at(&Tok::Comma) {
                    self.advance();
                    parts.push(self.expr()?);
                }
                let end = self.expect(Tok::RParen, ")")?.span;
                Ok(Expr::new(
                    ExprKind::Partition(Box::new(set), parts),
                    t.span.join(end),
                ))
            }
            _ => Err(self.error("expression")),
        }
    }
}

fn normalize_event_name(name: String) -> String {
    let lower = name.to_ascii_lowercase();
    if lower == "initialisation" || lower == "initialization" {
        INITIALISATION.to_string()
    } else {
        name
    }
}
