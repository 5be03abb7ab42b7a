use std::fmt::Write;

use crate::ast::{
    BinOp, Component, ContextDef, EventDef, EventKind, Expr, ExprKind, LabeledPredicate,
    MachineDef, NOT_PRECEDENCE,
};

const ATOM: u8 = 10;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Not(_) => NOT_PRECEDENCE,
        _ => ATOM,
    }
}

fn right_assoc(op: BinOp) -> bool {
    matches!(op, BinOp::Implies | BinOp::TotalFn)
}

/// Renders an expression with the minimal parentheses that reparse to the
/// same tree.
pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_child(out: &mut String, child: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, child);
        out.push(')');
    } else {
        write_expr(out, child);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Bool(true) => out.push_str("TRUE"),
        ExprKind::Bool(false) => out.push_str("FALSE"),
        ExprKind::Ident(name) => out.push_str(name),
        ExprKind::BoolSet => out.push_str("BOOL"),
        ExprKind::NatSet => out.push_str("NAT"),
        ExprKind::Not(inner) => {
            out.push_str("not ");
            // operand of `not` is parsed at relational level
            write_child(
                out,
                inner,
                precedence(inner) < 5 && precedence(inner) != NOT_PRECEDENCE,
            );
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let lp = precedence(l);
            let rp = precedence(r);
            let l_parens = lp < p || (lp == p && (right_assoc(*op) || op.is_relational()));
            let r_parens = rp < p || (rp == p && (!right_assoc(*op) || op.is_relational()));
            write_child(out, l, l_parens);
            let _ = write!(out, " {} ", op.symbol());
            write_child(out, r, r_parens);
        }
        ExprKind::SetLit(items) => {
            out.push('{');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item);
            }
            out.push('}');
        }
        ExprKind::Partition(set, parts) => {
            out.push_str("partition(");
            write_expr(out, set);
            for p in parts {
                out.push_str(", ");
                write_expr(out, p);
            }
            out.push(')');
        }
    }
}

fn write_labeled(out: &mut String, indent: &str, preds: &[LabeledPredicate]) {
    for p in preds {
        let _ = writeln!(out, "{indent}{} {}", p.label, print_expr(&p.body));
    }
}

fn write_context(out: &mut String, c: &ContextDef) {
    let _ = writeln!(out, "CONTEXT\n  {}", c.name);
    if !c.extends.is_empty() {
        let _ = writeln!(out, "EXTENDS\n  {}", c.extends.join(", "));
    }
    if !c.sets.is_empty() {
        let _ = writeln!(out, "SETS\n  {}", c.sets.join(", "));
    }
    if !c.constants.is_empty() {
        let _ = writeln!(out, "CONSTANTS\n  {}", c.constants.join(", "));
    }
    if !c.axioms.is_empty() {
        out.push_str("AXIOMS\n");
        write_labeled(out, "  ", &c.axioms);
    }
    if !c.theorems.is_empty() {
        out.push_str("THEOREMS\n");
        write_labeled(out, "  ", &c.theorems);
    }
    out.push_str("END\n");
}

fn write_event(out: &mut String, ev: &EventDef) {
    out.push_str("  Event ");
    if ev.kind == EventKind::Environment {
        out.push_str("environment ");
    }
    if ev.convergent {
        out.push_str("convergent ");
    }
    out.push_str(&ev.name);
    if !ev.refines.is_empty() {
        let _ = write!(out, " REFINES {}", ev.refines.join(", "));
    }
    out.push('\n');
    if !ev.guards.is_empty() {
        out.push_str("    Where\n");
        write_labeled(out, "      ", &ev.guards);
    }
    if !ev.actions.is_empty() {
        out.push_str("    Then\n");
        for a in &ev.actions {
            let _ = writeln!(
                out,
                "      {} {} := {}",
                a.label,
                a.variable,
                print_expr(&a.value)
            );
        }
    }
    out.push_str("  End\n");
}

fn write_machine(out: &mut String, m: &MachineDef) {
    let _ = writeln!(out, "MACHINE\n  {}", m.name);
    if let Some(r) = &m.refines {
        let _ = writeln!(out, "REFINES\n  {r}");
    }
    if !m.sees.is_empty() {
        let _ = writeln!(out, "SEES\n  {}", m.sees.join(", "));
    }
    if !m.variables.is_empty() {
        let _ = writeln!(out, "VARIABLES\n  {}", m.variables.join(", "));
    }
    if !m.invariants.is_empty() {
        out.push_str("INVARIANTS\n");
        write_labeled(out, "  ", &m.invariants);
    }
    if let Some(v) = &m.variant {
        let _ = writeln!(out, "VARIANT\n  {}", print_expr(v));
    }
    if !m.events.is_empty() {
        out.push_str("EVENTS\n");
        for ev in &m.events {
            write_event(out, ev);
        }
    }
    out.push_str("END\n");
}

/// Pretty-prints one definition with two-space indentation.
pub fn print_component(c: &Component) -> String {
    let mut out = String::new();
    match c {
        Component::Context(ctx) => write_context(&mut out, ctx),
        Component::Machine(m) => write_machine(&mut out, m),
    }
    out
}

pub fn print_components(cs: &[Component]) -> String {
    cs.iter()
        .map(print_component)
        .collect::<Vec<_>>()
        .join("\n")
}
