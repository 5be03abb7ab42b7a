//! Property tests over generated expressions and machines.

mod common;

use std::collections::HashMap;

use common::{random_machine, truth, Env, Universe, V, X_MAX};
use eventb_kernel::checker::{explore, Mode};
use eventb_kernel::config::CheckConfig;
use eventb_kernel::obligations::{self, PoKind, PoStatus};
use eventb_kernel::parser::{parse_expr, parse_source, print_component, print_expr};
use eventb_kernel::project::Project;
use eventb_kernel::semantics::Model;
use eventb_kernel::trace::Trace;
use proptest::prelude::*;

fn nat_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![(0u64..7).prop_map(|n| n.to_string()), Just("x".to_string()),];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (
            inner.clone(),
            prop::sample::select(vec!["+", "-", "*", "/"]),
            inner,
        )
            .prop_map(|(a, op, b)| format!("({a} {op} {b})"))
    })
}

fn pred_text() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        (
            nat_text(),
            prop::sample::select(vec!["=", "/=", "<", "<=", ">", ">="]),
            nat_text()
        )
            .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
        prop::sample::select(vec!["TRUE", "FALSE"]).prop_map(|v| format!("b = {v}")),
        prop::sample::select(vec!["red", "green", "blue"]).prop_map(|v| format!("c = {v}")),
        Just("x : NAT".to_string()),
        Just("c : Color".to_string()),
    ];
    atom.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|p| format!("not({p})")),
            (
                inner.clone(),
                prop::sample::select(vec!["&", "or", "=>"]),
                inner
            )
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
        ]
    })
}

/// Removes the outer parentheses of binary subterms at random so the
/// printer has to reintroduce exactly the ones precedence needs.
fn loosen(text: &str, mask: u64) -> String {
    let mut out = String::new();
    let mut depth_kept = Vec::new();
    for (i, ch) in text.chars().enumerate() {
        match ch {
            '(' => {
                let keep = out.ends_with("not") || (mask >> (i % 64)) & 1 == 1;
                depth_kept.push(keep);
                if keep {
                    out.push(ch);
                }
            }
            ')' => {
                if depth_kept.pop().unwrap_or(true) {
                    out.push(ch);
                }
            }
            _ => out.push(ch),
        }
    }
    out
}

fn universe() -> Universe {
    let p = Project::from_sources([(
        "c.ebs",
        "CONTEXT Colors SETS Color CONSTANTS red, green, blue \
         AXIOMS typ1 partition(Color, {red}, {green}, {blue}) END",
    )])
    .unwrap();
    let ctx = eventb_kernel::project::FlatContext {
        name: "Colors".into(),
        members: vec!["Colors".into()],
        sets: vec!["Color".into()],
        constants: vec!["red".into(), "green".into(), "blue".into()],
        axioms: match &p.components()[0] {
            eventb_kernel::ast::Component::Context(c) => c.axioms.clone(),
            _ => unreachable!(),
        },
        theorems: vec![],
        superseded: vec![],
    };
    Universe::of(&ctx, &[])
}

fn envs() -> Vec<Env> {
    let mut out = Vec::new();
    for x in 0..=X_MAX {
        for b in [false, true] {
            for c in ["red", "green", "blue"] {
                out.push(HashMap::from([
                    ("x".to_string(), V::N(x)),
                    ("b".to_string(), V::B(b)),
                    ("c".to_string(), V::S(c.to_string())),
                ]));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Printing is a fixpoint after one parse, and the printed text means
    /// the same as the input in every state.
    #[test]
    fn printed_predicates_reparse_to_the_same_meaning(text in pred_text(), mask in any::<u64>()) {
        let u = universe();
        let loose = loosen(&text, mask);
        // dropping parentheses may change the meaning; the loose text is
        // only compared with its own printing
        for src in [&text, &loose] {
            let Ok(e) = parse_expr(src) else { continue };
            let printed = print_expr(&e);
            let again = parse_expr(&printed).expect("printed text parses");
            prop_assert_eq!(&print_expr(&again), &printed);
            for env in envs() {
                prop_assert_eq!(truth(&e, &env, &u), truth(&again, &env, &u), "{} vs {}", src, printed);
            }
        }
        prop_assert!(parse_expr(&text).is_ok(), "fully parenthesised text parses: {}", text);
    }

    /// Whole random machines survive print and reparse.
    #[test]
    fn printed_machines_reparse(seed in any::<u64>()) {
        let text = random_machine(seed);
        let units = parse_source(&text).expect("generated machine parses");
        let printed: String = units.iter().map(print_component).collect::<Vec<_>>().join("\n");
        let again = parse_source(&printed).expect("printed machine parses");
        let reprinted: String = again.iter().map(print_component).collect::<Vec<_>>().join("\n");
        prop_assert_eq!(reprinted, printed);
    }

    /// Inductive invariants are safe: when every invariant-preservation and
    /// well-definedness obligation holds, no model step breaks an invariant.
    #[test]
    fn discharged_invariants_hold_on_reachable_states(seed in any::<u64>()) {
        let text = random_machine(seed);
        let project = Project::from_sources([("r.ebs", text.as_str())]).unwrap();
        let cfg = CheckConfig::default().bound("x", 0, X_MAX);
        let r = obligations::report(&project, "R", &cfg).unwrap();
        let proved = r.obligations.iter().all(|p| {
            !matches!(p.status, PoStatus::Failed(_)) || !matches!(p.kind, PoKind::INV | PoKind::WD)
        });
        let model = Model::new(&project, "R", &cfg.consts).unwrap();
        let reach = explore(&model, &cfg, Mode::Driven).unwrap();
        if proved {
            // environment steps may still create hazards
            prop_assert!(reach.violations.is_empty(), "{}", text);
        }
        // and conversely a reachable violation is always caught by some obligation
        if !reach.violations.is_empty() {
            prop_assert!(!proved);
        }
    }

    /// Exploration is deterministic and its witnesses survive the JSON
    /// trace format.
    #[test]
    fn witnesses_round_trip_through_json(seed in any::<u64>()) {
        let text = random_machine(seed);
        let project = Project::from_sources([("r.ebs", text.as_str())]).unwrap();
        let cfg = CheckConfig::default().bound("x", 0, X_MAX);
        let model = Model::new(&project, "R", &cfg.consts).unwrap();
        let a = explore(&model, &cfg, Mode::Driven).unwrap();
        let b = explore(&model, &cfg, Mode::Driven).unwrap();
        prop_assert_eq!(a.render(&model), b.render(&model));
        for v in &a.violations {
            let lines = v.trace.to_json_lines(&model);
            let back = Trace::from_json_lines(&model, &lines).unwrap();
            prop_assert_eq!(&back, &v.trace);
            prop_assert_eq!(back.replay(&model).unwrap(), v.trace.last_state().clone());
        }
    }
}
