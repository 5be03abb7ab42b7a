//! Every machine of the bundled corpus behaves as its manifest records.

use eventb_kernel::checker::{check_refinement, explore, Mode};
use eventb_kernel::corpus::load_corpus;
use eventb_kernel::obligations;
use eventb_kernel::semantics::Model;

#[test]
fn machines_meet_their_expectations() {
    let corpus = load_corpus().unwrap();
    let cfg = &corpus.manifest.config;
    for (machine, want) in &corpus.manifest.expectations {
        let po = obligations::report(&corpus.project, machine, cfg).unwrap();
        assert_eq!(po.failed, want.po_failed, "{machine} failed obligations");
        let model = Model::new(&corpus.project, machine, &cfg.consts).unwrap();
        let closed = explore(&model, cfg, Mode::Closed).unwrap();
        assert_eq!(closed.violations.len(), want.closed_violations, "{machine}");
        assert_eq!(
            closed.deadlock_count > 0,
            want.closed_deadlock,
            "{machine} closed deadlock"
        );
        let driven = explore(&model, cfg, Mode::Driven).unwrap();
        assert_eq!(
            driven.deadlock_count > 0,
            want.driven_deadlock,
            "{machine} driven deadlock"
        );
        assert!(
            driven.violations.is_empty(),
            "{machine}: {}",
            driven.render(&model)
        );
    }
}

#[test]
fn every_chain_is_a_refinement() {
    let corpus = load_corpus().unwrap();
    for chain in &corpus.manifest.chains {
        for pair in chain.windows(2) {
            let r = check_refinement(&corpus.project, &pair[0], &pair[1], &corpus.manifest.config)
                .unwrap();
            assert!(r.passed(), "{}", r.render());
            assert!(
                r.pairs_checked > 0,
                "{} over {} checks nothing",
                pair[1],
                pair[0]
            );
        }
    }
}

#[test]
fn vacuity_suspects_only_have_vacuous_or_discharged_obligations() {
    let corpus = load_corpus().unwrap();
    for (machine, label) in &corpus.manifest.vacuity_suspect {
        let po = obligations::report(&corpus.project, machine, &corpus.manifest.config).unwrap();
        let mine: Vec<_> = po
            .obligations
            .iter()
            .filter(|p| p.id.split('/').nth(2) == Some(label.as_str()))
            .collect();
        assert!(!mine.is_empty(), "{machine}/{label} has obligations");
        assert!(mine.iter().all(|p| p.status.name() != "failed"));
    }
}
