//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain program (`harness = false`) so the lines always print in
//! order; the process exits non-zero if any criterion fails.

mod common;

use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{compare, env_of, random_machine, truth, Comparison, Universe, RANDOM_TYPES, X_MAX};
use eventb_kernel::animator::{run_scenario, Scenario};
use eventb_kernel::checker::{check_refinement, explore, Mode, RefinementCheck, RefinementFailure};
use eventb_kernel::config::CheckConfig;
use eventb_kernel::corpus::{load_corpus, Corpus, Detection};
use eventb_kernel::obligations::{self, PoStatus};
use eventb_kernel::parser::parse_source;
use eventb_kernel::project::Project;
use eventb_kernel::semantics::Model;
use eventb_kernel::trace::Step;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Wall-time budget for checking the whole corpus.
const CORPUS_TIME_LIMIT: Duration = Duration::from_secs(60);
const EXPECTED_MACHINES: usize = 11;
const MIN_MUTANTS: usize = 6;
const RANDOM_MACHINES: u64 = 100;
const FUZZ_INPUTS: usize = 100_000;
const REPEATS: usize = 100;
/// Scenarios that pin the threshold boundaries.
const BOUNDARY_SCENARIOS: [&str; 9] = [
    "mcp1_volume_400",
    "mcp1_volume_401",
    "mcp2_tick_310",
    "mcp2_tick_311",
    "mbp0_no_flow",
    "mbp1_flow_70",
    "mbp1_flow_69",
    "mtm0_preparation_overtemp",
    "mtm1_therapy_undertemp",
];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Corpus) -> Outcome);

fn main() -> ExitCode {
    let corpus = load_corpus().expect("embedded corpus loads");
    let criteria: [Criterion; 6] = [
        ("corpus green", corpus_green),
        ("refinement chains and mutants", chains_and_mutants),
        ("threshold boundary scenarios", boundary_scenarios),
        ("oracle equivalence", oracle_equivalence),
        ("driven-mode liveness", driven_liveness),
        ("robustness", robustness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check(&corpus) {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_green(_: &Corpus) -> Outcome {
    let start = Instant::now();
    // reloading covers parse and resolution inside the time budget
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let cfg = &corpus.manifest.config;
    let units = corpus.project.components().len();
    ensure(units == corpus.manifest.units.len(), || {
        format!(
            "{units} units resolved, manifest lists {}",
            corpus.manifest.units.len()
        )
    })?;
    let machines = corpus.project.machine_names();
    ensure(machines.len() == EXPECTED_MACHINES, || {
        format!("{} machines", machines.len())
    })?;
    let (mut pos, mut failed, mut violations) = (0, 0, 0);
    for m in &machines {
        let model = Model::new(&corpus.project, m, &cfg.consts).map_err(|e| format!("{m}: {e}"))?;
        let r = obligations::report(&corpus.project, m, cfg).map_err(|e| format!("{m}: {e}"))?;
        pos += r.total;
        failed += r.failed;
        let reach = explore(&model, cfg, Mode::Closed).map_err(|e| format!("{m}: {e}"))?;
        violations += reach.violations.len();
    }
    let elapsed = start.elapsed();
    ensure(failed == 0 && violations == 0, || {
        format!("{failed} failed obligations, {violations} closed-mode violations")
    })?;
    ensure(elapsed < CORPUS_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{units} units, {} machines, {pos} obligations, 0 failed, 0 violations in {:.2}s",
        machines.len(),
        elapsed.as_secs_f64()
    ))
}

/// Re-evaluates a refinement witness with the reference evaluator.
fn refinement_witness_holds(
    project: &Project,
    abs: &str,
    model: &Model,
    cfg: &CheckConfig,
    f: &RefinementFailure,
) -> Result<(), String> {
    let end = f
        .trace
        .replay(model)
        .map_err(|e| format!("witness does not replay: {e}"))?;
    let u = Universe::with_config(&model.flat.context, &cfg.consts);
    let post = env_of(model, &end, &u);
    let pre_state = match f.trace.steps.len() {
        0 => None,
        n if n >= 2 => Some(f.trace.steps[n - 2].state().clone()),
        _ => Some(f.trace.initial.clone()),
    };
    let pre = pre_state.as_ref().map(|s| env_of(model, s, &u));
    let abs_flat = project.flatten_machine(abs).map_err(|e| e.to_string())?;
    let last_event = match f.trace.steps.last() {
        Some(Step::Fire { event, .. }) => Some(event.clone()),
        _ => None,
    };
    ensure(last_event == f.event, || {
        "witness ends with another event".into()
    })?;
    let holds = |e: &eventb_kernel::ast::Expr, env: &common::Env| truth(e, env, &u) == Ok(true);
    match f.check {
        RefinementCheck::AbstractInvariant => {
            let inv = abs_flat
                .invariants
                .iter()
                .find(|i| i.label == f.detail)
                .ok_or("unknown invariant")?;
            ensure(!holds(&inv.body, &post), || {
                format!("{} holds at the witness", f.detail)
            })
        }
        RefinementCheck::NewEventFrame => {
            let pre = pre.ok_or("frame witness without a step")?;
            ensure(pre[&f.detail] != post[&f.detail], || {
                format!("{} unchanged", f.detail)
            })
        }
        RefinementCheck::GuardStrengthening | RefinementCheck::Simulation => {
            let pre = pre.ok_or("witness without a step")?;
            let event = f.event.as_deref().ok_or("no event")?;
            let conc = model.flat.event(event).ok_or("unknown event")?;
            ensure(conc.def.guards.iter().all(|g| holds(&g.body, &pre)), || {
                "concrete guard false at the witness".into()
            })?;
            let enabled_abs: Vec<_> = abs_flat
                .transitions()
                .filter(|a| conc.refines.contains(&a.def.name))
                .filter(|a| a.def.guards.iter().all(|g| holds(&g.body, &pre)))
                .collect();
            if f.check == RefinementCheck::GuardStrengthening {
                return ensure(enabled_abs.is_empty(), || "an abstract guard holds".into());
            }
            let a = enabled_abs.first().ok_or("no abstract event enabled")?;
            let expected = match a.def.actions.iter().find(|x| x.variable == f.detail) {
                Some(x) => common::eval(&x.value, &pre, &u).ok(),
                None => Some(pre[&f.detail].clone()),
            };
            ensure(expected.as_ref() != Some(&post[&f.detail]), || {
                format!("{} agrees with the abstract action", f.detail)
            })
        }
    }
}

fn chains_and_mutants(corpus: &Corpus) -> Outcome {
    let cfg = &corpus.manifest.config;
    let mut steps = 0;
    for (conc, abs) in corpus.project.refinement_edges() {
        let r = check_refinement(&corpus.project, &abs, &conc, cfg).map_err(|e| e.to_string())?;
        ensure(r.passed(), || {
            format!("{conc} does not refine {abs}:\n{}", r.render())
        })?;
        steps += 1;
    }
    let mutants = &corpus.manifest.mutants;
    ensure(mutants.len() >= MIN_MUTANTS, || {
        format!("only {} mutants", mutants.len())
    })?;
    for mutant in mutants {
        let project = corpus.with_mutant(mutant).map_err(|e| e.to_string())?;
        let machine = corpus.mutant_machine(mutant).ok_or("unlisted mutant")?;
        let model = Model::new(&project, machine, &cfg.consts).map_err(|e| e.to_string())?;
        let u = Universe::with_config(&model.flat.context, &cfg.consts);
        match mutant.detected_by {
            Detection::Po => {
                let r = obligations::report(&project, machine, cfg).map_err(|e| e.to_string())?;
                let mut witnesses = 0;
                for po in &r.obligations {
                    if let PoStatus::Failed(s) = &po.status {
                        let env = env_of(&model, s, &u);
                        ensure(
                            po.hypotheses.iter().all(|h| truth(h, &env, &u) == Ok(true)),
                            || {
                                format!(
                                    "{}: {} hypotheses fail at the counterexample",
                                    mutant.file, po.id
                                )
                            },
                        )?;
                        ensure(truth(&po.goal, &env, &u) != Ok(true), || {
                            format!(
                                "{}: {} goal holds at the counterexample",
                                mutant.file, po.id
                            )
                        })?;
                        witnesses += 1;
                    }
                }
                ensure(witnesses > 0, || format!("{} undetected", mutant.file))?;
            }
            Detection::Refinement => {
                let abs = model
                    .flat
                    .abstract_machine
                    .clone()
                    .ok_or("no abstract machine")?;
                let r =
                    check_refinement(&project, &abs, machine, cfg).map_err(|e| e.to_string())?;
                ensure(!r.passed(), || format!("{} undetected", mutant.file))?;
                for f in &r.failures {
                    refinement_witness_holds(&project, &abs, &model, cfg, f)
                        .map_err(|e| format!("{}: {} witness: {e}", mutant.file, f.check))?;
                }
            }
        }
    }
    Ok(format!(
        "{steps} refinement steps pass, {} mutants caught with re-validated witnesses",
        mutants.len()
    ))
}

fn scenario_runs(corpus: &Corpus) -> Result<Vec<(String, bool, String)>, String> {
    corpus
        .manifest
        .scenarios
        .iter()
        .map(|entry| {
            let text = corpus.scenario_text(entry).ok_or("missing scenario")?;
            let sc = Scenario::parse(text).map_err(|e| format!("{}: {e}", entry.file))?;
            let r = run_scenario(&sc, &corpus.project, &corpus.manifest.config)
                .map_err(|e| format!("{}: {e}", entry.file))?;
            let model = Model::new(
                &corpus.project,
                &sc.machine,
                &corpus.manifest.config.clone().merged(&sc.config).consts,
            )
            .map_err(|e| e.to_string())?;
            let bytes = format!("{}{}", r.trace.to_json_lines(&model), r.log.join("\n"));
            Ok((entry.file.clone(), r.passed() == entry.expect_pass, bytes))
        })
        .collect()
}

fn boundary_scenarios(corpus: &Corpus) -> Outcome {
    let runs = scenario_runs(corpus)?;
    for name in BOUNDARY_SCENARIOS {
        ensure(runs.iter().any(|(f, _, _)| f.contains(name)), || {
            format!("{name} missing")
        })?;
    }
    let wrong: Vec<&str> = runs.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    ensure(wrong.is_empty(), || {
        format!("unexpected outcome: {}", wrong.join(", "))
    })?;
    Ok(format!("{} scenarios behave as expected", runs.len()))
}

fn oracle_equivalence(corpus: &Corpus) -> Outcome {
    let mut total = compare(
        &corpus.project,
        "MCP0",
        &[
            ("bloodFlow", "BOOL"),
            ("alarm", "Alarms"),
            ("bloodPumping", "BloodPumpingValues"),
        ],
        &[],
    );
    for seed in 0..RANDOM_MACHINES {
        let text = random_machine(seed);
        let project = Project::from_sources([("random.ebs", text.as_str())])
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let c: Comparison = compare(&project, "R", &RANDOM_TYPES, &[("x", 0, X_MAX)]);
        total.absorb(c);
    }
    ensure(total.diffs.is_empty(), || total.diffs.join("; "))?;
    Ok(format!(
        "MCP0 and {RANDOM_MACHINES} random machines: {} obligations ({} failed, {} vacuous) and both exploration modes match",
        total.pos, total.failed, total.vacuous
    ))
}

fn driven_liveness(corpus: &Corpus) -> Outcome {
    let cfg: &CheckConfig = &corpus.manifest.config;
    let machines = corpus.project.machine_names();
    for m in &machines {
        let model = Model::new(&corpus.project, m, &cfg.consts).map_err(|e| e.to_string())?;
        let r = explore(&model, cfg, Mode::Driven).map_err(|e| format!("{m}: {e}"))?;
        ensure(r.deadlock_count == 0, || {
            format!("{m} deadlocks in driven mode")
        })?;
        ensure(r.uncovered().is_empty(), || {
            format!("{m} never fires {:?}", r.uncovered())
        })?;
    }
    let model = Model::new(&corpus.project, "MTM0", &cfg.consts).map_err(|e| e.to_string())?;
    let r = explore(&model, cfg, Mode::Closed).map_err(|e| e.to_string())?;
    ensure(r.deadlocks.first().is_some_and(|t| t.is_empty()), || {
        "MTM0 does not deadlock at init in closed mode".into()
    })?;
    Ok(format!(
        "{} machines deadlock-free with full event coverage in driven mode; MTM0 closed deadlocks at init",
        machines.len()
    ))
}

/// Byte flips, truncations, splices and token soup derived from the corpus.
fn fuzz_input(rng: &mut StdRng, seeds: &[&str]) -> String {
    const TOKENS: [&str; 24] = [
        "MACHINE",
        "CONTEXT",
        "END",
        "EVENTS",
        "Event",
        "Where",
        "Then",
        "End",
        "INVARIANTS",
        "VARIABLES",
        "REFINES",
        "SEES",
        "partition",
        "(",
        ")",
        "{",
        "}",
        ":=",
        "|->",
        "-->",
        "=>",
        "&",
        "inv1",
        "x",
    ];
    let base = seeds[rng.gen_range(0..seeds.len())].as_bytes();
    match rng.gen_range(0..4) {
        0 => {
            let mut b = base.to_vec();
            for _ in 0..rng.gen_range(1..8) {
                let i = rng.gen_range(0..b.len());
                b[i] = rng.gen();
            }
            String::from_utf8_lossy(&b).into_owned()
        }
        1 => String::from_utf8_lossy(&base[..rng.gen_range(0..base.len())]).into_owned(),
        2 => {
            let other = seeds[rng.gen_range(0..seeds.len())].as_bytes();
            let (i, j) = (rng.gen_range(0..base.len()), rng.gen_range(0..other.len()));
            let mut b = base[..i].to_vec();
            b.extend_from_slice(&other[j..]);
            String::from_utf8_lossy(&b).into_owned()
        }
        _ => (0..rng.gen_range(0..60))
            .map(|_| TOKENS[rng.gen_range(0..TOKENS.len())])
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn robustness(corpus: &Corpus) -> Outcome {
    let seeds: Vec<&str> = eventb_kernel::corpus::FILES
        .iter()
        .filter(|(p, _)| p.ends_with(".ebs"))
        .map(|(_, t)| *t)
        .collect();
    let mut rng = StdRng::seed_from_u64(7);
    let inputs: Vec<String> = (0..FUZZ_INPUTS)
        .map(|_| fuzz_input(&mut rng, &seeds))
        .collect();
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let crashes = inputs
        .iter()
        .filter(|text| panic::catch_unwind(|| parse_source(text)).is_err())
        .count();
    panic::set_hook(hook);
    ensure(crashes == 0, || {
        format!("{crashes} of {FUZZ_INPUTS} inputs crash the parser")
    })?;

    let first = scenario_runs(corpus)?;
    for _ in 1..REPEATS {
        let again = scenario_runs(corpus)?;
        for (a, b) in first.iter().zip(&again) {
            ensure(a.2 == b.2, || format!("{} trace differs between runs", a.0))?;
        }
    }
    Ok(format!(
        "{FUZZ_INPUTS} fuzzed inputs without a crash; {} scenarios byte-identical over {REPEATS} runs",
        first.len()
    ))
}
