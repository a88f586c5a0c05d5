//! Acceptance suite. One line per criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lcm_core::algorithms::{lightless_move_away, oblivious_candidates, AlgOc, AlgoIop, Comil};
use lcm_core::engine::{run, Event, Phase, Trace};
use lcm_core::geometry::{Multiplier, Point, Scalar};
use lcm_core::impossibility::{iop_fcom_search, oc_case_pair, oc_oblot_witness};
use lcm_core::problems::{check_il, check_iop, check_oc, IlInstance, IopInstance, OcInstance};
use lcm_core::relations::{base_facts, paper_claims, verify_claims, verify_paper_claims, Relation};
use lcm_core::schedulers::{generate_async, generate_ssync, sync_to_async, validate_schedule};
use lcm_core::{AdversaryParams, Program, Schedule, WorldState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 1000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(seed: u64) -> AdversaryParams {
    AdversaryParams {
        seed,
        horizon: 600,
        fairness_window: 40,
        ..AdversaryParams::default()
    }
}

fn sync_params(seed: u64, fsync: bool) -> AdversaryParams {
    AdversaryParams {
        seed,
        horizon: if fsync { 40 } else { 80 },
        fairness_window: 40,
        ..AdversaryParams::default()
    }
}

fn simulate(world: &WorldState, program: &dyn Program, schedule: &Schedule) -> Result<Trace, String> {
    run(world, program, program.model(), schedule).map_err(|f| f.error.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oc_suite() -> Outcome {
    let inst = OcInstance::default();
    let prog = AlgOc { instance: inst.clone() };
    let world = inst.initial_world();
    let start = Instant::now();
    let mut fewest = usize::MAX;
    for seed in 0..SEEDS {
        let s = generate_async(&params(seed), 4).map_err(|e| e.to_string())?;
        let trace = simulate(&world, &prog, &s).map_err(|e| format!("seed {seed}: {e}"))?;
        let v = check_oc(&trace, &inst, 5);
        ensure(v.pass, || format!("ASYNC seed {seed}: {:?}", v.violation))?;
        fewest = fewest.min(v.cycles_completed.values().copied().min().unwrap_or(0));
    }
    let async_time = start.elapsed();
    ensure(async_time < Duration::from_secs(60), || {
        format!("ASYNC suite took {async_time:?}")
    })?;
    for fsync in [true, false] {
        for seed in 0..SEEDS {
            let s = sync_to_async(&generate_ssync(&sync_params(seed, fsync), 4, fsync).map_err(|e| e.to_string())?);
            let trace = simulate(&world, &prog, &s).map_err(|e| format!("seed {seed}: {e}"))?;
            let v = check_oc(&trace, &inst, 5);
            let kind = if fsync { "FSYNC" } else { "SSYNC" };
            ensure(v.pass, || format!("{kind} seed {seed}: {:?}", v.violation))?;
        }
    }
    Ok(format!(
        "{SEEDS} ASYNC seeds in {:.1}s (fewest periods {fewest}), plus {SEEDS} FSYNC and {SEEDS} SSYNC",
        async_time.as_secs_f64()
    ))
}

/// a is halfway to P1 while b and c are activated three times each.
fn comil_mid_move() -> Result<(), String> {
    let inst = IlInstance::default();
    let prog = Comil { instance: inst.clone() };
    let one = Multiplier::one();
    let half = Scalar::new(1, 2);
    let mut events = vec![
        Event::Activate {
            robot: IlInstance::A,
            frame: one.clone(),
        },
        Event::FinishCompute { robot: IlInstance::A },
        Event::Progress {
            robot: IlInstance::A,
            delta: half.clone(),
        },
    ];
    let mut probes = Vec::new();
    for _ in 0..3 {
        for robot in [IlInstance::B, IlInstance::C] {
            events.push(Event::Activate {
                robot,
                frame: one.clone(),
            });
            events.push(Event::FinishCompute { robot });
            probes.push((robot, events.len()));
            events.push(Event::Progress {
                robot,
                delta: Scalar::one(),
            });
        }
    }
    events.push(Event::Progress {
        robot: IlInstance::A,
        delta: half,
    });
    let schedule = Schedule {
        kind: lcm_core::SchedulerKind::Async,
        robot_count: 3,
        fairness_window: 40,
        params: None,
        events,
    };
    ensure(validate_schedule(&schedule, 3).is_empty(), || {
        "scripted schedule invalid".into()
    })?;
    let trace = simulate(&inst.initial_world(), &prog, &schedule)?;
    let initial = trace.initial().expect("init").clone();
    for (robot, idx) in probes {
        // trace entry idx is the state right after that FinishCompute
        let s = &trace.entries[idx].state;
        let r = &s.robots[robot];
        ensure(
            r.phase
                == Phase::Idle {
                    position: initial.robots[robot].phase.position(),
                }
                && r.light == initial.robots[robot].light,
            || format!("robot {robot} acted while a was mid-move: {r:?}"),
        )?;
        ensure(s.robots[IlInstance::A].phase.is_moving(), || "a stopped early".into())?;
    }
    let last = trace.last().expect("state");
    ensure(last.position(IlInstance::A).unwrap() == inst.p1, || {
        "a missed P1".into()
    })
}

fn il_suite() -> Outcome {
    let inst = IlInstance::default();
    let prog = Comil { instance: inst.clone() };
    let world = inst.initial_world();
    for seed in 0..SEEDS {
        let s = generate_async(&params(seed), 3).map_err(|e| e.to_string())?;
        let trace = simulate(&world, &prog, &s).map_err(|e| format!("seed {seed}: {e}"))?;
        let v = check_il(&trace, &inst, &prog, prog.model());
        ensure(v.pass, || format!("seed {seed}: {:?}", v.violation))?;
    }
    comil_mid_move()?;
    Ok(format!("{SEEDS} ASYNC seeds; b and c null while a is mid-move"))
}

fn iop_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10f);
    let mut instances = vec![IopInstance::default()];
    instances.extend((0..10).map(|_| common::random_iop(&mut rng)));
    let mut runs = 0;
    for (k, inst) in instances.iter().enumerate() {
        let world = inst.initial_world();
        for seed in 0..SEEDS {
            let s = generate_async(&params(seed), 3).map_err(|e| e.to_string())?;
            let trace = simulate(&world, &AlgoIop, &s).map_err(|e| format!("instance {k} seed {seed}: {e}"))?;
            let v = check_iop(&trace, inst, 3);
            ensure(v.pass, || format!("instance {k} seed {seed}: {:?}", v.violation))?;
            ensure(
                trace.states().all(|w| {
                    let rm = &w.robots[IopInstance::MIDDLE].phase;
                    !rm.is_moving() && rm.position() == inst.middle
                }),
                || format!("instance {k} seed {seed}: r_m left its spot"),
            )?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs over {} instances", instances.len()))
}

fn oblot_oc_witnesses() -> Outcome {
    let inst = OcInstance::default();
    oc_case_pair(&inst).map_err(|e| e.to_string())?;
    let corpus = oblivious_candidates();
    ensure(corpus.len() >= 5, || format!("corpus has {} programs", corpus.len()))?;
    for p in &corpus {
        let w = oc_oblot_witness(p.as_ref(), &inst).map_err(|e| format!("{}: {e}", p.name()))?;
        ensure(w.violating_cases().count() > 0, || {
            format!("{}: no violating case", p.name())
        })?;
        ensure(w.replays(p.as_ref()), || {
            format!("{}: witness does not replay", p.name())
        })?;
        // equal snapshots must give equal successors
        let [c1, c2] = [&w.cases[0], &w.cases[1]];
        ensure(c1.reached == c2.reached, || format!("{}: successors differ", p.name()))?;
    }
    Ok(format!(
        "case pair holds; {} of {} candidates refuted",
        corpus.len(),
        corpus.len()
    ))
}

fn fcom_iop_witness() -> Outcome {
    let inst = IopInstance::default();
    let prog = lightless_move_away();
    let start = Instant::now();
    let w = iop_fcom_search(&prog, &inst, 12, 3)
        .map_err(|e| e.to_string())?
        .ok_or("no witness within bounds")?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("search took {took:?}"))?;
    ensure(w.replays(&prog), || "witness does not replay".into())?;
    let case = w.violating_cases().next().ok_or("no violating case")?;
    let scaled = case.iop_instance.as_ref().unwrap_or(&inst);
    let four_x1_sq = &(&scaled.x1 * &scaled.x1) * &Scalar::integer(16);
    let reached: Vec<Point> = case
        .trace
        .states()
        .map(|s| s.position(IopInstance::R1).unwrap())
        .collect();
    ensure(
        reached.iter().any(|p| p.squared_distance(&scaled.middle) == four_x1_sq),
        || "r1 never reaches 4·x1".into(),
    )?;
    Ok(format!("witness ({}) in {:.2}s", w.violated_clause, took.as_secs_f64()))
}

fn lattice() -> Outcome {
    let report = verify_paper_claims();
    for r in &report.results {
        ensure(r.pass, || {
            format!(
                "{}: expected {:?}, derived {:?}",
                r.claim.id, r.claim.expected, r.derived.relation
            )
        })?;
    }
    ensure(report.conflicts.is_empty(), || {
        format!("conflicts: {:?}", report.conflicts)
    })?;
    let unknown = report
        .results
        .iter()
        .filter(|r| r.derived.relation == Relation::Unknown)
        .count();
    ensure(unknown == 5, || format!("{unknown} unknown relations, expected 5"))?;
    let ablated: Vec<_> = base_facts().into_iter().filter(|f| !f.contribution).collect();
    let ablation = verify_claims(&ablated, &paper_claims());
    let theorems: Vec<_> = ablation
        .results
        .iter()
        .filter(|r| r.claim.id.starts_with("Theorem"))
        .collect();
    ensure(!theorems.is_empty() && theorems.iter().all(|r| !r.pass), || {
        "ablation left a theorem derivable".into()
    })?;
    Ok(format!(
        "{} claims hold, {unknown} unknown; ablation removes all {} theorems",
        report.results.len(),
        theorems.len()
    ))
}

fn frame_invariance() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let oc = OcInstance::default();
    let il = IlInstance::default();
    let iop = IopInstance::default();
    let subjects: Vec<(Box<dyn Program>, WorldState, usize)> = vec![
        (Box::new(AlgOc { instance: oc.clone() }), oc.initial_world(), 4),
        (Box::new(Comil { instance: il.clone() }), il.initial_world(), 3),
        (Box::new(AlgoIop), iop.initial_world(), 3),
    ];
    let mut compared = 0;
    for (prog, world0, n) in &subjects {
        let s = generate_async(&params(99), *n).map_err(|e| e.to_string())?;
        let trace = simulate(world0, prog.as_ref(), &s)?;
        let stride = (trace.len() / 20).max(1);
        let states: Vec<&WorldState> = trace.states().step_by(stride).take(20).collect();
        for state in states {
            for _ in 0..1000 {
                let axes = common::any_multiplier(&mut rng);
                let robot = compared % n;
                let base = common::world_output(state, robot, prog.as_ref(), &Multiplier::one());
                let other = common::world_output(state, robot, prog.as_ref(), &axes);
                ensure(
                    base.is_ok() == other.is_ok() && (base.is_err() || base == other),
                    || format!("{}: robot {robot} frame {axes:?}: {base:?} vs {other:?}", prog.name()),
                )?;
                compared += 1;
            }
        }
    }
    Ok(compared)
}

fn predicate_similarity() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let oc = OcInstance::default();
    let il = IlInstance::default();
    let iop = IopInstance::default();
    let alg_oc = AlgOc { instance: oc.clone() };
    let comil = Comil { instance: il.clone() };
    let null = oblivious_candidates().into_iter().next().expect("corpus");
    let traces = |w: &WorldState, p: &dyn Program, n| {
        let s = generate_async(
            &AdversaryParams {
                horizon: 200,
                ..params(5)
            },
            n,
        )
        .unwrap();
        simulate(w, p, &s)
    };
    let oc_pass = traces(&oc.initial_world(), &alg_oc, 4)?;
    let oc_fail = traces(&oc.initial_world(), null.as_ref(), 4)?;
    let il_pass = traces(&il.initial_world(), &comil, 3)?;
    let iop_pass = traces(&iop.initial_world(), &AlgoIop, 3)?;
    let mut checked = 0;
    for _ in 0..100 {
        let t = common::any_transform(&mut rng);
        for tr in [&oc_pass, &oc_fail] {
            let a = common::verdict_shape(&check_oc(tr, &oc, 2));
            let b = common::verdict_shape(&check_oc(&tr.map_points(&t), &common::map_oc(&oc, &t), 2));
            ensure(a == b, || format!("check_oc differs under {t:?}"))?;
        }
        let mil = common::map_il(&il, &t);
        let a = common::verdict_shape(&check_il(&il_pass, &il, &comil, comil.model()));
        let mc = Comil { instance: mil.clone() };
        let b = common::verdict_shape(&check_il(&il_pass.map_points(&t), &mil, &mc, mc.model()));
        ensure(a == b, || format!("check_il differs under {t:?}"))?;
        let a = common::verdict_shape(&check_iop(&iop_pass, &iop, 2));
        let b = common::verdict_shape(&check_iop(&iop_pass.map_points(&t), &common::map_iop(&iop, &t), 2));
        ensure(a == b, || format!("check_iop differs under {t:?}"))?;
        checked += 4;
    }
    Ok(checked)
}

fn generator_roundtrip() -> Result<usize, String> {
    let mut n = 0;
    for seed in 0..SEEDS {
        for (robots, s) in [
            (4, generate_async(&params(seed), 4)),
            (3, generate_ssync(&sync_params(seed, false), 3, false)),
            (3, generate_ssync(&sync_params(seed, true), 3, true)),
        ] {
            let s = s.map_err(|e| e.to_string())?;
            let bad = validate_schedule(&s, robots);
            ensure(bad.is_empty(), || format!("seed {seed}: {}", bad[0]))?;
            let back: Schedule =
                serde_json::from_str(&serde_json::to_string(&s).unwrap()).map_err(|e| e.to_string())?;
            ensure(back == s, || {
                format!("seed {seed}: JSON round trip changed the schedule")
            })?;
            n += 1;
        }
    }
    Ok(n)
}

/// Coordinates, multipliers and deltas are all `Scalar`, which wraps an
/// exact big rational; nothing else is constructible.
fn rational_by_type() {
    fn closed(a: &Scalar, b: &Scalar) -> Scalar {
        &(&(a + b) * &(a - b)) / b
    }
    let _: fn(&Point) -> (&Scalar, &Scalar) = |p| (&p.x, &p.y);
    let _: fn(&Multiplier) -> &Scalar = Multiplier::re;
    let _: &num_rational::BigRational = closed(&Scalar::new(1, 3), &Scalar::new(2, 7)).as_rational();
}

fn invariants() -> Outcome {
    let frames = frame_invariance()?;
    let preds = predicate_similarity()?;
    let schedules = generator_roundtrip()?;
    rational_by_type();
    Ok(format!(
        "{frames} frame comparisons, {preds} transformed verdicts, {schedules} schedules valid; arithmetic rational by type"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("AlgOC correctness", oc_suite),
        ("COMIL correctness", il_suite),
        ("AlgoIOP correctness", iop_suite),
        ("OBLOT cannot solve OC", oblot_oc_witnesses),
        ("FCOM move-away mimic overshoots", fcom_iop_witness),
        ("relation lattice", lattice),
        ("invariant suites", invariants),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS criterion {}: {name} [{secs:.1}s] {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {}: {name} [{secs:.1}s] {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
