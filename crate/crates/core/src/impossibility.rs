//! Replayable witnesses for the negative results.
//!
//! OC in OBLOT^F: with the fourth robot at C′ the configuration is II
//! whether it came from I or from III, and an oblivious robot sees exactly
//! the same thing in both cases. One FSYNC round therefore leads to the same
//! successor, but OC requires III after the first and I after the second.
//!
//! IOP in FCOM^S: a bounded search over synchronous schedules (led by the
//! strategy that activates r₁ alone twice in a row) and over rescaled
//! instances, stopping at the first trace that fails the IOP predicate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run, take_snapshot, Event, Model, Program, ProgramError, RoundActivation, Trace, WorldState};
use crate::geometry::{Multiplier, Point, Scalar, Transform};
use crate::problems::{check_iop, classify_oc, Config, IopInstance, OcInstance, Verdict};
use crate::schedulers::{validate_schedule, Schedule, SchedulerKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImpossibilityError {
    #[error("program {program} is written for {found}, expected {expected}")]
    ModelMismatch {
        program: String,
        expected: Model,
        found: Model,
    },
    #[error("program {0} gave different outputs on the same snapshot")]
    Nondeterministic(String),
    #[error("program {program} rejected the snapshot: {source}")]
    Rejected {
        program: String,
        #[source]
        source: ProgramError,
    },
    #[error("broken instance: {0}")]
    BrokenInstance(String),
    #[error("universal precondition failed: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    OcOblot,
    IopFcom,
}

/// What the program decided for one robot, in world coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramOutput {
    pub case: String,
    pub robot: usize,
    pub destination: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCase {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_next: Option<Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reached: Option<Config>,
    pub violates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iop_instance: Option<IopInstance>,
    pub schedule: Schedule,
    pub trace: Trace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub program: String,
    pub scenario: String,
    pub violated_clause: String,
    pub outputs: Vec<ProgramOutput>,
    pub cases: Vec<WitnessCase>,
}

impl Witness {
    pub fn violating_cases(&self) -> impl Iterator<Item = &WitnessCase> {
        self.cases.iter().filter(|c| c.violates)
    }

    /// Re-runs every embedded schedule and checks the traces come out
    /// identical.
    pub fn replays(&self, program: &dyn Program) -> bool {
        self.cases.iter().all(|case| {
            let Some(start) = case.trace.initial() else {
                return false;
            };
            let trace = match run(start, program, program.model(), &case.schedule) {
                Ok(t) => t,
                Err(f) => f.partial,
            };
            trace == case.trace
        })
    }
}

/// Configuration II entered from I and from III: the same picture, opposite demands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasePair {
    pub case1: WorldState,
    pub case2: WorldState,
    /// Configurations OC demands next in case 1 and case 2.
    pub required_next: (Config, Config),
}

fn oblot_snapshots_equal(a: &WorldState, b: &WorldState, axes: &Multiplier) -> Result<bool, ImpossibilityError> {
    for robot in 0..a.len() {
        let frame_of = |w: &WorldState| {
            w.position(robot)
                .map(|p| Transform::local_frame(axes, &p))
                .map_err(|e| ImpossibilityError::BrokenInstance(e.to_string()))
        };
        let sa = take_snapshot(a, robot, Model::Oblot, &frame_of(a)?);
        let sb = take_snapshot(b, robot, Model::Oblot, &frame_of(b)?);
        if sa != sb {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn oc_case_pair(instance: &OcInstance) -> Result<CasePair, ImpossibilityError> {
    instance
        .validate()
        .map_err(|e| ImpossibilityError::BrokenInstance(e.to_string()))?;
    let with_mover = |from: Config| {
        let mut pts = instance.config(from);
        pts[OcInstance::MOVER] = instance.c_prime.clone();
        WorldState::new(&pts).map_err(|e| ImpossibilityError::BrokenInstance(e.to_string()))
    };
    let case1 = with_mover(Config::I)?;
    let case2 = with_mover(Config::III)?;
    if !oblot_snapshots_equal(&case1, &case2, &Multiplier::one())? {
        return Err(ImpossibilityError::BrokenInstance(
            "the two cases look different to an oblivious robot".into(),
        ));
    }
    Ok(CasePair {
        case1,
        case2,
        required_next: (Config::III, Config::I),
    })
}

/// Runs `program` for one FSYNC round from both cases and reports which
/// case breaks OC. Works for any deterministic oblivious program.
pub fn oc_oblot_witness(program: &dyn Program, instance: &OcInstance) -> Result<Witness, ImpossibilityError> {
    if program.model() != Model::Oblot {
        return Err(ImpossibilityError::ModelMismatch {
            program: program.name().to_string(),
            expected: Model::Oblot,
            found: program.model(),
        });
    }
    let pair = oc_case_pair(instance)?;
    let n = pair.case1.len();
    let everyone: Vec<usize> = (0..n).collect();
    let schedule = Schedule::from_rounds(SchedulerKind::Fsync, n, 1, &[everyone]);

    let mut outputs = Vec::new();
    let cases_in = [
        ("case-1: II reached from I", &pair.case1, pair.required_next.0),
        ("case-2: II reached from III", &pair.case2, pair.required_next.1),
    ];
    for (label, world, _) in &cases_in {
        for robot in 0..n {
            let pos = world.position(robot).expect("robot exists");
            let frame = Transform::local_frame(&Multiplier::one(), &pos);
            let snap = take_snapshot(world, robot, Model::Oblot, &frame).expect("centred frame");
            let first = program.compute(&snap);
            if first != program.compute(&snap) {
                return Err(ImpossibilityError::Nondeterministic(program.name().to_string()));
            }
            if let Ok(action) = first {
                outputs.push(ProgramOutput {
                    case: label.to_string(),
                    robot,
                    destination: frame.inverse().apply(&action.destination),
                });
            }
        }
    }

    let mut cases = Vec::new();
    let mut successors = Vec::new();
    for (label, world, required) in cases_in {
        let (trace, error) = match run(world, program, Model::Oblot, &schedule) {
            Ok(t) => (t, None),
            Err(f) => (f.partial, Some(f.error.to_string())),
        };
        let reached = error
            .is_none()
            .then(|| trace.last().map(|w| classify_oc(w, instance)))
            .flatten();
        successors.push(
            error
                .is_none()
                .then(|| trace.last().map(WorldState::positions))
                .flatten(),
        );
        cases.push(WitnessCase {
            label: label.to_string(),
            required_next: Some(required),
            reached,
            violates: reached != Some(required),
            iop_instance: None,
            schedule: schedule.clone(),
            trace,
            error,
            verdict: None,
        });
    }
    if successors[0] != successors[1] {
        return Err(ImpossibilityError::Precondition(
            "equal snapshots led to different successors".into(),
        ));
    }
    if !cases.iter().any(|c| c.violates) {
        return Err(ImpossibilityError::Precondition(
            "one successor satisfied two non-similar requirements".into(),
        ));
    }
    let violated_clause = cases
        .iter()
        .filter(|c| c.violates)
        .map(|c| {
            let got = c.reached.map_or_else(
                || format!("error ({})", c.error.as_deref().unwrap_or("")),
                |r| r.to_string(),
            );
            format!(
                "{}: next configuration must be {}, got {got}",
                c.label,
                c.required_next.expect("set")
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Witness {
        kind: WitnessKind::OcOblot,
        program: program.name().to_string(),
        scenario: "fourth robot at C′; one FSYNC round from configuration II entered from I and from III".into(),
        violated_clause,
        outputs,
        cases,
    })
}

/// Frame for `robot` with the middle robot at local (1, 0).
fn normalised_axes(world: &WorldState, robot: usize) -> Multiplier {
    let me = world.position(robot).expect("robot exists");
    let mid = world.position(IopInstance::MIDDLE).expect("robot exists");
    Multiplier::new((&mid - &me).x, (&mid - &me).y).unwrap_or_else(|_| Multiplier::one())
}

fn round_of(world: &WorldState, robots: &[usize]) -> Event {
    Event::Round {
        active: robots
            .iter()
            .map(|&robot| RoundActivation {
                robot,
                frame: normalised_axes(world, robot),
            })
            .collect(),
    }
}

/// Whether `robot` would do anything if activated now.
fn probe_moves(world: &WorldState, robot: usize, program: &dyn Program) -> bool {
    let pos = world.position(robot).expect("robot exists");
    let frame = Transform::local_frame(&normalised_axes(world, robot), &pos);
    take_snapshot(world, robot, Model::Fcom, &frame)
        .ok()
        .and_then(|s| program.compute(&s).ok())
        .is_some_and(|a| !a.is_null())
}

/// Round-set families tried in order. A family sees the current world so
/// that it can react to the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    /// Full rounds until `robot` would move, then `robot` alone twice,
    /// then full rounds.
    Burst(usize),
    Full,
    RoundRobin,
}

impl Family {
    const ALL: [Family; 4] = [
        Family::Burst(IopInstance::R1),
        Family::Burst(IopInstance::R2),
        Family::Full,
        Family::RoundRobin,
    ];

    fn describe(self) -> String {
        match self {
            Family::Burst(r) => format!(
                "fair rounds until r{} would move, then r{} alone for two rounds",
                r / 2 + 1,
                r / 2 + 1
            ),
            Family::Full => "every robot in every round".into(),
            Family::RoundRobin => "one robot per round in turn".into(),
        }
    }
}

fn build_schedule(
    family: Family,
    program: &dyn Program,
    world0: &WorldState,
    depth: usize,
) -> (Schedule, Trace, Option<String>) {
    let all = [0, 1, 2];
    let mut schedule = Schedule {
        kind: SchedulerKind::Ssync,
        robot_count: 3,
        fairness_window: 3,
        params: None,
        events: Vec::new(),
    };
    let mut world = world0.clone();
    let mut burst_left: Option<usize> = None;
    for round in 0..depth {
        let set: Vec<usize> = match family {
            Family::Full => all.to_vec(),
            Family::RoundRobin => vec![round % 3],
            Family::Burst(r) => match burst_left {
                Some(0) => all.to_vec(),
                Some(k) => {
                    burst_left = Some(k - 1);
                    vec![r]
                }
                None if probe_moves(&world, r, program) => {
                    burst_left = Some(1);
                    vec![r]
                }
                None => all.to_vec(),
            },
        };
        schedule.events.push(round_of(&world, &set));
        match run(world0, program, Model::Fcom, &schedule) {
            Ok(t) => world = t.last().expect("non-empty").clone(),
            Err(f) => return (schedule, f.partial, Some(f.error.to_string())),
        }
    }
    let (trace, err) = match run(world0, program, Model::Fcom, &schedule) {
        Ok(t) => (t, None),
        Err(f) => (f.partial, Some(f.error.to_string())),
    };
    (schedule, trace, err)
}

/// Bounded search for a synchronous schedule under which `program` fails
/// IOP. Instances are `instance` with both offsets scaled by 2^s for
/// `s < scalings`. Returns `Ok(None)` when nothing fails within bounds.
pub fn iop_fcom_search(
    program: &dyn Program,
    instance: &IopInstance,
    depth: usize,
    scalings: usize,
) -> Result<Option<Witness>, ImpossibilityError> {
    if program.model() != Model::Fcom {
        return Err(ImpossibilityError::ModelMismatch {
            program: program.name().to_string(),
            expected: Model::Fcom,
            found: program.model(),
        });
    }
    let world0 = instance.initial_world();
    for robot in 0..world0.len() {
        let pos = world0.position(robot).expect("robot exists");
        let frame = Transform::local_frame(&Multiplier::one(), &pos);
        let snap = take_snapshot(&world0, robot, Model::Fcom, &frame).expect("centred frame");
        match program.compute(&snap) {
            Err(source) => {
                return Err(ImpossibilityError::Rejected {
                    program: program.name().to_string(),
                    source,
                })
            }
            Ok(a) if Ok(&a) != program.compute(&snap).as_ref() => {
                return Err(ImpossibilityError::Nondeterministic(program.name().to_string()))
            }
            Ok(_) => {}
        }
    }
    if depth == 0 {
        return Ok(None);
    }
    let mut k = Scalar::one();
    for _ in 0..scalings.max(1) {
        let inst = instance.scaled(&k);
        let start = inst.initial_world();
        for family in Family::ALL {
            let (schedule, trace, error) = build_schedule(family, program, &start, depth);
            debug_assert!(validate_schedule(&schedule, 3).is_empty());
            let verdict = check_iop(&trace, &inst, 1);
            if verdict.pass && error.is_none() {
                continue;
            }
            let violated_clause = match (&error, &verdict.violation) {
                (Some(e), _) => format!("simulation error: {e}"),
                (None, Some(v)) => format!("{} at event {}: {}", v.rule, v.event_index, v.detail),
                (None, None) => unreachable!("failing verdicts carry a violation"),
            };
            let outputs = trace
                .entries
                .windows(2)
                .flat_map(|w| {
                    let (before, after) = (&w[0].state, &w[1].state);
                    (0..3)
                        .filter(|&r| before.position(r).ok() != after.position(r).ok())
                        .map(|r| ProgramOutput {
                            case: format!("event {}", after.event_index),
                            robot: r,
                            destination: after.position(r).expect("robot exists"),
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            return Ok(Some(Witness {
                kind: WitnessKind::IopFcom,
                program: program.name().to_string(),
                scenario: format!("x1 = {}, x2 = {}; {}", inst.x1, inst.x2, family.describe()),
                violated_clause,
                outputs,
                cases: vec![WitnessCase {
                    label: family.describe(),
                    required_next: None,
                    reached: None,
                    violates: true,
                    iop_instance: Some(inst),
                    schedule,
                    trace,
                    error,
                    verdict: Some(verdict),
                }],
            }));
        }
        k = &k * Scalar::integer(2);
    }
    Ok(None)
}
