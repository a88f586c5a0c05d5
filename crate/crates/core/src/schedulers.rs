//! Adversarial activation schedules.
//!
//! A [`Schedule`] is a finite list of [`Event`]s. Synchronous schedules are
//! lists of `Round`s; asynchronous ones interleave `Activate`,
//! `FinishCompute` and `Progress` events of different robots. Fairness is
//! bounded: every robot must start a cycle in every window of
//! `fairness_window` consecutive events (or rounds).

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Event, RobotId, RoundActivation};
use crate::geometry::{Multiplier, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SchedulerKind {
    Fsync,
    Ssync,
    Async,
}

impl SchedulerKind {
    pub fn is_sync(self) -> bool {
        !matches!(self, SchedulerKind::Async)
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerKind::Fsync => "FSYNC",
            SchedulerKind::Ssync => "SSYNC",
            SchedulerKind::Async => "ASYNC",
        })
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FSYNC" | "F" => Ok(SchedulerKind::Fsync),
            "SSYNC" | "S" => Ok(SchedulerKind::Ssync),
            "ASYNC" | "A" => Ok(SchedulerKind::Async),
            _ => Err(format!("unknown scheduler {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FramePolicy {
    FixedPerRobot,
    #[default]
    FreshPerActivation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryParams {
    pub seed: u64,
    /// Events (ASYNC) or rounds (FSYNC/SSYNC) before the adversary stops
    /// starting new cycles.
    pub horizon: usize,
    pub fairness_window: usize,
    pub max_progress_splits: usize,
    #[serde(default)]
    pub frame_policy: FramePolicy,
}

impl Default for AdversaryParams {
    fn default() -> Self {
        AdversaryParams {
            seed: 0,
            horizon: 600,
            fairness_window: 40,
            max_progress_splits: 3,
            frame_policy: FramePolicy::FreshPerActivation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("fairness window {window} is smaller than the required {required}")]
    WindowTooSmall { window: usize, required: usize },
    #[error("horizon {horizon} is shorter than the fairness window {window}")]
    HorizonTooShort { horizon: usize, window: usize },
    #[error("max_progress_splits must be positive")]
    NoSplits,
    #[error("schedule needs at least one robot")]
    NoRobots,
}

impl AdversaryParams {
    /// Checks the parameters for `robot_count` robots. Asynchronous
    /// generation needs room for every robot to complete a cycle inside one
    /// window, so it demands `W ≥ 6n`; synchronous generation needs `W ≥ n`.
    pub fn validate(&self, kind: SchedulerKind, robot_count: usize) -> Result<(), ParamsError> {
        if robot_count == 0 {
            return Err(ParamsError::NoRobots);
        }
        if self.max_progress_splits == 0 {
            return Err(ParamsError::NoSplits);
        }
        let required = match kind {
            SchedulerKind::Async => 6 * robot_count,
            _ => robot_count,
        };
        if self.fairness_window < required {
            return Err(ParamsError::WindowTooSmall {
                window: self.fairness_window,
                required,
            });
        }
        if self.horizon < self.fairness_window {
            return Err(ParamsError::HorizonTooShort {
                horizon: self.horizon,
                window: self.fairness_window,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: SchedulerKind,
    pub robot_count: usize,
    pub fairness_window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<AdversaryParams>,
    pub events: Vec<Event>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// A synchronous schedule from explicit rounds, every frame the identity.
    pub fn from_rounds(
        kind: SchedulerKind,
        robot_count: usize,
        fairness_window: usize,
        rounds: &[Vec<RobotId>],
    ) -> Schedule {
        let events = rounds
            .iter()
            .map(|set| Event::Round {
                active: set
                    .iter()
                    .map(|&robot| RoundActivation {
                        robot,
                        frame: Multiplier::one(),
                    })
                    .collect(),
            })
            .collect();
        Schedule {
            kind,
            robot_count,
            fairness_window,
            params: None,
            events,
        }
    }
}

/// A random admissible local frame: a rational rotation (a Pythagorean
/// angle composed with a multiple of 90°) scaled by a small rational.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R) -> Multiplier {
    const TRIPLES: [(i64, i64, i64); 6] = [
        (1, 0, 1),
        (3, 4, 5),
        (5, 12, 13),
        (8, 15, 17),
        (7, 24, 25),
        (20, 21, 29),
    ];
    let (a, b, c) = *TRIPLES.choose(rng).expect("non-empty");
    let rot = Multiplier::new(Scalar::new(a, c), Scalar::new(b, c)).expect("unit");
    let quarter = (0..rng.gen_range(0..4)).fold(Multiplier::one(), |m, _| m.compose(&Multiplier::quarter_turn()));
    let scale = Scalar::new(rng.gen_range(1..=4), rng.gen_range(1..=4));
    let scaled = Multiplier::new(scale, Scalar::zero()).expect("positive scale");
    rot.compose(&quarter).compose(&scaled)
}

struct Frames {
    policy: FramePolicy,
    fixed: Vec<Multiplier>,
}

impl Frames {
    fn new(policy: FramePolicy, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let fixed = (0..n).map(|_| random_frame(rng)).collect();
        Frames { policy, fixed }
    }

    fn next(&self, robot: RobotId, rng: &mut ChaCha8Rng) -> Multiplier {
        match self.policy {
            FramePolicy::FixedPerRobot => self.fixed[robot].clone(),
            FramePolicy::FreshPerActivation => random_frame(rng),
        }
    }
}

#[derive(Clone)]
enum GenPhase {
    Idle,
    Pending,
    Moving { remaining: Scalar, splits: usize },
}

impl GenPhase {
    /// Events this robot needs, at best, before it can start a new cycle.
    fn needed(&self) -> i64 {
        match self {
            GenPhase::Idle => 1,
            GenPhase::Pending => 3,
            GenPhase::Moving { .. } => 2,
        }
    }
}

struct AsyncGen {
    rng: ChaCha8Rng,
    frames: Frames,
    phases: Vec<GenPhase>,
    last_start: Vec<i64>,
    window: i64,
    max_splits: usize,
    events: Vec<Event>,
}

impl AsyncGen {
    fn deadline(&self, r: RobotId) -> i64 {
        self.last_start[r] + self.window
    }

    fn laxity(&self, r: RobotId, now: i64) -> i64 {
        self.deadline(r) - now - (self.phases[r].needed() - 1)
    }

    /// Emits the next event of robot `r`; `hurry` completes moves in one
    /// step.
    fn advance(&mut self, r: RobotId, hurry: bool) {
        let now = self.events.len() as i64;
        let (event, next) = match self.phases[r].clone() {
            GenPhase::Idle => {
                self.last_start[r] = now;
                let frame = self.frames.next(r, &mut self.rng);
                (Event::Activate { robot: r, frame }, GenPhase::Pending)
            }
            GenPhase::Pending => {
                let splits = self.rng.gen_range(1..=self.max_splits);
                (
                    Event::FinishCompute { robot: r },
                    GenPhase::Moving {
                        remaining: Scalar::one(),
                        splits,
                    },
                )
            }
            GenPhase::Moving { remaining, splits } => {
                if hurry || splits <= 1 {
                    (
                        Event::Progress {
                            robot: r,
                            delta: remaining,
                        },
                        GenPhase::Idle,
                    )
                } else {
                    let k = self.rng.gen_range(1..=3);
                    let delta = &remaining * Scalar::new(k, 4);
                    let left = &remaining - &delta;
                    (
                        Event::Progress { robot: r, delta },
                        GenPhase::Moving {
                            remaining: left,
                            splits: splits - 1,
                        },
                    )
                }
            }
        };
        self.phases[r] = next;
        self.events.push(event);
    }

    fn most_urgent(&self, candidates: impl Iterator<Item = RobotId>, now: i64) -> Option<(RobotId, i64)> {
        candidates
            .map(|r| (r, self.laxity(r, now)))
            .min_by_key(|&(r, lax)| (lax, r))
    }
}

/// Seeded fair asynchronous adversary.
///
/// Robots are picked uniformly at random and advanced by one phase; moves
/// are cut into up to `max_progress_splits` pieces. Whenever some robot's
/// slack before its fairness deadline drops to the total work still owed by
/// all robots, the most urgent robot is advanced instead (earliest deadline
/// first). Once `horizon` events are reached no new cycles are started
/// unless a deadline requires it, and open cycles are driven to completion.
pub fn generate_async(params: &AdversaryParams, robot_count: usize) -> Result<Schedule, ParamsError> {
    params.validate(SchedulerKind::Async, robot_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let frames = Frames::new(params.frame_policy, robot_count, &mut rng);
    let n = robot_count;
    let mut g = AsyncGen {
        rng,
        frames,
        phases: vec![GenPhase::Idle; n],
        last_start: vec![-1; n],
        window: params.fairness_window as i64,
        max_splits: params.max_progress_splits,
        events: Vec::with_capacity(params.horizon + 4 * n),
    };
    let closing_span = 3 * n as i64;
    loop {
        let now = g.events.len() as i64;
        if now >= params.horizon as i64 {
            let busy = (0..n).filter(|&r| !matches!(g.phases[r], GenPhase::Idle));
            let overdue =
                (0..n).filter(|&r| matches!(g.phases[r], GenPhase::Idle) && g.deadline(r) < now + closing_span);
            match g.most_urgent(busy.chain(overdue), now) {
                Some((r, _)) => g.advance(r, true),
                None => break,
            }
            continue;
        }
        let owed: i64 = g.phases.iter().map(GenPhase::needed).sum();
        let (urgent, lax) = g.most_urgent(0..n, now).expect("robots");
        if lax <= owed {
            g.advance(urgent, true);
        } else {
            let r = g.rng.gen_range(0..n);
            g.advance(r, false);
        }
    }
    Ok(Schedule {
        kind: SchedulerKind::Async,
        robot_count,
        fairness_window: params.fairness_window,
        params: Some(params.clone()),
        events: g.events,
    })
}

/// Seeded fair synchronous adversary. With `fsync` every round activates
/// every robot; otherwise each robot joins a round with probability 1/2 and
/// robots at their fairness deadline are always included.
pub fn generate_ssync(params: &AdversaryParams, robot_count: usize, fsync: bool) -> Result<Schedule, ParamsError> {
    let kind = if fsync {
        SchedulerKind::Fsync
    } else {
        SchedulerKind::Ssync
    };
    params.validate(kind, robot_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let frames = Frames::new(params.frame_policy, robot_count, &mut rng);
    let w = params.fairness_window as i64;
    let mut last = vec![-1i64; robot_count];
    let mut events = Vec::with_capacity(params.horizon);
    for round in 0..params.horizon as i64 {
        let mut set: Vec<RobotId> = (0..robot_count)
            .filter(|&r| fsync || last[r] + w <= round || rng.gen_bool(0.5))
            .collect();
        if set.is_empty() {
            set.push(rng.gen_range(0..robot_count));
        }
        let active = set
            .into_iter()
            .map(|robot| {
                last[robot] = round;
                RoundActivation {
                    robot,
                    frame: frames.next(robot, &mut rng),
                }
            })
            .collect();
        events.push(Event::Round { active });
    }
    Ok(Schedule {
        kind,
        robot_count,
        fairness_window: params.fairness_window,
        params: Some(params.clone()),
        events,
    })
}

/// Rewrites a synchronous schedule as an asynchronous one: each round
/// becomes all its Looks, then all its light publications, then one
/// complete move per robot, with nothing interleaved.
pub fn sync_to_async(schedule: &Schedule) -> Schedule {
    let mut events = Vec::new();
    let mut widest = 1;
    for e in &schedule.events {
        match e {
            Event::Round { active } => {
                widest = widest.max(active.len());
                events.extend(active.iter().map(|a| Event::Activate {
                    robot: a.robot,
                    frame: a.frame.clone(),
                }));
                events.extend(active.iter().map(|a| Event::FinishCompute { robot: a.robot }));
                events.extend(active.iter().map(|a| Event::Progress {
                    robot: a.robot,
                    delta: Scalar::one(),
                }));
            }
            other => events.push(other.clone()),
        }
    }
    Schedule {
        kind: SchedulerKind::Async,
        robot_count: schedule.robot_count,
        fairness_window: schedule.fairness_window * 3 * widest,
        params: schedule.params.clone(),
        events,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    PhaseLegality,
    CycleCompletion,
    Fairness,
    EventKind,
    EmptyRound,
    FullRound,
    UnknownRobot,
    ProgressRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Position in the schedule's event list; equal to the length for
    /// end-of-schedule violations.
    pub event_index: usize,
    pub rule: Rule,
    pub robot: Option<RobotId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "event {}: {:?}", self.event_index, self.rule)?;
        if let Some(r) = self.robot {
            write!(f, " (robot {r})")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone)]
enum CheckPhase {
    Idle,
    Pending,
    Moving(Scalar),
}

/// Lists every rule the schedule breaks; empty means valid.
pub fn validate_schedule(schedule: &Schedule, robot_count: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |event_index, rule, robot, detail: String| {
        out.push(Violation {
            event_index,
            rule,
            robot,
            detail,
        })
    };
    let n = robot_count;
    let mut phases = vec![CheckPhase::Idle; n];
    let mut starts: Vec<Vec<usize>> = vec![Vec::new(); n];

    for (i, event) in schedule.events.iter().enumerate() {
        match (schedule.kind, event) {
            (SchedulerKind::Async, Event::Round { .. }) => {
                v(i, Rule::EventKind, None, "round in an asynchronous schedule".into())
            }
            (SchedulerKind::Fsync | SchedulerKind::Ssync, Event::Round { active }) => {
                if active.is_empty() {
                    v(i, Rule::EmptyRound, None, "no robot activated".into());
                }
                let mut seen = vec![false; n];
                for a in active {
                    if a.robot >= n {
                        v(i, Rule::UnknownRobot, Some(a.robot), "no such robot".into());
                    } else if seen[a.robot] {
                        v(
                            i,
                            Rule::PhaseLegality,
                            Some(a.robot),
                            "activated twice in a round".into(),
                        );
                    } else {
                        seen[a.robot] = true;
                        starts[a.robot].push(i);
                    }
                }
                if schedule.kind == SchedulerKind::Fsync && seen.iter().any(|s| !s) {
                    v(i, Rule::FullRound, None, "FSYNC round must activate every robot".into());
                }
            }
            (SchedulerKind::Fsync | SchedulerKind::Ssync, _) => {
                v(i, Rule::EventKind, None, "phase event in a synchronous schedule".into())
            }
            (SchedulerKind::Async, e) => {
                let robot = match e {
                    Event::Activate { robot, .. } | Event::FinishCompute { robot } | Event::Progress { robot, .. } => {
                        *robot
                    }
                    Event::Round { .. } => unreachable!(),
                };
                if robot >= n {
                    v(i, Rule::UnknownRobot, Some(robot), "no such robot".into());
                    continue;
                }
                let next = match (&phases[robot], e) {
                    (CheckPhase::Idle, Event::Activate { .. }) => {
                        starts[robot].push(i);
                        Some(CheckPhase::Pending)
                    }
                    (CheckPhase::Pending, Event::FinishCompute { .. }) => Some(CheckPhase::Moving(Scalar::one())),
                    (CheckPhase::Moving(rem), Event::Progress { delta, .. }) => {
                        if !delta.is_positive() || delta > rem {
                            v(
                                i,
                                Rule::ProgressRange,
                                Some(robot),
                                format!("delta {delta} outside (0, {rem}]"),
                            );
                            None
                        } else {
                            let left = rem - delta;
                            Some(if left.is_zero() {
                                CheckPhase::Idle
                            } else {
                                CheckPhase::Moving(left)
                            })
                        }
                    }
                    (phase, e) => {
                        let state = match phase {
                            CheckPhase::Idle => "idle",
                            CheckPhase::Pending => "computing",
                            CheckPhase::Moving(_) => "moving",
                        };
                        let what = match e {
                            Event::Activate { .. } => "activate",
                            Event::FinishCompute { .. } => "finish_compute",
                            _ => "progress",
                        };
                        v(i, Rule::PhaseLegality, Some(robot), format!("{what} while {state}"));
                        None
                    }
                };
                if let Some(p) = next {
                    phases[robot] = p;
                }
            }
        }
    }

    let len = schedule.events.len();
    for (r, p) in phases.iter().enumerate() {
        if !matches!(p, CheckPhase::Idle) {
            v(
                len,
                Rule::CycleCompletion,
                Some(r),
                "cycle still open at end of schedule".into(),
            );
        }
    }

    let w = schedule.fairness_window;
    if w == 0 {
        v(0, Rule::Fairness, None, "fairness window must be positive".into());
    } else if len >= w {
        for (r, s) in starts.iter().enumerate() {
            // every window [i, i + w) with i + w <= len must hold a start
            let mut prev: i64 = -1;
            for &start in s.iter().chain(std::iter::once(&len)) {
                let gap = start as i64 - prev;
                if gap > w as i64 {
                    let at = (prev + w as i64) as usize;
                    v(
                        at,
                        Rule::Fairness,
                        Some(r),
                        format!("no cycle started in [{}, {at}]", prev + 1),
                    );
                }
                prev = start as i64;
            }
        }
    }
    out
}
