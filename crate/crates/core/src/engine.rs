//! World state and the execution semantics of Look-Compute-Move cycles.
//!
//! An asynchronous cycle is split into three adversary-controlled events:
//!
//! * `Activate`: the instantaneous Look; the robot's program runs on the
//!   snapshot and its result is held pending, invisible to everyone.
//! * `FinishCompute`: the pending light is published and the robot starts
//!   moving (or returns straight to idle when the destination is its own
//!   position).
//! * `Progress`: the robot advances a fraction of its straight-line path.
//!   Other robots looking in between see it at the interpolated position.
//!
//! Synchronous schedulers use [`apply_round`] instead, which performs whole
//! cycles of a set of robots atomically against one shared world.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Multiplier, Point, Scalar, Transform};
use crate::schedulers::Schedule;

pub type RobotId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Model {
    Oblot,
    Fsta,
    Fcom,
    Lumi,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Oblot, Model::Fsta, Model::Fcom, Model::Lumi];

    /// Whether a robot sees its own light.
    pub fn sees_own_light(self) -> bool {
        matches!(self, Model::Fsta | Model::Lumi)
    }

    /// Whether a robot sees the lights of the others.
    pub fn sees_other_lights(self) -> bool {
        matches!(self, Model::Fcom | Model::Lumi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Oblot => "OBLOT",
            Model::Fsta => "FSTA",
            Model::Fcom => "FCOM",
            Model::Lumi => "LUMI",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model {s:?} (expected OBLOT, FSTA, FCOM or LUMI)"))
    }
}

/// Light colours across every shipped palette. `Nil` is the initial colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Color {
    #[default]
    #[serde(rename = "NIL")]
    Nil,
    #[serde(rename = "RED")]
    Red,
    #[serde(rename = "BLUE")]
    Blue,
    M,
    F,
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Nil => "NIL",
            Color::Red => "RED",
            Color::Blue => "BLUE",
            Color::M => "M",
            Color::F => "F",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Idle {
        position: Point,
    },
    PendingCompute {
        position: Point,
        light: Color,
        destination: Point,
    },
    Moving {
        start: Point,
        destination: Point,
        progress: Scalar,
    },
}

impl Phase {
    pub fn position(&self) -> Point {
        match self {
            Phase::Idle { position } | Phase::PendingCompute { position, .. } => position.clone(),
            Phase::Moving {
                start,
                destination,
                progress,
            } => start.lerp(destination, progress),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, Phase::Idle { .. })
    }

    pub fn is_moving(&self) -> bool {
        matches!(self, Phase::Moving { .. })
    }

    fn kind(&self) -> &'static str {
        match self {
            Phase::Idle { .. } => "idle",
            Phase::PendingCompute { .. } => "pending_compute",
            Phase::Moving { .. } => "moving",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Robot {
    pub id: RobotId,
    pub phase: Phase,
    pub light: Color,
}

/// Global state. Robot `i` is stored at index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    pub robots: Vec<Robot>,
    pub event_index: u64,
}

impl WorldState {
    /// All robots idle with light NIL at the given positions.
    pub fn new(positions: &[Point]) -> Result<Self, SimError> {
        let robots = positions
            .iter()
            .enumerate()
            .map(|(id, p)| Robot {
                id,
                phase: Phase::Idle { position: p.clone() },
                light: Color::Nil,
            })
            .collect();
        let w = WorldState { robots, event_index: 0 };
        w.check_collisions()?;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn robot(&self, id: RobotId) -> Result<&Robot, SimError> {
        self.robots.get(id).ok_or(SimError::UnknownRobot(id))
    }

    pub fn position(&self, id: RobotId) -> Result<Point, SimError> {
        Ok(self.robot(id)?.phase.position())
    }

    pub fn positions(&self) -> Vec<Point> {
        self.robots.iter().map(|r| r.phase.position()).collect()
    }

    pub fn all_idle(&self) -> bool {
        self.robots.iter().all(|r| r.phase.is_idle())
    }

    /// No robot is in motion, so the positions form a stable configuration.
    pub fn at_rest(&self) -> bool {
        !self.robots.iter().any(|r| r.phase.is_moving())
    }

    pub fn check_collisions(&self) -> Result<(), SimError> {
        let ps = self.positions();
        for i in 0..ps.len() {
            for j in (i + 1)..ps.len() {
                if ps[i] == ps[j] {
                    return Err(SimError::Collision {
                        first: i,
                        second: j,
                        position: Box::new(ps[i].clone()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Applies `t` to every robot's coordinates (positions, pending and
    /// moving endpoints). Lights and phases are unchanged.
    pub fn map_points(&self, t: &Transform) -> WorldState {
        let robots = self
            .robots
            .iter()
            .map(|r| Robot {
                id: r.id,
                light: r.light,
                phase: match &r.phase {
                    Phase::Idle { position } => Phase::Idle {
                        position: t.apply(position),
                    },
                    Phase::PendingCompute {
                        position,
                        light,
                        destination,
                    } => Phase::PendingCompute {
                        position: t.apply(position),
                        light: *light,
                        destination: t.apply(destination),
                    },
                    Phase::Moving {
                        start,
                        destination,
                        progress,
                    } => Phase::Moving {
                        start: t.apply(start),
                        destination: t.apply(destination),
                        progress: progress.clone(),
                    },
                },
            })
            .collect();
        WorldState {
            robots,
            event_index: self.event_index,
        }
    }

    fn bumped(&self) -> WorldState {
        let mut w = self.clone();
        w.event_index += 1;
        w
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub position: Point,
    pub light: Option<Color>,
}

/// What a robot perceives during Look, in its own frame. The observer is at
/// the origin. `others` is sorted by position so that the snapshot does not
/// depend on robot numbering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub others: Vec<Observation>,
    pub own_light: Option<Color>,
}

impl Snapshot {
    /// Infers which model produced this snapshot from the fields present.
    /// `None` when light visibility is inconsistent across observations.
    pub fn shape(&self) -> Option<Model> {
        let mut seen = self.others.iter().map(|o| o.light.is_some());
        let others = match seen.next() {
            None => None,
            Some(first) => {
                if seen.any(|s| s != first) {
                    return None;
                }
                Some(first)
            }
        };
        let own = self.own_light.is_some();
        match (own, others) {
            (false, Some(false)) => Some(Model::Oblot),
            (true, Some(false)) => Some(Model::Fsta),
            (false, Some(true)) => Some(Model::Fcom),
            (true, Some(true)) => Some(Model::Lumi),
            (true, None) => Some(Model::Fsta),
            (false, None) => Some(Model::Oblot),
        }
    }

    /// Positions of every robot, the observer (origin) first.
    pub fn configuration(&self) -> Vec<Point> {
        std::iter::once(Point::origin())
            .chain(self.others.iter().map(|o| o.position.clone()))
            .collect()
    }

    pub fn lights(&self) -> impl Iterator<Item = Color> + '_ {
        self.others.iter().filter_map(|o| o.light)
    }

    /// Applies `t` to every observed position. Used to check that programs
    /// commute with changes of frame.
    pub fn map_points(&self, t: &Transform) -> Snapshot {
        let mut others: Vec<Observation> = self
            .others
            .iter()
            .map(|o| Observation {
                position: t.apply(&o.position),
                light: o.light,
            })
            .collect();
        others.sort_by(|a, b| a.position.cmp(&b.position));
        Snapshot {
            others,
            own_light: self.own_light,
        }
    }
}

/// Result of one Compute. `light: None` keeps the current light (the only
/// option for models that cannot see it); `destination` is in the robot's
/// local frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub light: Option<Color>,
    pub destination: Point,
}

impl Action {
    /// Stay put, keep the light.
    pub fn null() -> Self {
        Action {
            light: None,
            destination: Point::origin(),
        }
    }

    pub fn set(light: Color, destination: Point) -> Self {
        Action {
            light: Some(light),
            destination,
        }
    }

    pub fn is_null(&self) -> bool {
        self.light.is_none() && self.destination.is_origin()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("snapshot shape {found:?} does not match the {expected} model")]
    SnapshotShape { expected: Model, found: Option<Model> },
    #[error("expected {expected} other robots, saw {found}")]
    RobotCount { expected: usize, found: usize },
    #[error("malformed snapshot: {0}")]
    Malformed(String),
}

/// A deterministic robot algorithm. Robots are identical, so one program
/// drives a whole team.
pub trait Program: Send + Sync {
    fn name(&self) -> &str;
    fn model(&self) -> Model;
    fn palette(&self) -> &'static [Color];
    fn compute(&self, snapshot: &Snapshot) -> Result<Action, ProgramError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("illegal event for robot {robot}: {reason}")]
    IllegalEvent { robot: RobotId, reason: String },
    #[error("robots {first} and {second} collide at {position:?}")]
    Collision {
        first: RobotId,
        second: RobotId,
        position: Box<Point>,
    },
    #[error("no robot with id {0}")]
    UnknownRobot(RobotId),
    #[error("frame does not place robot {0} at the origin")]
    FrameNotCentered(RobotId),
    #[error("program failed for robot {robot}: {source}")]
    Program {
        robot: RobotId,
        #[source]
        source: ProgramError,
    },
    #[error("robot {robot} set colour {color}, outside the program palette")]
    PaletteViolation { robot: RobotId, color: Color },
}

impl SimError {
    fn illegal(robot: RobotId, reason: impl Into<String>) -> Self {
        SimError::IllegalEvent {
            robot,
            reason: reason.into(),
        }
    }
}

pub fn take_snapshot(
    world: &WorldState,
    robot: RobotId,
    model: Model,
    frame: &Transform,
) -> Result<Snapshot, SimError> {
    let me = world.robot(robot)?;
    if !frame.apply(&me.phase.position()).is_origin() {
        return Err(SimError::FrameNotCentered(robot));
    }
    let mut others: Vec<Observation> = world
        .robots
        .iter()
        .filter(|r| r.id != robot)
        .map(|r| Observation {
            position: frame.apply(&r.phase.position()),
            light: model.sees_other_lights().then_some(r.light),
        })
        .collect();
    others.sort_by(|a, b| a.position.cmp(&b.position));
    Ok(Snapshot {
        others,
        own_light: model.sees_own_light().then_some(me.light),
    })
}

/// Runs `program` on `snapshot` and converts the result to world
/// coordinates: `(light to publish, destination)`.
fn compute_world_action(
    world: &WorldState,
    robot: RobotId,
    program: &dyn Program,
    snapshot: &Snapshot,
    frame: &Transform,
) -> Result<(Color, Point), SimError> {
    let action = program
        .compute(snapshot)
        .map_err(|source| SimError::Program { robot, source })?;
    let current = world.robot(robot)?.light;
    let light = action.light.unwrap_or(current);
    if !program.palette().contains(&light) {
        return Err(SimError::PaletteViolation { robot, color: light });
    }
    Ok((light, frame.inverse().apply(&action.destination)))
}

/// Look + Compute. The result is stored pending and is not yet visible.
pub fn apply_activate(
    world: &WorldState,
    robot: RobotId,
    program: &dyn Program,
    model: Model,
    frame: &Transform,
) -> Result<WorldState, SimError> {
    let me = world.robot(robot)?;
    let Phase::Idle { position } = &me.phase else {
        return Err(SimError::illegal(robot, format!("activate while {}", me.phase.kind())));
    };
    let position = position.clone();
    let snapshot = take_snapshot(world, robot, model, frame)?;
    let (light, destination) = compute_world_action(world, robot, program, &snapshot, frame)?;
    let mut next = world.bumped();
    next.robots[robot].phase = Phase::PendingCompute {
        position,
        light,
        destination,
    };
    Ok(next)
}

/// End of Compute: publish the light and start moving.
pub fn apply_finish_compute(world: &WorldState, robot: RobotId) -> Result<WorldState, SimError> {
    let me = world.robot(robot)?;
    let Phase::PendingCompute {
        position,
        light,
        destination,
    } = &me.phase
    else {
        return Err(SimError::illegal(
            robot,
            format!("finish_compute while {}", me.phase.kind()),
        ));
    };
    let mut next = world.bumped();
    let r = &mut next.robots[robot];
    r.light = *light;
    r.phase = if destination == position {
        Phase::Idle {
            position: position.clone(),
        }
    } else {
        Phase::Moving {
            start: position.clone(),
            destination: destination.clone(),
            progress: Scalar::zero(),
        }
    };
    Ok(next)
}

pub fn apply_progress(world: &WorldState, robot: RobotId, delta: &Scalar) -> Result<WorldState, SimError> {
    let me = world.robot(robot)?;
    let Phase::Moving {
        start,
        destination,
        progress,
    } = &me.phase
    else {
        return Err(SimError::illegal(robot, format!("progress while {}", me.phase.kind())));
    };
    let total = progress + delta;
    if !delta.is_positive() || total > Scalar::one() {
        return Err(SimError::illegal(
            robot,
            format!("progress delta {delta} outside (0, {}]", Scalar::one() - progress),
        ));
    }
    let mut next = world.bumped();
    next.robots[robot].phase = if total == Scalar::one() {
        Phase::Idle {
            position: destination.clone(),
        }
    } else {
        Phase::Moving {
            start: start.clone(),
            destination: destination.clone(),
            progress: total,
        }
    };
    next.check_collisions()?;
    Ok(next)
}

/// One synchronous round: every active robot looks at the same world, then
/// all lights and complete moves are applied at once.
pub fn apply_round(
    world: &WorldState,
    active: &[(RobotId, Transform)],
    program: &dyn Program,
    model: Model,
) -> Result<WorldState, SimError> {
    if active.is_empty() {
        return Err(SimError::illegal(0, "empty round"));
    }
    if let Some(r) = world.robots.iter().find(|r| !r.phase.is_idle()) {
        return Err(SimError::illegal(r.id, "round while a robot is mid-cycle"));
    }
    let mut outcomes = Vec::with_capacity(active.len());
    for (robot, frame) in active {
        if outcomes.iter().any(|(r, _, _)| r == robot) {
            return Err(SimError::illegal(*robot, "activated twice in one round"));
        }
        let snapshot = take_snapshot(world, *robot, model, frame)?;
        let (light, dest) = compute_world_action(world, *robot, program, &snapshot, frame)?;
        outcomes.push((*robot, light, dest));
    }
    let mut next = world.bumped();
    for (robot, light, dest) in outcomes {
        let r = &mut next.robots[robot];
        r.light = light;
        r.phase = Phase::Idle { position: dest };
    }
    next.check_collisions()?;
    Ok(next)
}

/// One scheduled step, as consumed by [`run`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Activate { robot: RobotId, frame: Multiplier },
    FinishCompute { robot: RobotId },
    Progress { robot: RobotId, delta: Scalar },
    Round { active: Vec<RoundActivation> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
/// `frame` gives the activated robot's local axes in world coordinates; see
/// [`Transform::local_frame`].
pub struct RoundActivation {
    pub robot: RobotId,
    pub frame: Multiplier,
}

/// The part of an event that is recorded in a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventRecord {
    Init,
    Activate { robot: RobotId },
    FinishCompute { robot: RobotId },
    Progress { robot: RobotId, delta: Scalar },
    Round { active_set: Vec<RobotId> },
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> Self {
        match e {
            Event::Activate { robot, .. } => EventRecord::Activate { robot: *robot },
            Event::FinishCompute { robot } => EventRecord::FinishCompute { robot: *robot },
            Event::Progress { robot, delta } => EventRecord::Progress {
                robot: *robot,
                delta: delta.clone(),
            },
            Event::Round { active } => EventRecord::Round {
                active_set: active.iter().map(|a| a.robot).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub event: EventRecord,
    pub state: WorldState,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn initial(&self) -> Option<&WorldState> {
        self.entries.first().map(|e| &e.state)
    }

    pub fn last(&self) -> Option<&WorldState> {
        self.entries.last().map(|e| &e.state)
    }

    pub fn states(&self) -> impl Iterator<Item = &WorldState> {
        self.entries.iter().map(|e| &e.state)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn map_points(&self, t: &Transform) -> Trace {
        Trace {
            entries: self
                .entries
                .iter()
                .map(|e| TraceEntry {
                    event: e.event.clone(),
                    state: e.state.map_points(t),
                })
                .collect(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(&TraceRecord::from(e)).expect("trace record"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceParseError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord = serde_json::from_str(line).map_err(|e| TraceParseError::Json {
                line: n + 1,
                message: e.to_string(),
            })?;
            entries.push(
                rec.into_entry()
                    .map_err(|message| TraceParseError::Record { line: n + 1, message })?,
            );
        }
        if entries.is_empty() {
            return Err(TraceParseError::Empty);
        }
        Ok(Trace { entries })
    }
}

/// Embedded in other JSON documents as an array of [`TraceRecord`]s.
impl Serialize for Trace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.entries.iter().map(TraceRecord::from))
    }
}

impl<'de> Deserialize<'de> for Trace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let records = Vec::<TraceRecord>::deserialize(d)?;
        let entries = records
            .into_iter()
            .map(TraceRecord::into_entry)
            .collect::<Result<_, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(Trace { entries })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("trace is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Init,
    Activate,
    FinishCompute,
    Progress,
    Round,
    Error,
}

/// One JSON Lines record of a trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub event_index: u64,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_set: Option<Vec<RobotId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub positions: BTreeMap<RobotId, Point>,
    #[serde(default)]
    pub lights: BTreeMap<RobotId, Color>,
    #[serde(default)]
    pub phases: BTreeMap<RobotId, Phase>,
}

impl TraceRecord {
    pub fn error(event_index: u64, message: String) -> Self {
        TraceRecord {
            event_index,
            kind: RecordKind::Error,
            robot: None,
            active_set: None,
            delta: None,
            error: Some(message),
            positions: BTreeMap::new(),
            lights: BTreeMap::new(),
            phases: BTreeMap::new(),
        }
    }

    fn into_entry(self) -> Result<TraceEntry, String> {
        let need_robot = || self.robot.ok_or_else(|| "missing robot".to_string());
        let event = match self.kind {
            RecordKind::Init => EventRecord::Init,
            RecordKind::Activate => EventRecord::Activate { robot: need_robot()? },
            RecordKind::FinishCompute => EventRecord::FinishCompute { robot: need_robot()? },
            RecordKind::Progress => EventRecord::Progress {
                robot: need_robot()?,
                delta: self.delta.clone().ok_or("missing delta")?,
            },
            RecordKind::Round => EventRecord::Round {
                active_set: self.active_set.clone().ok_or("missing active_set")?,
            },
            RecordKind::Error => {
                return Err(format!(
                    "simulation error: {}",
                    self.error.as_deref().unwrap_or("unknown")
                ))
            }
        };
        let n = self.phases.len();
        if self.lights.len() != n || self.positions.len() != n {
            return Err("positions, lights and phases disagree on robot set".into());
        }
        let mut robots = Vec::with_capacity(n);
        for (expected, (id, phase)) in self.phases.into_iter().enumerate() {
            if id != expected {
                return Err(format!("robot ids must be 0..{n}"));
            }
            let light = self.lights[&id];
            if self.positions[&id] != phase.position() {
                return Err(format!("robot {id}: position disagrees with phase"));
            }
            robots.push(Robot { id, phase, light });
        }
        Ok(TraceEntry {
            event,
            state: WorldState {
                robots,
                event_index: self.event_index,
            },
        })
    }
}

impl From<&TraceEntry> for TraceRecord {
    fn from(e: &TraceEntry) -> Self {
        let (kind, robot, active_set, delta) = match &e.event {
            EventRecord::Init => (RecordKind::Init, None, None, None),
            EventRecord::Activate { robot } => (RecordKind::Activate, Some(*robot), None, None),
            EventRecord::FinishCompute { robot } => (RecordKind::FinishCompute, Some(*robot), None, None),
            EventRecord::Progress { robot, delta } => (RecordKind::Progress, Some(*robot), None, Some(delta.clone())),
            EventRecord::Round { active_set } => (RecordKind::Round, None, Some(active_set.clone()), None),
        };
        let s = &e.state;
        TraceRecord {
            event_index: s.event_index,
            kind,
            robot,
            active_set,
            delta,
            error: None,
            positions: s.robots.iter().map(|r| (r.id, r.phase.position())).collect(),
            lights: s.robots.iter().map(|r| (r.id, r.light)).collect(),
            phases: s.robots.iter().map(|r| (r.id, r.phase.clone())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {event_index}: {error}")]
pub struct RunError {
    pub event_index: u64,
    pub error: SimError,
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub partial: Trace,
    pub error: RunError,
}

/// Steps a world through events one at a time.
///
/// Besides the world itself the simulator tracks the open tail of null
/// cycles: a robot whose computed destination was its own position goes
/// straight back to idle, but the schedule still paces that cycle with
/// `Progress` events, which then leave the world unchanged.
pub struct Simulator<'p> {
    world: WorldState,
    program: &'p dyn Program,
    model: Model,
    null_tail: Vec<Option<Scalar>>,
}

impl<'p> Simulator<'p> {
    pub fn new(world: WorldState, program: &'p dyn Program, model: Model) -> Self {
        let n = world.len();
        Simulator {
            world,
            program,
            model,
            null_tail: vec![None; n],
        }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn into_world(self) -> WorldState {
        self.world
    }

    pub fn step(&mut self, event: &Event) -> Result<&WorldState, SimError> {
        let next = match event {
            Event::Activate { robot, frame } => {
                if self.null_tail.get(*robot).is_some_and(Option::is_some) {
                    return Err(SimError::illegal(*robot, "activate before cycle completed"));
                }
                let pos = self.world.position(*robot)?;
                let frame = Transform::local_frame(frame, &pos);
                apply_activate(&self.world, *robot, self.program, self.model, &frame)?
            }
            Event::FinishCompute { robot } => {
                let next = apply_finish_compute(&self.world, *robot)?;
                if next.robots[*robot].phase.is_idle() {
                    self.null_tail[*robot] = Some(Scalar::one());
                }
                next
            }
            Event::Progress { robot, delta } => match self.null_tail.get_mut(*robot) {
                Some(Some(remaining)) => {
                    if !delta.is_positive() || delta > remaining {
                        return Err(SimError::illegal(
                            *robot,
                            format!("progress delta {delta} outside (0, {remaining}]"),
                        ));
                    }
                    let left = &*remaining - delta;
                    self.null_tail[*robot] = (!left.is_zero()).then_some(left);
                    self.world.bumped()
                }
                _ => apply_progress(&self.world, *robot, delta)?,
            },
            Event::Round { active } => {
                let mut frames = Vec::with_capacity(active.len());
                for a in active {
                    let pos = self.world.position(a.robot)?;
                    frames.push((a.robot, Transform::local_frame(&a.frame, &pos)));
                }
                apply_round(&self.world, &frames, self.program, self.model)?
            }
        };
        self.world = next;
        Ok(&self.world)
    }
}

/// Runs `events` from `world0`, handing each recorded entry (starting with
/// the initial state) to `sink`. Returns the final world.
pub fn run_events<F: FnMut(&TraceEntry)>(
    world0: WorldState,
    program: &dyn Program,
    model: Model,
    events: &[Event],
    mut sink: F,
) -> Result<WorldState, RunError> {
    world0.check_collisions().map_err(|error| RunError {
        event_index: world0.event_index,
        error,
    })?;
    sink(&TraceEntry {
        event: EventRecord::Init,
        state: world0.clone(),
    });
    let mut sim = Simulator::new(world0, program, model);
    for event in events {
        let event_index = sim.world().event_index + 1;
        let state = sim
            .step(event)
            .map_err(|error| RunError { event_index, error })?
            .clone();
        sink(&TraceEntry {
            event: event.into(),
            state,
        });
    }
    Ok(sim.into_world())
}

/// Runs a whole schedule and returns the trace, or the partial trace and
/// the error.
pub fn run(world0: &WorldState, program: &dyn Program, model: Model, schedule: &Schedule) -> Result<Trace, RunFailure> {
    let mut trace = Trace::default();
    match run_events(world0.clone(), program, model, &schedule.events, |e| {
        trace.entries.push(e.clone())
    }) {
        Ok(_) => Ok(trace),
        Err(error) => Err(RunFailure { partial: trace, error }),
    }
}
