//! Problem instances and finite-horizon trace predicates.
//!
//! * OC: four robots; the one at the centre of the triangle shuttles so the
//!   configurations run I, II, III, II, I, II, … forever.
//! * −IL: three robots form configuration II and then III, and stay there.
//! * IOP: two terminal robots on a line independently oscillate between
//!   distance `x_i` and `2·x_i` from a stationary middle robot.
//!
//! Configurations are compared up to orientation-preserving similarity, and
//! the configuration sequence is read off the states in which no robot is
//! moving (robots that have looked but not yet finished computing stand
//! still).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Model, Program, RobotId, Trace, WorldState};
use crate::geometry::{
    collinear, equidistant_index, match_points, rotate90_cw, strictly_between, Multiplier, Point, Scalar, Transform,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid instance: {0}")]
pub struct InstanceError(pub String);

fn ensure(cond: bool, msg: &str) -> Result<(), InstanceError> {
    if cond {
        Ok(())
    } else {
        Err(InstanceError(msg.to_string()))
    }
}

fn similar(a: &[Point], b: &[Point]) -> bool {
    matches!(match_points(a, b), Ok(Some(_)))
}

/// Named configuration of a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Config {
    I,
    II,
    III,
    Other,
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Config::I => "I",
            Config::II => "II",
            Config::III => "III",
            Config::Other => "Other",
        })
    }
}

fn classify_against(positions: &[Point], templates: [(Config, Vec<Point>); 3]) -> Config {
    templates
        .into_iter()
        .find(|(_, t)| t.len() == positions.len() && similar(t, positions))
        .map_or(Config::Other, |(c, _)| c)
}

/// Oscillating-configurations instance. Robots 0–2 sit on the triangle and
/// robot 3 (the only one that ever moves) starts at `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcInstance {
    pub triangle: [Point; 3],
    pub c: Point,
    pub c_prime: Point,
    pub c_double_prime: Point,
}

impl Default for OcInstance {
    fn default() -> Self {
        OcInstance {
            triangle: [Point::int(1, 0), Point::int(-1, 0), Point::int(0, 1)],
            c: Point::int(0, 0),
            c_prime: Point::new(Scalar::zero(), Scalar::new(1, 2)),
            c_double_prime: Point::new(Scalar::zero(), Scalar::new(3, 4)),
        }
    }
}

impl OcInstance {
    pub const MOVER: RobotId = 3;

    pub fn new(triangle: [Point; 3], c: Point, c_prime: Point, c_double_prime: Point) -> Result<Self, InstanceError> {
        let inst = OcInstance {
            triangle,
            c,
            c_prime,
            c_double_prime,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn with_fourth(&self, p: &Point) -> Vec<Point> {
        let mut v = self.triangle.to_vec();
        v.push(p.clone());
        v
    }

    pub fn config(&self, which: Config) -> Vec<Point> {
        match which {
            Config::I => self.with_fourth(&self.c),
            Config::II => self.with_fourth(&self.c_prime),
            Config::III => self.with_fourth(&self.c_double_prime),
            Config::Other => panic!("no template for Other"),
        }
    }

    pub fn templates(&self) -> [(Config, Vec<Point>); 3] {
        [Config::I, Config::II, Config::III].map(|c| (c, self.config(c)))
    }

    pub fn initial_world(&self) -> WorldState {
        WorldState::new(&self.config(Config::I)).expect("validated instance has distinct points")
    }

    /// The triangle vertex with a right angle, if any.
    fn right_angle_vertex(&self) -> Option<&Point> {
        let t = &self.triangle;
        (0..3)
            .map(|i| (i, (i + 1) % 3, (i + 2) % 3))
            .find_map(|(i, j, k)| (&t[j] - &t[i]).dot(&(&t[k] - &t[i])).is_zero().then_some(&t[i]))
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        for which in [Config::I, Config::II, Config::III] {
            let pts = self.config(which);
            ensure(
                equidistant_index(&pts).is_ok(),
                &format!("configuration {which} has coincident points"),
            )?;
        }
        ensure(
            equidistant_index(&self.config(Config::I)) == Ok(Some(3)),
            "C must be the unique point equidistant from the triangle",
        )?;
        for which in [Config::II, Config::III] {
            ensure(
                equidistant_index(&self.config(which)) == Ok(None),
                &format!("configuration {which} must have no equidistant point"),
            )?;
        }
        let apex = self
            .right_angle_vertex()
            .ok_or_else(|| InstanceError("triangle needs a right angle".into()))?;
        ensure(
            strictly_between(&self.c_prime, &self.c, apex).unwrap_or(false)
                && strictly_between(&self.c_double_prime, &self.c_prime, apex).unwrap_or(false),
            "C, C', C'' must lie in order on the segment from C to the right-angle vertex",
        )?;
        let t = self.templates();
        for i in 0..3 {
            for j in (i + 1)..3 {
                ensure(
                    !similar(&t[i].1, &t[j].1),
                    &format!("configurations {} and {} are similar", t[i].0, t[j].0),
                )?;
            }
        }
        Ok(())
    }
}

/// −IL instance. Robots 0, 1, 2 are `a`, `b`, `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IlInstance {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub p1: Point,
    pub p2: Point,
}

impl Default for IlInstance {
    fn default() -> Self {
        IlInstance {
            a: Point::int(0, -1),
            b: Point::int(0, 0),
            c: Point::int(2, 0),
            p1: Point::int(-1, 0),
            p2: Point::int(2, 1),
        }
    }
}

impl IlInstance {
    pub const A: RobotId = 0;
    pub const B: RobotId = 1;
    pub const C: RobotId = 2;

    pub fn new(a: Point, b: Point, c: Point, p1: Point, p2: Point) -> Result<Self, InstanceError> {
        let inst = IlInstance { a, b, c, p1, p2 };
        inst.validate()?;
        Ok(inst)
    }

    pub fn config(&self, which: Config) -> Vec<Point> {
        match which {
            Config::I => vec![self.a.clone(), self.b.clone(), self.c.clone()],
            Config::II => vec![self.p1.clone(), self.b.clone(), self.c.clone()],
            Config::III => vec![self.p1.clone(), self.p2.clone(), self.c.clone()],
            Config::Other => panic!("no template for Other"),
        }
    }

    pub fn templates(&self) -> [(Config, Vec<Point>); 3] {
        [Config::I, Config::II, Config::III].map(|c| (c, self.config(c)))
    }

    pub fn initial_world(&self) -> WorldState {
        WorldState::new(&self.config(Config::I)).expect("validated instance has distinct points")
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        for which in [Config::I, Config::II, Config::III] {
            ensure(
                equidistant_index(&self.config(which)).is_ok(),
                &format!("configuration {which} has coincident points"),
            )?;
        }
        ensure(
            rotate90_cw(&self.a, &self.b) == self.p1,
            "P1 must be a rotated 90° clockwise about b",
        )?;
        ensure(
            strictly_between(&self.b, &self.p1, &self.c).unwrap_or(false),
            "b must lie strictly between P1 and c",
        )?;
        let t = self.templates();
        for i in 0..3 {
            for j in (i + 1)..3 {
                ensure(
                    !similar(&t[i].1, &t[j].1),
                    &format!("configurations {} and {} are similar", t[i].0, t[j].0),
                )?;
            }
        }
        // only a can reach II by a quarter turn about b
        let ii = self.config(Config::II);
        let rotated_c = vec![self.a.clone(), self.b.clone(), rotate90_cw(&self.c, &self.b)];
        ensure(!similar(&rotated_c, &ii), "rotating c about b must not give II")?;
        // a's path meets line bc only at P1
        let dir = &self.c - &self.b;
        let side = |p: &Point| dir.cross(&(p - &self.b));
        ensure(
            !side(&self.a).is_zero() && side(&self.p1).is_zero(),
            "a must start off line bc and P1 must lie on it",
        )?;
        Ok(())
    }
}

/// IOP instance: robots 0, 1, 2 are `r1`, `r_m`, `r2` at
/// `middle − x1·direction`, `middle`, `middle + x2·direction`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IopInstance {
    pub direction: Point,
    pub middle: Point,
    pub x1: Scalar,
    pub x2: Scalar,
}

impl Default for IopInstance {
    fn default() -> Self {
        IopInstance {
            direction: Point::int(1, 0),
            middle: Point::int(0, 0),
            x1: Scalar::one(),
            x2: Scalar::new(3, 2),
        }
    }
}

impl IopInstance {
    pub const R1: RobotId = 0;
    pub const MIDDLE: RobotId = 1;
    pub const R2: RobotId = 2;

    pub fn new(direction: Point, middle: Point, x1: Scalar, x2: Scalar) -> Result<Self, InstanceError> {
        let inst = IopInstance {
            direction,
            middle,
            x1,
            x2,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn positions(&self) -> [Point; 3] {
        [
            &self.middle - &self.direction.scale(&self.x1),
            self.middle.clone(),
            &self.middle + &self.direction.scale(&self.x2),
        ]
    }

    pub fn initial_world(&self) -> WorldState {
        WorldState::new(&self.positions()).expect("validated instance has distinct points")
    }

    /// Same line and middle robot, both offsets multiplied by `k`.
    pub fn scaled(&self, k: &Scalar) -> IopInstance {
        IopInstance {
            direction: self.direction.clone(),
            middle: self.middle.clone(),
            x1: &self.x1 * k,
            x2: &self.x2 * k,
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        ensure(!self.direction.is_origin(), "direction must be non-zero")?;
        ensure(
            self.x1.is_positive() && self.x2.is_positive(),
            "x1 and x2 must be positive",
        )?;
        let [r1, m, r2] = self.positions();
        ensure(
            strictly_between(&m, &r1, &r2).unwrap_or(false),
            "middle robot must lie strictly between the terminals",
        )
    }
}

pub fn default_instances() -> (OcInstance, IlInstance, IopInstance) {
    let oc = OcInstance::default();
    let il = IlInstance::default();
    let iop = IopInstance::default();
    debug_assert!(oc.validate().is_ok() && il.validate().is_ok() && iop.validate().is_ok());
    (oc, il, iop)
}

pub fn classify_oc(world: &WorldState, instance: &OcInstance) -> Config {
    classify_against(&world.positions(), instance.templates())
}

pub fn classify_il(world: &WorldState, instance: &IlInstance) -> Config {
    classify_against(&world.positions(), instance.templates())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationLocator {
    /// `event_index` of the offending trace state.
    pub event_index: u64,
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub problem: String,
    pub pass: bool,
    pub min_cycles: usize,
    /// Completed periods per tracked quantity (e.g. `"configuration"`, or
    /// `"r1"`/`"r2"` for IOP).
    pub cycles_completed: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationLocator>,
}

impl Verdict {
    fn fail(mut self, event_index: u64, rule: &str, detail: String) -> Verdict {
        self.pass = false;
        self.violation = Some(ViolationLocator {
            event_index,
            rule: rule.to_string(),
            detail,
        });
        self
    }
}

/// Classification of every at-rest state, consecutive duplicates merged.
/// Stops at the first state that classifies as `Other` or that `accept`
/// rejects.
fn rest_sequence(
    trace: &Trace,
    classify: impl Fn(&WorldState) -> Config,
    expected: impl Fn(usize) -> Option<Config>,
) -> (Vec<Config>, Option<(u64, &'static str, String)>) {
    let mut seq: Vec<Config> = Vec::new();
    let mut memo: Option<(Vec<Point>, Config)> = None;
    for state in trace.states().filter(|s| s.at_rest()) {
        let positions = state.positions();
        let c = match &memo {
            Some((p, c)) if *p == positions => *c,
            _ => {
                let c = classify(state);
                memo = Some((positions, c));
                c
            }
        };
        if c == Config::Other {
            return (
                seq,
                Some((
                    state.event_index,
                    "other-at-rest",
                    "robots at rest in an unnamed configuration".into(),
                )),
            );
        }
        if seq.last() == Some(&c) {
            continue;
        }
        match expected(seq.len()) {
            Some(want) if want == c => seq.push(c),
            want => {
                let detail = match want {
                    Some(w) => format!("configuration {c} reached where {w} was required"),
                    None => format!("configuration {c} reached after the sequence ended"),
                };
                seq.push(c);
                return (seq, Some((state.event_index, "sequence-order", detail)));
            }
        }
    }
    (seq, None)
}

/// OC predicate: the at-rest configurations follow I, II, III, II, I, …
/// with at least `min_cycles` complete I→II→III→II→I periods.
pub fn check_oc(trace: &Trace, instance: &OcInstance, min_cycles: usize) -> Verdict {
    const PERIOD: [Config; 4] = [Config::I, Config::II, Config::III, Config::II];
    let (seq, bad) = rest_sequence(trace, |w| classify_oc(w, instance), |k| Some(PERIOD[k % 4]));
    let periods = seq.len().saturating_sub(1) / 4;
    let verdict = Verdict {
        problem: "oc".into(),
        pass: true,
        min_cycles,
        cycles_completed: BTreeMap::from([("configuration".to_string(), periods)]),
        sequence: seq,
        violation: None,
    };
    if let Some((at, rule, detail)) = bad {
        return verdict.fail(at, rule, detail);
    }
    if periods < min_cycles {
        let at = trace.last().map_or(0, |s| s.event_index);
        return verdict.fail(
            at,
            "insufficient-cycles",
            format!("{periods} of {min_cycles} required periods completed within the trace"),
        );
    }
    verdict
}

/// Frames used to probe quiescence: a robot must do nothing under each.
pub fn probe_frames() -> Vec<Multiplier> {
    let m =
        |a: (i64, i64), b: (i64, i64)| Multiplier::new(Scalar::new(a.0, a.1), Scalar::new(b.0, b.1)).expect("non-zero");
    vec![
        Multiplier::one(),
        Multiplier::quarter_turn(),
        m((-1, 1), (0, 1)),
        m((0, 1), (-3, 1)),
        m((6, 5), (8, 5)),
        m((-5, 39), (12, 39)),
        m((15, 17), (-8, 17)),
        m((-7, 2), (-12, 1)),
    ]
}

/// Whether activating any robot of `world` under any probe frame would
/// leave it in place with its light unchanged.
pub fn is_quiescent(world: &WorldState, program: &dyn Program, model: Model) -> Result<bool, crate::engine::SimError> {
    if !world.all_idle() {
        return Ok(false);
    }
    for robot in &world.robots {
        let here = robot.phase.position();
        for axes in probe_frames() {
            let frame = Transform::local_frame(&axes, &here);
            let next = crate::engine::apply_activate(world, robot.id, program, model, &frame)?;
            match &next.robots[robot.id].phase {
                crate::engine::Phase::PendingCompute { light, destination, .. }
                    if *light == robot.light && *destination == here => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// −IL predicate: the at-rest configurations are exactly I, II, III and the
/// final world is quiescent for `program`.
pub fn check_il(trace: &Trace, instance: &IlInstance, program: &dyn Program, model: Model) -> Verdict {
    const ORDER: [Config; 3] = [Config::I, Config::II, Config::III];
    let (seq, bad) = rest_sequence(trace, |w| classify_il(w, instance), |k| ORDER.get(k).copied());
    let reached = usize::from(seq == ORDER);
    let verdict = Verdict {
        problem: "il".into(),
        pass: true,
        min_cycles: 1,
        cycles_completed: BTreeMap::from([("configuration".to_string(), reached)]),
        sequence: seq.clone(),
        violation: None,
    };
    if let Some((at, rule, detail)) = bad {
        return verdict.fail(at, rule, detail);
    }
    let Some(last) = trace.last() else {
        return verdict.fail(0, "empty-trace", "no states".into());
    };
    if seq != ORDER {
        return verdict.fail(
            last.event_index,
            "incomplete",
            format!("at-rest sequence {seq:?} never reached III"),
        );
    }
    match is_quiescent(last, program, model) {
        Ok(true) => verdict,
        Ok(false) => verdict.fail(
            last.event_index,
            "quiescence",
            "some robot would still act in the final configuration".into(),
        ),
        Err(e) => verdict.fail(last.event_index, "quiescence", format!("probe failed: {e}")),
    }
}

/// Tracks one terminal robot's squared distance to the middle robot against
/// the milestones `x²` and `4x²`.
struct Oscillation {
    low: Scalar,
    high: Scalar,
    last: Scalar,
    rising: bool,
    milestones: usize,
}

impl Oscillation {
    fn new(initial: Scalar) -> Self {
        Oscillation {
            high: &initial * Scalar::integer(4),
            low: initial.clone(),
            last: initial,
            rising: true,
            milestones: 0,
        }
    }

    fn observe(&mut self, d2: Scalar) -> Result<(), (&'static str, String)> {
        if d2 > self.high {
            return Err(("overshoot", "distance exceeds twice the initial distance".into()));
        }
        if d2 < self.low {
            return Err(("undershoot", "distance fell below the initial distance".into()));
        }
        if self.rising {
            if d2 < self.last {
                return Err(("monotone-rising", "distance decreased before reaching 2x".into()));
            }
            if d2 == self.high {
                self.rising = false;
                self.milestones += 1;
            }
        } else {
            if d2 > self.last {
                return Err(("monotone-falling", "distance increased before returning to x".into()));
            }
            if d2 == self.low {
                self.rising = true;
                self.milestones += 1;
            }
        }
        self.last = d2;
        Ok(())
    }
}

/// IOP predicate over the whole trace, every state counted (including
/// robots caught mid-move).
pub fn check_iop(trace: &Trace, instance: &IopInstance, min_cycles: usize) -> Verdict {
    let mut verdict = Verdict {
        problem: "iop".into(),
        pass: true,
        min_cycles,
        cycles_completed: BTreeMap::from([("r1".to_string(), 0), ("r2".to_string(), 0)]),
        sequence: Vec::new(),
        violation: None,
    };
    let Some(first) = trace.initial() else {
        return verdict.fail(0, "empty-trace", "no states".into());
    };
    if first.len() != 3 {
        return verdict.fail(
            first.event_index,
            "robot-count",
            "IOP needs exactly three robots".into(),
        );
    }
    let expected = instance.positions();
    if first.positions() != expected {
        return verdict.fail(
            first.event_index,
            "initial-configuration",
            "trace does not start from the instance".into(),
        );
    }
    let middle = expected[IopInstance::MIDDLE].clone();
    let terminals = [(IopInstance::R1, "r1"), (IopInstance::R2, "r2")];
    let mut osc: Vec<Oscillation> = terminals
        .iter()
        .map(|(id, _)| Oscillation::new(expected[*id].squared_distance(&middle)))
        .collect();

    let mut seen: Vec<Option<Point>> = vec![None; 3];
    for state in trace.states() {
        let ps = state.positions();
        if ps[IopInstance::MIDDLE] != middle {
            return verdict.fail(
                state.event_index,
                "middle-moved",
                "the middle robot left its position".into(),
            );
        }
        for (k, (id, name)) in terminals.iter().enumerate() {
            // a repeated position is a no-op for both checks
            if seen[*id].as_ref() == Some(&ps[*id]) {
                continue;
            }
            seen[*id] = Some(ps[*id].clone());
            if !collinear(&[expected[0].clone(), middle.clone(), ps[*id].clone()]) {
                return verdict.fail(state.event_index, "off-line", format!("{name} left the line"));
            }
            if let Err((rule, detail)) = osc[k].observe(ps[*id].squared_distance(&middle)) {
                return verdict.fail(state.event_index, rule, format!("{name}: {detail}"));
            }
        }
    }
    for (k, (_, name)) in terminals.iter().enumerate() {
        verdict.cycles_completed.insert(name.to_string(), osc[k].milestones / 2);
    }
    if let Some((_, name)) = terminals
        .iter()
        .enumerate()
        .find(|(k, _)| osc[*k].milestones < 2 * min_cycles)
        .map(|(_, t)| t)
    {
        let at = trace.last().map_or(0, |s| s.event_index);
        let done = verdict.cycles_completed[*name];
        return verdict.fail(
            at,
            "insufficient-cycles",
            format!("{name} completed {done} of {min_cycles} required oscillations within the trace"),
        );
    }
    verdict
}
