#![allow(dead_code)]

use lcm_core::engine::{take_snapshot, Action, RobotId};
use lcm_core::geometry::{Multiplier, Point, Scalar, Transform};
use lcm_core::problems::{IlInstance, IopInstance, OcInstance, Verdict};
use lcm_core::{Color, Program, WorldState};
use rand::Rng;

pub fn small_ratio<R: Rng>(rng: &mut R, span: i64) -> Scalar {
    Scalar::new(rng.gen_range(-span..=span), rng.gen_range(1..=span))
}

/// Any rotation-and-scale, not just the Pythagorean ones the generators use.
pub fn any_multiplier<R: Rng>(rng: &mut R) -> Multiplier {
    loop {
        if let Ok(m) = Multiplier::new(small_ratio(rng, 9), small_ratio(rng, 9)) {
            return m;
        }
    }
}

pub fn any_transform<R: Rng>(rng: &mut R) -> Transform {
    let t = Point::new(small_ratio(rng, 20), small_ratio(rng, 20));
    Transform::new(any_multiplier(rng), t)
}

pub fn random_iop<R: Rng>(rng: &mut R) -> IopInstance {
    loop {
        let direction = Point::new(small_ratio(rng, 7), small_ratio(rng, 7));
        let middle = Point::new(small_ratio(rng, 11), small_ratio(rng, 11));
        let x1 = Scalar::new(rng.gen_range(1..=9), rng.gen_range(1..=5));
        let x2 = Scalar::new(rng.gen_range(1..=9), rng.gen_range(1..=5));
        if let Ok(inst) = IopInstance::new(direction, middle, x1, x2) {
            return inst;
        }
    }
}

pub fn map_oc(inst: &OcInstance, t: &Transform) -> OcInstance {
    OcInstance {
        triangle: inst.triangle.clone().map(|p| t.apply(&p)),
        c: t.apply(&inst.c),
        c_prime: t.apply(&inst.c_prime),
        c_double_prime: t.apply(&inst.c_double_prime),
    }
}

pub fn map_il(inst: &IlInstance, t: &Transform) -> IlInstance {
    IlInstance {
        a: t.apply(&inst.a),
        b: t.apply(&inst.b),
        c: t.apply(&inst.c),
        p1: t.apply(&inst.p1),
        p2: t.apply(&inst.p2),
    }
}

pub fn map_iop(inst: &IopInstance, t: &Transform) -> IopInstance {
    IopInstance {
        direction: t.multiplier().apply(&inst.direction),
        middle: t.apply(&inst.middle),
        x1: inst.x1.clone(),
        x2: inst.x2.clone(),
    }
}

/// Light and world-frame destination `program` picks for `robot` when its
/// local axes are `axes`. Built from the public snapshot primitive, not the
/// simulator.
pub fn world_output(
    world: &WorldState,
    robot: RobotId,
    program: &dyn Program,
    axes: &Multiplier,
) -> Result<(Color, Point), String> {
    let here = world.position(robot).map_err(|e| e.to_string())?;
    let frame = Transform::local_frame(axes, &here);
    let snap = take_snapshot(world, robot, program.model(), &frame).map_err(|e| e.to_string())?;
    let Action { light, destination } = program.compute(&snap).map_err(|e| e.to_string())?;
    let light = light.unwrap_or(world.robots[robot].light);
    Ok((light, frame.inverse().apply(&destination)))
}

pub type VerdictShape = (bool, Vec<String>, Option<(u64, String)>, Vec<(String, usize)>);

/// The parts of a verdict that must not depend on coordinates.
pub fn verdict_shape(v: &Verdict) -> VerdictShape {
    (
        v.pass,
        v.sequence.iter().map(|c| c.to_string()).collect(),
        v.violation.as_ref().map(|x| (x.event_index, x.rule.clone())),
        v.cycles_completed.iter().map(|(k, n)| (k.clone(), *n)).collect(),
    )
}
