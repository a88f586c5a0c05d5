//! Robot programs: AlgOC (FSTA), COMIL (FCOM), AlgoIOP (FSTA), plus the
//! oblivious and lightless candidates fed to the impossibility harness.
//!
//! Every program recognises the configuration it sees by matching the whole
//! snapshot against instance templates up to orientation-preserving
//! similarity. The templates have no such symmetry, so the match is unique
//! and named points (C, C′, P₁, …) are carried into the local frame by it.

use crate::engine::{Action, Color, Model, Program, ProgramError, Snapshot};
use crate::geometry::{collinear, match_points, rotate90_cw, strictly_between, Point, Scalar, Transform};
use crate::problems::{Config, IlInstance, OcInstance};

pub const OC_PALETTE: &[Color] = &[Color::Nil, Color::Red, Color::Blue];
pub const IL_PALETTE: &[Color] = &[Color::Nil, Color::M, Color::F];
pub const IOP_PALETTE: &[Color] = &[Color::Nil, Color::Red];
const OBLIVIOUS_PALETTE: &[Color] = &[Color::Nil];

fn expect_shape(snapshot: &Snapshot, model: Model, others: usize) -> Result<(), ProgramError> {
    let found = snapshot.shape();
    if found != Some(model) {
        return Err(ProgramError::SnapshotShape { expected: model, found });
    }
    if snapshot.others.len() != others {
        return Err(ProgramError::RobotCount {
            expected: others,
            found: snapshot.others.len(),
        });
    }
    Ok(())
}

/// The configuration seen in `snapshot` and the map from its template into
/// the local frame.
fn recognise(
    templates: [(Config, Vec<Point>); 3],
    snapshot: &Snapshot,
) -> Result<Option<(Config, Transform)>, ProgramError> {
    let seen = snapshot.configuration();
    for (config, template) in templates {
        match match_points(&template, &seen) {
            Ok(Some(t)) => return Ok(Some((config, t))),
            Ok(None) => {}
            Err(e) => return Err(ProgramError::Malformed(e.to_string())),
        }
    }
    Ok(None)
}

fn at(t: &Transform, p: &Point) -> bool {
    t.apply(p).is_origin()
}

/// One Compute step of AlgOC.
pub fn alg_oc(snapshot: &Snapshot, instance: &OcInstance) -> Result<Action, ProgramError> {
    expect_shape(snapshot, Model::Fsta, 3)?;
    let light = snapshot.own_light.expect("FSTA shape carries own light");
    let Some((config, t)) = recognise(instance.templates(), snapshot)? else {
        return Ok(Action::null());
    };
    let action = match (light, config) {
        (Color::Nil, Config::I) if at(&t, &instance.c) => Action::set(Color::Red, t.apply(&instance.c_prime)),
        (Color::Red, Config::II) if at(&t, &instance.c_prime) => {
            Action::set(Color::Blue, t.apply(&instance.c_double_prime))
        }
        (Color::Blue, Config::III) if at(&t, &instance.c_double_prime) => {
            Action::set(Color::Blue, t.apply(&instance.c_prime))
        }
        (Color::Blue, Config::II) if at(&t, &instance.c_prime) => Action::set(Color::Nil, t.apply(&instance.c)),
        _ => Action::null(),
    };
    Ok(action)
}

/// One Compute step of COMIL.
pub fn comil(snapshot: &Snapshot, instance: &IlInstance) -> Result<Action, ProgramError> {
    expect_shape(snapshot, Model::Fcom, 2)?;
    let lights: Vec<Color> = snapshot.lights().collect();
    if lights.contains(&Color::F) {
        return Ok(Action::null());
    }
    let recognised = recognise(instance.templates(), snapshot)?;
    if lights.contains(&Color::M) {
        let Some((Config::II, t)) = recognised else {
            return Ok(Action::null());
        };
        let [p, q] = [&snapshot.others[0].position, &snapshot.others[1].position];
        let between = strictly_between(&Point::origin(), p, q).map_err(|e| ProgramError::Malformed(e.to_string()))?;
        return Ok(if between {
            Action::set(Color::F, t.apply(&instance.p2))
        } else {
            Action::null()
        });
    }
    match recognised {
        Some((Config::I, t)) if at(&t, &instance.a) => Ok(Action::set(Color::M, t.apply(&instance.p1))),
        _ => Ok(Action::null()),
    }
}

/// Splits an IOP snapshot into (self is the middle robot, middle position).
fn iop_roles(snapshot: &Snapshot) -> Result<(bool, Point), ProgramError> {
    let malformed = |e: crate::geometry::GeometryError| ProgramError::Malformed(e.to_string());
    let [p, q] = [&snapshot.others[0].position, &snapshot.others[1].position];
    if !collinear(&snapshot.configuration()) {
        return Err(ProgramError::Malformed("robots are not collinear".into()));
    }
    let o = Point::origin();
    if strictly_between(&o, p, q).map_err(malformed)? {
        return Ok((true, o));
    }
    if strictly_between(p, &o, q).map_err(malformed)? {
        Ok((false, p.clone()))
    } else {
        Ok((false, q.clone()))
    }
}

/// One Compute step of AlgoIOP: a terminal at distance d from the middle
/// moves out to 2d (NIL) or back in to d/2 from there (RED).
pub fn algo_iop(snapshot: &Snapshot) -> Result<Action, ProgramError> {
    expect_shape(snapshot, Model::Fsta, 2)?;
    let (is_middle, m) = iop_roles(snapshot)?;
    if is_middle {
        return Ok(Action::null());
    }
    match snapshot.own_light {
        Some(Color::Nil) => Ok(Action::set(Color::Red, -&m)),
        Some(Color::Red) => Ok(Action::set(Color::Nil, m.scale(&Scalar::new(1, 2)))),
        other => Err(ProgramError::Malformed(format!(
            "light {other:?} outside the IOP palette"
        ))),
    }
}

#[derive(Debug, Clone, Default)]
pub struct AlgOc {
    pub instance: OcInstance,
}

impl Program for AlgOc {
    fn name(&self) -> &str {
        "alg_oc"
    }
    fn model(&self) -> Model {
        Model::Fsta
    }
    fn palette(&self) -> &'static [Color] {
        OC_PALETTE
    }
    fn compute(&self, snapshot: &Snapshot) -> Result<Action, ProgramError> {
        alg_oc(snapshot, &self.instance)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Comil {
    pub instance: IlInstance,
}

impl Program for Comil {
    fn name(&self) -> &str {
        "comil"
    }
    fn model(&self) -> Model {
        Model::Fcom
    }
    fn palette(&self) -> &'static [Color] {
        IL_PALETTE
    }
    fn compute(&self, snapshot: &Snapshot) -> Result<Action, ProgramError> {
        comil(snapshot, &self.instance)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlgoIop;

impl Program for AlgoIop {
    fn name(&self) -> &str {
        "algo_iop"
    }
    fn model(&self) -> Model {
        Model::Fsta
    }
    fn palette(&self) -> &'static [Color] {
        IOP_PALETTE
    }
    fn compute(&self, snapshot: &Snapshot) -> Result<Action, ProgramError> {
        algo_iop(snapshot)
    }
}

type LocalRule = Box<dyn Fn(&Snapshot) -> Result<Point, ProgramError> + Send + Sync>;

/// A lightless program given by a plain function of the observed points
/// (observer at the origin) returning a local destination.
pub struct Lightless {
    name: &'static str,
    model: Model,
    others: usize,
    rule: LocalRule,
}

impl Lightless {
    pub fn new(
        name: &'static str,
        model: Model,
        others: usize,
        rule: impl Fn(&Snapshot) -> Result<Point, ProgramError> + Send + Sync + 'static,
    ) -> Self {
        Lightless {
            name,
            model,
            others,
            rule: Box::new(rule),
        }
    }
}

impl Program for Lightless {
    fn name(&self) -> &str {
        self.name
    }
    fn model(&self) -> Model {
        self.model
    }
    fn palette(&self) -> &'static [Color] {
        OBLIVIOUS_PALETTE
    }
    fn compute(&self, snapshot: &Snapshot) -> Result<Action, ProgramError> {
        expect_shape(snapshot, self.model, self.others)?;
        Ok(Action {
            light: None,
            destination: (self.rule)(snapshot)?,
        })
    }
}

fn centroid(snapshot: &Snapshot) -> Point {
    let pts = snapshot.configuration();
    let n = Scalar::integer(pts.len() as i64);
    let sum = pts.iter().fold(Point::origin(), |acc, p| &acc + p);
    sum.scale(&n.recip().expect("non-empty"))
}

/// Oblivious OC mover: `moves` lists (configuration, from, to) steps.
fn oc_mimic(name: &'static str, instance: &OcInstance, moves: Vec<(Config, Point, Point)>) -> Lightless {
    let templates = instance.templates();
    Lightless::new(name, Model::Oblot, 3, move |s| {
        let Some((config, t)) = recognise(templates.clone(), s)? else {
            return Ok(Point::origin());
        };
        Ok(moves
            .iter()
            .find(|(c, from, _)| *c == config && at(&t, from))
            .map_or(Point::origin(), |(_, _, to)| t.apply(to)))
    })
}

/// Oblivious four-robot programs for the OC impossibility harness.
pub fn oblivious_candidates_for(instance: &OcInstance) -> Vec<Box<dyn Program>> {
    let (c, c1, c2) = (
        instance.c.clone(),
        instance.c_prime.clone(),
        instance.c_double_prime.clone(),
    );
    vec![
        Box::new(Lightless::new("always_null", Model::Oblot, 3, |_| Ok(Point::origin()))),
        Box::new(oc_mimic(
            "mimic_alg_oc",
            instance,
            vec![
                (Config::I, c.clone(), c1.clone()),
                (Config::II, c1.clone(), c2.clone()),
                (Config::III, c2.clone(), c1.clone()),
            ],
        )),
        Box::new(oc_mimic(
            "mimic_reverse",
            instance,
            vec![
                (Config::I, c.clone(), c1.clone()),
                (Config::II, c1.clone(), c),
                (Config::III, c2, c1),
            ],
        )),
        Box::new(Lightless::new("move_to_centroid", Model::Oblot, 3, |s| {
            Ok(centroid(s).scale(&Scalar::new(1, 2)))
        })),
        Box::new(Lightless::new("retreat_from_centroid", Model::Oblot, 3, |s| {
            Ok(-&centroid(s))
        })),
        Box::new(Lightless::new("rotate_about_centroid", Model::Oblot, 3, |s| {
            Ok(rotate90_cw(&Point::origin(), &centroid(s)))
        })),
    ]
}

pub fn oblivious_candidates() -> Vec<Box<dyn Program>> {
    oblivious_candidates_for(&OcInstance::default())
}

/// Always applies AlgoIOP's move-away rule; with no own light to consult it
/// cannot tell when to come back.
pub fn lightless_move_away() -> Lightless {
    Lightless::new("lightless_move_away", Model::Fcom, 2, |s| {
        let (is_middle, m) = iop_roles(s)?;
        Ok(if is_middle { Point::origin() } else { -&m })
    })
}

/// Reports a different model than the wrapped program was written for.
pub struct Relabelled<P> {
    pub inner: P,
    pub model: Model,
    pub name: &'static str,
}

impl<P: Program> Program for Relabelled<P> {
    fn name(&self) -> &str {
        self.name
    }
    fn model(&self) -> Model {
        self.model
    }
    fn palette(&self) -> &'static [Color] {
        self.inner.palette()
    }
    fn compute(&self, snapshot: &Snapshot) -> Result<Action, ProgramError> {
        self.inner.compute(snapshot)
    }
}

/// Three-robot FCOM programs for the IOP search.
pub fn fcom_candidates() -> Vec<Box<dyn Program>> {
    vec![
        Box::new(lightless_move_away()),
        Box::new(Lightless::new("always_null_fcom", Model::Fcom, 2, |_| {
            Ok(Point::origin())
        })),
        Box::new(Relabelled {
            inner: AlgoIop,
            model: Model::Fcom,
            name: "algo_iop_as_fcom",
        }),
    ]
}

/// Every registered program, built on the default instances.
pub fn registry() -> Vec<Box<dyn Program>> {
    let mut v: Vec<Box<dyn Program>> = vec![
        Box::new(AlgOc::default()),
        Box::new(Comil::default()),
        Box::new(AlgoIop),
    ];
    v.extend(oblivious_candidates());
    v.extend(fcom_candidates());
    v
}

pub fn program_names() -> Vec<String> {
    registry().iter().map(|p| p.name().to_string()).collect()
}

pub fn program_by_name(name: &str) -> Option<Box<dyn Program>> {
    registry().into_iter().find(|p| p.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{take_snapshot, WorldState};
    use crate::geometry::Multiplier;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::new(n, d)
    }

    fn snap(world: &WorldState, robot: usize, model: Model) -> Snapshot {
        let frame = Transform::local_frame(&Multiplier::one(), &world.position(robot).unwrap());
        take_snapshot(world, robot, model, &frame).unwrap()
    }

    fn oc_world(fourth: &Point, light: Color) -> WorldState {
        let inst = OcInstance::default();
        let mut v = inst.triangle.to_vec();
        v.push(fourth.clone());
        let mut w = WorldState::new(&v).unwrap();
        w.robots[3].light = light;
        w
    }

    #[test]
    fn alg_oc_examples() {
        let inst = OcInstance::default();
        let w = oc_world(&inst.c, Color::Nil);
        let a = alg_oc(&snap(&w, 3, Model::Fsta), &inst).unwrap();
        assert_eq!(a, Action::set(Color::Red, &inst.c_prime - &inst.c));
        for other in 0..3 {
            assert!(alg_oc(&snap(&w, other, Model::Fsta), &inst).unwrap().is_null());
        }

        let w = oc_world(&inst.c_prime, Color::Nil);
        assert!(alg_oc(&snap(&w, 3, Model::Fsta), &inst).unwrap().is_null());

        let w = oc_world(&inst.c_double_prime, Color::Blue);
        let a = alg_oc(&snap(&w, 3, Model::Fsta), &inst).unwrap();
        assert_eq!(a, Action::set(Color::Blue, &inst.c_prime - &inst.c_double_prime));

        let w = oc_world(&inst.c_prime, Color::Red);
        let a = alg_oc(&snap(&w, 3, Model::Fsta), &inst).unwrap();
        assert_eq!(a, Action::set(Color::Blue, &inst.c_double_prime - &inst.c_prime));

        let w = oc_world(&inst.c_prime, Color::Blue);
        let a = alg_oc(&snap(&w, 3, Model::Fsta), &inst).unwrap();
        assert_eq!(a, Action::set(Color::Nil, &inst.c - &inst.c_prime));
    }

    #[test]
    fn alg_oc_rejects_wrong_shape() {
        let inst = OcInstance::default();
        let w = oc_world(&inst.c, Color::Nil);
        assert!(matches!(
            alg_oc(&snap(&w, 3, Model::Lumi), &inst),
            Err(ProgramError::SnapshotShape { .. })
        ));
    }

    fn il_world(points: [&Point; 3], lights: [Color; 3]) -> WorldState {
        let mut w = WorldState::new(&points.map(Point::clone)).unwrap();
        for (r, l) in w.robots.iter_mut().zip(lights) {
            r.light = l;
        }
        w
    }

    #[test]
    fn comil_examples() {
        let il = IlInstance::default();
        let nil = [Color::Nil; 3];
        let w = il_world([&il.a, &il.b, &il.c], nil);
        assert_eq!(
            comil(&snap(&w, 0, Model::Fcom), &il).unwrap(),
            Action::set(Color::M, &il.p1 - &il.a)
        );
        assert!(comil(&snap(&w, 1, Model::Fcom), &il).unwrap().is_null());
        assert!(comil(&snap(&w, 2, Model::Fcom), &il).unwrap().is_null());

        let w = il_world([&il.p1, &il.b, &il.c], [Color::M, Color::Nil, Color::Nil]);
        assert_eq!(
            comil(&snap(&w, 1, Model::Fcom), &il).unwrap(),
            Action::set(Color::F, &il.p2 - &il.b)
        );
        assert!(comil(&snap(&w, 2, Model::Fcom), &il).unwrap().is_null());
        assert!(comil(&snap(&w, 0, Model::Fcom), &il).unwrap().is_null());

        let w = il_world([&il.a, &il.b, &il.c], [Color::Nil, Color::F, Color::Nil]);
        assert!(comil(&snap(&w, 0, Model::Fcom), &il).unwrap().is_null());
    }

    #[test]
    fn comil_role_a_is_shorter_leg_endpoint() {
        let il = IlInstance::default();
        assert!(il.a.squared_distance(&il.b) < il.c.squared_distance(&il.b));
    }

    fn iop_world(r1: i64, r2: (i64, i64), light: Color) -> WorldState {
        let mut w =
            WorldState::new(&[Point::int(-r1, 0), Point::origin(), Point::new(q(r2.0, r2.1), q(0, 1))]).unwrap();
        w.robots[0].light = light;
        w.robots[2].light = light;
        w
    }

    #[test]
    fn algo_iop_examples() {
        let w = iop_world(1, (3, 2), Color::Nil);
        let a = algo_iop(&snap(&w, 0, Model::Fsta)).unwrap();
        assert_eq!(a, Action::set(Color::Red, Point::int(-1, 0)));
        let a = algo_iop(&snap(&w, 2, Model::Fsta)).unwrap();
        assert_eq!(a, Action::set(Color::Red, Point::new(q(3, 2), q(0, 1))));
        assert!(algo_iop(&snap(&w, 1, Model::Fsta)).unwrap().is_null());

        let w = iop_world(2, (3, 1), Color::Red);
        let a = algo_iop(&snap(&w, 0, Model::Fsta)).unwrap();
        assert_eq!(a, Action::set(Color::Nil, Point::int(1, 0)));

        let bent = WorldState::new(&[Point::int(-1, 0), Point::origin(), Point::int(1, 1)]).unwrap();
        assert!(matches!(
            algo_iop(&snap(&bent, 0, Model::Fsta)),
            Err(ProgramError::Malformed(_))
        ));
    }

    #[test]
    fn candidate_corpora() {
        let inst = OcInstance::default();
        let c = oblivious_candidates();
        assert!(c.len() >= 5);
        assert!(c.iter().all(|p| p.model() == Model::Oblot));
        let w = oc_world(&inst.c_prime, Color::Nil);
        for p in &c {
            let s = snap(&w, 3, Model::Oblot);
            assert_eq!(p.compute(&s).unwrap(), p.compute(&s).unwrap());
        }
        let null = &c[0];
        assert!(null.compute(&snap(&w, 0, Model::Oblot)).unwrap().is_null());

        let w = iop_world(1, (3, 2), Color::Nil);
        let away = lightless_move_away();
        assert_eq!(
            away.compute(&snap(&w, 0, Model::Fcom)).unwrap().destination,
            Point::int(-1, 0)
        );
    }

    #[test]
    fn registry_names_are_unique() {
        let mut names = program_names();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        for want in ["alg_oc", "comil", "algo_iop", "always_null", "lightless_move_away"] {
            assert!(program_by_name(want).is_some(), "{want}");
        }
    }
}
