//! Exact rational plane geometry.
//!
//! Every coordinate is a [`Scalar`], an arbitrary-precision rational, so all
//! predicates below (equality, collinearity, betweenness, similarity) are
//! decided exactly. Local coordinate frames are orientation-preserving
//! similarities `z ↦ m·z + t` over the complex plane with a rational
//! multiplier `m`; reflections are not representable.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate configuration: points {0} and {1} coincide")]
    DegenerateConfiguration(usize, usize),
    #[error("point lists differ in size ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("similarity multiplier must be non-zero")]
    ZeroMultiplier,
    #[error("segment endpoints coincide")]
    CoincidentEndpoints,
    #[error("cannot parse scalar {0:?}")]
    ParseScalar(String),
}

/// An exact rational number, always kept in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigRational);

impl Scalar {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Scalar(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn integer(n: i64) -> Self {
        Scalar(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Scalar(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.abs())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        (!self.is_zero()).then(|| Scalar(self.0.recip()))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::integer(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar(r)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Scalar {
    type Err = GeometryError;

    /// Accepts `"num/den"` or a bare integer `"num"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || GeometryError::ParseScalar(s.to_string());
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Scalar(BigRational::new(n, d)))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                Scalar($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                Scalar($trait::$method(self.0, &rhs.0))
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar($trait::$method(&self.0, rhs.0))
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
// Division by zero panics, as with the underlying rational type.
scalar_binop!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

/// A point of the rational plane. Serialized as `["x", "y"]`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[Scalar; 2]", into = "[Scalar; 2]")]
pub struct Point {
    pub x: Scalar,
    pub y: Scalar,
}

impl From<[Scalar; 2]> for Point {
    fn from([x, y]: [Scalar; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [Scalar; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on `(x, y)`; used only to canonicalize lists.
impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.x.cmp(&other.x).then_with(|| self.y.cmp(&other.y))
    }
}

impl Point {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Point { x, y }
    }

    pub fn int(x: i64, y: i64) -> Self {
        Point::new(Scalar::integer(x), Scalar::integer(y))
    }

    pub fn origin() -> Self {
        Point::default()
    }

    pub fn is_origin(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, k: &Scalar) -> Point {
        Point::new(&self.x * k, &self.y * k)
    }

    pub fn dot(&self, other: &Point) -> Scalar {
        &self.x * &other.x + &self.y * &other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(&self, other: &Point) -> Scalar {
        &self.x * &other.y - &self.y * &other.x
    }

    pub fn norm2(&self) -> Scalar {
        self.dot(self)
    }

    pub fn squared_distance(&self, other: &Point) -> Scalar {
        (self - other).norm2()
    }

    /// `self + t·(other − self)`.
    pub fn lerp(&self, other: &Point, t: &Scalar) -> Point {
        self + &(other - self).scale(t)
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-&self.x, -&self.y)
    }
}

/// The complex number `re + im·i`, non-zero, acting on the plane by complex
/// multiplication: a rotation combined with a uniform scaling.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Scalar; 2]", into = "[Scalar; 2]")]
pub struct Multiplier {
    re: Scalar,
    im: Scalar,
}

impl TryFrom<[Scalar; 2]> for Multiplier {
    type Error = GeometryError;
    fn try_from([re, im]: [Scalar; 2]) -> Result<Self, Self::Error> {
        Multiplier::new(re, im)
    }
}

impl From<Multiplier> for [Scalar; 2] {
    fn from(m: Multiplier) -> Self {
        [m.re, m.im]
    }
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)", self.re, self.im)
    }
}

impl Multiplier {
    pub fn new(re: Scalar, im: Scalar) -> Result<Self, GeometryError> {
        if re.is_zero() && im.is_zero() {
            return Err(GeometryError::ZeroMultiplier);
        }
        Ok(Multiplier { re, im })
    }

    pub fn one() -> Self {
        Multiplier {
            re: Scalar::one(),
            im: Scalar::zero(),
        }
    }

    /// 90° counter-clockwise.
    pub fn quarter_turn() -> Self {
        Multiplier {
            re: Scalar::zero(),
            im: Scalar::one(),
        }
    }

    pub fn re(&self) -> &Scalar {
        &self.re
    }

    pub fn im(&self) -> &Scalar {
        &self.im
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::new(&self.re * &p.x - &self.im * &p.y, &self.im * &p.x + &self.re * &p.y)
    }

    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        Multiplier {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn inverse(&self) -> Multiplier {
        let n = &self.re * &self.re + &self.im * &self.im;
        Multiplier {
            re: &self.re / &n,
            im: -(&self.im / &n),
        }
    }

    /// Squared modulus, i.e. the squared scale factor.
    pub fn norm2(&self) -> Scalar {
        &self.re * &self.re + &self.im * &self.im
    }

    /// The multiplier sending vector `from` onto vector `to`; `None` when
    /// `from` is zero or `to` is zero.
    pub fn between(from: &Point, to: &Point) -> Option<Multiplier> {
        let n = from.norm2();
        if n.is_zero() || to.is_origin() {
            return None;
        }
        // to / from = to · conj(from) / |from|²
        let re = (&to.x * &from.x + &to.y * &from.y) / &n;
        let im = (&to.y * &from.x - &to.x * &from.y) / &n;
        Some(Multiplier { re, im })
    }
}

/// Orientation-preserving similarity `p ↦ m·p + t`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transform {
    multiplier: Multiplier,
    translation: Point,
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z ↦ {:?}·z + {:?}", self.multiplier, self.translation)
    }
}

impl Transform {
    pub fn new(multiplier: Multiplier, translation: Point) -> Self {
        Transform {
            multiplier,
            translation,
        }
    }

    pub fn identity() -> Self {
        Transform::new(Multiplier::one(), Point::origin())
    }

    /// The frame with linear part `m` that places `center` at the origin.
    pub fn centered_at(m: Multiplier, center: &Point) -> Self {
        let translation = -&m.apply(center);
        Transform::new(m, translation)
    }

    /// World-to-local map of a robot standing at `at` whose unit axes,
    /// expressed in world coordinates, are given by `axes` (so the local x
    /// axis points along `axes` and local lengths are `|axes|`).
    pub fn local_frame(axes: &Multiplier, at: &Point) -> Self {
        Transform::centered_at(axes.inverse(), at)
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    pub fn translation(&self) -> &Point {
        &self.translation
    }

    pub fn apply(&self, p: &Point) -> Point {
        &self.multiplier.apply(p) + &self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            multiplier: self.multiplier.compose(&other.multiplier),
            translation: self.apply(&other.translation),
        }
    }

    pub fn inverse(&self) -> Transform {
        let inv = self.multiplier.inverse();
        let translation = -&inv.apply(&self.translation);
        Transform::new(inv, translation)
    }

    pub fn is_identity(&self) -> bool {
        *self == Transform::identity()
    }
}

pub fn apply_transform(t: &Transform, p: &Point) -> Point {
    t.apply(p)
}

/// Rotates `p` by 90° clockwise about `center`.
pub fn rotate90_cw(p: &Point, center: &Point) -> Point {
    let d = p - center;
    center + &Point::new(d.y, -d.x)
}

fn check_distinct(points: &[Point]) -> Result<(), GeometryError> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i] == points[j] {
                return Err(GeometryError::DegenerateConfiguration(i, j));
            }
        }
    }
    Ok(())
}

/// The unique index whose point is equidistant from all the others, if
/// exactly one exists.
pub fn equidistant_index(points: &[Point]) -> Result<Option<usize>, GeometryError> {
    check_distinct(points)?;
    let mut found = None;
    for (i, p) in points.iter().enumerate() {
        let mut dists = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| p.squared_distance(q));
        let Some(first) = dists.next() else {
            continue;
        };
        if dists.all(|d| d == first) {
            if found.is_some() {
                return Ok(None);
            }
            found = Some(i);
        }
    }
    Ok(found)
}

/// True iff `p` lies on the open segment `(a, b)`.
pub fn strictly_between(p: &Point, a: &Point, b: &Point) -> Result<bool, GeometryError> {
    if a == b {
        return Err(GeometryError::CoincidentEndpoints);
    }
    let ab = b - a;
    let ap = p - a;
    if !ab.cross(&ap).is_zero() {
        return Ok(false);
    }
    let t = ap.dot(&ab);
    Ok(t.is_positive() && t < ab.norm2())
}

/// True iff every point lies on one line (vacuously for fewer than 3).
pub fn collinear(points: &[Point]) -> bool {
    let Some(a) = points.first() else {
        return true;
    };
    let Some(b) = points.iter().find(|q| *q != a) else {
        return true;
    };
    let ab = b - a;
    points.iter().all(|q| ab.cross(&(q - a)).is_zero())
}

/// Finds an orientation-preserving similarity `T` and a label-respecting
/// bijection `σ` with `T(a[σ(k)]) = b[k]`.
///
/// The candidate maps are those sending `a[0], a[1]` onto an ordered pair of
/// `b`; the first one (in `b`-index order) that carries every point of `a`
/// onto an equally-labelled point of `b` is returned, so `a == b` always
/// yields the identity.
pub fn match_up_to_similarity<L: PartialEq>(
    a: &[(Point, L)],
    b: &[(Point, L)],
) -> Result<Option<Transform>, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let pa: Vec<Point> = a.iter().map(|(p, _)| p.clone()).collect();
    let pb: Vec<Point> = b.iter().map(|(p, _)| p.clone()).collect();
    check_distinct(&pa)?;
    check_distinct(&pb)?;

    match a.len() {
        0 => return Ok(Some(Transform::identity())),
        1 => {
            if a[0].1 != b[0].1 {
                return Ok(None);
            }
            let t = &b[0].0 - &a[0].0;
            return Ok(Some(Transform::new(Multiplier::one(), t)));
        }
        _ => {}
    }

    // Similar sets have proportional sorted squared-distance spectra; this
    // rejects most non-matches before any transform is built.
    let da = pair_distances(&pa);
    let db = pair_distances(&pb);
    let (mut sa, mut sb): (Vec<&Scalar>, Vec<&Scalar>) = (da.iter().flatten().collect(), db.iter().flatten().collect());
    sa.sort();
    sb.sort();
    let (ma, mb) = (sa[sa.len() - 1], sb[sb.len() - 1]);
    if sa.iter().zip(&sb).any(|(x, y)| *x * mb != *y * ma) {
        return Ok(None);
    }

    let (a0, l0) = (&a[0].0, &a[0].1);
    let (a1, l1) = (&a[1].0, &a[1].1);
    let span = a1 - a0;
    let span_scaled = &da[0][0] * mb;
    for (i, (bi, li)) in b.iter().enumerate() {
        if li != l0 {
            continue;
        }
        for (j, (bj, lj)) in b.iter().enumerate() {
            if i == j || lj != l1 {
                continue;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            if &db[lo][hi - lo - 1] * ma != span_scaled {
                continue;
            }
            let Some(m) = Multiplier::between(&span, &(bj - bi)) else {
                continue;
            };
            let t = Transform::new(m.clone(), bi - &m.apply(a0));
            let carries_all = a.iter().skip(2).all(|(p, l)| {
                let q = t.apply(p);
                b.iter().any(|(bp, bl)| *bp == q && bl == l)
            });
            if carries_all {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

/// `d[i][k]` is the squared distance from point `i` to point `i + k + 1`.
fn pair_distances(points: &[Point]) -> Vec<Vec<Scalar>> {
    (0..points.len())
        .map(|i| points[i + 1..].iter().map(|q| points[i].squared_distance(q)).collect())
        .collect()
}

/// Unlabelled convenience wrapper around [`match_up_to_similarity`].
pub fn match_points(a: &[Point], b: &[Point]) -> Result<Option<Transform>, GeometryError> {
    let la: Vec<(Point, ())> = a.iter().map(|p| (p.clone(), ())).collect();
    let lb: Vec<(Point, ())> = b.iter().map(|p| (p.clone(), ())).collect();
    match_up_to_similarity(&la, &lb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::new(n, d)
    }

    fn pt(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::new(q(x.0, x.1), q(y.0, y.1))
    }

    #[test]
    fn scalar_reduces_and_round_trips() {
        let s = q(6, -8);
        assert_eq!(s.to_string(), "-3/4");
        assert_eq!("-3/4".parse::<Scalar>().unwrap(), s);
        assert_eq!("5".parse::<Scalar>().unwrap(), Scalar::integer(5));
        assert_eq!(Scalar::integer(-1).to_string(), "-1/1");
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("x".parse::<Scalar>().is_err());
        let json = serde_json::to_string(&pt((1, 2), (-3, 1))).unwrap();
        assert_eq!(json, r#"["1/2","-3/1"]"#);
    }

    #[test]
    fn apply_transform_examples() {
        let p = Point::int(3, 4);
        assert_eq!(apply_transform(&Transform::identity(), &p), p);

        let rot = Transform::new(Multiplier::quarter_turn(), Point::origin());
        assert_eq!(rot.apply(&Point::int(1, 0)), Point::int(0, 1));

        let t = Transform::new(
            Multiplier::new(Scalar::integer(2), Scalar::zero()).unwrap(),
            Point::int(1, 1),
        );
        assert_eq!(t.apply(&pt((1, 2), (0, 1))), Point::int(2, 1));
    }

    #[test]
    fn zero_multiplier_rejected() {
        assert_eq!(
            Multiplier::new(Scalar::zero(), Scalar::zero()),
            Err(GeometryError::ZeroMultiplier)
        );
        let bad: Result<Multiplier, _> = serde_json::from_str(r#"["0/1","0/1"]"#);
        assert!(bad.is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let t = Transform::new(Multiplier::new(q(3, 5), q(4, 5)).unwrap(), pt((1, 3), (-2, 1)));
        let u = Transform::new(
            Multiplier::new(Scalar::integer(2), Scalar::integer(-1)).unwrap(),
            Point::int(5, 7),
        );
        let p = pt((7, 11), (-1, 2));
        assert_eq!(t.compose(&u).apply(&p), t.apply(&u.apply(&p)));
        assert_eq!(t.inverse().apply(&t.apply(&p)), p);
        assert!(t.compose(&t.inverse()).is_identity());
    }

    #[test]
    fn centered_frame_sends_center_to_origin() {
        let c = pt((5, 2), (-7, 3));
        let f = Transform::centered_at(Multiplier::new(q(1, 2), q(3, 1)).unwrap(), &c);
        assert!(f.apply(&c).is_origin());
        let axes = Multiplier::new(q(2, 1), q(-1, 3)).unwrap();
        let local = Transform::local_frame(&axes, &c);
        assert!(local.apply(&c).is_origin());
        // one local unit along x lands at c + axes in world coordinates
        assert_eq!(
            local.inverse().apply(&Point::int(1, 0)),
            &c + &axes.apply(&Point::int(1, 0))
        );
    }

    #[test]
    fn rotate90_cw_examples() {
        let o = Point::origin();
        assert_eq!(rotate90_cw(&Point::int(0, -1), &o), Point::int(-1, 0));
        let c = pt((1, 3), (2, 1));
        assert_eq!(rotate90_cw(&c, &c), c);
        assert_eq!(rotate90_cw(&Point::int(2, 0), &o), Point::int(0, -2));
    }

    #[test]
    fn equidistant_index_examples() {
        let pts = [Point::int(1, 0), Point::int(-1, 0), Point::int(0, 1), Point::int(0, 0)];
        assert_eq!(equidistant_index(&pts).unwrap(), Some(3));

        let line = [Point::int(0, 0), Point::int(1, 0), Point::int(2, 0), Point::int(3, 0)];
        assert_eq!(equidistant_index(&line).unwrap(), None);

        let off = [
            Point::int(1, 0),
            Point::int(-1, 0),
            Point::int(0, 1),
            pt((0, 1), (1, 2)),
        ];
        assert_eq!(equidistant_index(&off).unwrap(), None);

        let dup = [Point::int(1, 0), Point::int(1, 0), Point::int(0, 1), Point::int(0, 0)];
        assert_eq!(
            equidistant_index(&dup),
            Err(GeometryError::DegenerateConfiguration(0, 1))
        );
    }

    #[test]
    fn equidistant_index_square_has_no_center() {
        // each corner sees the others at squared distances 2, 2, 4
        let sq = [Point::int(1, 0), Point::int(0, 1), Point::int(-1, 0), Point::int(0, -1)];
        assert_eq!(equidistant_index(&sq).unwrap(), None);
    }

    #[test]
    fn strictly_between_examples() {
        let a = Point::int(-1, 0);
        let b = Point::int(2, 0);
        assert!(strictly_between(&Point::int(0, 0), &a, &b).unwrap());
        assert!(!strictly_between(&Point::int(2, 0), &a, &b).unwrap());
        assert!(!strictly_between(&Point::int(0, 1), &a, &b).unwrap());
        assert!(!strictly_between(&Point::int(3, 0), &a, &b).unwrap());
        assert_eq!(
            strictly_between(&Point::int(0, 0), &a, &a),
            Err(GeometryError::CoincidentEndpoints)
        );
    }

    #[test]
    fn match_examples() {
        let tri = [Point::int(0, 0), Point::int(1, 0), Point::int(0, 1)];
        assert!(match_points(&tri, &tri).unwrap().unwrap().is_identity());

        let t = match_points(
            &[Point::int(0, 0), Point::int(1, 0)],
            &[Point::int(0, 0), Point::int(0, 2)],
        )
        .unwrap()
        .unwrap();
        assert_eq!(t.multiplier().re(), &Scalar::zero());
        assert_eq!(t.multiplier().im(), &Scalar::integer(2));

        // As unlabelled sets the isosceles triangle and its mirror image are
        // related by a -90° rotation; with the correspondence pinned by
        // labels only the reflection would fit.
        let mirror = [Point::int(0, 0), Point::int(1, 0), Point::int(0, -1)];
        assert!(match_points(&tri, &mirror).unwrap().is_some());
        let labelled = |ps: &[Point]| -> Vec<(Point, usize)> { ps.iter().cloned().zip(0..).collect() };
        assert_eq!(
            match_up_to_similarity(&labelled(&tri), &labelled(&mirror)).unwrap(),
            None
        );
        let scalene = [Point::int(0, 0), Point::int(2, 0), Point::int(0, 1)];
        let flipped = [Point::int(0, 0), Point::int(2, 0), Point::int(0, -1)];
        assert_eq!(match_points(&scalene, &flipped).unwrap(), None);

        assert_eq!(
            match_points(&tri, &tri[..2]),
            Err(GeometryError::SizeMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn match_respects_labels() {
        let a = [(Point::int(0, 0), 'x'), (Point::int(1, 0), 'y')];
        let b = [(Point::int(0, 0), 'y'), (Point::int(1, 0), 'x')];
        let t = match_up_to_similarity(&a, &b).unwrap().unwrap();
        assert_eq!(t.apply(&Point::int(0, 0)), Point::int(1, 0));
        let c = [(Point::int(0, 0), 'y'), (Point::int(1, 0), 'z')];
        assert_eq!(match_up_to_similarity(&a, &c).unwrap(), None);
    }

    #[test]
    fn collinear_detects_lines() {
        assert!(collinear(&[Point::int(0, 0), Point::int(1, 1), Point::int(-3, -3)]));
        assert!(!collinear(&[Point::int(0, 0), Point::int(1, 1), Point::int(1, 0)]));
    }
}
