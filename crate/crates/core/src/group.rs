//! The cylinder `R x T`, its dual `R x Z`, the pairing between them and the
//! upper-triangular automorphisms acting on both sides.

use std::f64::consts::TAU;
use std::fmt::Debug;
use std::ops::{Add, Neg, Sub};

use num::complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Reduces an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A point `(t, e^{i theta})` of `R x T`, with the angle kept in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    pub t: f64,
    pub theta: f64,
}

impl CylinderPoint {
    pub fn new(t: f64, theta: f64) -> Self {
        Self { t, theta: wrap_angle(theta) }
    }

    pub fn zero() -> Self {
        Self { t: 0.0, theta: 0.0 }
    }
}

impl Add for CylinderPoint {
    type Output = CylinderPoint;
    fn add(self, rhs: Self) -> Self {
        CylinderPoint::new(self.t + rhs.t, self.theta + rhs.theta)
    }
}

impl Neg for CylinderPoint {
    type Output = CylinderPoint;
    fn neg(self) -> Self {
        CylinderPoint::new(-self.t, -self.theta)
    }
}

/// A character `(s, n)` of `R x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint<S = f64> {
    pub s: S,
    pub n: i64,
}

impl<S: Scalar> DualPoint<S> {
    pub fn new(s: S, n: i64) -> Self {
        Self { s, n }
    }

    pub fn to_f64(&self) -> DualPoint<f64> {
        DualPoint { s: self.s.to_float(), n: self.n }
    }
}

impl<S: Scalar> Add for DualPoint<S> {
    type Output = DualPoint<S>;
    fn add(self, rhs: Self) -> Self {
        DualPoint { s: self.s + rhs.s, n: self.n + rhs.n }
    }
}

impl<S: Scalar> Sub for DualPoint<S> {
    type Output = DualPoint<S>;
    fn sub(self, rhs: Self) -> Self {
        DualPoint { s: self.s - rhs.s, n: self.n - rhs.n }
    }
}

impl<S: Scalar> Neg for DualPoint<S> {
    type Output = DualPoint<S>;
    fn neg(self) -> Self {
        DualPoint { s: -self.s, n: -self.n }
    }
}

impl<S: Scalar> Serialize for DualPoint<S> {
    fn serialize<Z: Serializer>(&self, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
        (self.s.to_json(), self.n).serialize(z)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for DualPoint<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (s, n) = <(Value, i64)>::deserialize(d)?;
        Ok(DualPoint { s: S::from_json(&s).map_err(D::Error::custom)?, n })
    }
}

/// Elements of a discrete dual group that statistics act on.
pub trait DualElement: Clone + Debug + Send + Sync {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl<S: Scalar> DualElement for DualPoint<S> {
    fn zero() -> Self {
        DualPoint { s: S::zero(), n: 0 }
    }

    fn plus(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }
}

impl DualElement for i64 {
    fn zero() -> Self {
        0
    }

    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

/// An automorphism acting on the dual group `Y` through its adjoint.
pub trait DualAction<Y>: Clone + Debug + Send + Sync {
    fn act(&self, y: &Y) -> Y;
}

/// The value `(x, y) = exp(i(s t + n theta))` of the character `y` at `x`.
pub fn pair<S: Scalar>(x: &CylinderPoint, y: &DualPoint<S>) -> Complex64 {
    let phase = y.s.to_float() * x.t + y.n as f64 * x.theta;
    Complex64::from_polar(1.0, phase)
}

/// The matrix `(a, c; 0, p)` with `a != 0` and `p = +-1`.
///
/// On the dual it sends `(s, n)` to `(a s + c n, p n)`; on the cylinder the
/// adjoint sends `(t, theta)` to `(a t, c t + p theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderAuto<S = f64> {
    pub a: S,
    pub c: S,
    pub p: i64,
}

impl<S: Scalar> CylinderAuto<S> {
    pub fn new(a: S, c: S, p: i64) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidAutomorphism("a must be nonzero".into()));
        }
        if p != 1 && p != -1 {
            return Err(Error::InvalidAutomorphism(format!("p must be +1 or -1, got {p}")));
        }
        Ok(Self { a, c, p })
    }

    pub fn identity() -> Self {
        Self { a: S::one(), c: S::zero(), p: 1 }
    }

    /// `-I`: the map `x -> -x`.
    pub fn negation() -> Self {
        Self { a: -S::one(), c: S::zero(), p: -1 }
    }

    pub fn diagonal(a: S, p: i64) -> Result<Self> {
        Self::new(a, S::zero(), p)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn is_plus_minus_identity(&self) -> bool {
        *self == Self::identity() || *self == Self::negation()
    }

    pub fn apply_dual(&self, y: &DualPoint<S>) -> DualPoint<S> {
        DualPoint {
            s: self.a.clone() * y.s.clone() + self.c.clone() * S::from_i64(y.n),
            n: self.p * y.n,
        }
    }

    pub fn apply_point(&self, x: &CylinderPoint) -> CylinderPoint {
        let a = self.a.to_float();
        let c = self.c.to_float();
        CylinderPoint::new(a * x.t, c * x.t + self.p as f64 * x.theta)
    }

    /// Matrix product: acting on the dual, `compose(e1, e2)` is `e1 after e2`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a.clone() * other.a.clone(),
            c: self.a.clone() * other.c.clone() + self.c.clone() * S::from_i64(other.p),
            p: self.p * other.p,
        }
    }

    /// The same composition seen on the cylinder: `compose_points(d1, d2)`
    /// maps `x` to `d1(d2(x))`. Adjoints reverse the order of products.
    pub fn compose_points(&self, other: &Self) -> Self {
        other.compose(self)
    }

    pub fn invert(&self) -> Self {
        let a_inv = S::one() / self.a.clone();
        Self {
            c: -(self.c.clone() * S::from_i64(self.p)) * a_inv.clone(),
            a: a_inv,
            p: self.p,
        }
    }

    /// Whether the line `{(t, e^{i omega t})}` is mapped into itself,
    /// i.e. `c = (a - p) omega`.
    pub fn preserves_line(&self, omega: &S, tol: f64) -> bool {
        let rhs = (self.a.clone() - S::from_i64(self.p)) * omega.clone();
        self.c.near(&rhs, tol)
    }

    pub fn to_f64(&self) -> CylinderAuto<f64> {
        CylinderAuto { a: self.a.to_float(), c: self.c.to_float(), p: self.p }
    }
}

impl CylinderAuto<Rational> {
    /// Exact rational copy of a float automorphism (binary expansion).
    pub fn from_f64(e: &CylinderAuto<f64>) -> Result<Self> {
        let conv = |v: f64| {
            Rational::from_float(v).ok_or_else(|| Error::InvalidAutomorphism(format!("non-finite entry {v}")))
        };
        Self::new(conv(e.a)?, conv(e.c)?, e.p)
    }
}

impl<S: Scalar> DualAction<DualPoint<S>> for CylinderAuto<S> {
    fn act(&self, y: &DualPoint<S>) -> DualPoint<S> {
        self.apply_dual(y)
    }
}

impl<S: Scalar> Serialize for CylinderAuto<S> {
    fn serialize<Z: Serializer>(&self, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
        use serde::ser::SerializeMap;
        let mut m = z.serialize_map(Some(3))?;
        m.serialize_entry("a", &self.a.to_json())?;
        m.serialize_entry("c", &self.c.to_json())?;
        m.serialize_entry("p", &self.p)?;
        m.end()
    }
}

impl<'de, S: Scalar> Deserialize<'de> for CylinderAuto<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            a: Value,
            c: Value,
            p: i64,
        }
        let raw = Raw::deserialize(d)?;
        let a = S::from_json(&raw.a).map_err(D::Error::custom)?;
        let c = S::from_json(&raw.c).map_err(D::Error::custom)?;
        CylinderAuto::new(a, c, raw.p).map_err(D::Error::custom)
    }
}

/// An automorphism of `T` (only `I` and `-I` exist); acts on `Z` by `n -> p n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusAuto {
    pub p: i64,
}

impl TorusAuto {
    pub fn new(p: i64) -> Result<Self> {
        if p != 1 && p != -1 {
            return Err(Error::InvalidAutomorphism(format!("torus automorphism must be +-1, got {p}")));
        }
        Ok(Self { p })
    }

    /// The same map as an automorphism of the cylinder fixing the `R` factor.
    pub fn to_cylinder(&self) -> CylinderAuto<f64> {
        CylinderAuto { a: 1.0, c: 0.0, p: self.p }
    }
}

impl DualAction<i64> for TorusAuto {
    fn act(&self, y: &i64) -> i64 {
        self.p * y
    }
}

impl Serialize for TorusAuto {
    fn serialize<Z: Serializer>(&self, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
        z.serialize_i64(self.p)
    }
}

impl<'de> Deserialize<'de> for TorusAuto {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = i64::deserialize(d)?;
        TorusAuto::new(p).map_err(D::Error::custom)
    }
}
