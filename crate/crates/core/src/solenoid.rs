//! a-adic integers, the character group `H_a` of the solenoid and the
//! pullback of the independence equation to the rational dual `H_a x Z`.
//!
//! All arithmetic is exact and truncated at the length of the base prefix.

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Zero};
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::charfn::CylinderCF;
use crate::error::{Error, Result};
use crate::group::{CylinderAuto, DualAction, DualPoint};
use crate::independence::{cartesian_grid, independence_residual, ResidualReport, StatMatrix, GRID_SEED};
use crate::scalar::{format_rational, parse_rational, Rational};

/// A finite prefix `(a_0, ..., a_{k-1})` of the base sequence; its length is
/// the working precision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseSequence {
    a: Vec<u64>,
}

impl BaseSequence {
    pub fn new(a: Vec<u64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidBase("empty base sequence".into()));
        }
        if let Some(k) = a.iter().position(|&v| v < 2) {
            return Err(Error::InvalidBase(format!("entry {k} is {}, must be at least 2", a[k])));
        }
        Ok(Self { a })
    }

    /// `(a, a, ..., a)` of length `precision`.
    pub fn constant(a: u64, precision: usize) -> Result<Self> {
        Self::new(vec![a; precision])
    }

    /// `(start, start + 1, ...)` of length `precision`.
    pub fn ascending(start: u64, precision: usize) -> Result<Self> {
        Self::new((0..precision as u64).map(|k| start + k).collect())
    }

    pub fn entries(&self) -> &[u64] {
        &self.a
    }

    pub fn precision(&self) -> usize {
        self.a.len()
    }

    /// `a_0 a_1 ... a_n`.
    pub fn prefix_product(&self, n: usize) -> BigInt {
        self.a[..=n].iter().fold(BigInt::one(), |acc, &v| acc * BigInt::from(v))
    }

    /// The generator `1 / (a_0 ... a_n)` of `H_a`.
    pub fn generator(&self, n: usize) -> Rational {
        Rational::new(BigInt::one(), self.prefix_product(n))
    }
}

impl<'de> Deserialize<'de> for BaseSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<u64>),
            Object { a: Vec<u64> },
        }
        let a = match Raw::deserialize(d)? {
            Raw::List(a) | Raw::Object { a } => a,
        };
        BaseSequence::new(a).map_err(D::Error::custom)
    }
}

/// An element `(x_0, x_1, ...)` of `Delta_a` with `0 <= x_k < a_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdicInteger {
    pub digits: Vec<u64>,
}

impl AdicInteger {
    pub fn new(digits: Vec<u64>, base: &BaseSequence) -> Result<Self> {
        if digits.len() != base.precision() {
            return Err(Error::DimensionMismatch(format!(
                "{} digits for a base of precision {}",
                digits.len(),
                base.precision()
            )));
        }
        if let Some(k) = digits.iter().zip(&base.a).position(|(x, a)| x >= a) {
            return Err(Error::InvalidBase(format!("digit {k} is {}, must be below {}", digits[k], base.a[k])));
        }
        Ok(Self { digits })
    }

    pub fn zero(base: &BaseSequence) -> Self {
        Self { digits: vec![0; base.precision()] }
    }

    pub fn random<R: Rng + ?Sized>(base: &BaseSequence, rng: &mut R) -> Self {
        Self { digits: base.a.iter().map(|&a| rng.random_range(0..a)).collect() }
    }
}

/// Digit-wise sum with carries: `x_k + y_k + t_{k-1} = t_k a_k + z_k`, with
/// `t_{-1} = 0`. Returns the truncated sum and the carries `t_k`.
pub fn adic_add_with_carries(x: &AdicInteger, y: &AdicInteger, base: &BaseSequence) -> Result<(AdicInteger, Vec<u8>)> {
    let k = base.precision();
    if x.digits.len() != k || y.digits.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "digit counts {} and {} for a base of precision {k}",
            x.digits.len(),
            y.digits.len()
        )));
    }
    let mut digits = Vec::with_capacity(k);
    let mut carries = Vec::with_capacity(k);
    let mut carry = 0u64;
    for ((xk, yk), ak) in x.digits.iter().zip(&y.digits).zip(&base.a) {
        let total = xk + yk + carry;
        carry = total / ak;
        digits.push(total % ak);
        carries.push(carry as u8);
    }
    Ok((AdicInteger { digits }, carries))
}

pub fn adic_add(x: &AdicInteger, y: &AdicInteger, base: &BaseSequence) -> Result<AdicInteger> {
    adic_add_with_carries(x, y, base).map(|(z, _)| z)
}

/// Smallest `n <= depth_limit` with `denominator(q) | a_0 ... a_n`.
pub fn ha_member(q: &Rational, base: &BaseSequence, depth_limit: usize) -> Option<usize> {
    let den = q.denom();
    let last = depth_limit.min(base.precision() - 1);
    let mut prod = BigInt::one();
    for n in 0..=last {
        prod *= BigInt::from(base.a[n]);
        if prod.is_multiple_of(den) {
            return Some(n);
        }
    }
    None
}

/// An element `m / (a_0 ... a_n)` of `H_a` with its witness depth `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaRational {
    pub value: Rational,
    pub depth: usize,
}

impl HaRational {
    pub fn new(value: Rational, base: &BaseSequence) -> Result<Self> {
        match ha_member(&value, base, base.precision() - 1) {
            Some(depth) => Ok(Self { value, depth }),
            None => Err(Error::NotInHa(format!(
                "{} is not in H_a up to depth {}",
                format_rational(&value),
                base.precision() - 1
            ))),
        }
    }
}

impl Serialize for HaRational {
    fn serialize<Z: Serializer>(&self, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
        #[derive(Serialize)]
        struct Raw {
            value: String,
            depth: usize,
        }
        Raw { value: format_rational(&self.value), depth: self.depth }.serialize(z)
    }
}

impl<'de> Deserialize<'de> for HaRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            value: String,
            depth: usize,
        }
        let raw = Raw::deserialize(d)?;
        let value = parse_rational(&raw.value).map_err(D::Error::custom)?;
        Ok(HaRational { value, depth: raw.depth })
    }
}

/// Largest generator index whose images under `a` and `1/a` are checked.
///
/// Membership of `a / (a_0 ... a_k)` may need factors beyond `a_k`; only the
/// first half of the prefix is tested so the second half can serve as witness.
fn generator_check_depth(base: &BaseSequence) -> usize {
    (base.precision() - 1) / 2
}

/// Whether multiplication by `a` and by `1/a` keeps the generators
/// `1/(a_0 ... a_k)`, `k <= (precision - 1) / 2`, inside `H_a`.
///
/// Sound up to the working precision, not complete.
pub fn is_ha_multiplier(a: &Rational, base: &BaseSequence) -> std::result::Result<(), String> {
    if a.is_zero() {
        return Err("multiplier is zero".into());
    }
    let limit = base.precision() - 1;
    let inv = a.recip();
    for k in 0..=generator_check_depth(base) {
        let g = base.generator(k);
        for (name, m) in [("a", a), ("1/a", &inv)] {
            let image = m * &g;
            if ha_member(&image, base, limit).is_none() {
                return Err(format!(
                    "{name} = {} sends 1/{} to {}, outside H_a",
                    format_rational(m),
                    base.prefix_product(k),
                    format_rational(&image)
                ));
            }
        }
    }
    Ok(())
}

/// `(r, n) -> (a r + c n, p n)` on `H_a x Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolenoidAuto {
    #[serde(with = "crate::scalar::serde_rational")]
    pub a: Rational,
    pub c: HaRational,
    pub p: i64,
}

impl SolenoidAuto {
    pub fn new(a: Rational, c: Rational, p: i64, base: &BaseSequence) -> Result<Self> {
        CylinderAuto::new(a.clone(), c.clone(), p)?;
        is_ha_multiplier(&a, base).map_err(Error::NotInHa)?;
        let c = HaRational::new(c, base)?;
        Ok(Self { a, c, p })
    }

    pub fn from_cylinder(e: &CylinderAuto<Rational>, base: &BaseSequence) -> Result<Self> {
        Self::new(e.a.clone(), e.c.clone(), e.p, base)
    }

    pub fn to_cylinder(&self) -> CylinderAuto<Rational> {
        CylinderAuto { a: self.a.clone(), c: self.c.value.clone(), p: self.p }
    }
}

impl DualAction<DualPoint<Rational>> for SolenoidAuto {
    fn act(&self, y: &DualPoint<Rational>) -> DualPoint<Rational> {
        DualPoint { s: &self.a * &y.s + &self.c.value * Rational::from_integer(BigInt::from(y.n)), n: self.p * y.n }
    }
}

/// Checks every entry of `m` against `base`, naming the first offender.
pub fn solenoid_matrix(m: &StatMatrix<CylinderAuto<Rational>>, base: &BaseSequence) -> Result<StatMatrix<SolenoidAuto>> {
    let mut rows = Vec::with_capacity(m.n());
    for (i, row) in m.rows().iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, e) in row.iter().enumerate() {
            let entry = SolenoidAuto::from_cylinder(e, base)
                .map_err(|err| Error::NotInHa(format!("entry ({}, {}): {err}", i + 1, j + 1)))?;
            out.push(entry);
        }
        rows.push(out);
    }
    StatMatrix::new(rows)
}

/// Tuple cap for rational grids; exact arithmetic costs far more per tuple
/// than the float grids.
pub const HA_GRID_CAP: usize = 10_000;

/// The `s`-coordinates `0, +-1` and `+-1/(a_0 ... a_k)` for `k <= depth`.
pub fn ha_points(base: &BaseSequence, depth: usize) -> Vec<Rational> {
    let mut pts = vec![Rational::zero(), Rational::one(), -Rational::one()];
    for k in 0..=depth.min(base.precision() - 1) {
        let g = base.generator(k);
        pts.push(g.clone());
        pts.push(-g);
    }
    pts
}

/// Tuples of points of `H_a x Z` with `s` from [`ha_points`] and `|n| <= 2`.
pub fn ha_grid(base: &BaseSequence, slots: usize, depth: usize) -> Vec<Vec<DualPoint<Rational>>> {
    let s = ha_points(base, depth);
    let points: Vec<DualPoint<Rational>> =
        (-2..=2).flat_map(|n| s.iter().map(move |s| DualPoint::new(s.clone(), n))).collect();
    cartesian_grid(&points, slots, HA_GRID_CAP, GRID_SEED)
}

/// The independence equation for cylinder characteristic functions restricted
/// to the rational dual `H_a x Z`, with every entry of `m` checked against
/// `base` first.
pub fn pullback_residual(
    cfs: &[CylinderCF],
    m: &StatMatrix<CylinderAuto<Rational>>,
    base: &BaseSequence,
    grid_depth: usize,
    workers: usize,
) -> Result<ResidualReport<DualPoint<Rational>>> {
    let sm = solenoid_matrix(m, base)?;
    let grid = ha_grid(base, sm.n(), grid_depth);
    independence_residual(cfs, &sm, &grid, workers)
}
