//! Parameterised characteristic functions on `R x T` and on `T`.
//!
//! A [`CylinderCF`] is stored through its logarithm
//!
//! ```text
//! l(s, n) = -(sigma s^2 + kappa s n + lambda n^2) + i (tau s + theta n) + twist (1 - (-1)^n)
//! ```
//!
//! so convolution is parameter addition and every evaluation has a closed-form
//! logarithm with no branch ambiguity. The `twist` term is the characteristic
//! function of a signed measure on the two-element subgroup `{+1, -1}` of `T`.

use std::f64::consts::TAU;

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{wrap_angle, CylinderAuto, DualPoint};
use crate::scalar::Scalar;

/// `1 - (-1)^n`.
#[inline]
pub fn parity_gap(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        0.0
    } else {
        2.0
    }
}

/// Anything with a closed-form log-characteristic function on the dual `Y`.
pub trait LogCharFn<Y>: Send + Sync {
    fn log_eval(&self, y: &Y) -> Complex64;

    fn eval(&self, y: &Y) -> Complex64 {
        self.log_eval(y).exp()
    }
}

const PSD_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderCF {
    pub sigma: f64,
    pub kappa: f64,
    pub lambda: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub twist: f64,
}

impl CylinderCF {
    pub fn new(sigma: f64, kappa: f64, lambda: f64, tau: f64, theta: f64, twist: f64) -> Result<Self> {
        let cf = Self { sigma, kappa, lambda, tau, theta: wrap_angle(theta), twist };
        cf.validate()?;
        Ok(cf)
    }

    /// The point mass at `(tau, theta)`.
    pub fn degenerate(tau: f64, theta: f64) -> Self {
        Self { sigma: 0.0, kappa: 0.0, lambda: 0.0, tau, theta: wrap_angle(theta), twist: 0.0 }
    }

    /// Centered Gaussian on the line `{(t, e^{i omega t})}`: `exp(-sigma (s + omega n)^2)`.
    pub fn line_gaussian(sigma: f64, omega: f64) -> Self {
        Self {
            sigma,
            kappa: 2.0 * sigma * omega,
            lambda: sigma * omega * omega,
            tau: 0.0,
            theta: 0.0,
            twist: 0.0,
        }
    }

    /// Checks `sigma, lambda >= 0` and `4 sigma lambda >= kappa^2`.
    pub fn validate(&self) -> Result<()> {
        let fields = [self.sigma, self.kappa, self.lambda, self.tau, self.theta, self.twist];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCharFn("non-finite parameter".into()));
        }
        if self.sigma < 0.0 || self.lambda < 0.0 {
            return Err(Error::InvalidCharFn(format!(
                "sigma = {} and lambda = {} must be nonnegative",
                self.sigma, self.lambda
            )));
        }
        let det = 4.0 * self.sigma * self.lambda - self.kappa * self.kappa;
        let scale = (4.0 * self.sigma * self.lambda).max(self.kappa * self.kappa).max(1.0);
        if det < -PSD_REL_TOL * scale {
            return Err(Error::InvalidCharFn(format!(
                "quadratic part is not positive semidefinite: 4*sigma*lambda - kappa^2 = {det}"
            )));
        }
        Ok(())
    }

    /// `sigma s^2 + kappa s n + lambda n^2`.
    pub fn quadratic(&self, s: f64, n: i64) -> f64 {
        let n = n as f64;
        self.sigma * s * s + self.kappa * s * n + self.lambda * n * n
    }

    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let cf = Self {
            sigma: self.sigma + other.sigma,
            kappa: self.kappa + other.kappa,
            lambda: self.lambda + other.lambda,
            tau: self.tau + other.tau,
            theta: wrap_angle(self.theta + other.theta),
            twist: self.twist + other.twist,
        };
        cf.validate()?;
        Ok(cf)
    }

    /// Characteristic function of the reflected distribution `B -> mu(-B)`.
    /// The angle is negated without reduction so that reflecting twice is exact.
    pub fn reflect(&self) -> Self {
        Self { tau: -self.tau, theta: -self.theta, ..*self }
    }

    /// `mu * reflect(mu)`, whose characteristic function is `|mu^|^2`.
    pub fn symmetrize(&self) -> Self {
        Self {
            sigma: 2.0 * self.sigma,
            kappa: 2.0 * self.kappa,
            lambda: 2.0 * self.lambda,
            tau: 0.0,
            theta: 0.0,
            twist: 2.0 * self.twist,
        }
    }

    /// Distribution of `alpha xi`: the characteristic function `y -> mu^(alpha~ y)`.
    pub fn pushforward<S: Scalar>(&self, alpha: &CylinderAuto<S>) -> Self {
        let a = alpha.a.to_float();
        let c = alpha.c.to_float();
        let p = alpha.p as f64;
        Self {
            sigma: self.sigma * a * a,
            kappa: 2.0 * self.sigma * a * c + self.kappa * a * p,
            lambda: self.sigma * c * c + self.kappa * c * p + self.lambda,
            tau: self.tau * a,
            theta: wrap_angle(self.tau * c + self.theta * p),
            twist: self.twist,
        }
    }

    /// `phi(y) = -Re l(y)`.
    fn phi(&self, s: f64, n: i64) -> f64 {
        self.quadratic(s, n) - self.twist * parity_gap(n)
    }

    /// Largest violation of `phi(u+v) + phi(u-v) = 2 (phi(u) + phi(v))` on a 5x5 probe set.
    pub fn parallelogram_residual(&self) -> f64 {
        const PROBES: [(f64, i64); 5] = [(0.0, 0), (0.0, 1), (1.0, 0), (0.5, -1), (-1.0, 2)];
        let mut worst = 0.0f64;
        for &(su, nu) in &PROBES {
            for &(sv, nv) in &PROBES {
                let lhs = self.phi(su + sv, nu + nv) + self.phi(su - sv, nu - nv);
                let rhs = 2.0 * (self.phi(su, nu) + self.phi(sv, nv));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    pub fn is_gaussian(&self) -> bool {
        let gaussian = self.twist == 0.0;
        debug_assert!(
            !gaussian || self.parallelogram_residual() <= 1e-9 * (1.0 + self.sigma + self.kappa.abs() + self.lambda),
            "quadratic part fails the parallelogram law"
        );
        gaussian
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0 && self.kappa == 0.0 && self.lambda == 0.0 && self.twist == 0.0
    }
}

impl<S: Scalar> LogCharFn<DualPoint<S>> for CylinderCF {
    fn log_eval(&self, y: &DualPoint<S>) -> Complex64 {
        let s = y.s.to_float();
        let re = -self.quadratic(s, y.n) + self.twist * parity_gap(y.n);
        let im = self.tau * s + self.theta * y.n as f64;
        Complex64::new(re, im)
    }
}

/// Support of a symmetric Gaussian on the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "support")]
pub enum Support {
    /// Concentrated on `{(t, e^{i omega t})}`.
    Line { omega: f64 },
    /// The zero distribution parameters: a point mass.
    Point,
    /// Not carried by a one-parameter subgroup.
    NotALine,
}

/// Detects whether `exp(-(sigma s^2 + kappa s n + lambda n^2))` lives on a line.
pub fn support_line(cf: &CylinderCF) -> Result<Support> {
    if cf.twist != 0.0 || cf.tau != 0.0 || cf.theta != 0.0 {
        return Err(Error::InvalidCharFn("support_line needs a centered, untwisted characteristic function".into()));
    }
    if cf.sigma == 0.0 && cf.kappa == 0.0 && cf.lambda == 0.0 {
        return Ok(Support::Point);
    }
    if cf.sigma > 0.0 && (4.0 * cf.sigma * cf.lambda - cf.kappa * cf.kappa).abs() <= 1e-10 {
        return Ok(Support::Line { omega: cf.kappa / (2.0 * cf.sigma) });
    }
    Ok(Support::NotALine)
}

/// `exp(-sigma n^2 + i theta n + twist (1 - (-1)^n))` on `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusCF {
    pub sigma: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub twist: f64,
}

impl TorusCF {
    pub fn new(sigma: f64, theta: f64, twist: f64) -> Result<Self> {
        if !(sigma.is_finite() && theta.is_finite() && twist.is_finite()) {
            return Err(Error::InvalidCharFn("non-finite parameter".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidCharFn(format!("sigma = {sigma} must be nonnegative")));
        }
        Ok(Self { sigma, theta: wrap_angle(theta), twist })
    }

    pub fn degenerate(theta: f64) -> Self {
        Self { sigma: 0.0, theta: wrap_angle(theta), twist: 0.0 }
    }

    pub fn convolve(&self, other: &Self) -> Self {
        Self {
            sigma: self.sigma + other.sigma,
            theta: wrap_angle(self.theta + other.theta),
            twist: self.twist + other.twist,
        }
    }

    pub fn reflect(&self) -> Self {
        Self { theta: wrap_angle(-self.theta), ..*self }
    }

    pub fn symmetrize(&self) -> Self {
        Self { sigma: 2.0 * self.sigma, theta: 0.0, twist: 2.0 * self.twist }
    }

    pub fn modulus(&self, n: i64) -> f64 {
        let nf = n as f64;
        (-self.sigma * nf * nf + self.twist * parity_gap(n)).exp()
    }

    pub fn parallelogram_residual(&self) -> f64 {
        let phi = |n: i64| self.sigma * (n * n) as f64 - self.twist * parity_gap(n);
        let mut worst = 0.0f64;
        for u in -2..=2i64 {
            for v in -2..=2i64 {
                let r = phi(u + v) + phi(u - v) - 2.0 * (phi(u) + phi(v));
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    pub fn is_gaussian(&self) -> bool {
        let gaussian = self.twist == 0.0;
        debug_assert!(!gaussian || self.parallelogram_residual() <= 1e-9 * (1.0 + self.sigma));
        gaussian
    }

    /// The same law as a distribution on `{0} x T` inside the cylinder.
    pub fn to_cylinder(&self) -> CylinderCF {
        CylinderCF { sigma: 0.0, kappa: 0.0, lambda: self.sigma, tau: 0.0, theta: self.theta, twist: self.twist }
    }

    /// `sum_{|n| > truncation} |cf(n)|`, or infinity when it does not converge.
    pub fn tail_bound(&self, truncation: usize) -> f64 {
        if self.sigma == 0.0 {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        let mut n = truncation as i64 + 1;
        loop {
            let term = self.modulus(n);
            total += 2.0 * term;
            // terms decay faster than geometrically once past the peak
            if term < 1e-300 || (term < 1e-20 * total.max(1e-300) && n > truncation as i64 + 2) {
                break;
            }
            n += 1;
        }
        total
    }

    /// Density `f(phi) = (1/2pi) sum_{|n|<=T} cf(n) e^{-i n phi}` on an equispaced grid.
    pub fn density_grid(&self, truncation: usize, points: usize) -> Vec<Complex64> {
        let coeffs: Vec<Complex64> = (-(truncation as i64)..=truncation as i64).map(|n| self.eval(&n)).collect();
        (0..points)
            .map(|k| {
                let phi = TAU * k as f64 / points as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, c) in coeffs.iter().enumerate() {
                    let n = idx as f64 - truncation as f64;
                    acc += c * Complex64::from_polar(1.0, -n * phi);
                }
                acc / TAU
            })
            .collect()
    }

    /// Masses at `theta` and `theta + pi` when `sigma = 0`.
    pub fn atom_masses(&self) -> (f64, f64) {
        let e = (2.0 * self.twist).exp();
        ((1.0 + e) / 2.0, (1.0 - e) / 2.0)
    }
}

impl LogCharFn<i64> for TorusCF {
    fn log_eval(&self, n: &i64) -> Complex64 {
        let nf = *n as f64;
        Complex64::new(-self.sigma * nf * nf + self.twist * parity_gap(*n), self.theta * nf)
    }
}

/// Outcome of the Fourier-inversion positivity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Validity {
    Valid,
    Invalid { min_density: f64, max_imag: f64 },
    /// The truncated series cannot decide: its tail exceeds the tolerance.
    Inconclusive { tail_bound: f64 },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

pub const DENSITY_GRID_POINTS: usize = 1024;

/// Decides whether `cf` is the characteristic function of a probability measure.
///
/// With `sigma > 0` the density is recovered by Fourier inversion on a
/// 1024-point grid and must be nonnegative up to `tol`. With `sigma = 0` the
/// measure is two atoms on `{theta, theta + pi}` and the masses are read off
/// directly.
pub fn is_valid_probability(cf: &TorusCF, truncation: usize, tol: f64) -> Result<Validity> {
    if truncation < 1 {
        return Err(Error::InvalidCharFn("truncation must be at least 1".into()));
    }
    if cf.sigma == 0.0 {
        let (p, q) = cf.atom_masses();
        return Ok(if q >= -tol && p >= -tol {
            Validity::Valid
        } else {
            Validity::Invalid { min_density: q.min(p), max_imag: 0.0 }
        });
    }
    let tail = cf.tail_bound(truncation);
    if tail > tol {
        return Ok(Validity::Inconclusive { tail_bound: tail });
    }
    let density = cf.density_grid(truncation, DENSITY_GRID_POINTS);
    let min_re = density.iter().map(|d| d.re).fold(f64::INFINITY, f64::min);
    let max_im = density.iter().map(|d| d.im.abs()).fold(0.0, f64::max);
    Ok(if min_re >= -tol && max_im <= tol {
        Validity::Valid
    } else {
        Validity::Invalid { min_density: min_re, max_imag: max_im }
    })
}

/// A signed measure `p1 E_{+1} + pm1 E_{-1}` on the subgroup `{+1, -1}` of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Z2SignedMeasure {
    pub p1: f64,
    pub pm1: f64,
}

impl Z2SignedMeasure {
    /// The measure whose characteristic function is `exp(kappa (1 - (-1)^n))`.
    pub fn from_twist(kappa: f64) -> Self {
        let e = (2.0 * kappa).exp();
        Self { p1: (1.0 + e) / 2.0, pm1: (1.0 - e) / 2.0 }
    }

    pub fn unit() -> Self {
        Self { p1: 1.0, pm1: 0.0 }
    }

    pub fn cf(&self, n: i64) -> f64 {
        if n.rem_euclid(2) == 0 {
            self.p1 + self.pm1
        } else {
            self.p1 - self.pm1
        }
    }

    pub fn convolve(&self, other: &Self) -> Self {
        Self {
            p1: self.p1 * other.p1 + self.pm1 * other.pm1,
            pm1: self.p1 * other.pm1 + self.pm1 * other.p1,
        }
    }

    pub fn is_signed(&self) -> bool {
        self.p1 < 0.0 || self.pm1 < 0.0
    }
}

/// A characteristic function of either kind, tagged for JSON by `"kind"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CharFn {
    Cylinder(CylinderCF),
    Torus(TorusCF),
}

impl CharFn {
    pub fn is_gaussian(&self) -> bool {
        match self {
            CharFn::Cylinder(c) => c.is_gaussian(),
            CharFn::Torus(t) => t.is_gaussian(),
        }
    }
}
