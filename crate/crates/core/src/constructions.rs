//! Explicit families: independent Gaussian triples on a line of the cylinder,
//! twisted pairs and a four-variable non-Gaussian family on `T`, the signed
//! measures on `{+1, -1}`, and the degenerate three-statistic scenario on `T`.
//!
//! Every constructor verifies the property it advertises before returning.

use num::traits::{Signed, Zero};
use serde::Serialize;

use crate::charfn::{is_valid_probability, support_line, CylinderCF, Support, TorusCF, Validity, Z2SignedMeasure};
use crate::error::{Error, Result};
use crate::group::{CylinderAuto, TorusAuto};
use crate::independence::{
    cylinder_grid, independence_residual, solve_sigmas, torus_grid, GridKind, StatMatrix, GRID_CAP, GRID_SEED,
};
use crate::linalg;
use crate::scalar::{format_rational, Rational, Scalar};

/// Residual bound that self-checks certify.
pub const CERT_TOL: f64 = 1e-12;

pub(crate) const MAX_TRUNCATION: usize = 4096;
pub(crate) const VALIDITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Remark3Family {
    pub omega: Rational,
    pub sigmas: [Rational; 3],
    pub matrix: StatMatrix<CylinderAuto<Rational>>,
    pub cfs: Vec<CylinderCF>,
    pub residual: f64,
}

/// Sign choices `p_i` (for the `alpha_i`) and `q_i` (for the `beta_i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signs {
    pub p: [i64; 2],
    pub q: [i64; 2],
}

impl Default for Signs {
    fn default() -> Self {
        Self { p: [1, 1], q: [1, 1] }
    }
}

/// Independent Gaussian triple supported by the line `{(t, e^{i omega t})}`.
///
/// With `alpha_i = (a_i, (a_i - p_i) omega; 0, p_i)` and
/// `beta_i = (b_i, (b_i - q_i) omega; 0, q_i)` every automorphism maps the
/// line into itself, and `mu_j^(s, n) = exp(-sigma_j (s + omega n)^2)` with
/// the positive `sigma` solving the coefficient system.
pub fn remark3_family(
    omega: &Rational,
    a: [&Rational; 2],
    b: [&Rational; 2],
    signs: Signs,
    sigma_scale: f64,
) -> Result<Remark3Family> {
    if !(sigma_scale > 0.0 && sigma_scale.is_finite()) {
        return Err(Error::InvalidCharFn(format!("sigma_scale = {sigma_scale} must be positive")));
    }
    let sigmas = solve_sigmas(a[0], a[1], b[0], b[1])?.ok_or(Error::NoPositiveSigma)?;
    let line = |x: &Rational, p: i64| -> Result<CylinderAuto<Rational>> {
        let c = (x - Rational::from_i64(p)) * omega;
        CylinderAuto::new(x.clone(), c, p)
    };
    let id = CylinderAuto::<Rational>::identity();
    let matrix = StatMatrix::new(vec![
        vec![id.clone(), id.clone(), id.clone()],
        vec![line(a[0], signs.p[0])?, line(a[1], signs.p[1])?, id.clone()],
        vec![line(b[0], signs.q[0])?, line(b[1], signs.q[1])?, id],
    ])?;
    let w = omega.to_float();
    let cfs: Vec<CylinderCF> = sigmas.iter().map(|s| CylinderCF::line_gaussian(s.to_float() * sigma_scale, w)).collect();

    for row in matrix.rows() {
        for e in row {
            if !e.preserves_line(omega, 0.0) {
                return Err(Error::SelfCheckFailed(format!("entry {e:?} does not preserve the line")));
            }
        }
    }
    for (j, cf) in cfs.iter().enumerate() {
        match support_line(cf)? {
            Support::Line { omega: got } if (got - w).abs() <= 1e-10 * (1.0 + w.abs()) => {}
            other => return Err(Error::SelfCheckFailed(format!("factor {} has support {other:?}", j + 1))),
        }
    }
    let grid = cylinder_grid(3, GridKind::Default, GRID_CAP, GRID_SEED);
    let residual = independence_residual(&cfs, &matrix.to_f64(), &grid, 1)?.residual;
    let a_max = [a[0], a[1], b[0], b[1]].iter().map(|x| x.to_float().abs()).fold(1.0, f64::max);
    let magnitude = cfs.iter().map(|c| c.sigma).sum::<f64>() * (1.0 + w.abs()).powi(2) * (1.0 + a_max).powi(2);
    if !(residual <= CERT_TOL * magnitude.max(1.0)) {
        return Err(Error::SelfCheckFailed(format!("independence residual {residual:e}")));
    }
    Ok(Remark3Family { omega: omega.clone(), sigmas, matrix, cfs, residual })
}

/// Smallest truncation (doubling from 50) at which the series tail is below `tol`.
pub(crate) fn settle_validity(cf: &TorusCF) -> Result<Validity> {
    let mut t = 50;
    loop {
        let v = is_valid_probability(cf, t, VALIDITY_TOL)?;
        match v {
            Validity::Inconclusive { .. } if t < MAX_TRUNCATION => t *= 2,
            _ => return Ok(v),
        }
    }
}

pub(crate) fn require_valid(cf: &TorusCF, label: &str) -> Result<()> {
    match settle_validity(cf)? {
        Validity::Valid => Ok(()),
        Validity::Invalid { min_density, .. } => Err(Error::InvalidProbability(format!(
            "{label} (sigma = {}, twist = {}) has density/mass down to {min_density:e}",
            cf.sigma, cf.twist
        ))),
        Validity::Inconclusive { tail_bound } => Err(Error::InvalidProbability(format!(
            "{label}: positivity undecided, series tail {tail_bound:e}"
        ))),
    }
}

pub fn sum_difference_matrix() -> StatMatrix<TorusAuto> {
    StatMatrix::from_signs(&[vec![1, 1], vec![1, -1]]).expect("fixed shape")
}

/// `exp(-sigma n^2 + i theta_1 n + kappa (1 - (-1)^n))` and
/// `exp(-sigma n^2 + i theta_2 n - kappa (1 - (-1)^n))`, whose sum and
/// difference are independent.
pub fn lemma4_pair(sigma: f64, theta1: f64, theta2: f64, kappa: f64) -> Result<(TorusCF, TorusCF)> {
    let first = TorusCF::new(sigma, theta1, kappa)?;
    let second = TorusCF::new(sigma, theta2, -kappa)?;
    require_valid(&first, "first member")?;
    require_valid(&second, "second member")?;
    let grid = torus_grid(2, GridKind::Dense);
    let r = independence_residual(&[first, second], &sum_difference_matrix(), &grid, 1)?.residual;
    if !(r <= CERT_TOL * (1.0 + 144.0 * sigma)) {
        return Err(Error::SelfCheckFailed(format!("sum/difference residual {r:e}")));
    }
    Ok((first, second))
}

/// Rows `++++`, `++--`, `+-+-`, `+--+`.
pub fn hadamard_matrix() -> StatMatrix<TorusAuto> {
    StatMatrix::from_signs(&[vec![1, 1, 1, 1], vec![1, 1, -1, -1], vec![1, -1, 1, -1], vec![1, -1, -1, 1]])
        .expect("fixed shape")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Remark4Family {
    pub matrix: StatMatrix<TorusAuto>,
    pub cfs: Vec<TorusCF>,
    pub residual: f64,
}

/// Four independent non-Gaussian variables on `T` with independent
/// Hadamard statistics: `mu_1 = mu_2` carry twist `kappa`, `mu_3 = mu_4`
/// carry `-kappa`.
pub fn remark4_counterexample(sigma: f64, kappa: f64) -> Result<Remark4Family> {
    if kappa == 0.0 {
        return Err(Error::NotACounterexample("kappa = 0 gives Gaussian factors".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidCharFn(format!("sigma = {sigma} must be positive")));
    }
    let g = TorusCF::new(sigma, 0.0, kappa)?;
    let h = TorusCF::new(sigma, 0.0, -kappa)?;
    require_valid(&g, "mu_1 = mu_2")?;
    require_valid(&h, "mu_3 = mu_4")?;
    let cfs = vec![g, g, h, h];
    if cfs.iter().any(|c| c.is_gaussian()) {
        return Err(Error::NotACounterexample("a factor is Gaussian".into()));
    }
    let matrix = hadamard_matrix();
    let residual = independence_residual(&cfs, &matrix, &torus_grid(4, GridKind::Default), 1)?.residual;
    if !(residual <= CERT_TOL * (1.0 + 36.0 * sigma)) {
        return Err(Error::SelfCheckFailed(format!("Hadamard residual {residual:e}")));
    }
    Ok(Remark4Family { matrix, cfs, residual })
}

pub fn z2_signed_measure(kappa: f64) -> Z2SignedMeasure {
    Z2SignedMeasure::from_twist(kappa)
}

/// Statistics `x1 + x2 + x3`, `x1 - x2 + x3`, `-x1 + x2 + x3` on `T`.
pub fn lemma5_matrix() -> StatMatrix<TorusAuto> {
    StatMatrix::from_signs(&[vec![1, 1, 1], vec![1, -1, 1], vec![-1, 1, 1]]).expect("fixed shape")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma5Verdict {
    /// Row `(i, k)` holds the coefficients of `sigma_j` in the `n_i n_k` term.
    pub system: Vec<Vec<String>>,
    pub nullspace_dim: usize,
    pub sigma: Vec<String>,
    pub verdict: &'static str,
}

/// For Gaussian parts `sigma_j n^2`, independence of statistics `i` and `k`
/// forces `sum_j e_ij e_kj sigma_j = 0`; the three pairs give a nonsingular
/// system, so only `sigma = 0` survives.
pub fn lemma5_scenario() -> Lemma5Verdict {
    let m = lemma5_matrix();
    let mut system = Vec::new();
    for i in 0..3 {
        for k in i + 1..3 {
            system.push((0..3).map(|j| Rational::from_i64(m.get(i, j).p * m.get(k, j).p)).collect::<Vec<_>>());
        }
    }
    let ns = linalg::nullspace(&system);
    let sigma = match ns.first() {
        None => vec![Rational::zero(); 3],
        // a positive null vector would be a nondegenerate solution
        Some(v) if v.iter().all(|x| x.is_positive()) || v.iter().all(|x| x.is_negative()) => {
            v.iter().map(|x| x.abs()).collect()
        }
        Some(_) => vec![Rational::zero(); 3],
    };
    Lemma5Verdict {
        system: system.iter().map(|r| r.iter().map(format_rational).collect()).collect(),
        nullspace_dim: ns.len(),
        verdict: if ns.is_empty() { "only degenerate solutions" } else { "nondegenerate solutions exist" },
        sigma: sigma.iter().map(format_rational).collect(),
    }
}
