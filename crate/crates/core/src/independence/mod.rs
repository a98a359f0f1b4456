//! Independence of linear statistics `L_i = sum_j alpha_ij xi_j` through the
//! characteristic-function equation
//!
//! ```text
//! prod_j mu_j^(sum_i alpha~_ij y_i) = prod_i prod_j mu_j^(alpha~_ij y_i)
//! ```
//!
//! together with the algebraic checkers for the three-statistic case.

mod conditions;
mod grid;
mod normal_form;
mod subgroups;
mod system;

pub use conditions::{
    corner_det, cross_det, identity_polynomial, lemma2_conditions, sign_row, solve_sigmas, ConditionReport,
    SIGN_TABLE,
};
pub use grid::{cartesian_grid, cylinder_grid, torus_grid, GridKind, GRID_CAP, GRID_SEED};
pub use normal_form::{reduce_to_normal_form, NormalFormTransform};
pub use subgroups::{classify_lmn, lmn_case, LmnTags, SubgroupTag};
pub use system::{
    gaussian_system_check, nu_support_check, support_identity, NamedResidual, NuSupportReport, SystemReport,
};

use std::f64::consts::{PI, TAU};

use num::complex::Complex64;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::charfn::LogCharFn;
use crate::error::{Error, Result};
use crate::group::{CylinderAuto, DualAction, DualElement, TorusAuto};
use crate::scalar::{Rational, Scalar};

/// An `n x n` array of automorphisms; row `i` defines `L_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StatMatrix<A> {
    entries: Vec<Vec<A>>,
}

impl<A: Clone> StatMatrix<A> {
    pub fn new(entries: Vec<Vec<A>>) -> Result<Self> {
        let n = entries.len();
        if n < 2 {
            return Err(Error::DimensionMismatch(format!("need at least 2 statistics, got {n}")));
        }
        if let Some(bad) = entries.iter().position(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, expected {n}",
                bad + 1,
                entries[bad].len()
            )));
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &A {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<A>] {
        &self.entries
    }

    pub fn map<B: Clone>(&self, f: impl Fn(&A) -> B) -> StatMatrix<B> {
        StatMatrix { entries: self.entries.iter().map(|r| r.iter().map(&f).collect()).collect() }
    }

    /// Reorders the variables `xi_j`: column `k` of the result is column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        StatMatrix {
            entries: self.entries.iter().map(|r| perm.iter().map(|&k| r[k].clone()).collect()).collect(),
        }
    }
}

impl<'de, A: Clone + Deserialize<'de>> Deserialize<'de> for StatMatrix<A> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        StatMatrix::new(Vec::<Vec<A>>::deserialize(d)?).map_err(D::Error::custom)
    }
}

impl<S: Scalar> StatMatrix<CylinderAuto<S>> {
    pub fn to_f64(&self) -> StatMatrix<CylinderAuto<f64>> {
        self.map(|e| e.to_f64())
    }
}

impl StatMatrix<CylinderAuto<f64>> {
    pub fn to_exact(&self) -> Result<StatMatrix<CylinderAuto<Rational>>> {
        let entries = self
            .entries
            .iter()
            .map(|r| r.iter().map(CylinderAuto::from_f64).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(StatMatrix { entries })
    }
}

impl StatMatrix<TorusAuto> {
    /// Builds a torus matrix from a table of signs.
    pub fn from_signs(signs: &[Vec<i64>]) -> Result<Self> {
        let entries = signs
            .iter()
            .map(|r| r.iter().map(|&p| TorusAuto::new(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Reduces an imaginary log-difference into `[-pi, pi]`.
fn reduce_phase(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r < -PI {
        r + TAU
    } else {
        r
    }
}

/// `log LHS - log RHS` of the independence equation at one tuple.
pub fn log_defect<Y, A, C>(cfs: &[C], m: &StatMatrix<A>, tuple: &[Y]) -> Complex64
where
    Y: DualElement,
    A: DualAction<Y>,
    C: LogCharFn<Y>,
{
    let n = m.n();
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for (j, cf) in cfs.iter().enumerate() {
        let mut arg = Y::zero();
        for (i, y) in tuple.iter().enumerate() {
            let image = m.get(i, j).act(y);
            let rhs = cf.log_eval(&image);
            re.add(-rhs.re);
            im.add(-rhs.im);
            arg = arg.plus(&image);
        }
        let lhs = cf.log_eval(&arg);
        re.add(lhs.re);
        im.add(lhs.im);
        debug_assert_eq!(tuple.len(), n);
    }
    Complex64::new(re.value(), reduce_phase(im.value()))
}

/// Outcome of evaluating the independence equation over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<Y> {
    pub residual: f64,
    pub grid_size: usize,
    pub worst_index: usize,
    pub worst_tuple: Vec<Y>,
}

/// Maximum of `|log LHS - log RHS|` over `grid`, evaluated on `workers` threads.
///
/// The per-tuple values are collected in grid order and reduced sequentially,
/// ties going to the lowest index, so the report does not depend on `workers`.
pub fn independence_residual<Y, A, C>(
    cfs: &[C],
    m: &StatMatrix<A>,
    grid: &[Vec<Y>],
    workers: usize,
) -> Result<ResidualReport<Y>>
where
    Y: DualElement,
    A: DualAction<Y>,
    C: LogCharFn<Y>,
{
    let n = m.n();
    if cfs.len() != n {
        return Err(Error::DimensionMismatch(format!("{} characteristic functions for {n} statistics", cfs.len())));
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = grid.iter().position(|t| t.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "grid tuple {bad} has {} entries, expected {n}",
            grid[bad].len()
        )));
    }
    let eval = || -> Vec<f64> { grid.par_iter().map(|t| log_defect(cfs, m, t).norm()).collect() };
    let values = if workers == 1 {
        grid.iter().map(|t| log_defect(cfs, m, t).norm()).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        pool.install(eval)
    };
    let mut worst_index = 0;
    let mut residual = values[0];
    for (k, &v) in values.iter().enumerate().skip(1) {
        // a NaN anywhere must surface as the worst value
        if v > residual || (v.is_nan() && !residual.is_nan()) {
            residual = v;
            worst_index = k;
        }
    }
    Ok(ResidualReport { residual, grid_size: grid.len(), worst_index, worst_tuple: grid[worst_index].clone() })
}
