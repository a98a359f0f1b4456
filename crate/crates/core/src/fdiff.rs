//! Functions sampled on a rectangular grid of `R x Z`, finite differences
//! `D_h f(y) = f(y + h) - f(y)` and the structure fits built from them.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num::complex::Complex64;
use num::traits::Zero;
use serde::{Deserialize, Serialize};

use crate::charfn::CylinderCF;
use crate::error::{Error, Result};
use crate::group::{CylinderAuto, DualPoint};
use crate::independence::{LmnTags, StatMatrix, SubgroupTag};
use crate::scalar::{Rational, Scalar};

/// Values on `{s0 + k hs : 0 <= k < ns} x {n_min..=n_max}`, stored row by row in `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    s0: f64,
    hs: f64,
    ns: usize,
    n_min: i64,
    n_max: i64,
    values: Vec<Complex64>,
}

/// s in [-5, 5] with step 0.25 and n in [-6, 6].
pub const DEFAULT_S_RANGE: (f64, f64, f64) = (-5.0, 5.0, 0.25);
pub const DEFAULT_N_RANGE: (i64, i64) = (-6, 6);

const SPACING_TOL: f64 = 1e-9;

impl GridFunction {
    pub fn new(s0: f64, hs: f64, ns: usize, n_min: i64, n_max: i64, values: Vec<Complex64>) -> Result<Self> {
        if !(hs > 0.0) || ns == 0 || n_max < n_min {
            return Err(Error::GridTooSmall(format!("ns = {ns}, hs = {hs}, n in [{n_min}, {n_max}]")));
        }
        let rows = (n_max - n_min + 1) as usize;
        if values.len() != rows * ns {
            return Err(Error::DimensionMismatch(format!("{} values for a {rows} x {ns} grid", values.len())));
        }
        Ok(Self { s0, hs, ns, n_min, n_max, values })
    }

    /// Samples `f` on `s = lo, lo + step, ..., hi` and `n = n_lo..=n_hi`.
    pub fn sample(s_range: (f64, f64, f64), n_range: (i64, i64), f: impl Fn(f64, i64) -> Complex64) -> Result<Self> {
        let (lo, hi, step) = s_range;
        if !(step > 0.0) || hi < lo {
            return Err(Error::GridTooSmall(format!("s range {lo}..{hi} step {step}")));
        }
        let ns = ((hi - lo) / step + SPACING_TOL).floor() as usize + 1;
        let mut values = Vec::with_capacity(ns * (n_range.1 - n_range.0 + 1).max(0) as usize);
        for n in n_range.0..=n_range.1 {
            for k in 0..ns {
                values.push(f(lo + k as f64 * step, n));
            }
        }
        Self::new(lo, step, ns, n_range.0, n_range.1, values)
    }

    pub fn sample_real(s_range: (f64, f64, f64), n_range: (i64, i64), f: impl Fn(f64, i64) -> f64) -> Result<Self> {
        Self::sample(s_range, n_range, |s, n| Complex64::new(f(s, n), 0.0))
    }

    pub fn sample_default(f: impl Fn(f64, i64) -> f64) -> Self {
        Self::sample_real(DEFAULT_S_RANGE, DEFAULT_N_RANGE, f).expect("default grid is nonempty")
    }

    /// `psi(s, n) = -log nu^(s, n)` of the symmetrization of `cf`.
    pub fn from_psi(cf: &CylinderCF, s_range: (f64, f64, f64), n_range: (i64, i64)) -> Result<Self> {
        let sym = cf.symmetrize();
        Self::sample_real(s_range, n_range, |s, n| {
            sym.quadratic(s, n) - sym.twist * crate::charfn::parity_gap(n)
        })
    }

    pub fn s_step(&self) -> f64 {
        self.hs
    }

    pub fn s_values(&self) -> Vec<f64> {
        (0..self.ns).map(|k| self.s_at(k)).collect()
    }

    pub fn s_at(&self, k: usize) -> f64 {
        self.s0 + k as f64 * self.hs
    }

    pub fn n_range(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    pub fn len_s(&self) -> usize {
        self.ns
    }

    pub fn at(&self, k: usize, n: i64) -> Complex64 {
        self.values[(n - self.n_min) as usize * self.ns + k]
    }

    pub fn row(&self, n: i64) -> &[Complex64] {
        let start = (n - self.n_min) as usize * self.ns;
        &self.values[start..start + self.ns]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Index of `s` on the grid, if it is a node.
    pub fn s_index(&self, s: f64) -> Option<usize> {
        let x = (s - self.s0) / self.hs;
        let k = x.round();
        if (x - k).abs() <= SPACING_TOL && k >= 0.0 && (k as usize) < self.ns {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn get(&self, s: f64, n: i64) -> Option<Complex64> {
        if n < self.n_min || n > self.n_max {
            return None;
        }
        self.s_index(s).map(|k| self.at(k, n))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64, i64, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for n in self.n_min..=self.n_max {
            for k in 0..self.ns {
                let idx = (n - self.n_min) as usize * self.ns + k;
                out.values[idx] = f(self.s_at(k), n, self.values[idx]);
            }
        }
        out
    }

    /// Pointwise sum on identical grids.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.s0, self.hs, self.ns, self.n_min, self.n_max) != (other.s0, other.hs, other.ns, other.n_min, other.n_max) {
            return Err(Error::DimensionMismatch("grids differ".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    /// Writes the `s,n,re,im` table (the header comes from the row type).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for n in self.n_min..=self.n_max {
            for k in 0..self.ns {
                let v = self.at(k, n);
                wr.serialize(CsvRow { s: self.s_at(k), n, re: v.re, im: v.im })?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads an `s,n,re,im` table covering a full uniform grid.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.iter().map(str::trim).collect::<Vec<_>>() != ["s", "n", "re", "im"] {
            return Err(Error::Parse(format!("expected header s,n,re,im, got {}", header.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows: Vec<CsvRow> = Vec::new();
        for rec in rd.deserialize() {
            rows.push(rec?);
        }
        if rows.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut s_vals: Vec<f64> = rows.iter().map(|r| r.s).collect();
        s_vals.sort_by(f64::total_cmp);
        s_vals.dedup_by(|a, b| (*a - *b).abs() <= SPACING_TOL);
        let s0 = s_vals[0];
        let hs = if s_vals.len() > 1 { s_vals[1] - s_vals[0] } else { 1.0 };
        for w in s_vals.windows(2) {
            if ((w[1] - w[0]) - hs).abs() > SPACING_TOL * hs.max(1.0) {
                return Err(Error::Parse("s values are not uniformly spaced".into()));
            }
        }
        let n_min = rows.iter().map(|r| r.n).min().unwrap();
        let n_max = rows.iter().map(|r| r.n).max().unwrap();
        let ns = s_vals.len();
        let mut cells: BTreeMap<(i64, usize), Complex64> = BTreeMap::new();
        for r in &rows {
            let k = ((r.s - s0) / hs).round() as usize;
            if cells.insert((r.n, k), Complex64::new(r.re, r.im)).is_some() {
                return Err(Error::Parse(format!("duplicate cell s = {}, n = {}", r.s, r.n)));
            }
        }
        let expected = ns * (n_max - n_min + 1) as usize;
        if cells.len() != expected {
            return Err(Error::Parse(format!("grid has {} of {expected} cells", cells.len())));
        }
        let values = cells.into_values().collect();
        Self::new(s0, hs, ns, n_min, n_max, values)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    s: f64,
    n: i64,
    re: f64,
    im: f64,
}

/// `D_h f` on the part of the grid where `y + h` is still a node.
pub fn delta(f: &GridFunction, h: &DualPoint) -> Result<GridFunction> {
    let m = (h.s / f.hs).round();
    if (m * f.hs - h.s).abs() > SPACING_TOL * f.hs {
        return Err(Error::OffGrid(format!("({}, {})", h.s, h.n)));
    }
    let m = m as i64;
    let ns_new = f.ns as i64 - m.abs();
    let rows_new = f.n_max - f.n_min + 1 - h.n.abs();
    if ns_new <= 0 || rows_new <= 0 {
        return Err(Error::GridTooSmall(format!("step ({}, {}) leaves no nodes", h.s, h.n)));
    }
    let k_lo = if m < 0 { -m } else { 0 } as usize;
    let n_lo = if h.n < 0 { f.n_min - h.n } else { f.n_min };
    let n_hi = n_lo + rows_new - 1;
    let mut values = Vec::with_capacity(ns_new as usize * rows_new as usize);
    for n in n_lo..=n_hi {
        for k in k_lo..k_lo + ns_new as usize {
            let shifted = (k as i64 + m) as usize;
            values.push(f.at(shifted, n + h.n) - f.at(k, n));
        }
    }
    GridFunction::new(f.s_at(k_lo), f.hs, ns_new as usize, n_lo, n_hi, values)
}

/// `D_h^times f`.
pub fn delta_pow(f: &GridFunction, h: &DualPoint, times: usize) -> Result<GridFunction> {
    let mut g = f.clone();
    for _ in 0..times {
        g = delta(&g, h)?;
    }
    Ok(g)
}

fn probe_steps(f: &GridFunction) -> Vec<DualPoint> {
    let hs = f.hs;
    vec![
        DualPoint::new(hs, 0),
        DualPoint::new(0.0, 1),
        DualPoint::new(hs, 1),
        DualPoint::new(hs, -1),
        DualPoint::new(2.0 * hs, 0),
        DualPoint::new(0.0, 2),
    ]
}

/// Smallest `d <= max_deg` with `D_h^(d+1) f = 0` (within `tol`) along every
/// probe step that fits on the grid.
pub fn polynomial_degree(f: &GridFunction, max_deg: usize, tol: f64) -> Option<usize> {
    'deg: for d in 0..=max_deg {
        let mut tested = false;
        for h in probe_steps(f) {
            match delta_pow(f, &h, d + 1) {
                Ok(g) => {
                    tested = true;
                    if !(g.max_abs() <= tol) {
                        continue 'deg;
                    }
                }
                Err(_) => continue,
            }
        }
        if tested {
            return Some(d);
        }
        return None;
    }
    None
}

/// `f(s, n) = sigma s^2 + kappa(n) s + lambda(n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub sigma: f64,
    pub n_values: Vec<i64>,
    pub kappa_of_n: Vec<f64>,
    pub lambda_of_n: Vec<f64>,
    pub max_residual: f64,
}

impl QuadraticFit {
    pub fn eval(&self, s: f64, n: i64) -> Option<f64> {
        let i = self.n_values.iter().position(|&m| m == n)?;
        Some(self.sigma * s * s + self.kappa_of_n[i] * s + self.lambda_of_n[i])
    }
}

pub const FIT_TOL: f64 = 1e-9;

/// Fits `f(s, n) = sigma s^2 + kappa(n) s + lambda(n)` with one `sigma` for all rows.
///
/// The function must be real and even (`f(-y) = f(y)`) on a grid symmetric
/// about the origin, and each row must have vanishing third differences.
/// `sigma(n)` is estimated row by row against `s^2` made orthogonal to
/// `{1, s}`, must be constant, and is then pooled; `kappa(n)` and
/// `lambda(n)` come from a per-row least-squares line through `f - sigma s^2`.
pub fn lemma8_fit(f: &GridFunction, tol: f64) -> Result<QuadraticFit> {
    if f.ns < 4 {
        return Err(Error::GridTooSmall("need at least 4 s-nodes for third differences".into()));
    }
    let max_im = f.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_im > tol {
        return Err(Error::NotQuadraticForm(format!("imaginary part up to {max_im:e}")));
    }
    let symmetric_grid = (f.s0 + f.s_at(f.ns - 1)).abs() <= SPACING_TOL * f.hs && f.n_min == -f.n_max;
    if !symmetric_grid {
        return Err(Error::SymmetryViolated("grid is not symmetric about the origin".into()));
    }
    for n in f.n_min..=f.n_max {
        for k in 0..f.ns {
            let gap = (f.at(k, n).re - f.at(f.ns - 1 - k, -n).re).abs();
            if gap > tol {
                return Err(Error::SymmetryViolated(format!(
                    "f(-y) != f(y) at s = {}, n = {n} (gap {gap:e})",
                    f.s_at(k)
                )));
            }
        }
    }
    let third = delta_pow(f, &DualPoint::new(f.hs, 0), 3)?;
    let worst = third.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::NotQuadraticForm(format!("third difference in s up to {worst:e}")));
    }

    let s: Vec<f64> = f.s_values();
    let len = s.len() as f64;
    let mean_s = s.iter().sum::<f64>() / len;
    let sc: Vec<f64> = s.iter().map(|v| v - mean_s).collect();
    let ss: f64 = sc.iter().map(|v| v * v).sum();
    // s^2 minus its projection on span{1, s}
    let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
    let mean_sq = sq.iter().sum::<f64>() / len;
    let slope_sq = sq.iter().zip(&sc).map(|(a, b)| a * b).sum::<f64>() / ss;
    let q: Vec<f64> = sq.iter().zip(&sc).map(|(v, c)| v - mean_sq - slope_sq * c).collect();
    let qq: f64 = q.iter().map(|v| v * v).sum();

    let n_values: Vec<i64> = (f.n_min..=f.n_max).collect();
    let sigma_n: Vec<f64> = n_values
        .iter()
        .map(|&n| f.row(n).iter().zip(&q).map(|(v, qk)| v.re * qk).sum::<f64>() / qq)
        .collect();
    let (lo, hi) = sigma_n.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo > tol {
        return Err(Error::NotQuadraticForm(format!("sigma(n) varies between {lo} and {hi}")));
    }
    let sigma = sigma_n.iter().sum::<f64>() / sigma_n.len() as f64;

    let mut kappa_of_n = Vec::with_capacity(n_values.len());
    let mut lambda_of_n = Vec::with_capacity(n_values.len());
    for &n in &n_values {
        let r: Vec<f64> = f.row(n).iter().zip(&s).map(|(v, sv)| v.re - sigma * sv * sv).collect();
        let mean_r = r.iter().sum::<f64>() / len;
        let kappa = r.iter().zip(&sc).map(|(a, b)| a * b).sum::<f64>() / ss;
        kappa_of_n.push(kappa);
        lambda_of_n.push(mean_r - kappa * mean_s);
    }
    for (i, &n) in n_values.iter().enumerate() {
        let j = n_values.iter().position(|&m| m == -n).unwrap();
        if (kappa_of_n[i] + kappa_of_n[j]).abs() > tol || (lambda_of_n[i] - lambda_of_n[j]).abs() > tol {
            return Err(Error::SymmetryViolated(format!("kappa odd / lambda even fails at n = {n}")));
        }
    }
    let fit = QuadraticFit { sigma, n_values, kappa_of_n, lambda_of_n, max_residual: 0.0 };
    let mut max_residual = 0.0f64;
    for n in f.n_min..=f.n_max {
        for (k, &sv) in s.iter().enumerate() {
            max_residual = max_residual.max((f.at(k, n).re - fit.eval(sv, n).unwrap()).abs());
        }
    }
    if max_residual > tol {
        return Err(Error::NotQuadraticForm(format!("fit residual {max_residual:e}")));
    }
    Ok(QuadraticFit { max_residual, ..fit })
}

fn subgroup_steps(tag: SubgroupTag, hs: f64) -> Vec<DualPoint> {
    match tag {
        SubgroupTag::FullR => vec![DualPoint::new(hs, 0), DualPoint::new(2.0 * hs, 0)],
        SubgroupTag::Y2 => vec![DualPoint::new(hs, 0), DualPoint::new(0.0, 2), DualPoint::new(hs, 2)],
    }
}

/// Largest `|D_h D_k D_l psi_j|` for `h` anywhere, `k, l` in the subgroups
/// attached to factor `j`: `(N, L)`, `(N, M)` and `(L, M)`.
pub fn verify_lemma6(
    psis: &[GridFunction],
    m: &StatMatrix<CylinderAuto<f64>>,
    tags: &LmnTags,
) -> Result<[f64; 3]> {
    if psis.len() != 3 || m.n() != 3 {
        return Err(Error::DimensionMismatch("expected three functions and a 3 x 3 matrix".into()));
    }
    let pairs = [(tags.n, tags.l), (tags.n, tags.m), (tags.l, tags.m)];
    let mut out = [0.0; 3];
    for (j, psi) in psis.iter().enumerate() {
        let hs = psi.hs;
        let hsteps = [DualPoint::new(hs, 0), DualPoint::new(0.0, 1), DualPoint::new(hs, 1), DualPoint::new(hs, -1)];
        let (kt, lt) = pairs[j];
        for h in &hsteps {
            let dh = delta(psi, h)?;
            for k in subgroup_steps(kt, hs) {
                let dhk = delta(&dh, &k)?;
                for l in subgroup_steps(lt, hs) {
                    let dhkl = delta(&dhk, &l).map_err(|_| Error::GridTooSmall("triple differences leave no nodes".into()))?;
                    out[j] = f64::max(out[j], dhkl.max_abs());
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaLinearity {
    /// `(kappa_1(n), kappa_2(n), kappa_3(n))` solved from the corner system.
    pub solved: Vec<[f64; 3]>,
    pub max_mismatch: f64,
    pub max_nonlinearity: f64,
    pub linear: bool,
}

/// Solves
///
/// ```text
/// (a1 - 1) k1(n) + (a2 - 1) k2(n) = -kappa n
/// (b1 - 1) k1(n) + (b2 - 1) k2(n) = -kappa n
/// k3(n) = kappa n - k1(n) - k2(n)
/// ```
///
/// for each `n`, compares with the supplied `kappa_of_n` and checks that each
/// `k_j(n) / n` is constant over `n != 0`.
pub fn verify_kappa_linearity(
    n_values: &[i64],
    kappa_of_n: &[Vec<f64>],
    a: [&Rational; 2],
    b: [&Rational; 2],
    kappa_total: f64,
    tol: f64,
) -> Result<KappaLinearity> {
    if kappa_of_n.len() != 3 || kappa_of_n.iter().any(|k| k.len() != n_values.len()) {
        return Err(Error::DimensionMismatch("expected three lists matching n_values".into()));
    }
    let one = Rational::from_integer(1.into());
    let (m11, m12) = ((a[0] - &one).to_float(), (a[1] - &one).to_float());
    let (m21, m22) = ((b[0] - &one).to_float(), (b[1] - &one).to_float());
    let det = (a[0] - &one) * (b[1] - &one) - (a[1] - &one) * (b[0] - &one);
    if det.is_zero() {
        return Err(Error::CornerDeterminantZero);
    }
    let det = det.to_float();
    let mut solved = Vec::with_capacity(n_values.len());
    let mut max_mismatch = 0.0f64;
    for (i, &n) in n_values.iter().enumerate() {
        let rhs = -kappa_total * n as f64;
        let k1 = (rhs * m22 - m12 * rhs) / det;
        let k2 = (m11 * rhs - m21 * rhs) / det;
        let k3 = kappa_total * n as f64 - k1 - k2;
        for (j, kj) in [k1, k2, k3].iter().enumerate() {
            max_mismatch = max_mismatch.max((kj - kappa_of_n[j][i]).abs());
        }
        solved.push([k1, k2, k3]);
    }
    let mut max_nonlinearity = 0.0f64;
    for j in 0..3 {
        let ratios: Vec<f64> = n_values
            .iter()
            .zip(&kappa_of_n[j])
            .filter(|(&n, _)| n != 0)
            .map(|(&n, &k)| k / n as f64)
            .collect();
        if let Some(first) = ratios.first() {
            for r in &ratios {
                max_nonlinearity = max_nonlinearity.max((r - first).abs());
            }
        }
        if let Some(i0) = n_values.iter().position(|&n| n == 0) {
            max_nonlinearity = max_nonlinearity.max(kappa_of_n[j][i0].abs());
        }
    }
    Ok(KappaLinearity { solved, max_mismatch, max_nonlinearity, linear: max_mismatch <= tol && max_nonlinearity <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::independence::classify_lmn;
    use crate::scalar::rat;
    use proptest::prelude::*;

    fn real(f: impl Fn(f64, i64) -> f64) -> GridFunction {
        GridFunction::sample_default(f)
    }

    #[test]
    fn default_grid_shape() {
        let f = real(|_, _| 0.0);
        assert_eq!(f.len_s(), 41);
        assert_eq!(f.n_range(), (-6, 6));
        assert_eq!(f.s_values()[20], 0.0);
    }

    #[test]
    fn delta_examples() {
        let c = real(|_, _| 3.5);
        assert_eq!(delta(&c, &DualPoint::new(0.5, 1)).unwrap().max_abs(), 0.0);
        let f = real(|s, _| s * s);
        let d = delta(&f, &DualPoint::new(1.0, 0)).unwrap();
        for n in -6..=6 {
            for (k, s) in d.s_values().iter().enumerate() {
                assert!((d.at(k, n).re - (2.0 * s + 1.0)).abs() < 1e-12);
            }
        }
        assert_eq!(d.s_values().last().copied(), Some(4.0));
        let back = delta(&f, &DualPoint::new(-0.5, -2)).unwrap();
        assert_eq!(back.n_range(), (-4, 6));
        assert_eq!(back.s_values()[0], -4.5);
        assert!(matches!(delta(&f, &DualPoint::new(0.3, 0)), Err(Error::OffGrid(_))));
        assert!(matches!(delta(&f, &DualPoint::new(0.0, 13)), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn degree_examples() {
        assert_eq!(polynomial_degree(&real(|s, n| 1.5 * s * s + 0.4 * s * n as f64 + 2.0 * (n * n) as f64), 5, 1e-8), Some(2));
        assert_eq!(polynomial_degree(&real(|s, _| s.powi(4)), 6, 1e-8), Some(4));
        assert_eq!(polynomial_degree(&real(|s, _| s.powi(4)), 3, 1e-8), None);
        assert_eq!(polynomial_degree(&real(|_, _| 2.0), 3, 1e-12), Some(0));
        let cf = CylinderCF::new(1.0, 2.0, 1.0, 0.3, 0.1, 0.0).unwrap();
        assert_eq!(polynomial_degree(&GridFunction::from_psi(&cf, DEFAULT_S_RANGE, DEFAULT_N_RANGE).unwrap(), 4, 1e-8), Some(2));
    }

    #[test]
    fn fit_examples() {
        let fit = lemma8_fit(&real(|s, n| s * s + n as f64 * s + (n * n) as f64), FIT_TOL).unwrap();
        assert!((fit.sigma - 1.0).abs() < 1e-12);
        for (i, &n) in fit.n_values.iter().enumerate() {
            assert!((fit.kappa_of_n[i] - n as f64).abs() < 1e-10);
            assert!((fit.lambda_of_n[i] - (n * n) as f64).abs() < 1e-10);
        }
        let fit = lemma8_fit(&real(|s, n| 2.0 * s * s + 3.0 * n as f64 * s + (n as f64).powi(4)), FIT_TOL).unwrap();
        assert!((fit.sigma - 2.0).abs() < 1e-10);
        assert!((fit.lambda_of_n[0] - 1296.0).abs() < 1e-9);
        assert!(lemma8_fit(&real(|s, _| s.powi(4)), FIT_TOL).is_err());
        assert!(matches!(lemma8_fit(&real(|s, n| s * s + 0.01 * s.powi(3) + n as f64), FIT_TOL), Err(Error::SymmetryViolated(_))));
        assert!(matches!(
            lemma8_fit(&real(|s, n| s * s * (1.0 + 0.01 * (n * n) as f64)), FIT_TOL),
            Err(Error::NotQuadraticForm(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let f = GridFunction::sample((-1.0, 1.0, 0.5), (-1, 2), |s, n| Complex64::new(s * n as f64, s - 1.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s,n,re,im\n"));
        assert_eq!(GridFunction::read_csv(buf.as_slice()).unwrap(), f);
        assert!(GridFunction::read_csv("s,n,re,im\n0,0,1,0\n0.5,0,1,0\n".as_bytes()).is_ok());
        assert!(GridFunction::read_csv("s,n,re,im\n0,0,1,0\n0.5,1,1,0\n".as_bytes()).is_err());
        assert!(GridFunction::read_csv("x,n,re,im\n0,0,1,0\n".as_bytes()).is_err());
    }

    fn remark3_setup() -> (Vec<GridFunction>, StatMatrix<CylinderAuto<f64>>, LmnTags) {
        let id = CylinderAuto::identity();
        let e = |a: Rational, c: Rational| CylinderAuto::new(a, c, 1).unwrap();
        let exact = StatMatrix::new(vec![
            vec![id.clone(); 3],
            vec![e(rat(2, 1), rat(1, 1)), e(rat(-3, 1), rat(-4, 1)), id.clone()],
            vec![e(rat(-4, 5), rat(-9, 5)), e(rat(-1, 5), rat(-6, 5)), id],
        ])
        .unwrap();
        let tags = classify_lmn(&exact).unwrap();
        let psis = (0..3)
            .map(|_| GridFunction::from_psi(&CylinderCF::line_gaussian(1.0, 1.0), DEFAULT_S_RANGE, DEFAULT_N_RANGE).unwrap())
            .collect();
        (psis, exact.to_f64(), tags)
    }

    #[test]
    fn triple_differences_vanish_for_quadratics() {
        let (psis, m, tags) = remark3_setup();
        let r = verify_lemma6(&psis, &m, &tags).unwrap();
        assert!(r.iter().all(|&v| v <= 1e-10), "{r:?}");
        let mut cubic = psis.clone();
        cubic[0] = cubic[0].map(|s, _, v| v + Complex64::new(s.powi(3), 0.0));
        let r = verify_lemma6(&cubic, &m, &tags).unwrap();
        // 6 h k l with h = hs, k = l = 2 hs
        assert!((r[0] - 6.0 * 0.25 * 0.5 * 0.5).abs() < 1e-9, "{r:?}");
        assert!(r[1] <= 1e-10 && r[2] <= 1e-10);
        let zero: Vec<GridFunction> = (0..3).map(|_| real(|_, _| 0.0)).collect();
        assert_eq!(verify_lemma6(&zero, &m, &tags).unwrap(), [0.0; 3]);
    }

    #[test]
    fn kappa_linearity_examples() {
        let (a1, a2, b1, b2) = (rat(2, 1), rat(-3, 1), rat(-4, 5), rat(-1, 5));
        let ns: Vec<i64> = (-6..=6).collect();
        let omega = 1.0;
        let lists: Vec<Vec<f64>> = (0..3).map(|_| ns.iter().map(|&n| 2.0 * omega * n as f64).collect()).collect();
        let r = verify_kappa_linearity(&ns, &lists, [&a1, &a2], [&b1, &b2], 6.0 * omega, 1e-10).unwrap();
        assert!(r.linear, "{r:?}");
        let mut bad = lists.clone();
        bad[0] = ns.iter().map(|&n| (n * n * n) as f64).collect();
        assert!(!verify_kappa_linearity(&ns, &bad, [&a1, &a2], [&b1, &b2], 6.0, 1e-10).unwrap().linear);
        let zeros = vec![vec![0.0; ns.len()]; 3];
        assert!(verify_kappa_linearity(&ns, &zeros, [&a1, &a2], [&b1, &b2], 0.0, 1e-10).unwrap().linear);
        let two = rat(2, 1);
        assert_eq!(
            verify_kappa_linearity(&ns, &zeros, [&two, &two], [&two, &two], 0.0, 1e-10),
            Err(Error::CornerDeterminantZero)
        );
    }

    proptest! {
        #[test]
        fn differences_commute(c in proptest::collection::vec(-1.0..1.0f64, 6), hk in 1i64..3, hn in -1i64..2, kk in 0i64..3, kn in -2i64..2) {
            let f = real(|s, n| c[0] * s.powi(3) + c[1] * s * s * n as f64 + c[2] * (n * n * n) as f64 + c[3] * (s * c[4]).sin() + c[5] * (n as f64).cos());
            let h = DualPoint::new(0.25 * hk as f64, hn);
            let k = DualPoint::new(0.25 * kk as f64, kn);
            let a = delta(&delta(&f, &h).unwrap(), &k).unwrap();
            let b = delta(&delta(&f, &k).unwrap(), &h).unwrap();
            prop_assert_eq!(a.n_range(), b.n_range());
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn delta_is_linear(c in -3.0..3.0f64, hk in -2i64..3, hn in -2i64..3) {
            let f = real(|s, n| s * s + n as f64);
            let g = real(|s, n| (s * n as f64).sin());
            let h = DualPoint::new(0.25 * hk as f64, hn);
            let lhs = delta(&f.add(&g.map(|_, _, v| v * c)).unwrap(), &h).unwrap();
            let rhs = delta(&f, &h).unwrap().add(&delta(&g, &h).unwrap().map(|_, _, v| v * c)).unwrap();
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn degree_of_sum(d1 in 0usize..4, d2 in 0usize..4) {
            let f = real(|s, _| s.powi(d1 as i32));
            let g = real(|_, n| (n as f64).powi(d2 as i32));
            let df = polynomial_degree(&f, 6, 1e-7).unwrap();
            let dg = polynomial_degree(&g, 6, 1e-7).unwrap();
            prop_assert_eq!((df, dg), (d1, d2));
            let dsum = polynomial_degree(&f.add(&g).unwrap(), 6, 1e-7).unwrap();
            prop_assert!(dsum <= df.max(dg));
            if df != dg {
                prop_assert_eq!(dsum, df.max(dg));
            }
        }

        #[test]
        fn fit_recovers_cylinder_parameters(sigma in 0.0..3.0f64, rho in -1.0..1.0f64, lam in 0.0..3.0f64) {
            let kappa = rho * 2.0 * (sigma * lam).sqrt();
            let cf = CylinderCF::new(sigma, kappa, lam, 0.7, 1.1, 0.0).unwrap();
            let psi = GridFunction::from_psi(&cf, DEFAULT_S_RANGE, DEFAULT_N_RANGE).unwrap();
            let fit = lemma8_fit(&psi, FIT_TOL).unwrap();
            prop_assert!((fit.sigma - 2.0 * sigma).abs() <= 1e-10);
            for (i, &n) in fit.n_values.iter().enumerate() {
                prop_assert!((fit.kappa_of_n[i] - 2.0 * kappa * n as f64).abs() <= 1e-10);
                prop_assert!((fit.lambda_of_n[i] - 2.0 * lam * (n * n) as f64).abs() <= 1e-10);
            }
        }
    }
}
