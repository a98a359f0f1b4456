//! Sampling from the constructed laws on `T` and `R x T`, empirical
//! characteristic functions and a bootstrap test of the independence of
//! linear statistics.
//!
//! Samples are drawn in chunks of [`CHUNK`] with one ChaCha8 stream per chunk,
//! so a stream depends on the sample index and never on the worker count.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::charfn::{CharFn, CylinderCF, TorusCF};
use crate::constructions::{require_valid, MAX_TRUNCATION, VALIDITY_TOL};
use crate::error::{Error, Result};
use crate::group::{pair, CylinderAuto, CylinderPoint, DualPoint};
use crate::independence::{cartesian_grid, StatMatrix, GRID_CAP, GRID_SEED};

pub const CHUNK: usize = 4096;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Cells of the inverse-CDF table for laws on `T`.
pub const CDF_CELLS: usize = 4096;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Independent seed for the `index`-th sub-stream of `seed`.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - index as u64);
    rng.random()
}

fn sample_chunked<T: Send>(count: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Points `(t, omega t) + shift` with `t ~ N(0, 2 sigma)`, so that the
/// characteristic function at `(s, 0)` is `exp(-sigma s^2)`.
pub fn sample_line_gaussian(sigma: f64, omega: f64, shift: CylinderPoint, count: usize, seed: u64) -> Result<Vec<CylinderPoint>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidCharFn(format!("sigma = {sigma} must be positive")));
    }
    let sd = (2.0 * sigma).sqrt();
    let zero_shift = shift == CylinderPoint::zero();
    Ok(sample_chunked(count, seed, |rng| {
        let z: f64 = StandardNormal.sample(rng);
        let t = sd * z;
        let x = CylinderPoint::new(t, omega * t);
        if zero_shift {
            x
        } else {
            x + shift
        }
    }))
}

/// Cell masses and the truncation used to build them.
fn torus_cell_masses(cf: &TorusCF) -> Vec<f64> {
    let mut truncation = 50;
    while cf.tail_bound(truncation) > VALIDITY_TOL && truncation < MAX_TRUNCATION {
        truncation *= 2;
    }
    cf.density_grid(truncation, CDF_CELLS).iter().map(|d| d.re.max(0.0)).collect()
}

/// Angles in `[0, 2pi)` drawn from the law with characteristic function `cf`.
///
/// With `sigma > 0` the density is inverted on a [`CDF_CELLS`]-point grid and
/// a uniform offset is drawn inside the chosen cell; with `sigma = 0` the law
/// is atomic on `{theta, theta + pi}`.
pub fn sample_torus_twisted(cf: &TorusCF, count: usize, seed: u64) -> Result<Vec<f64>> {
    require_valid(cf, "torus law")?;
    if cf.sigma == 0.0 {
        let (_, q) = cf.atom_masses();
        let theta = cf.theta;
        return Ok(sample_chunked(count, seed, |rng| {
            if q > 0.0 && rng.random::<f64>() < q {
                crate::group::wrap_angle(theta + PI)
            } else {
                theta
            }
        }));
    }
    let masses = torus_cell_masses(cf);
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cdf.push(acc);
    }
    let total = acc;
    let h = TAU / CDF_CELLS as f64;
    Ok(sample_chunked(count, seed, |rng| {
        let u: f64 = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(CDF_CELLS - 1);
        let offset: f64 = rng.random::<f64>() - 0.5;
        crate::group::wrap_angle((k as f64 + offset) * h)
    }))
}

/// Samples of a cylinder law: a (possibly degenerate) Gaussian, wrapped in
/// the angle, times an optional two-point factor on `{0, pi}`.
///
/// A twist is sampleable only when it describes a genuine measure: for
/// `sigma = kappa = 0` the angular part is drawn as a [`TorusCF`], otherwise
/// the twist must be nonpositive.
pub fn sample_cylinder(cf: &CylinderCF, count: usize, seed: u64) -> Result<Vec<CylinderPoint>> {
    cf.validate()?;
    if cf.sigma == 0.0 && cf.kappa == 0.0 {
        let torus = TorusCF::new(cf.lambda, cf.theta, cf.twist)?;
        let angles = sample_torus_twisted(&torus, count, seed)?;
        return Ok(angles.into_iter().map(|theta| CylinderPoint::new(cf.tau, theta)).collect());
    }
    if cf.twist > 0.0 {
        return Err(Error::InvalidProbability(format!(
            "twist {} gives a signed two-point factor",
            cf.twist
        )));
    }
    let flip = (1.0 - (2.0 * cf.twist).exp()) / 2.0;
    let sd_t = (2.0 * cf.sigma).sqrt();
    let slope = if cf.sigma > 0.0 { cf.kappa / (2.0 * cf.sigma) } else { 0.0 };
    let resid_var = if cf.sigma > 0.0 { cf.lambda - cf.kappa * cf.kappa / (4.0 * cf.sigma) } else { cf.lambda };
    let sd_x = (2.0 * resid_var.max(0.0)).sqrt();
    let shift = CylinderPoint::new(cf.tau, cf.theta);
    Ok(sample_chunked(count, seed, |rng| {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let t = sd_t * z1;
        let mut x = slope * t + sd_x * z2;
        if flip > 0.0 && rng.random::<f64>() < flip {
            x += PI;
        }
        CylinderPoint::new(t, x) + shift
    }))
}

/// Samples of either kind, torus laws placed on `{0} x T`.
pub fn sample_charfn(cf: &CharFn, count: usize, seed: u64) -> Result<Vec<CylinderPoint>> {
    match cf {
        CharFn::Cylinder(c) => sample_cylinder(c, count, seed),
        CharFn::Torus(t) => Ok(sample_torus_twisted(t, count, seed)?
            .into_iter()
            .map(|theta| CylinderPoint::new(0.0, theta))
            .collect()),
    }
}

pub fn empirical_cf(samples: &[CylinderPoint], y: &DualPoint) -> Complex64 {
    let sum: Complex64 = samples.iter().map(|x| pair(x, y)).sum();
    sum / samples.len() as f64
}

pub fn empirical_cf_torus(angles: &[f64], n: i64) -> Complex64 {
    let sum: Complex64 = angles.iter().map(|&a| Complex64::from_polar(1.0, n as f64 * a)).sum();
    sum / angles.len() as f64
}

/// Writes samples as CSV with header `t,theta`.
pub fn write_samples_csv<W: Write>(out: W, samples: &[CylinderPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for x in samples {
        w.serialize(x)?;
    }
    w.flush()?;
    Ok(())
}

/// Probe characters per slot for cylinder laws.
pub fn cylinder_probe_values() -> Vec<DualPoint> {
    vec![DualPoint::new(0.3, 0), DualPoint::new(0.0, 1), DualPoint::new(0.3, -1)]
}

/// Probe characters per slot for laws on `T`, embedded as `(0, n)`.
pub fn torus_probe_values() -> Vec<DualPoint> {
    vec![DualPoint::new(0.0, 1), DualPoint::new(0.0, 2), DualPoint::new(0.0, -1)]
}

/// All `slots`-tuples of `values`.
pub fn probe_grid(values: &[DualPoint], slots: usize) -> Vec<Vec<DualPoint>> {
    cartesian_grid(values, slots, GRID_CAP, GRID_SEED)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceEstimate {
    pub count: usize,
    pub probes: usize,
    /// `max |E prod (L_i, y_i) - prod E (L_i, y_i)|` over the probe grid.
    pub residual: f64,
    pub worst_probe: Vec<DualPoint>,
    pub resamples: usize,
    /// 95th percentile of the bootstrap deviation `max |D* - D|`.
    pub band_radius: f64,
    /// `[max(0, residual - radius), residual + radius]`.
    pub band: [f64; 2],
    pub consistent_with_zero: bool,
}

/// Per-slot character values `(L_i, y)` for every distinct probe `y`,
/// plus, for each probe tuple, the index of its value table in each slot.
struct ProbeTables {
    values: Vec<Vec<Complex64>>,
    index: Vec<Vec<usize>>,
}

fn probe_tables(stats: &[Vec<CylinderPoint>], probes: &[Vec<DualPoint>]) -> ProbeTables {
    let mut keys: Vec<(usize, DualPoint)> = Vec::new();
    let mut index = Vec::with_capacity(probes.len());
    for tuple in probes {
        let mut row = Vec::with_capacity(tuple.len());
        for (i, y) in tuple.iter().enumerate() {
            let k = match keys.iter().position(|(slot, v)| *slot == i && v == y) {
                Some(k) => k,
                None => {
                    keys.push((i, y.clone()));
                    keys.len() - 1
                }
            };
            row.push(k);
        }
        index.push(row);
    }
    // Phases are measured from the first sample: this rotates every slot by a
    // unit constant, which leaves |D| unchanged and makes constant slots exact.
    let values = keys
        .par_iter()
        .map(|(i, y)| {
            let phase = |x: &CylinderPoint| y.s * x.t + y.n as f64 * x.theta;
            let origin = phase(&stats[*i][0]);
            stats[*i].iter().map(|x| Complex64::from_polar(1.0, phase(x) - origin)).collect()
        })
        .collect();
    ProbeTables { values, index }
}

/// `D_p = E prod - prod E` for every probe, over the multiset of sample
/// indices `draw` (all samples when `None`).
fn defects(t: &ProbeTables, count: usize, draw: Option<&[usize]>) -> Vec<Complex64> {
    let nv = t.values.len();
    let mut marg = vec![Complex64::new(0.0, 0.0); nv];
    let mut joint = vec![Complex64::new(0.0, 0.0); t.index.len()];
    let mut step = |k: usize| {
        for (m, v) in marg.iter_mut().zip(&t.values) {
            *m += v[k];
        }
        for (j, row) in joint.iter_mut().zip(&t.index) {
            let mut prod = Complex64::new(1.0, 0.0);
            for &r in row {
                prod *= t.values[r][k];
            }
            *j += prod;
        }
    };
    match draw {
        None => (0..count).for_each(&mut step),
        Some(d) => d.iter().for_each(|&k| step(k)),
    }
    let inv = 1.0 / count as f64;
    t.index
        .iter()
        .zip(&joint)
        .map(|(row, j)| {
            let prod: Complex64 = row.iter().map(|&r| marg[r] * inv).product();
            j * inv - prod
        })
        .collect()
}

/// Linear statistics `L_i = sum_j alpha_ij(xi_j)` for each sample index.
pub fn linear_statistics(samples: &[Vec<CylinderPoint>], m: &StatMatrix<CylinderAuto<f64>>) -> Result<Vec<Vec<CylinderPoint>>> {
    let n = m.n();
    if samples.len() != n {
        return Err(Error::DimensionMismatch(format!("{} sample sets for {n} statistics", samples.len())));
    }
    let count = samples[0].len();
    if count == 0 || samples.iter().any(|s| s.len() != count) {
        return Err(Error::DimensionMismatch("sample sets must be nonempty and of equal size".into()));
    }
    Ok((0..n)
        .map(|i| {
            (0..count)
                .map(|k| {
                    (0..n).fold(CylinderPoint::zero(), |acc, j| acc + m.get(i, j).apply_point(&samples[j][k]))
                })
                .collect()
        })
        .collect())
}

/// Estimates the independence defect of the statistics over `probes` and
/// calibrates it with a centered percentile bootstrap.
pub fn empirical_independence(
    samples: &[Vec<CylinderPoint>],
    m: &StatMatrix<CylinderAuto<f64>>,
    probes: &[Vec<DualPoint>],
    resamples: usize,
    seed: u64,
) -> Result<IndependenceEstimate> {
    if probes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = probes.iter().position(|p| p.len() != m.n()) {
        return Err(Error::DimensionMismatch(format!("probe {bad} has {} entries", probes[bad].len())));
    }
    let stats = linear_statistics(samples, m)?;
    let count = stats[0].len();
    let tables = probe_tables(&stats, probes);
    let base = defects(&tables, count, None);
    let mut worst = 0;
    for (k, d) in base.iter().enumerate() {
        if d.norm() > base[worst].norm() {
            worst = k;
        }
    }
    let residual = base[worst].norm();
    let mut deviations: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = chunk_rng(seed, r);
            let draw: Vec<usize> = (0..count).map(|_| rng.random_range(0..count)).collect();
            defects(&tables, count, Some(&draw))
                .iter()
                .zip(&base)
                .map(|(d, b)| (d - b).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    deviations.sort_by(f64::total_cmp);
    let band_radius = if deviations.is_empty() {
        0.0
    } else {
        let k = ((0.95 * deviations.len() as f64).ceil() as usize).clamp(1, deviations.len()) - 1;
        deviations[k]
    };
    Ok(IndependenceEstimate {
        count,
        probes: probes.len(),
        residual,
        worst_probe: probes[worst].clone(),
        resamples,
        band_radius,
        band: [(residual - band_radius).max(0.0), residual + band_radius],
        consistent_with_zero: residual <= band_radius,
    })
}

/// Samples every law with its own derived seed and runs
/// [`empirical_independence`] with [`BOOTSTRAP_RESAMPLES`] resamples.
pub fn simulate(
    cfs: &[CharFn],
    m: &StatMatrix<CylinderAuto<f64>>,
    probes: &[Vec<DualPoint>],
    count: usize,
    seed: u64,
) -> Result<IndependenceEstimate> {
    if count == 0 {
        return Err(Error::InvalidCharFn("count must be at least 1".into()));
    }
    let samples = cfs
        .iter()
        .enumerate()
        .map(|(j, cf)| sample_charfn(cf, count, derive_seed(seed, j)))
        .collect::<Result<Vec<_>>>()?;
    empirical_independence(&samples, m, probes, BOOTSTRAP_RESAMPLES, derive_seed(seed, cfs.len()))
}
