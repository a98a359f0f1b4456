use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::group::DualPoint;

/// Upper bound on the number of tuples in a product grid.
pub const GRID_CAP: usize = 100_000;
pub const GRID_SEED: u64 = 0x5d_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Default,
    Dense,
}

const DEFAULT_S: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

fn s_values(kind: GridKind) -> Vec<f64> {
    match kind {
        GridKind::Default => DEFAULT_S.to_vec(),
        GridKind::Dense => {
            let mut out = Vec::with_capacity(2 * DEFAULT_S.len() - 1);
            for w in DEFAULT_S.windows(2) {
                out.push(w[0]);
                out.push(0.5 * (w[0] + w[1]));
            }
            out.push(*DEFAULT_S.last().unwrap());
            out
        }
    }
}

fn n_range(kind: GridKind) -> std::ops::RangeInclusive<i64> {
    match kind {
        GridKind::Default => -2..=2,
        GridKind::Dense => -4..=4,
    }
}

/// Points of the dual `R x Z` used in each slot of a tuple.
pub fn cylinder_points(kind: GridKind) -> Vec<DualPoint> {
    let s = s_values(kind);
    n_range(kind).flat_map(|n| s.iter().map(move |&s| DualPoint::new(s, n))).collect()
}

/// All `slots`-tuples of `points`, or a stratified subsample of size `cap`.
///
/// The product is enumerated in mixed-radix order and cut into `cap` equal
/// strata; one index is drawn from each stratum with a seeded generator.
pub fn cartesian_grid<Y: Clone>(points: &[Y], slots: usize, cap: usize, seed: u64) -> Vec<Vec<Y>> {
    let k = points.len();
    if k == 0 || slots == 0 || cap == 0 {
        return Vec::new();
    }
    let total = (k as u128).checked_pow(slots as u32).unwrap_or(u128::MAX);
    let decode = |mut idx: u128| -> Vec<Y> {
        let mut t = Vec::with_capacity(slots);
        for _ in 0..slots {
            t.push(points[(idx % k as u128) as usize].clone());
            idx /= k as u128;
        }
        t
    };
    if total <= cap as u128 {
        return (0..total).map(decode).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cap as u128)
        .map(|stratum| {
            let lo = stratum * total / cap as u128;
            let hi = (stratum + 1) * total / cap as u128;
            decode(rng.random_range(lo..hi))
        })
        .collect()
}

pub fn cylinder_grid(slots: usize, kind: GridKind, cap: usize, seed: u64) -> Vec<Vec<DualPoint>> {
    cartesian_grid(&cylinder_points(kind), slots, cap, seed)
}

/// Tuples over `{-3..3}` (default) or `{-6..6}` (dense) in `Z`.
pub fn torus_grid(slots: usize, kind: GridKind) -> Vec<Vec<i64>> {
    let pts: Vec<i64> = match kind {
        GridKind::Default => (-3..=3).collect(),
        GridKind::Dense => (-6..=6).collect(),
    };
    cartesian_grid(&pts, slots, GRID_CAP, GRID_SEED)
}
