use num::traits::Zero;
use serde::{Deserialize, Serialize};

use super::system::check_normal_form;
use super::StatMatrix;
use crate::error::{Error, Result};
use crate::group::{CylinderAuto, DualPoint};
use crate::scalar::{Rational, Scalar};

/// The two subgroups of `R x Z` that the differences of automorphisms generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubgroupTag {
    /// `R x {0}`.
    FullR,
    /// `R x 2Z`, the subgroup of doubled elements.
    Y2,
}

impl SubgroupTag {
    pub fn contains<S: Scalar>(&self, y: &DualPoint<S>) -> bool {
        match self {
            SubgroupTag::FullR => y.n == 0,
            SubgroupTag::Y2 => y.n.rem_euclid(2) == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmnTags {
    pub l: SubgroupTag,
    pub m: SubgroupTag,
    pub n: SubgroupTag,
}

/// Number (1 to 5) of the admissible `(L, M, N)` combination.
pub fn lmn_case(t: &LmnTags) -> Option<u8> {
    use SubgroupTag::*;
    match (t.l, t.m, t.n) {
        (FullR, FullR, FullR) => Some(1),
        (FullR, Y2, Y2) => Some(2),
        (Y2, FullR, Y2) => Some(3),
        (Y2, Y2, FullR) => Some(4),
        (Y2, Y2, Y2) => Some(5),
        _ => None,
    }
}

/// Subgroup generated by the images of `(s, n) -> (x s + y n, z n)` for the
/// given `(x, y, z)`. With some `x != 0` the first coordinate covers `R` and
/// the second is `gcd(z) Z`, which is `{0}` or `2Z` here.
fn generated(maps: &[(Rational, Rational, i64)], name: &'static str, why: &str) -> Result<SubgroupTag> {
    if maps.iter().all(|(x, _, _)| x.is_zero()) {
        return Err(Error::DegenerateSubgroup(name, why.to_string()));
    }
    let g = maps.iter().fold(0i64, |g, &(_, _, z)| num::integer::gcd(g, z));
    match g {
        0 => Ok(SubgroupTag::FullR),
        2 => Ok(SubgroupTag::Y2),
        other => Err(Error::DegenerateSubgroup(name, format!("unexpected integer part {other}Z"))),
    }
}

fn diff(e: &CylinderAuto<Rational>, f: &CylinderAuto<Rational>) -> (Rational, Rational, i64) {
    (&e.a - &f.a, &e.c - &f.c, e.p - f.p)
}

/// Tags of `L = (alpha_1 - I)Y + (beta_1 - I)Y`, `M = (alpha_2 - I)Y + (beta_2 - I)Y`
/// and `N = (alpha_2 - alpha_1)Y + (beta_2 - beta_1)Y` for a matrix in normal form.
pub fn classify_lmn(m: &StatMatrix<CylinderAuto<Rational>>) -> Result<LmnTags> {
    check_normal_form(m)?;
    let id = CylinderAuto::<Rational>::identity();
    let (a1, a2) = (m.get(1, 0), m.get(1, 1));
    let (b1, b2) = (m.get(2, 0), m.get(2, 1));
    let l = generated(&[diff(a1, &id), diff(b1, &id)], "L", "a1 = b1 = 1, so L is a proper subgroup of R")?;
    let mm = generated(&[diff(a2, &id), diff(b2, &id)], "M", "a2 = b2 = 1, so M is a proper subgroup of R")?;
    let n = generated(&[diff(a2, a1), diff(b2, b1)], "N", "a1 = a2 and b1 = b2")?;
    Ok(LmnTags { l, m: mm, n })
}
