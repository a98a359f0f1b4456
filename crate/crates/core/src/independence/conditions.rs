use num::traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{serde_rational, Rational};

/// Admissible sign patterns of `(a1, a2, b1, b2)`, rows numbered from 1.
pub const SIGN_TABLE: [[i8; 4]; 6] = [
    [1, -1, -1, 1],
    [1, -1, -1, -1],
    [-1, 1, 1, -1],
    [-1, 1, -1, -1],
    [-1, -1, 1, -1],
    [-1, -1, -1, 1],
];

/// `a1 b2 - a1 a2 b2 - a1 b1 b2 - a2 b1 + a1 a2 b1 + a2 b1 b2`.
pub fn identity_polynomial(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> Rational {
    a1 * b2 - a1 * a2 * b2 - a1 * b1 * b2 - a2 * b1 + a1 * a2 * b1 + a2 * b1 * b2
}

/// `a2 b1 - a1 b2`.
pub fn cross_det(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> Rational {
    a2 * b1 - a1 * b2
}

/// `det [[a1 - 1, a2 - 1], [b1 - 1, b2 - 1]]`.
pub fn corner_det(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> Rational {
    let one = Rational::from_integer(1.into());
    (a1 - &one) * (b2 - &one) - (a2 - &one) * (b1 - &one)
}

/// Row (1-based) of [`SIGN_TABLE`] matching the signs of nonzero inputs.
pub fn sign_row(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> Option<usize> {
    let sg = |q: &Rational| if q.is_positive() { 1i8 } else { -1 };
    if [a1, a2, b1, b2].iter().any(|q| q.is_zero()) {
        return None;
    }
    let pat = [sg(a1), sg(a2), sg(b1), sg(b2)];
    SIGN_TABLE.iter().position(|row| *row == pat).map(|i| i + 1)
}

/// Everything the exact coefficient conditions say about `(a1, a2, b1, b2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    #[serde(with = "serde_rational")]
    pub identity1_residual: Rational,
    pub sign_row: Option<usize>,
    pub distinct_a: bool,
    pub distinct_b: bool,
    #[serde(with = "serde_rational")]
    pub cross_det: Rational,
    #[serde(with = "serde_rational")]
    pub corner_det: Rational,
}

impl ConditionReport {
    pub fn identity_holds(&self) -> bool {
        self.identity1_residual.is_zero()
    }

    pub fn all_pass(&self) -> bool {
        self.identity_holds()
            && self.sign_row.is_some()
            && self.distinct_a
            && self.distinct_b
            && !self.cross_det.is_zero()
            && !self.corner_det.is_zero()
    }

    /// Names of the failed conditions, in a fixed order.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.identity_holds() {
            out.push("identity");
        }
        if self.sign_row.is_none() {
            out.push("sign_pattern");
        }
        if !(self.distinct_a && self.distinct_b) {
            out.push("distinct");
        }
        if self.cross_det.is_zero() {
            out.push("cross_det");
        }
        if self.corner_det.is_zero() {
            out.push("corner_det");
        }
        out
    }
}

pub fn lemma2_conditions(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> Result<ConditionReport> {
    if [a1, a2, b1, b2].iter().any(|q| q.is_zero()) {
        return Err(Error::InvalidAutomorphism("coefficients a1, a2, b1, b2 must be nonzero".into()));
    }
    Ok(ConditionReport {
        identity1_residual: identity_polynomial(a1, a2, b1, b2),
        sign_row: sign_row(a1, a2, b1, b2),
        distinct_a: a1 != a2,
        distinct_b: b1 != b2,
        cross_det: cross_det(a1, a2, b1, b2),
        corner_det: corner_det(a1, a2, b1, b2),
    })
}

/// Positive solution of
///
/// ```text
/// s1 a1 + s2 a2 + s3 = 0,  s1 b1 + s2 b2 + s3 = 0,  s1 a1 b1 + s2 a2 b2 + s3 = 0
/// ```
///
/// normalised by `s3 = 1`. The first two equations fix `s1, s2`; the third is
/// then checked exactly; its left side is minus the identity polynomial over the
/// cross determinant.
pub fn solve_sigmas(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> Result<Option<[Rational; 3]>> {
    let cross = cross_det(a1, a2, b1, b2);
    if cross.is_zero() {
        return Err(Error::CrossDeterminantZero);
    }
    let one = Rational::from_integer(1.into());
    let s1 = (b2 - a2) / &cross;
    let s2 = (a1 - b1) / &cross;
    let third = &s1 * a1 * b1 + &s2 * a2 * b2 + &one;
    if !third.is_zero() {
        return Ok(None);
    }
    if !(s1.is_positive() && s2.is_positive()) {
        return Ok(None);
    }
    Ok(Some([s1, s2, one]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    #[test]
    fn reference_tuple() {
        let (a1, a2, b1, b2) = (rat(2, 1), rat(-3, 1), rat(-4, 5), rat(-1, 5));
        let r = lemma2_conditions(&a1, &a2, &b1, &b2).unwrap();
        assert!(r.identity1_residual.is_zero());
        assert_eq!(r.sign_row, Some(2));
        assert_eq!(r.cross_det, rat(14, 5));
        assert_eq!(r.corner_det, rat(-42, 5));
        assert!(r.all_pass());
        let js = serde_json::to_value(&r).unwrap();
        assert_eq!(js["identity1_residual"], "0");
        assert_eq!(js["cross_det"], "14/5");
        assert_eq!(solve_sigmas(&a1, &a2, &b1, &b2).unwrap(), Some([rat(1, 1), rat(1, 1), rat(1, 1)]));
    }

    #[test]
    fn rejected_tuple() {
        let (a1, a2, b1, b2) = (rat(1, 1), rat(-2, 1), rat(-2, 1), rat(1, 1));
        let r = lemma2_conditions(&a1, &a2, &b1, &b2).unwrap();
        assert_eq!(r.identity1_residual, rat(9, 1));
        assert!(!r.all_pass());
        assert_eq!(solve_sigmas(&a1, &a2, &b1, &b2).unwrap(), None);
    }

    #[test]
    fn repeated_coefficients() {
        let r = lemma2_conditions(&rat(3, 2), &rat(3, 2), &rat(-1, 1), &rat(-1, 1)).unwrap();
        assert!(!r.distinct_a && !r.distinct_b);
        assert!(r.failures().contains(&"distinct"));
        assert_eq!(
            solve_sigmas(&rat(3, 2), &rat(3, 2), &rat(-1, 1), &rat(-1, 1)),
            Err(Error::CrossDeterminantZero)
        );
        assert!(lemma2_conditions(&rat(0, 1), &rat(1, 1), &rat(1, 1), &rat(1, 1)).is_err());
    }

    #[test]
    fn identity_is_a_determinant() {
        // det [[a1, a2, 1], [b1, b2, 1], [a1 b1, a2 b2, 1]]
        let (a1, a2, b1, b2) = (rat(7, 3), rat(-2, 5), rat(1, 4), rat(-9, 2));
        let det = &a1 * (&b2 - &a2 * &b2) - &a2 * (&b1 - &a1 * &b1) + (&b1 * &a2 * &b2 - &b2 * &a1 * &b1);
        assert_eq!(identity_polynomial(&a1, &a2, &b1, &b2), det);
    }

    fn nonzero_rat() -> impl Strategy<Value = Rational> {
        (prop_oneof![-12i64..0, 1i64..12], 1i64..6).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn solutions_satisfy_all_conditions(a1 in nonzero_rat(), a2 in nonzero_rat(), b1 in nonzero_rat(), b2 in nonzero_rat()) {
            if let Ok(Some(s)) = solve_sigmas(&a1, &a2, &b1, &b2) {
                let r = lemma2_conditions(&a1, &a2, &b1, &b2).unwrap();
                prop_assert!(r.all_pass(), "{:?}", r);
                prop_assert!((&s[0] * &a1 + &s[1] * &a2 + &s[2]).is_zero());
                prop_assert!((&s[0] * &b1 + &s[1] * &b2 + &s[2]).is_zero());
            }
        }

        #[test]
        fn third_equation_iff_identity(a1 in nonzero_rat(), a2 in nonzero_rat(), b1 in nonzero_rat(), b2 in nonzero_rat()) {
            let cross = cross_det(&a1, &a2, &b1, &b2);
            prop_assume!(!cross.is_zero());
            let s1 = (&b2 - &a2) / &cross;
            let s2 = (&a1 - &b1) / &cross;
            let third = &s1 * &a1 * &b1 + &s2 * &a2 * &b2 + rat(1, 1);
            prop_assert_eq!(third * &cross, -identity_polynomial(&a1, &a2, &b1, &b2));
        }
    }
}
