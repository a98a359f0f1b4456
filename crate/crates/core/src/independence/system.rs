use num::traits::Zero;
use serde::Serialize;

use super::StatMatrix;
use crate::charfn::{support_line, CylinderCF, Support};
use crate::error::{Error, Result};
use crate::group::CylinderAuto;
use crate::scalar::{serde_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedResidual {
    pub name: String,
    pub value: f64,
}

/// Left sides of the coefficient equations, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemReport {
    pub residuals: Vec<NamedResidual>,
    pub max_abs: f64,
    pub worst: String,
}

impl SystemReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs <= tol
    }

    /// First equation in canonical order whose residual exceeds `tol`.
    pub fn first_failure(&self, tol: f64) -> Option<&NamedResidual> {
        self.residuals.iter().find(|r| !(r.value.abs() <= tol))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }
}

/// Checks that `m` has first row `(I, I, I)` and last column `(I, I, I)`.
pub(crate) fn check_normal_form<S: Scalar>(m: &StatMatrix<CylinderAuto<S>>) -> Result<()> {
    if m.n() != 3 {
        return Err(Error::NotNormalForm(format!("expected 3 statistics, got {}", m.n())));
    }
    for j in 0..3 {
        if !m.get(0, j).is_identity() {
            return Err(Error::NotNormalForm(format!("entry (1, {}) is not the identity", j + 1)));
        }
    }
    for i in 1..3 {
        if !m.get(i, 2).is_identity() {
            return Err(Error::NotNormalForm(format!("entry ({}, 3) is not the identity", i + 1)));
        }
    }
    Ok(())
}

/// Evaluates the coefficient system that a twist-free triple must satisfy for
/// `xi_1 + xi_2 + xi_3`, `alpha_1 xi_1 + alpha_2 xi_2 + xi_3` and
/// `beta_1 xi_1 + beta_2 xi_2 + xi_3` to be independent.
///
/// Writing `psi_j(s, n) = sigma_j s^2 + kappa_j s n + lambda_j n^2`, the
/// equation splits into the coefficients of `s_u s_v`, `s_u n_v` and `n_u n_v`
/// for each pair of slots. The integer-only part is evaluated at every
/// `(n1, n2, n3)` in `{-2..2}^3`.
pub fn gaussian_system_check(cfs: &[CylinderCF], m: &StatMatrix<CylinderAuto<f64>>) -> Result<SystemReport> {
    check_normal_form(m)?;
    if cfs.len() != 3 {
        return Err(Error::DimensionMismatch(format!("expected 3 characteristic functions, got {}", cfs.len())));
    }
    if let Some(j) = cfs.iter().position(|c| c.twist != 0.0) {
        return Err(Error::TwistPresent(format!("factor {} has twist {}", j + 1, cfs[j].twist)));
    }
    let sg: Vec<f64> = cfs.iter().map(|c| c.sigma).collect();
    let kp: Vec<f64> = cfs.iter().map(|c| c.kappa).collect();
    let lm: Vec<f64> = cfs.iter().map(|c| c.lambda).collect();
    let al: Vec<&CylinderAuto<f64>> = (0..3).map(|j| m.get(1, j)).collect();
    let be: Vec<&CylinderAuto<f64>> = (0..3).map(|j| m.get(2, j)).collect();
    let (a, c, p): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        al.iter().map(|e| e.a).collect(),
        al.iter().map(|e| e.c).collect(),
        al.iter().map(|e| e.p as f64).collect(),
    );
    let (b, d, q): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        be.iter().map(|e| e.a).collect(),
        be.iter().map(|e| e.c).collect(),
        be.iter().map(|e| e.p as f64).collect(),
    );
    let sum = |f: &dyn Fn(usize) -> f64| (0..3).map(f).sum::<f64>();

    let mut residuals = vec![
        ("sigma_alpha", sum(&|j| sg[j] * a[j])),
        ("sigma_beta", sum(&|j| sg[j] * b[j])),
        ("sigma_alpha_beta", sum(&|j| sg[j] * a[j] * b[j])),
        ("kappa_alpha", sum(&|j| kp[j] * a[j])),
        ("kappa_beta", sum(&|j| kp[j] * b[j])),
        ("shift_alpha", sum(&|j| 2.0 * sg[j] * c[j] + kp[j] * p[j])),
        ("shift_beta", sum(&|j| 2.0 * sg[j] * d[j] + kp[j] * q[j])),
        ("shift_beta_scaled_alpha", sum(&|j| 2.0 * sg[j] * a[j] * d[j] + kp[j] * a[j] * q[j])),
        ("shift_alpha_scaled_beta", sum(&|j| 2.0 * sg[j] * b[j] * c[j] + kp[j] * b[j] * p[j])),
    ]
    .into_iter()
    .map(|(name, value)| NamedResidual { name: name.to_string(), value })
    .collect::<Vec<_>>();

    let cross12 = sum(&|j| kp[j] * c[j]);
    let cross13 = sum(&|j| kp[j] * d[j]);
    let cross23 = sum(&|j| 2.0 * sg[j] * c[j] * d[j] + kp[j] * (c[j] * q[j] + d[j] * p[j]));
    let lambda: f64 = lm.iter().sum();
    for n1 in -2i64..=2 {
        for n2 in -2i64..=2 {
            for n3 in -2i64..=2 {
                let (x1, x2, x3) = (n1 as f64, n2 as f64, n3 as f64);
                let mut v = x1 * x2 * cross12 + x1 * x3 * cross13 + x2 * x3 * cross23;
                for j in 0..3 {
                    let lin = x1 + p[j] * x2 + q[j] * x3;
                    v += lm[j] * lin * lin;
                }
                v -= lambda * (x1 * x1 + x2 * x2 + x3 * x3);
                residuals.push(NamedResidual { name: format!("integer_part[{n1},{n2},{n3}]"), value: v });
            }
        }
    }

    let (mut max_abs, mut worst) = (0.0f64, residuals[0].name.clone());
    for r in &residuals {
        if r.value.abs() > max_abs || r.value.is_nan() {
            max_abs = r.value.abs();
            worst = r.name.clone();
        }
    }
    Ok(SystemReport { residuals, max_abs, worst })
}

/// Both sides of the polynomial identity
///
/// ```text
/// (a2 b1 - a1 b2)((1 - b2)(1 - a2)(a1 - b1) + (1 - b1)(1 - a1)(b2 - a2))
///     = -(b2 - b1)(a2 - a1)(a1 - b1)(b2 - a2)
/// ```
///
/// which holds whenever the identity polynomial of the coefficients vanishes.
pub fn support_identity(a1: &Rational, a2: &Rational, b1: &Rational, b2: &Rational) -> (Rational, Rational) {
    let one = Rational::from_integer(1.into());
    let lhs = (a2 * b1 - a1 * b2)
        * ((&one - b2) * (&one - a2) * (a1 - b1) + (&one - b1) * (&one - a1) * (b2 - a2));
    let rhs = -((b2 - b1) * (a2 - a1) * (a1 - b1) * (b2 - a2));
    (lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuSupportReport {
    /// `nu = (mu_1 * mu_1~) * (mu_2 * mu_2~) * (mu_3 * mu_3~)`.
    pub nu: CylinderCF,
    /// `4 sigma lambda - kappa^2` of `nu`.
    pub psd_gap: f64,
    pub support: Support,
    #[serde(with = "serde_rational")]
    pub identity_lhs: Rational,
    #[serde(with = "serde_rational")]
    pub identity_rhs: Rational,
}

impl NuSupportReport {
    pub fn passes(&self) -> bool {
        self.psd_gap.abs() <= 1e-10 && self.identity_lhs == self.identity_rhs
    }
}

/// Symmetrises and convolves the three factors, then checks that the result
/// is carried by a line and that the support identity holds exactly.
pub fn nu_support_check(cfs: &[CylinderCF], m: &StatMatrix<CylinderAuto<Rational>>) -> Result<NuSupportReport> {
    check_normal_form(m)?;
    if cfs.len() != 3 {
        return Err(Error::DimensionMismatch(format!("expected 3 characteristic functions, got {}", cfs.len())));
    }
    let mut nu = CylinderCF::degenerate(0.0, 0.0);
    for cf in cfs {
        nu = nu.convolve(&cf.symmetrize())?;
    }
    nu.theta = 0.0;
    let psd_gap = 4.0 * nu.sigma * nu.lambda - nu.kappa * nu.kappa;
    let support = if nu.twist.is_zero() { support_line(&nu)? } else { Support::NotALine };
    let (a1, a2) = (&m.get(1, 0).a, &m.get(1, 1).a);
    let (b1, b2) = (&m.get(2, 0).a, &m.get(2, 1).a);
    let (identity_lhs, identity_rhs) = support_identity(a1, a2, b1, b2);
    Ok(NuSupportReport { nu, psd_gap, support, identity_lhs, identity_rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::independence::conditions::{corner_det, identity_polynomial};
    use crate::independence::{cylinder_grid, independence_residual, GridKind, GRID_CAP, GRID_SEED};
    use crate::scalar::rat;
    use proptest::prelude::*;

    fn normal_form(a: [f64; 2], c: [f64; 2], p: [i64; 2], b: [f64; 2], d: [f64; 2], q: [i64; 2]) -> StatMatrix<CylinderAuto<f64>> {
        let id = CylinderAuto::identity();
        StatMatrix::new(vec![
            vec![id.clone(), id.clone(), id.clone()],
            vec![CylinderAuto::new(a[0], c[0], p[0]).unwrap(), CylinderAuto::new(a[1], c[1], p[1]).unwrap(), id.clone()],
            vec![CylinderAuto::new(b[0], d[0], q[0]).unwrap(), CylinderAuto::new(b[1], d[1], q[1]).unwrap(), id],
        ])
        .unwrap()
    }

    fn remark3() -> (Vec<CylinderCF>, StatMatrix<CylinderAuto<f64>>) {
        (
            vec![CylinderCF::line_gaussian(1.0, 1.0); 3],
            normal_form([2.0, -3.0], [1.0, -4.0], [1, 1], [-0.8, -0.2], [-1.8, -1.2], [1, 1]),
        )
    }

    #[test]
    fn remark3_solves_system() {
        let (cfs, m) = remark3();
        let r = gaussian_system_check(&cfs, &m).unwrap();
        assert_eq!(r.residuals.len(), 9 + 125);
        assert!(r.max_abs <= 1e-12, "{} at {}", r.max_abs, r.worst);
        assert!(r.first_failure(1e-12).is_none());
    }

    #[test]
    fn perturbed_shift_is_named() {
        let (cfs, _) = remark3();
        let m = normal_form([2.0, -3.0], [1.0, -4.0], [1, 1], [-0.8, -0.2], [-1.8 + 0.1, -1.2], [1, 1]);
        let r = gaussian_system_check(&cfs, &m).unwrap();
        assert!((r.get("shift_beta").unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(r.first_failure(1e-10).unwrap().name, "shift_beta");
        assert!((r.get("shift_beta_scaled_alpha").unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn degenerate_family_is_zero() {
        let (_, m) = remark3();
        let cfs = vec![CylinderCF::degenerate(0.3, 1.0); 3];
        assert_eq!(gaussian_system_check(&cfs, &m).unwrap().max_abs, 0.0);
    }

    #[test]
    fn rejects_twist_and_wrong_shape() {
        let (mut cfs, m) = remark3();
        cfs[1].twist = 0.1;
        assert!(matches!(gaussian_system_check(&cfs, &m), Err(Error::TwistPresent(_))));
        let id = CylinderAuto::<f64>::identity();
        let two = CylinderAuto::new(2.0, 0.0, 1).unwrap();
        let bad = StatMatrix::new(vec![vec![id.clone(), two, id.clone()], vec![id.clone(); 3], vec![id; 3]]).unwrap();
        assert!(matches!(gaussian_system_check(&remark3().0, &bad), Err(Error::NotNormalForm(_))));
    }

    #[test]
    fn support_identity_reference() {
        let (l, r) = support_identity(&rat(2, 1), &rat(-3, 1), &rat(-4, 5), &rat(-1, 5));
        assert_eq!(l, r);
        assert_eq!(l, rat(588, 25));
    }

    #[test]
    fn nu_support_reference() {
        let cfs = remark3().0;
        let exact = StatMatrix::new(vec![
            vec![CylinderAuto::identity(); 3],
            vec![
                CylinderAuto::new(rat(2, 1), rat(1, 1), 1).unwrap(),
                CylinderAuto::new(rat(-3, 1), rat(-4, 1), 1).unwrap(),
                CylinderAuto::identity(),
            ],
            vec![
                CylinderAuto::new(rat(-4, 5), rat(-9, 5), 1).unwrap(),
                CylinderAuto::new(rat(-1, 5), rat(-6, 5), 1).unwrap(),
                CylinderAuto::identity(),
            ],
        ])
        .unwrap();
        let r = nu_support_check(&cfs, &exact).unwrap();
        assert_eq!((r.nu.sigma, r.nu.kappa, r.nu.lambda), (6.0, 12.0, 6.0));
        assert!(r.passes());
        assert_eq!(r.support, Support::Line { omega: 1.0 });
        let r = nu_support_check(&[CylinderCF::degenerate(0.0, 0.0); 3], &exact).unwrap();
        assert_eq!(r.psd_gap, 0.0);
        assert_eq!(r.support, Support::Point);
    }

    fn nz() -> impl Strategy<Value = Rational> {
        (prop_oneof![-9i64..0, 1i64..9], 1i64..5).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn identity_gap_factors(a1 in nz(), a2 in nz(), b1 in nz(), b2 in nz()) {
            let (l, r) = support_identity(&a1, &a2, &b1, &b2);
            prop_assert_eq!(l - r, corner_det(&a1, &a2, &b1, &b2) * identity_polynomial(&a1, &a2, &b1, &b2));
        }

        #[test]
        fn system_agrees_with_residual(sig in proptest::array::uniform3(0.1..2.0f64), w in -1.5..1.5f64,
                                       ks in proptest::array::uniform3(-0.5..0.5f64),
                                       a in proptest::array::uniform2(prop_oneof![-3.0..-0.3f64, 0.3..3.0f64]),
                                       b in proptest::array::uniform2(prop_oneof![-3.0..-0.3f64, 0.3..3.0f64]),
                                       c in proptest::array::uniform2(-2.0..2.0f64),
                                       p in proptest::array::uniform2(prop_oneof![Just(1i64), Just(-1i64)])) {
            let cfs: Vec<CylinderCF> = (0..3).map(|j| {
                let base = CylinderCF::line_gaussian(sig[j], w);
                CylinderCF::new(base.sigma, base.kappa + ks[j], base.lambda + ks[j].abs() + 1.0, 0.0, 0.0, 0.0).unwrap()
            }).collect();
            let m = normal_form(a, c, p, b, [c[1], c[0]], [p[1], p[0]]);
            let sys = gaussian_system_check(&cfs, &m).unwrap();
            let grid = cylinder_grid(3, GridKind::Default, 3000, GRID_SEED ^ 1);
            let res = independence_residual(&cfs, &m, &grid, 1).unwrap();
            prop_assert_eq!(sys.max_abs <= 1e-9, res.residual <= 1e-9);
        }
    }

    #[test]
    fn full_grid_agrees_with_system_on_remark3() {
        let (cfs, m) = remark3();
        let grid = cylinder_grid(3, GridKind::Default, GRID_CAP, GRID_SEED);
        assert!(independence_residual(&cfs, &m, &grid, 1).unwrap().residual <= 1e-12);
    }
}
