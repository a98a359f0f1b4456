use serde::Serialize;

use super::StatMatrix;
use crate::charfn::CylinderCF;
use crate::error::{Error, Result};
use crate::group::CylinderAuto;
use crate::scalar::Scalar;

/// How a matrix was brought to normal form.
///
/// The new variables are `zeta_j = alpha_1j xi_j` (so the new factors are the
/// pushforwards by `column_maps[j]`) and statistic `i` is replaced by
/// `gamma_i L_i` whose dual is `row_maps[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormTransform<S: Scalar> {
    pub column_maps: Vec<CylinderAuto<S>>,
    pub row_maps: Vec<CylinderAuto<S>>,
}

impl<S: Scalar> NormalFormTransform<S> {
    /// Distributions of the new variables.
    pub fn transform_cfs(&self, cfs: &[CylinderCF]) -> Result<Vec<CylinderCF>> {
        if cfs.len() != self.column_maps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} characteristic functions for {} variables",
                cfs.len(),
                self.column_maps.len()
            )));
        }
        Ok(cfs.iter().zip(&self.column_maps).map(|(cf, e)| cf.pushforward(e)).collect())
    }
}

/// Rewrites `m` so that the first row and the last column are identities.
///
/// On the dual side entry `(i, j)` becomes `alpha~_1j^-1 alpha~_ij gamma~_i`
/// with `gamma~_i` chosen to make the last column the identity.
pub fn reduce_to_normal_form<S: Scalar>(
    m: &StatMatrix<CylinderAuto<S>>,
) -> Result<(StatMatrix<CylinderAuto<S>>, NormalFormTransform<S>)> {
    let n = m.n();
    let column_maps: Vec<CylinderAuto<S>> = (0..n).map(|j| m.get(0, j).clone()).collect();
    let inv_cols: Vec<CylinderAuto<S>> = column_maps.iter().map(|e| e.invert()).collect();
    let step: Vec<Vec<CylinderAuto<S>>> =
        (0..n).map(|i| (0..n).map(|j| inv_cols[j].compose(m.get(i, j))).collect()).collect();
    let row_maps: Vec<CylinderAuto<S>> = step.iter().map(|row| row[n - 1].invert()).collect();
    let entries = step
        .iter()
        .zip(&row_maps)
        .map(|(row, g)| row.iter().map(|e| e.compose(g)).collect())
        .collect();
    Ok((StatMatrix::new(entries)?, NormalFormTransform { column_maps, row_maps }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DualPoint;
    use crate::independence::log_defect;
    use crate::scalar::{rat, Rational};
    use proptest::prelude::*;

    fn auto() -> impl Strategy<Value = CylinderAuto<Rational>> {
        (prop_oneof![-7i64..0, 1i64..7], 1i64..4, -5i64..5, 1i64..4, prop_oneof![Just(1i64), Just(-1i64)])
            .prop_map(|(an, ad, cn, cd, p)| CylinderAuto::new(rat(an, ad), rat(cn, cd), p).unwrap())
    }

    proptest! {
        #[test]
        fn normal_form_shape_and_equivalence(entries in proptest::collection::vec(auto(), 9),
                                             sig in proptest::array::uniform3(0.1..2.0f64),
                                             y in proptest::collection::vec((-4i64..4, -3i64..3), 3)) {
            let m = StatMatrix::new(entries.chunks(3).map(|c| c.to_vec()).collect()).unwrap();
            let (nf, tr) = reduce_to_normal_form(&m).unwrap();
            for j in 0..3 {
                prop_assert!(nf.get(0, j).is_identity());
                prop_assert!(nf.get(j, 2).is_identity());
            }
            let cfs: Vec<CylinderCF> = sig.iter().map(|&s| CylinderCF::new(s, 0.2 * s, 0.5 + s, 0.1, 0.3, 0.0).unwrap()).collect();
            let new_cfs = tr.transform_cfs(&cfs).unwrap();
            let tuple: Vec<DualPoint<Rational>> = y.iter().map(|&(s, n)| DualPoint::new(rat(s, 2), n)).collect();
            let orig_tuple: Vec<DualPoint<Rational>> = tuple.iter().zip(&tr.row_maps).map(|(y, g)| g.apply_dual(y)).collect();
            let a = log_defect(&cfs, &m, &orig_tuple);
            let b = log_defect(&new_cfs, &nf, &tuple);
            prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn already_normal_is_fixed() {
        let id = CylinderAuto::<Rational>::identity();
        let e = CylinderAuto::new(rat(2, 1), rat(1, 1), 1).unwrap();
        let f = CylinderAuto::new(rat(-3, 1), rat(-4, 1), -1).unwrap();
        let m = StatMatrix::new(vec![vec![id.clone(); 3], vec![e.clone(), f.clone(), id.clone()], vec![f, e, id]]).unwrap();
        let (nf, tr) = reduce_to_normal_form(&m).unwrap();
        assert_eq!(nf, m);
        assert!(tr.column_maps.iter().chain(&tr.row_maps).all(|g| g.is_identity()));
    }
}
