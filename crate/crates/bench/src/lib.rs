//! Shared inputs for the checker benchmarks in `benches/`.

use cylstat_core::{rat, remark3_family, BaseSequence, Remark3Family, Signs};

/// The line-supported Gaussian triple with `omega = 1`, `a = (2, -3)`,
/// `b = (-4/5, -1/5)` and unit signs.
pub fn remark3_reference() -> Remark3Family {
    remark3_family(&rat(1, 1), [&rat(2, 1), &rat(-3, 1)], [&rat(-4, 5), &rat(-1, 5)], Signs::default(), 1.0)
        .expect("reference triple is certified")
}

/// `(2, 3, ..., 17)`: sixteen digits, every prime up to 17 divides a prefix product.
pub fn ascending_base() -> BaseSequence {
    BaseSequence::ascending(2, 16).expect("valid base")
}
