//! Characteristic-function calculus on the cylinder `R x T` and on `T`:
//! automorphism actions, the independence functional equation for linear
//! statistics, explicit Gaussian and twisted families, finite-difference
//! structure fits, a-adic solenoid arithmetic and Monte-Carlo corroboration.

pub mod charfn;
pub mod constructions;
pub mod error;
pub mod fdiff;
pub mod fixture;
pub mod group;
pub mod independence;
pub mod linalg;
pub mod montecarlo;
pub mod scalar;
pub mod solenoid;

pub use charfn::{is_valid_probability, support_line, CharFn, CylinderCF, LogCharFn, Support, TorusCF, Validity, Z2SignedMeasure};
pub use constructions::{
    hadamard_matrix, lemma4_pair, lemma5_matrix, lemma5_scenario, remark3_family, remark4_counterexample,
    sum_difference_matrix, z2_signed_measure, Lemma5Verdict, Remark3Family, Remark4Family, Signs, CERT_TOL,
};
pub use error::{Error, Result};
pub use fdiff::{lemma8_fit, polynomial_degree, verify_kappa_linearity, verify_lemma6, GridFunction, QuadraticFit};
pub use fixture::{check_fixture, construct, simulate_fixture, CheckReport, Family, Fixture, FixtureMatrix, CHECK_TOL};
pub use group::{pair, wrap_angle, CylinderAuto, CylinderPoint, DualAction, DualElement, DualPoint, TorusAuto};
pub use independence::{
    classify_lmn, cylinder_grid, gaussian_system_check, independence_residual, lemma2_conditions, lmn_case,
    nu_support_check, reduce_to_normal_form, solve_sigmas, torus_grid, ConditionReport, GridKind, LmnTags,
    ResidualReport, StatMatrix, SubgroupTag, GRID_CAP, GRID_SEED,
};
pub use montecarlo::{empirical_cf, empirical_independence, sample_line_gaussian, sample_torus_twisted, IndependenceEstimate};
pub use scalar::{format_rational, parse_rational, rat, Rational, Scalar};
pub use solenoid::{adic_add, ha_member, pullback_residual, AdicInteger, BaseSequence, HaRational, SolenoidAuto};
