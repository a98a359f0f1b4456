//! JSON fixtures: construction parameters, certified families and the full
//! battery of checks run against a fixture.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::charfn::{support_line, CharFn, CylinderCF, Support, TorusCF};
use crate::constructions::{lemma4_pair, remark3_family, remark4_counterexample, settle_validity, Signs};
use crate::error::{Error, Result};
use crate::group::{CylinderAuto, TorusAuto};
use crate::independence::{
    classify_lmn, cylinder_grid, gaussian_system_check, independence_residual, lmn_case, nu_support_check,
    reduce_to_normal_form, torus_grid, GridKind, LmnTags, NuSupportReport, StatMatrix, SystemReport, GRID_CAP,
    GRID_SEED,
};
use crate::montecarlo::{cylinder_probe_values, probe_grid, simulate, torus_probe_values, IndependenceEstimate};
use crate::scalar::{serde_rational, Rational, Scalar};

/// Residual tolerance for `check`.
pub const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Remark3,
    Lemma4,
    Remark4,
    /// Hand-written fixtures.
    Custom,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remark3" => Ok(Family::Remark3),
            "lemma4" => Ok(Family::Lemma4),
            "remark4" => Ok(Family::Remark4),
            "custom" => Ok(Family::Custom),
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Remark3 => "remark3",
            Family::Lemma4 => "lemma4",
            Family::Remark4 => "remark4",
            Family::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Automorphisms of the cylinder (objects) or of `T` (bare signs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureMatrix {
    Torus(StatMatrix<TorusAuto>),
    Cylinder(StatMatrix<CylinderAuto<Rational>>),
}

impl FixtureMatrix {
    pub fn n(&self) -> usize {
        match self {
            FixtureMatrix::Torus(m) => m.n(),
            FixtureMatrix::Cylinder(m) => m.n(),
        }
    }

    /// The matrix acting on the cylinder, torus maps fixing the `R` factor.
    pub fn to_real(&self) -> StatMatrix<CylinderAuto<f64>> {
        match self {
            FixtureMatrix::Torus(m) => m.map(TorusAuto::to_cylinder),
            FixtureMatrix::Cylinder(m) => m.to_f64(),
        }
    }
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => serde_rational::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let v = Option::<Value>::deserialize(d)?;
        v.map(|v| Rational::from_json(&v).map_err(serde::de::Error::custom)).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub omega: Option<Rational>,
    pub matrix: FixtureMatrix,
    pub cfs: Vec<CharFn>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::scalar::serde_rational_vec_opt")]
    pub sigmas: Option<Vec<Rational>>,
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Fixture = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixtures serialize")
    }

    /// One characteristic function per variable, of the kind the matrix acts on.
    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.n();
        if self.cfs.len() != n {
            return Err(Error::DimensionMismatch(format!("{} characteristic functions for {n} statistics", self.cfs.len())));
        }
        for (j, cf) in self.cfs.iter().enumerate() {
            match (&self.matrix, cf) {
                (FixtureMatrix::Torus(_), CharFn::Torus(_)) => {}
                (FixtureMatrix::Cylinder(_), CharFn::Cylinder(c)) => c.validate()?,
                _ => {
                    return Err(Error::DimensionMismatch(format!(
                        "characteristic function {} does not live on the group the matrix acts on",
                        j + 1
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn cylinder_cfs(&self) -> Option<Vec<CylinderCF>> {
        self.cfs
            .iter()
            .map(|c| match c {
                CharFn::Cylinder(c) => Some(*c),
                CharFn::Torus(_) => None,
            })
            .collect()
    }

    pub fn torus_cfs(&self) -> Option<Vec<TorusCF>> {
        self.cfs
            .iter()
            .map(|c| match c {
                CharFn::Torus(c) => Some(*c),
                CharFn::Cylinder(_) => None,
            })
            .collect()
    }
}

fn one() -> i64 {
    1
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Remark3Params {
    #[serde(with = "serde_rational")]
    pub omega: Rational,
    #[serde(with = "serde_rational")]
    pub a1: Rational,
    #[serde(with = "serde_rational")]
    pub a2: Rational,
    #[serde(with = "serde_rational")]
    pub b1: Rational,
    #[serde(with = "serde_rational")]
    pub b2: Rational,
    #[serde(default = "one")]
    pub p1: i64,
    #[serde(default = "one")]
    pub p2: i64,
    #[serde(default = "one")]
    pub q1: i64,
    #[serde(default = "one")]
    pub q2: i64,
    #[serde(default = "unit_scale")]
    pub sigma_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma4Params {
    pub sigma: f64,
    #[serde(default)]
    pub theta1: f64,
    #[serde(default)]
    pub theta2: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Remark4Params {
    pub sigma: f64,
    pub kappa: f64,
}

/// Builds and self-checks the fixture of `family` from its JSON parameters.
pub fn construct(family: Family, params: &Value) -> Result<Fixture> {
    match family {
        Family::Remark3 => {
            let p: Remark3Params = serde_json::from_value(params.clone())?;
            let signs = Signs { p: [p.p1, p.p2], q: [p.q1, p.q2] };
            let f = remark3_family(&p.omega, [&p.a1, &p.a2], [&p.b1, &p.b2], signs, p.sigma_scale)?;
            Ok(Fixture {
                family,
                omega: Some(f.omega),
                matrix: FixtureMatrix::Cylinder(f.matrix),
                cfs: f.cfs.into_iter().map(CharFn::Cylinder).collect(),
                sigmas: Some(f.sigmas.to_vec()),
            })
        }
        Family::Lemma4 => {
            let p: Lemma4Params = serde_json::from_value(params.clone())?;
            let (first, second) = lemma4_pair(p.sigma, p.theta1, p.theta2, p.kappa)?;
            Ok(Fixture {
                family,
                omega: None,
                matrix: FixtureMatrix::Torus(crate::constructions::sum_difference_matrix()),
                cfs: vec![CharFn::Torus(first), CharFn::Torus(second)],
                sigmas: None,
            })
        }
        Family::Remark4 => {
            let p: Remark4Params = serde_json::from_value(params.clone())?;
            let f = remark4_counterexample(p.sigma, p.kappa)?;
            Ok(Fixture {
                family,
                omega: None,
                matrix: FixtureMatrix::Torus(f.matrix),
                cfs: f.cfs.into_iter().map(CharFn::Torus).collect(),
                sigmas: None,
            })
        }
        Family::Custom => Err(Error::Parse("custom fixtures are written by hand, not constructed".into())),
    }
}

/// Coefficient-level checks for three statistics on the cylinder, run on the
/// normal form of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub normal_form_applied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_system: Option<SystemReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_support: Option<NuSupportReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmn: Option<LmnTags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmn_case: Option<u8>,
    /// Checks that do not apply to this fixture, with the reason.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub family: Family,
    pub statistics: usize,
    pub grid: GridKind,
    pub grid_size: usize,
    pub independence_residual: f64,
    pub worst_tuple: Value,
    pub gaussian: Vec<bool>,
    /// Per-factor positivity of the laws on `T`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub valid_probability: Vec<bool>,
    /// `"line"`, `"point support"`, `"mixed"` or `"torus"`.
    pub support: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureReport>,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn summarize_support(cfs: &[CylinderCF]) -> Result<(String, Option<f64>)> {
    let supports = cfs
        .iter()
        .map(|c| {
            if c.twist != 0.0 {
                Ok(Support::NotALine)
            } else {
                support_line(&CylinderCF { tau: 0.0, theta: 0.0, ..*c })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if supports.iter().all(|s| *s == Support::Point) {
        return Ok(("point support".into(), None));
    }
    let omegas: Vec<f64> = supports
        .iter()
        .filter_map(|s| match s {
            Support::Line { omega } => Some(*omega),
            _ => None,
        })
        .collect();
    let lines_only = supports.iter().all(|s| !matches!(s, Support::NotALine));
    if lines_only && omegas.windows(2).all(|w| (w[0] - w[1]).abs() <= CHECK_TOL * (1.0 + w[0].abs())) {
        Ok(("line".into(), omegas.first().copied()))
    } else {
        Ok(("mixed".into(), None))
    }
}

fn structure_checks(cfs: &[CylinderCF], m: &StatMatrix<CylinderAuto<Rational>>, failures: &mut Vec<String>) -> Result<StructureReport> {
    let normal = (0..3).all(|j| m.get(0, j).is_identity())
        && (1..3).all(|i| m.get(i, 2).is_identity());
    let (nf, cfs) = if normal {
        (m.clone(), cfs.to_vec())
    } else {
        let (nf, tr) = reduce_to_normal_form(m)?;
        let new = tr.transform_cfs(cfs)?;
        (nf, new)
    };
    let mut report = StructureReport {
        normal_form_applied: !normal,
        gaussian_system: None,
        first_failure: None,
        nu_support: None,
        lmn: None,
        lmn_case: None,
        skipped: Vec::new(),
    };
    if cfs.iter().any(|c| c.twist != 0.0) {
        report.skipped.push("coefficient system: twisted factor present".into());
    } else {
        let sys = gaussian_system_check(&cfs, &nf.to_f64())?;
        if !sys.passes(CHECK_TOL) {
            let first = sys.first_failure(CHECK_TOL).map(|r| r.name.clone()).unwrap_or_else(|| sys.worst.clone());
            failures.push(format!("coefficient equation {first} (worst {} = {:e})", sys.worst, sys.max_abs));
            report.first_failure = Some(first);
        }
        report.gaussian_system = Some(sys);
    }
    if cfs.iter().all(|c| c.sigma == 0.0) {
        report.skipped.push("support identity: all factors degenerate in s".into());
    } else {
        let nu = nu_support_check(&cfs, &nf)?;
        if nu.psd_gap.abs() > CHECK_TOL {
            failures.push(format!("symmetrized convolution is not carried by a line: 4 sigma lambda - kappa^2 = {:e}", nu.psd_gap));
        }
        if nu.identity_lhs != nu.identity_rhs {
            failures.push("support identity does not hold for the coefficients".into());
        }
        report.nu_support = Some(nu);
    }
    match classify_lmn(&nf) {
        Ok(tags) => {
            report.lmn_case = lmn_case(&tags);
            report.lmn = Some(tags);
        }
        Err(e) => report.skipped.push(format!("subgroup classification: {e}")),
    }
    Ok(report)
}

/// Independence residual over the grid plus every structural check that
/// applies; passes iff every residual is at most [`CHECK_TOL`].
pub fn check_fixture(fixture: &Fixture, grid: GridKind, workers: usize) -> Result<CheckReport> {
    fixture.validate()?;
    let n = fixture.matrix.n();
    let mut failures = Vec::new();
    let gaussian: Vec<bool> = fixture.cfs.iter().map(CharFn::is_gaussian).collect();
    let mut report = match &fixture.matrix {
        FixtureMatrix::Cylinder(m) => {
            let cfs = fixture.cylinder_cfs().expect("validated");
            let g = cylinder_grid(n, grid, GRID_CAP, GRID_SEED);
            let r = independence_residual(&cfs, &m.to_f64(), &g, workers)?;
            let (support, omega) = summarize_support(&cfs)?;
            let structure = if n == 3 { Some(structure_checks(&cfs, m, &mut failures)?) } else { None };
            CheckReport {
                family: fixture.family,
                statistics: n,
                grid,
                grid_size: r.grid_size,
                independence_residual: r.residual,
                worst_tuple: serde_json::to_value(&r.worst_tuple)?,
                gaussian,
                valid_probability: Vec::new(),
                support,
                omega,
                structure,
                failures: Vec::new(),
                pass: false,
            }
        }
        FixtureMatrix::Torus(m) => {
            let cfs = fixture.torus_cfs().expect("validated");
            let g = torus_grid(n, grid);
            let r = independence_residual(&cfs, m, &g, workers)?;
            let valid = cfs.iter().map(|c| settle_validity(c).map(|v| v.is_valid())).collect::<Result<Vec<_>>>()?;
            for (j, ok) in valid.iter().enumerate() {
                if !ok {
                    failures.push(format!("factor {} is not a probability distribution", j + 1));
                }
            }
            CheckReport {
                family: fixture.family,
                statistics: n,
                grid,
                grid_size: r.grid_size,
                independence_residual: r.residual,
                worst_tuple: serde_json::to_value(&r.worst_tuple)?,
                gaussian,
                valid_probability: valid,
                support: "torus".into(),
                omega: None,
                structure: None,
                failures: Vec::new(),
                pass: false,
            }
        }
    };
    if !(report.independence_residual <= CHECK_TOL) {
        failures.insert(0, format!("independence residual {:e} exceeds {CHECK_TOL:e}", report.independence_residual));
    }
    report.pass = failures.is_empty();
    report.failures = failures;
    Ok(report)
}

/// Samples the fixture's laws and estimates the independence defect.
pub fn simulate_fixture(fixture: &Fixture, count: usize, seed: u64) -> Result<IndependenceEstimate> {
    fixture.validate()?;
    let n = fixture.matrix.n();
    let probes = match fixture.matrix {
        FixtureMatrix::Torus(_) => probe_grid(&torus_probe_values(), n),
        FixtureMatrix::Cylinder(_) => probe_grid(&cylinder_probe_values(), n),
    };
    simulate(&fixture.cfs, &fixture.matrix.to_real(), &probes, count, seed)
}
