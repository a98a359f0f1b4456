use cylstat_core::fdiff::{DEFAULT_N_RANGE, DEFAULT_S_RANGE, FIT_TOL};
use cylstat_core::{
    check_fixture, construct, independence_residual, lemma8_fit, polynomial_degree, pullback_residual, rat,
    reduce_to_normal_form, simulate_fixture, BaseSequence, CylinderAuto, Family, Fixture, FixtureMatrix, GridFunction,
    GridKind, StatMatrix,
};
use serde_json::json;

fn remark3() -> Fixture {
    construct(Family::Remark3, &json!({"omega": "1", "a1": "2", "a2": "-3", "b1": "-4/5", "b2": "-1/5"})).unwrap()
}

fn cylinder_matrix(f: &Fixture) -> &StatMatrix<CylinderAuto<cylstat_core::Rational>> {
    match &f.matrix {
        FixtureMatrix::Cylinder(m) => m,
        FixtureMatrix::Torus(_) => panic!("expected a cylinder fixture"),
    }
}

#[test]
fn json_round_trip_is_lossless_and_checks_clean() {
    let f = remark3();
    let text = f.to_json();
    let back = Fixture::from_json(&text).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.to_json(), text);
    let r = check_fixture(&back, GridKind::Default, 2).unwrap();
    assert!(r.pass, "{:?}", r.failures);
}

#[test]
fn scrambled_rows_are_brought_to_normal_form() {
    let mut f = remark3();
    let g = [
        CylinderAuto::new(rat(3, 1), rat(1, 2), -1).unwrap(),
        CylinderAuto::new(rat(-2, 7), rat(0, 1), 1).unwrap(),
        CylinderAuto::new(rat(5, 4), rat(-1, 3), -1).unwrap(),
    ];
    let rows: Vec<Vec<_>> = cylinder_matrix(&f)
        .rows()
        .iter()
        .zip(&g)
        .map(|(row, gi)| row.iter().map(|e| e.compose(gi)).collect())
        .collect();
    let scrambled = StatMatrix::new(rows).unwrap();
    let (normal, _) = reduce_to_normal_form(&scrambled).unwrap();
    // unique up to conjugation by the map applied to the first statistic
    let conjugated = cylinder_matrix(&f).map(|e| g[0].invert().compose(e).compose(&g[0]));
    assert_eq!(normal, conjugated);

    f.family = Family::Custom;
    f.matrix = FixtureMatrix::Cylinder(scrambled);
    let r = check_fixture(&f, GridKind::Default, 1).unwrap();
    assert!(r.pass, "{:?}", r.failures);
    assert!(r.structure.unwrap().normal_form_applied);
}

#[test]
fn csv_grid_feeds_the_structure_fit() {
    let f = remark3();
    let cfs = f.cylinder_cfs().unwrap();
    for (j, cf) in cfs.iter().enumerate() {
        let g = GridFunction::from_psi(cf, DEFAULT_S_RANGE, DEFAULT_N_RANGE).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"s,n,re,im\n"));
        let back = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(polynomial_degree(&back, 4, 1e-8), Some(2), "factor {j}");
        let fit = lemma8_fit(&back, FIT_TOL).unwrap();
        assert!((fit.sigma - 2.0 * cf.sigma).abs() <= 1e-9, "factor {j}: {} vs {}", fit.sigma, cf.sigma);
    }
}

#[test]
fn real_and_solenoid_residuals_agree() {
    let f = remark3();
    let cfs = f.cylinder_cfs().unwrap();
    let m = cylinder_matrix(&f);
    let base = BaseSequence::ascending(2, 12).unwrap();
    let exact = pullback_residual(&cfs, m, &base, 4, 2).unwrap();
    assert!(exact.residual <= 1e-12, "{}", exact.residual);
    let grid = cylstat_core::cylinder_grid(3, GridKind::Default, cylstat_core::GRID_CAP, cylstat_core::GRID_SEED);
    let real = independence_residual(&cfs, &m.to_f64(), &grid, 2).unwrap();
    assert!(real.residual <= 1e-12);
}

#[test]
fn simulation_is_reproducible() {
    let f = remark3();
    let a = simulate_fixture(&f, 3000, 5).unwrap();
    let b = simulate_fixture(&f, 3000, 5).unwrap();
    assert_eq!(a, b);
    assert!(a.residual < 0.1);
}
