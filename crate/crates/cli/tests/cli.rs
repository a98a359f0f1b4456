use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cylstat_core::fdiff::{DEFAULT_N_RANGE, DEFAULT_S_RANGE};
use cylstat_core::{rat, CharFn, CylinderCF, Family, Fixture, FixtureMatrix, GridFunction, StatMatrix};
use serde_json::{json, Value};
use tempfile::TempDir;

fn cylstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylstat")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const REMARK3: &str = r#"{"omega": "1", "a1": "2", "a2": "-3", "b1": "-4/5", "b2": "-1/5"}"#;

fn construct_remark3(dir: &TempDir) -> PathBuf {
    let params = write(dir, "params.json", REMARK3);
    let out = dir.path().join("remark3.json");
    let o = cylstat(&["construct", "--family", "remark3", "--params", s(&params), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn construct_then_check_round_trip() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "params.json", REMARK3);
    let out = dir.path().join("remark3.json");
    let o = cylstat(&["construct", "--family", "remark3", "--params", s(&params), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["sigmas"], json!(["1", "1", "1"]));
    let fixture: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fixture["family"], "remark3");

    let o = cylstat(&["check", "--fixture", s(&out), "--workers", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["pass"], true);
    assert_eq!(r["support"], "line");
    assert!((r["omega"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(r["independence_residual"].as_f64().unwrap() <= 1e-10);
    assert!(r["structure"]["lmn"].is_object());
}

#[test]
fn every_constructed_family_checks_clean() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("remark3", r#"{"omega": "1/2", "a1": "2", "a2": "-3", "b1": "-4/5", "b2": "-1/5", "sigma_scale": 2.5}"#),
        ("lemma4", r#"{"sigma": 1.0, "kappa": 0.05, "theta1": 0.3}"#),
        ("remark4", r#"{"sigma": 1.0, "kappa": 0.05}"#),
    ];
    for (family, params) in cases {
        let p = write(&dir, &format!("{family}-params.json"), params);
        let out = dir.path().join(format!("{family}.json"));
        let o = cylstat(&["construct", "--family", family, "--params", s(&p), "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{family}: {}", stderr(&o));
        let o = cylstat(&["check", "--fixture", s(&out), "--grid", "dense"]);
        assert_eq!(code(&o), 0, "{family}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn construct_rejections_exit_2_with_a_reason() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never.json");
    let cases = [
        ("remark4", r#"{"sigma": 1.0, "kappa": 0.0}"#, "not a counterexample"),
        ("lemma4", r#"{"sigma": 0.0, "kappa": 0.1}"#, "invalid probability"),
        ("remark3", r#"{"omega": "1", "a1": "2", "a2": "3", "b1": "4", "b2": "5"}"#, "no positive sigma"),
        ("remark3", r#"{"omega": "1"}"#, "parse error"),
    ];
    for (family, params, reason) in cases {
        let p = write(&dir, "params.json", params);
        let o = cylstat(&["construct", "--family", family, "--params", s(&p), "--out", s(&out)]);
        assert_eq!(code(&o), 2, "{family} {params}");
        assert!(stderr(&o).contains(reason), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        assert!(!out.exists());
    }
}

#[test]
fn perturbed_shift_fails_check() {
    let dir = TempDir::new().unwrap();
    let path = construct_remark3(&dir);
    let mut f = Fixture::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    let FixtureMatrix::Cylinder(m) = &f.matrix else { unreachable!() };
    let mut rows = m.rows().to_vec();
    rows[2][0].c += rat(1, 10);
    f.matrix = FixtureMatrix::Cylinder(StatMatrix::new(rows).unwrap());
    let bad = write(&dir, "perturbed.json", &f.to_json());
    let o = cylstat(&["check", "--fixture", s(&bad)]);
    assert_eq!(code(&o), 1);
    let r = stdout_json(&o);
    assert_eq!(r["pass"], false);
    assert_eq!(r["structure"]["first_failure"], "shift_beta");
    assert!(!r["failures"].as_array().unwrap().is_empty());
}

#[test]
fn degenerate_fixture_has_point_support() {
    let dir = TempDir::new().unwrap();
    let path = construct_remark3(&dir);
    let mut f = Fixture::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    f.family = Family::Custom;
    f.cfs = vec![CharFn::Cylinder(CylinderCF::degenerate(0.3, 1.0)); 3];
    let p = write(&dir, "degenerate.json", &f.to_json());
    let o = cylstat(&["check", "--fixture", s(&p)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["support"], "point support");
}

#[test]
fn check_output_does_not_depend_on_workers() {
    let dir = TempDir::new().unwrap();
    let path = construct_remark3(&dir);
    let one = cylstat(&["check", "--fixture", s(&path), "--grid", "dense", "--workers", "1"]);
    let three = cylstat(&["check", "--fixture", s(&path), "--grid", "dense", "--workers", "3"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let junk = write(&dir, "junk.json", "{\"matrix\": 3}");
    let o = cylstat(&["check", "--fixture", s(&junk)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("invalid fixture"));
    let o = cylstat(&["check", "--fixture", s(&dir.path().join("missing.json"))]);
    assert_eq!(code(&o), 2);
    let o = cylstat(&["check", "--fixture", s(&junk), "--grid", "sparse"]);
    assert_eq!(code(&o), 2);
    let o = cylstat(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn lemma2_verdicts() {
    let o = cylstat(&["lemma2", "--a1", "2", "--a2", "-3", "--b1", "-4/5", "--b2", "-1/5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["identity1_residual"], "0");
    assert_eq!(r["sign_row"], 2);
    assert_eq!(r["cross_det"], "14/5");

    let o = cylstat(&["lemma2", "--a1", "1", "--a2", "-2", "--b1", "-2", "--b2", "1"]);
    assert_eq!(code(&o), 1);
    let r = stdout_json(&o);
    assert_eq!(r["identity1_residual"], "9");
    assert!(r["failures"].as_array().unwrap().contains(&json!("identity")));

    assert_eq!(code(&cylstat(&["lemma2", "--a1", "x", "--a2", "-3", "--b1", "1", "--b2", "2"])), 2);
    assert_eq!(code(&cylstat(&["lemma2", "--a1", "0", "--a2", "-3", "--b1", "1", "--b2", "2"])), 2);
}

fn write_grid(dir: &TempDir, name: &str, f: impl Fn(f64, i64) -> f64) -> PathBuf {
    let g = GridFunction::sample_default(f);
    let p = dir.path().join(name);
    g.write_csv(fs::File::create(&p).unwrap()).unwrap();
    p
}

#[test]
fn reduce_modes() {
    let dir = TempDir::new().unwrap();
    let quad = write_grid(&dir, "quad.csv", |s, n| 0.7 * s * s + 0.2 * n as f64 * s + 0.1 * (n * n) as f64);
    let header = fs::read_to_string(&quad).unwrap();
    assert!(header.starts_with("s,n,re,im"));

    let o = cylstat(&["reduce", "--input", s(&quad), "--mode", "degree"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout_json(&o)["degree"], 2);

    let o = cylstat(&["reduce", "--input", s(&quad), "--mode", "lemma8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert!((r["sigma"].as_f64().unwrap() - 0.7).abs() < 1e-9);

    let cubic = write_grid(&dir, "cubic.csv", |s, n| 0.7 * s * s + s.powi(3) + 0.1 * (n * n) as f64);
    let o = cylstat(&["reduce", "--input", s(&cubic), "--mode", "lemma8"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["pass"], false);

    let o = cylstat(&["reduce", "--input", s(&quad), "--input", s(&quad), "--mode", "degree"]);
    assert_eq!(code(&o), 2);
    let bad = write(&dir, "bad.csv", "s,n,re,im\n0,0,oops,0\n");
    assert_eq!(code(&cylstat(&["reduce", "--input", s(&bad), "--mode", "degree"])), 2);
}

#[test]
fn reduce_lemma6_on_remark3() {
    let dir = TempDir::new().unwrap();
    let fixture = construct_remark3(&dir);
    let f = Fixture::from_json(&fs::read_to_string(&fixture).unwrap()).unwrap();
    let mut inputs = Vec::new();
    for (j, cf) in f.cylinder_cfs().unwrap().iter().enumerate() {
        let g = GridFunction::from_psi(cf, DEFAULT_S_RANGE, DEFAULT_N_RANGE).unwrap();
        let p = dir.path().join(format!("psi{j}.csv"));
        g.write_csv(fs::File::create(&p).unwrap()).unwrap();
        inputs.push(p);
    }
    let mut args = vec!["reduce", "--mode", "lemma6", "--fixture", s(&fixture)];
    for p in &inputs {
        args.extend(["--input", s(p)]);
    }
    let o = cylstat(&args);
    assert_eq!(code(&o), 0, "{} {}", stderr(&o), String::from_utf8_lossy(&o.stdout));
    let r = stdout_json(&o);
    assert_eq!(r["triple_differences"].as_array().unwrap().len(), 3);

    let o = cylstat(&["reduce", "--mode", "lemma6", "--input", s(&inputs[0]), "--input", s(&inputs[1]), "--input", s(&inputs[2])]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--fixture"));
}

#[test]
fn simulate_is_seeded() {
    let dir = TempDir::new().unwrap();
    let fixture = construct_remark3(&dir);
    let run = |seed: &str| cylstat(&["simulate", "--fixture", s(&fixture), "--count", "4000", "--seed", seed]);
    let a = run("11");
    let b = run("11");
    assert_eq!(a.stdout, b.stdout);
    let r = stdout_json(&a);
    assert_eq!(r["count"], 4000);
    let band = r["band"].as_array().unwrap();
    assert!(band[0].as_f64().unwrap() <= band[1].as_f64().unwrap());
    let expected = if r["consistent_with_zero"].as_bool().unwrap() { 0 } else { 1 };
    assert_eq!(code(&a), expected);
    assert_ne!(run("12").stdout, a.stdout);
    assert_eq!(code(&cylstat(&["simulate", "--fixture", s(&fixture), "--count", "1", "--seed", "1"])), 2);
}

#[test]
fn solenoid_pullback_and_rejection() {
    let dir = TempDir::new().unwrap();
    let fixture = construct_remark3(&dir);
    let ascending: Vec<u64> = (2..18).collect();
    let base = write(&dir, "base.json", &serde_json::to_string(&ascending).unwrap());
    let o = cylstat(&["solenoid", "--base", s(&base), "--fixture", s(&fixture), "--depth", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert!(r["pullback_residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["precision"], 16);

    let mut f = Fixture::from_json(&fs::read_to_string(&fixture).unwrap()).unwrap();
    let FixtureMatrix::Cylinder(m) = &f.matrix else { unreachable!() };
    let mut rows = m.rows().to_vec();
    rows[1][0].a = rat(1, 7);
    f.family = Family::Custom;
    f.matrix = FixtureMatrix::Cylinder(StatMatrix::new(rows).unwrap());
    let seventh = write(&dir, "seventh.json", &f.to_json());
    let twos = write(&dir, "twos.json", r#"{"a": [2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2]}"#);
    let o = cylstat(&["solenoid", "--base", s(&twos), "--fixture", s(&seventh), "--depth", "6"]);
    assert_eq!(code(&o), 1);
    let r = stdout_json(&o);
    assert!(r["rejected"].as_str().unwrap().contains("(2, 1)"), "{r}");

    let bad = write(&dir, "bad-base.json", "[1, 2]");
    assert_eq!(code(&cylstat(&["solenoid", "--base", s(&bad), "--fixture", s(&fixture), "--depth", "6"])), 2);
}
