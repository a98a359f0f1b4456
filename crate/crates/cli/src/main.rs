//! `cylstat`: builds fixtures, checks them and reports as JSON on stdout.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cylstat_core::fdiff::FIT_TOL;
use cylstat_core::{
    check_fixture, classify_lmn, construct, lemma2_conditions, lemma8_fit, parse_rational, polynomial_degree,
    pullback_residual, simulate_fixture, verify_lemma6, BaseSequence, Error, Family, Fixture, FixtureMatrix,
    GridFunction, GridKind,
};

/// Pullback residual bound for `solenoid`.
const PULLBACK_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "cylstat", version, about = "Independence of linear statistics on R x T and its solenoid cover")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Remark3,
    Lemma4,
    Remark4,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Default,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceMode {
    Degree,
    Lemma8,
    Lemma6,
}

#[derive(Subcommand)]
enum Command {
    /// Build a certified fixture from a parameter file.
    Construct {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every applicable check against a fixture.
    Check {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        grid: GridArg,
        /// Worker threads; the report does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Exact coefficient conditions for a1, a2, b1, b2 given as "m/d" strings.
    Lemma2 {
        #[arg(long, allow_hyphen_values = true)]
        a1: String,
        #[arg(long, allow_hyphen_values = true)]
        a2: String,
        #[arg(long, allow_hyphen_values = true)]
        b1: String,
        #[arg(long, allow_hyphen_values = true)]
        b2: String,
    },
    /// Finite-difference structure of gridded functions (CSV header s,n,re,im).
    Reduce {
        /// One grid for degree and lemma8, three (one per factor) for lemma6.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum)]
        mode: ReduceMode,
        /// Fixture supplying the normal-form matrix for lemma6.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        max_degree: usize,
        #[arg(long, default_value_t = FIT_TOL)]
        tol: f64,
    },
    /// Monte-Carlo estimate of the independence defect with a bootstrap band.
    Simulate {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Independence equation restricted to the rational dual H_a x Z.
    Solenoid {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// A report for stdout and whether the verification passed; input problems
/// travel as errors instead.
struct Outcome {
    report: Value,
    pass: bool,
}

fn verdict<T: Serialize>(report: &T, pass: bool) -> anyhow::Result<Outcome> {
    Ok(Outcome { report: serde_json::to_value(report)?, pass })
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_fixture(path: &Path) -> anyhow::Result<Fixture> {
    Fixture::from_json(&read_text(path)?).with_context(|| format!("invalid fixture {}", path.display()))
}

fn load_grid(path: &Path) -> anyhow::Result<GridFunction> {
    let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    GridFunction::read_csv(file).with_context(|| format!("invalid grid {}", path.display()))
}

fn workers_or_default(workers: Option<usize>) -> anyhow::Result<usize> {
    match workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn rational_arg(name: &str, text: &str) -> anyhow::Result<cylstat_core::Rational> {
    parse_rational(text).with_context(|| format!("--{name} is not a rational"))
}

fn run_construct(family: FamilyArg, params: &Path, out: &Path) -> anyhow::Result<Outcome> {
    let params: Value = serde_json::from_str(&read_text(params)?).context("params file is not JSON")?;
    let family = match family {
        FamilyArg::Remark3 => Family::Remark3,
        FamilyArg::Lemma4 => Family::Lemma4,
        FamilyArg::Remark4 => Family::Remark4,
    };
    let fixture = match construct(family, &params) {
        Ok(f) => f,
        Err(Error::SelfCheckFailed(msg)) => {
            return verdict(&json!({ "family": family, "pass": false, "error": msg }), false);
        }
        Err(e) => return Err(anyhow!(e).context("construction rejected")),
    };
    fs::write(out, fixture.to_json()).with_context(|| format!("cannot write {}", out.display()))?;
    eprintln!("wrote {}", out.display());
    let sigmas = fixture.sigmas.as_ref().map(|s| s.iter().map(cylstat_core::format_rational).collect::<Vec<_>>());
    let report = json!({
        "family": family,
        "out": out.display().to_string(),
        "statistics": fixture.matrix.n(),
        "omega": fixture.omega.as_ref().map(cylstat_core::format_rational),
        "sigmas": sigmas,
        "pass": true,
    });
    verdict(&report, true)
}

fn run_check(path: &Path, grid: GridArg, workers: Option<usize>) -> anyhow::Result<Outcome> {
    let fixture = load_fixture(path)?;
    let workers = workers_or_default(workers)?;
    let grid = match grid {
        GridArg::Default => GridKind::Default,
        GridArg::Dense => GridKind::Dense,
    };
    let started = Instant::now();
    let report = check_fixture(&fixture, grid, workers).context("check could not run")?;
    eprintln!("checked {} tuples in {:.2} s", report.grid_size, started.elapsed().as_secs_f64());
    for f in &report.failures {
        eprintln!("failure: {f}");
    }
    verdict(&report, report.pass)
}

fn run_lemma2(a1: &str, a2: &str, b1: &str, b2: &str) -> anyhow::Result<Outcome> {
    let (a1, a2) = (rational_arg("a1", a1)?, rational_arg("a2", a2)?);
    let (b1, b2) = (rational_arg("b1", b1)?, rational_arg("b2", b2)?);
    let report = lemma2_conditions(&a1, &a2, &b1, &b2)?;
    let pass = report.all_pass();
    let mut out = serde_json::to_value(&report)?;
    out["failures"] = json!(report.failures());
    out["pass"] = json!(pass);
    verdict(&out, pass)
}

fn run_reduce(
    inputs: &[PathBuf],
    mode: ReduceMode,
    fixture: Option<&Path>,
    max_degree: usize,
    tol: f64,
) -> anyhow::Result<Outcome> {
    let expected = if matches!(mode, ReduceMode::Lemma6) { 3 } else { 1 };
    if inputs.len() != expected {
        bail!("this mode takes {expected} --input file(s), got {}", inputs.len());
    }
    let grids = inputs.iter().map(|p| load_grid(p)).collect::<anyhow::Result<Vec<_>>>()?;
    match mode {
        ReduceMode::Degree => {
            let degree = polynomial_degree(&grids[0], max_degree, tol);
            let report = json!({ "mode": "degree", "degree": degree, "max_degree": max_degree, "pass": degree.is_some() });
            verdict(&report, degree.is_some())
        }
        ReduceMode::Lemma8 => match lemma8_fit(&grids[0], tol) {
            Ok(fit) => {
                let mut report = serde_json::to_value(&fit)?;
                report["mode"] = json!("lemma8");
                report["pass"] = json!(true);
                verdict(&report, true)
            }
            Err(e @ (Error::NotQuadraticForm(_) | Error::SymmetryViolated(_))) => {
                verdict(&json!({ "mode": "lemma8", "pass": false, "error": e.to_string() }), false)
            }
            Err(e) => Err(anyhow!(e).context("grid unusable for the quadratic fit")),
        },
        ReduceMode::Lemma6 => {
            let path = fixture.ok_or_else(|| anyhow!("lemma6 needs --fixture for the matrix"))?;
            let fixture = load_fixture(path)?;
            let FixtureMatrix::Cylinder(m) = &fixture.matrix else {
                bail!("lemma6 needs a matrix on the cylinder");
            };
            let tags = classify_lmn(m).context("subgroups L, M, N unavailable")?;
            let r = verify_lemma6(&grids, &m.to_f64(), &tags)?;
            let pass = r.iter().all(|&v| v <= tol);
            let report = json!({ "mode": "lemma6", "lmn": tags, "triple_differences": r, "tol": tol, "pass": pass });
            verdict(&report, pass)
        }
    }
}

fn run_simulate(path: &Path, count: usize, seed: u64) -> anyhow::Result<Outcome> {
    let fixture = load_fixture(path)?;
    if count < 2 {
        bail!("--count must be at least 2");
    }
    let started = Instant::now();
    let est = simulate_fixture(&fixture, count, seed).context("simulation could not run")?;
    eprintln!("simulated {count} draws per law in {:.2} s", started.elapsed().as_secs_f64());
    verdict(&est, est.consistent_with_zero)
}

fn run_solenoid(base: &Path, path: &Path, depth: usize, workers: Option<usize>) -> anyhow::Result<Outcome> {
    let base: BaseSequence = serde_json::from_str(&read_text(base)?).context("invalid base sequence")?;
    let fixture = load_fixture(path)?;
    let workers = workers_or_default(workers)?;
    let FixtureMatrix::Cylinder(m) = &fixture.matrix else {
        bail!("solenoid needs a matrix on the cylinder");
    };
    let cfs = fixture.cylinder_cfs().expect("validated fixture");
    match pullback_residual(&cfs, m, &base, depth, workers) {
        Ok(r) => {
            let pass = r.residual <= PULLBACK_TOL;
            let report = json!({
                "precision": base.precision(),
                "depth": depth,
                "grid_size": r.grid_size,
                "pullback_residual": r.residual,
                "worst_tuple": r.worst_tuple,
                "pass": pass,
            });
            verdict(&report, pass)
        }
        Err(Error::NotInHa(msg)) => {
            eprintln!("rejected: {msg}");
            verdict(&json!({ "precision": base.precision(), "depth": depth, "rejected": msg, "pass": false }), false)
        }
        Err(e) => Err(anyhow!(e).context("pullback could not run")),
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Construct { family, params, out } => run_construct(family, &params, &out),
        Command::Check { fixture, grid, workers } => run_check(&fixture, grid, workers),
        Command::Lemma2 { a1, a2, b1, b2 } => run_lemma2(&a1, &a2, &b1, &b2),
        Command::Reduce { input, mode, fixture, max_degree, tol } => {
            run_reduce(&input, mode, fixture.as_deref(), max_degree, tol)
        }
        Command::Simulate { fixture, count, seed } => run_simulate(&fixture, count, seed),
        Command::Solenoid { base, fixture, depth, workers } => run_solenoid(&base, &fixture, depth, workers),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome { report, pass }) => {
            let text = serde_json::to_string_pretty(&report).expect("reports serialize");
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
