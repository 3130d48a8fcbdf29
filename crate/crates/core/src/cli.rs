//! Batch front-end. Each command reads a JSON config, writes CSV/JSON
//! artifacts into the output directory and maps the outcome to an exit code.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | converged / completed |
//! | 1 | runtime error, or failed criteria in `check` |
//! | 2 | nonexistence suspected |
//! | 3 | inconclusive |
//! | 4 | invalid configuration |
//! | 5 | per-ray failure in `curve` |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{self, Command, DomainSpec, Prepared, Violation};
use crate::conformance::{run_suite, CheckSettings};
use crate::curve::{bound_report, compare_symmetrized, trace_rays, CurveTrace};
use crate::diagnostics::approach_extremal;
use crate::error::{Error, Result};
use crate::mesh::{equal_measure_radius, Mesh};
use crate::output::{write_json, write_node_fields};
use crate::profiles::symmetrize;
use crate::solver::{minimal_solve, SolveOutcome};
use crate::stability::{classify, eigen_ratio_check, linearized_eigen};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NONEXISTENCE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_RAY_FAILURE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "mems-lab", version, about = "Coupled MEMS system laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Multiplies every node count.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub resolution_scale: f64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Cmd {
    /// Minimal solution at (lambda, mu).
    Solve,
    /// Critical curve over theta_grid.
    Curve,
    /// Linearized principal eigenpair at the minimal solution.
    Eigen,
    /// Analytic bounds.
    Bounds,
    /// Schwarz symmetrization of f and g onto the equal-measure ball.
    Symmetrize,
    /// Observables along the ray toward the critical curve.
    Extremal,
    /// Acceptance suite.
    Check,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Curve => Command::Curve,
            Cmd::Eigen => Command::Eigen,
            Cmd::Bounds => Command::Bounds,
            Cmd::Symmetrize => Command::Symmetrize,
            Cmd::Extremal => Command::Extremal,
            Cmd::Check => Command::Check,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}

fn report_violations(v: &[Violation]) -> i32 {
    let doc = json!({ "error": "invalid_config", "violations": v });
    eprintln!("{doc}");
    EXIT_CONFIG
}

pub fn run(cli: &Cli) -> i32 {
    if !(cli.resolution_scale > 0.0 && cli.resolution_scale.is_finite()) {
        return report_violations(&[Violation {
            field: "--resolution-scale".into(),
            message: "must be > 0".into(),
        }]);
    }
    if cli.threads == Some(0) {
        return report_violations(&[Violation {
            field: "--threads".into(),
            message: "must be >= 1".into(),
        }]);
    }
    let Some(path) = &cli.config else {
        return report_violations(&[Violation {
            field: "--config".into(),
            message: "a config file is required".into(),
        }]);
    };
    let cfg = match config::load(path) {
        Ok(c) => c.with_resolution_scale(cli.resolution_scale),
        Err(v) => return report_violations(&v),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let cmd = Command::from(cli.command);
    let prepared = match cfg.prepare(cmd, base) {
        Ok(p) => p,
        Err(v) => return report_violations(&v),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}", json!({ "error": "thread_pool", "message": e.to_string() }));
            return EXIT_ERROR;
        }
    };
    let result = pool.install(|| {
        std::fs::create_dir_all(&cli.out)?;
        dispatch(cmd, &prepared, &cli.out)
    });
    match result {
        Ok(code) => code,
        Err(Error::Config(msg)) => report_violations(&[Violation {
            field: "config".into(),
            message: msg,
        }]),
        Err(e) => {
            eprintln!("{}", json!({ "error": "runtime", "message": e.to_string() }));
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, p: &Prepared, out: &Path) -> Result<i32> {
    match cmd {
        Command::Solve => cmd_solve(p, out),
        Command::Curve => cmd_curve(p, out),
        Command::Eigen => cmd_eigen(p, out),
        Command::Bounds => cmd_bounds(p, out),
        Command::Symmetrize => cmd_symmetrize(p, out),
        Command::Extremal => cmd_extremal(p, out),
        Command::Check => cmd_check(p, out),
    }
}

fn outcome_code(o: &SolveOutcome) -> i32 {
    match o {
        SolveOutcome::Converged(_) => EXIT_OK,
        SolveOutcome::NonexistenceSuspected { .. } => EXIT_NONEXISTENCE,
        SolveOutcome::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    fingerprint: &'a str,
    verdict: &'static str,
    reason: Option<crate::solver::NonexistenceReason>,
    iterations: usize,
    lambda: f64,
    mu: f64,
    residual_u: Option<f64>,
    residual_v: Option<f64>,
    sup_u: Option<f64>,
    sup_v: Option<f64>,
    last_increment: Option<f64>,
}

fn summarize<'a>(p: &'a Prepared, o: &SolveOutcome, lambda: f64, mu: f64) -> SolveSummary<'a> {
    let mut s = SolveSummary {
        fingerprint: &p.fingerprint,
        verdict: o.label(),
        reason: None,
        iterations: o.iterations(),
        lambda,
        mu,
        residual_u: None,
        residual_v: None,
        sup_u: None,
        sup_v: None,
        last_increment: None,
    };
    match o {
        SolveOutcome::Converged(sol) => {
            s.residual_u = Some(sol.residual.0);
            s.residual_v = Some(sol.residual.1);
            s.sup_u = Some(sol.state.sup_u());
            s.sup_v = Some(sol.state.sup_v());
        }
        SolveOutcome::NonexistenceSuspected { reason, .. } => s.reason = Some(*reason),
        SolveOutcome::Inconclusive { last_increment, .. } => s.last_increment = Some(*last_increment),
    }
    s
}

fn pair(p: &Prepared) -> (f64, f64) {
    (p.config.lambda.unwrap_or(0.0), p.config.mu.unwrap_or(0.0))
}

fn cmd_solve(p: &Prepared, out: &Path) -> Result<i32> {
    let (lambda, mu) = pair(p);
    let o = minimal_solve(&p.mesh, &p.f, &p.g, lambda, mu, &p.config.solver)?;
    if let Some(sol) = o.solution() {
        sol.state.write_csv(&p.mesh, out.join("solution.csv"), Some(&p.fingerprint))?;
    }
    write_json(out.join("summary.json"), &summarize(p, &o, lambda, mu))?;
    Ok(outcome_code(&o))
}

fn cmd_curve(p: &Prepared, out: &Path) -> Result<i32> {
    let grid = p.config.theta_grid.clone().unwrap_or_default();
    let results = trace_rays(&p.mesh, &p.f, &p.g, &grid, &p.config.solver, &p.config.bisection)?;
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (theta, r) in grid.iter().zip(results) {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(json!({ "theta": theta, "error": e.to_string() })),
        }
    }
    let trace = CurveTrace {
        samples,
        mesh_fingerprint: p.mesh.fingerprint(),
        f_fingerprint: p.f.fingerprint(),
        g_fingerprint: p.g.fingerprint(),
    };
    trace.write_csv(out.join("curve.csv"), Some(&p.fingerprint))?;
    write_json(
        out.join("bounds.json"),
        &json!({ "fingerprint": p.fingerprint, "bounds": bound_report(&p.mesh, &p.f, &p.g)? }),
    )?;
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        write_json(
            out.join("failures.json"),
            &json!({ "fingerprint": p.fingerprint, "failures": failures }),
        )?;
        Ok(EXIT_RAY_FAILURE)
    }
}

fn cmd_eigen(p: &Prepared, out: &Path) -> Result<i32> {
    let (lambda, mu) = pair(p);
    let o = minimal_solve(&p.mesh, &p.f, &p.g, lambda, mu, &p.config.solver)?;
    let Some(sol) = o.solution() else {
        write_json(out.join("summary.json"), &summarize(p, &o, lambda, mu))?;
        return Ok(outcome_code(&o));
    };
    let e = linearized_eigen(&p.mesh, &p.f, &p.g, lambda, mu, &sol.state)?;
    write_node_fields(
        &p.mesh,
        out.join("eigen.csv"),
        Some(&p.fingerprint),
        &[("phi1", &e.phi1), ("phi2", &e.phi2)],
    )?;
    // The ratio bound is stated for μ ≤ λ; swap roles otherwise.
    let ratio_gap = if mu <= lambda {
        eigen_ratio_check(&e, &p.mesh, lambda, mu).ok()
    } else {
        let swapped = crate::stability::EigenResult {
            phi1: e.phi2.clone(),
            phi2: e.phi1.clone(),
            ..e.clone()
        };
        eigen_ratio_check(&swapped, &p.mesh, mu, lambda).ok()
    };
    write_json(
        out.join("eigen.json"),
        &json!({
            "fingerprint": p.fingerprint,
            "lambda": lambda,
            "mu": mu,
            "nu1": e.nu1,
            "stability": classify(&e),
            "iterations": e.iterations,
            "residual": e.residual,
            "ratio_gap": ratio_gap,
            "mu1": p.mesh.eigenpair()?.mu1,
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_bounds(p: &Prepared, out: &Path) -> Result<i32> {
    let report = bound_report(&p.mesh, &p.f, &p.g)?;
    write_json(out.join("bounds.json"), &json!({ "fingerprint": p.fingerprint, "bounds": report }))?;
    Ok(EXIT_OK)
}

fn cmd_symmetrize(p: &Prepared, out: &Path) -> Result<i32> {
    let dim = p.mesh.dimension();
    let ball = Mesh::radial(dim, equal_measure_radius(p.mesh.volume(), dim), p.config.symmetrize_nodes)?;
    let fs = symmetrize(&p.f, &p.mesh, &ball)?;
    let gs = symmetrize(&p.g, &p.mesh, &ball)?;
    write_node_fields(
        &ball,
        out.join("symmetrized.csv"),
        Some(&p.fingerprint),
        &[("f_sharp", fs.values()), ("g_sharp", gs.values())],
    )?;
    if let Some(theta) = p.config.theta {
        let c = compare_symmetrized(&p.mesh, &p.f, &p.g, &ball, theta, &p.config.solver, &p.config.bisection)?;
        write_json(
            out.join("compare.json"),
            &json!({
                "fingerprint": p.fingerprint,
                "original": c.original,
                "symmetrized": c.symmetrized,
                "inequality_holds": c.inequality_holds(),
            }),
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_extremal(p: &Prepared, out: &Path) -> Result<i32> {
    let theta = p.config.theta.unwrap_or(1.0);
    let fractions = p.config.fractions.clone().unwrap_or_default();
    let (ray, rec) = approach_extremal(
        &p.mesh,
        &p.f,
        &p.g,
        theta,
        &fractions,
        p.config.moser_alpha,
        &p.config.solver,
        &p.config.bisection,
    )?;
    rec.write_csv(out.join("approach.csv"), Some(&p.fingerprint))?;
    write_json(
        out.join("approach.json"),
        &json!({
            "fingerprint": p.fingerprint,
            "ray": ray,
            "anomalies": rec.anomalies,
            "sup_u_monotone": rec.sup_u_monotone(),
        }),
    )?;
    Ok(if rec.has_unexpected_anomalies() {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}

/// Suite scale: 1 at 1024 radial intervals or a 64-wide rectangle.
pub fn check_scale(domain: &DomainSpec) -> f64 {
    match domain {
        DomainSpec::Radial { nodes, .. } => *nodes as f64 / 1024.0,
        DomainSpec::Rect { nx, .. } => *nx as f64 / 64.0,
    }
}

fn cmd_check(p: &Prepared, out: &Path) -> Result<i32> {
    let settings = CheckSettings {
        scale: check_scale(&p.config.domain),
        solver: p.config.solver,
        bisection: p.config.bisection,
    };
    let reports = run_suite(&p.config.criteria, &settings)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for r in &reports {
        writeln!(
            w,
            "[{}] {:>2} {:<28} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        )?;
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    writeln!(w, "{passed}/{} criteria passed", reports.len())?;
    write_json(
        out.join("check.json"),
        &json!({ "fingerprint": p.fingerprint, "scale": settings.scale, "criteria": reports }),
    )?;
    Ok(if passed == reports.len() { EXIT_OK } else { EXIT_ERROR })
}
