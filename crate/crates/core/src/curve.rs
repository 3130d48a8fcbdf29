//! The critical curve `Γ(θ) = (λ*(θ), θλ*(θ))` and the analytic bounds that
//! bracket it.
//!
//! `λ*(θ)` is found by bisection on the ray `μ = θλ` with `minimal_solve` as
//! the feasibility oracle. The lower end of the initial bracket is the
//! super-solution certificate, the upper end the eigenfunction certificate
//! (or geometric expansion when `inf f = 0` or `inf g = 0`).

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{ball_volume, Mesh};
use crate::output::{fmt_f64, write_csv};
use crate::profiles::{symmetrize, Profile, ProfileKind};
use crate::solver::{minimal_solve, SolveConfig, SolveOutcome};

/// `max{8N/27, (6N - 8)/9}`.
pub fn c_n(dimension: usize) -> f64 {
    let n = dimension as f64;
    (8.0 * n / 27.0).max((6.0 * n - 8.0) / 9.0)
}

/// Super-solution bounds `(a_f, a_g)`: the box `[0, a_f] × [0, a_g]` lies in
/// the existence region.
pub fn lower_bound(sup_f: f64, sup_g: f64, volume: f64, dimension: usize) -> Result<(f64, f64)> {
    if dimension == 0 {
        return Err(Error::Precondition("dimension must be >= 1".into()));
    }
    if !(volume > 0.0) {
        return Err(Error::Precondition(format!("volume must be > 0, got {volume}")));
    }
    for s in [sup_f, sup_g] {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Precondition(format!(
                "lower bound undefined for sup = {s} (needs (0, 1])"
            )));
        }
    }
    let geom = (ball_volume(dimension) / volume).powf(2.0 / dimension as f64);
    let c = c_n(dimension);
    Ok((c * geom / sup_f, c * geom / sup_g))
}

/// Bounds for `f = |x|^α`, `g = |x|^β` on `B_R`.
pub fn lower_bound_power(alpha: f64, beta: f64, radius: f64, dimension: usize) -> (f64, f64) {
    let n = dimension as f64;
    let one = |a: f64| {
        (4.0 * (2.0 + a) * (n + a) / 27.0).max((2.0 + a) * (3.0 * n + a - 4.0) / 9.0)
            / radius.powf(2.0 + a)
    };
    (one(alpha), one(beta))
}

/// `4μ₁ / (27 inf f)` and `4μ₁ / (27 inf g)`, absent when the infimum is zero.
pub fn upper_bound(mu1: f64, inf_f: f64, inf_g: f64) -> (Option<f64>, Option<f64>) {
    let one = |inf: f64| (inf > 0.0).then(|| 4.0 * mu1 / (27.0 * inf));
    (one(inf_f), one(inf_g))
}

/// Upper bound for `λ` on the ray `μ = θλ`: `λ·θλ ≤ U_f U_g`.
pub fn ray_upper_bound(mu1: f64, inf_f: f64, inf_g: f64, theta: f64) -> Option<f64> {
    match upper_bound(mu1, inf_f, inf_g) {
        (Some(uf), Some(ug)) => Some((uf * ug / theta).sqrt()),
        _ => None,
    }
}

/// Largest certified feasible `λ` for a single profile: the general bound,
/// improved by the power-weight bound for power profiles on a ball.
fn profile_lower_bound(mesh: &Mesh, p: &Profile) -> Result<f64> {
    let (a, _) = lower_bound(p.sup(), p.sup(), mesh.volume(), mesh.dimension())?;
    if let (ProfileKind::Power { exponent, scale }, Some(radius)) = (p.kind(), mesh.radius()) {
        let (ap, _) = lower_bound_power(exponent, exponent, radius, mesh.dimension());
        return Ok(a.max(ap / scale));
    }
    Ok(a)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub a_f: f64,
    pub a_g: f64,
    pub c_n: f64,
    pub upper_f: Option<f64>,
    pub upper_g: Option<f64>,
    /// `√(upper_f · upper_g)`, the bound on `√(λμ)`.
    pub upper_product: Option<f64>,
    pub mu1: f64,
    pub sup_f: f64,
    pub inf_f: f64,
    pub sup_g: f64,
    pub inf_g: f64,
    pub volume: f64,
    pub dimension: usize,
    pub radius: Option<f64>,
}

pub fn bound_report(mesh: &Mesh, f: &Profile, g: &Profile) -> Result<BoundReport> {
    f.check_mesh(mesh)?;
    g.check_mesh(mesh)?;
    let a_f = profile_lower_bound(mesh, f)?;
    let a_g = profile_lower_bound(mesh, g)?;
    let mu1 = mesh.eigenpair()?.mu1;
    let (upper_f, upper_g) = upper_bound(mu1, f.inf(), g.inf());
    Ok(BoundReport {
        a_f,
        a_g,
        c_n: c_n(mesh.dimension()),
        upper_f,
        upper_g,
        upper_product: upper_f.zip(upper_g).map(|(a, b)| (a * b).sqrt()),
        mu1,
        sup_f: f.sup(),
        inf_f: f.inf(),
        sup_g: g.sup(),
        inf_g: g.inf(),
        volume: mesh.volume(),
        dimension: mesh.dimension(),
        radius: mesh.radius(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BisectionConfig {
    /// Stop once `(hi - lo) ≤ rel_tol · hi`.
    pub rel_tol: f64,
    /// Number of ×4 budget escalations for an inconclusive probe.
    pub escalations: usize,
    pub max_doublings: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            escalations: 3,
            max_doublings: 60,
        }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!(
                "bisection rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RaySample {
    pub theta: f64,
    /// Midpoint of the final bracket.
    pub lambda_star: f64,
    pub mu_star: f64,
    /// `(lambda_hi - lambda_lo) / lambda_star`.
    pub bracket_width: f64,
    /// Largest probed feasible `λ`.
    pub lambda_lo: f64,
    /// Smallest probed infeasible `λ`.
    pub lambda_hi: f64,
    pub lower_cert: f64,
    pub upper_cert: Option<f64>,
    pub solver_iters_total: usize,
    pub probes: usize,
}

impl RaySample {
    /// Checks `lower_cert ≤ λ* ≤ upper_cert` up to the bracket width.
    pub fn certificates_hold(&self) -> bool {
        let slack = 1.0 + self.bracket_width;
        self.lower_cert <= self.lambda_star * slack
            && self.upper_cert.is_none_or(|u| self.lambda_star <= u * slack)
    }
}

struct Ray<'a> {
    mesh: &'a Mesh,
    f: &'a Profile,
    g: &'a Profile,
    theta: f64,
    cfg: SolveConfig,
    bis: BisectionConfig,
    iters: usize,
    probes: usize,
}

impl Ray<'_> {
    /// Feasibility of `(λ, θλ)`. Inconclusive runs are repeated with a ×4
    /// budget; the probe fails if it stays inconclusive.
    fn feasible(&mut self, lambda: f64) -> Result<bool> {
        let mut cfg = self.cfg;
        for attempt in 0..=self.bis.escalations {
            self.probes += 1;
            let out = minimal_solve(self.mesh, self.f, self.g, lambda, self.theta * lambda, &cfg)?;
            self.iters += out.iterations();
            match out {
                SolveOutcome::Converged(_) => return Ok(true),
                SolveOutcome::NonexistenceSuspected { .. } => return Ok(false),
                SolveOutcome::Inconclusive { .. } if attempt < self.bis.escalations => {
                    cfg.max_iter = cfg.max_iter.saturating_mul(4);
                }
                SolveOutcome::Inconclusive { .. } => {}
            }
        }
        Err(Error::Convergence {
            what: "feasibility probe",
            iterations: cfg.max_iter,
        })
    }
}

/// `λ*(θ)` by bisection on `μ = θλ`.
pub fn extremal_on_ray(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    theta: f64,
    cfg: &SolveConfig,
    bis: &BisectionConfig,
) -> Result<RaySample> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Precondition(format!("theta must be > 0, got {theta}")));
    }
    cfg.validate()?;
    bis.validate()?;
    let report = bound_report(mesh, f, g)?;
    let lower_cert = report.a_f.min(report.a_g / theta);
    let upper_cert = ray_upper_bound(report.mu1, f.inf(), g.inf(), theta);
    let mut ray = Ray {
        mesh,
        f,
        g,
        theta,
        cfg: *cfg,
        bis: *bis,
        iters: 0,
        probes: 0,
    };
    let mut lo = lower_cert;
    if !ray.feasible(lo)? {
        return Err(Error::Internal(format!(
            "certified lower bound λ={lo} is not feasible on this mesh"
        )));
    }
    let mut hi = upper_cert.unwrap_or(2.0 * lo).max(lo * (1.0 + bis.rel_tol));
    let mut doublings = 0;
    while ray.feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > bis.max_doublings {
            return Err(Error::UnboundedRay { theta, doublings });
        }
    }
    while hi - lo > bis.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if ray.feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_star = 0.5 * (lo + hi);
    Ok(RaySample {
        theta,
        lambda_star,
        mu_star: theta * lambda_star,
        bracket_width: (hi - lo) / lambda_star,
        lambda_lo: lo,
        lambda_hi: hi,
        lower_cert,
        upper_cert,
        solver_iters_total: ray.iters,
        probes: ray.probes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveTrace {
    pub samples: Vec<RaySample>,
    pub mesh_fingerprint: String,
    pub f_fingerprint: String,
    pub g_fingerprint: String,
}

pub const CURVE_COLUMNS: [&str; 7] = [
    "theta",
    "lambda_star",
    "mu_star",
    "bracket_width",
    "lower_cert",
    "upper_cert",
    "solver_iters_total",
];

pub fn curve_row(s: &RaySample) -> Vec<String> {
    vec![
        fmt_f64(s.theta),
        fmt_f64(s.lambda_star),
        fmt_f64(s.mu_star),
        fmt_f64(s.bracket_width),
        fmt_f64(s.lower_cert),
        s.upper_cert.map(fmt_f64).unwrap_or_default(),
        s.solver_iters_total.to_string(),
    ]
}

impl CurveTrace {
    /// `λ*` non-increasing in `θ`, with slack of twice the bracket width.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| {
            let slack = 2.0 * w[0].bracket_width.max(w[1].bracket_width);
            w[1].lambda_star <= w[0].lambda_star * (1.0 + slack)
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, fingerprint: Option<&str>) -> Result<()> {
        write_csv(path, fingerprint, &CURVE_COLUMNS, self.samples.iter().map(curve_row))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("theta grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Config(format!("theta grid entry {t} is not > 0")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("theta grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Per-ray results in grid order; rays run in parallel on the current rayon
/// pool.
pub fn trace_rays(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    grid: &[f64],
    cfg: &SolveConfig,
    bis: &BisectionConfig,
) -> Result<Vec<Result<RaySample>>> {
    check_grid(grid)?;
    f.check_mesh(mesh)?;
    g.check_mesh(mesh)?;
    // Warm the shared eigenpair cache before fanning out.
    mesh.eigenpair()?;
    Ok(grid
        .par_iter()
        .map(|&theta| {
            extremal_on_ray(mesh, f, g, theta, cfg, bis).map_err(|e| Error::Ray {
                theta,
                source: Box::new(e),
            })
        })
        .collect())
}

pub fn trace_curve(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    grid: &[f64],
    cfg: &SolveConfig,
    bis: &BisectionConfig,
) -> Result<CurveTrace> {
    let samples = trace_rays(mesh, f, g, grid, cfg, bis)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTrace {
        samples,
        mesh_fingerprint: mesh.fingerprint(),
        f_fingerprint: f.fingerprint(),
        g_fingerprint: g.fingerprint(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizedComparison {
    pub original: RaySample,
    pub symmetrized: RaySample,
}

impl SymmetrizedComparison {
    /// `λ*(Ω, f, g) ≥ λ*(B, f♯, g♯)` up to twice the bracket width.
    pub fn inequality_holds(&self) -> bool {
        let w = self.original.bracket_width.max(self.symmetrized.bracket_width);
        self.original.lambda_star >= self.symmetrized.lambda_star * (1.0 - 2.0 * w)
    }

    /// Relative difference `(λ*(Ω) - λ*(B)) / λ*(B)`.
    pub fn relative_gap(&self) -> f64 {
        (self.original.lambda_star - self.symmetrized.lambda_star) / self.symmetrized.lambda_star
    }
}

/// Traces the ray on `(mesh, f, g)` and on the equal-measure ball with the
/// symmetrized profiles.
pub fn compare_symmetrized(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    ball: &Mesh,
    theta: f64,
    cfg: &SolveConfig,
    bis: &BisectionConfig,
) -> Result<SymmetrizedComparison> {
    let fs = symmetrize(f, mesh, ball)?;
    let gs = symmetrize(g, mesh, ball)?;
    let (original, symmetrized) = rayon::join(
        || extremal_on_ray(mesh, f, g, theta, cfg, bis),
        || extremal_on_ray(ball, &fs, &gs, theta, cfg, bis),
    );
    Ok(SymmetrizedComparison {
        original: original?,
        symmetrized: symmetrized?,
    })
}
