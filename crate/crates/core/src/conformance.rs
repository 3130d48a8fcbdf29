//! The acceptance suite: eleven numerical checks of the bounds, orderings
//! and monotonicity properties, each with its own pass/fail verdict.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{compare_symmetrized, extremal_on_ray, lower_bound, trace_curve, BisectionConfig};
use crate::diagnostics::singular_residual;
use crate::error::{Error, Result};
use crate::mesh::{equal_measure_radius, Mesh, MIN_NODES};
use crate::profiles::{constant_profile, power_profile, Profile};
use crate::solver::{minimal_solve, SolveConfig, SolveOutcome, StatePair, System};
use crate::stability::{
    bump_fields, classify, eigen_ratio_check, linearized_eigen, stability_inequality_gap, Stability,
};

/// `λ*(θ = 1)` on the unit disk with `f = g = 1`, from a 4096-interval
/// radial bisection run.
pub const GOLDEN_DISK_LAMBDA_STAR: f64 = 0.789_434;

/// First zero of the Bessel function `J₀`.
pub const J01: f64 = 2.404_825_557_695_773;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "bound_sandwich"),
    (2, "symmetric_reduction"),
    (3, "ordering"),
    (4, "curve_monotonicity"),
    (5, "scaling_domain_monotonicity"),
    (6, "symmetrization"),
    (7, "stability"),
    (8, "stability_inequality"),
    (9, "singular_identity"),
    (10, "power_weight_bound"),
    (11, "poisson_eigen"),
];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Resolution and solver settings for the suite. Node counts are the
/// nominal ones times `scale`, never below the mesh minimum.
#[derive(Debug, Clone, Copy)]
pub struct CheckSettings {
    pub scale: f64,
    pub solver: SolveConfig,
    pub bisection: BisectionConfig,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            scale: 1.0,
            solver: SolveConfig::default(),
            bisection: BisectionConfig::default(),
        }
    }
}

impl CheckSettings {
    fn nodes(&self, nominal: usize) -> usize {
        ((nominal as f64 * self.scale).round() as usize).max(MIN_NODES)
    }

    fn disk(&self, nominal: usize) -> Result<Mesh> {
        Mesh::radial(2, 1.0, self.nodes(nominal))
    }
}

/// Resolves a filter entry (id or name) to a criterion id.
pub fn resolve_criterion(key: &str) -> Option<u8> {
    let key = key.trim();
    CRITERIA
        .iter()
        .find(|(id, name)| key == *name || key.parse::<u8>().ok() == Some(*id))
        .map(|(id, _)| *id)
}

pub fn run_criterion(id: u8, s: &CheckSettings) -> CriterionReport {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown", |(_, n)| n);
    let start = Instant::now();
    let result = match id {
        1 => bound_sandwich(s),
        2 => symmetric_reduction(s),
        3 => ordering(s),
        4 => curve_monotonicity(s),
        5 => scaling(s),
        6 => symmetrization(s),
        7 => stability(s).map(|(ok, detail, _)| (ok, detail)),
        8 => stability_inequality(s),
        9 => singular_identity(s),
        10 => power_weight(s),
        11 => infrastructure(s),
        _ => Err(Error::Config(format!("unknown criterion {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the selected criteria (all when `filter` is empty) in id order.
pub fn run_suite(filter: &[String], s: &CheckSettings) -> Result<Vec<CriterionReport>> {
    let mut ids = Vec::new();
    for key in filter {
        let id = resolve_criterion(key)
            .ok_or_else(|| Error::Config(format!("unknown criterion '{key}'")))?;
        ids.push(id);
    }
    if ids.is_empty() {
        ids = CRITERIA.iter().map(|(id, _)| *id).collect();
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids.into_iter().map(|id| run_criterion(id, s)).collect())
}

type Verdict = Result<(bool, String)>;

fn bound_sandwich(s: &CheckSettings) -> Verdict {
    let start = Instant::now();
    let m = s.disk(1024)?;
    let one = constant_profile(&m, 1.0)?;
    let ray = extremal_on_ray(&m, &one, &one, 1.0, &s.solver, &s.bisection)?;
    let mu1 = m.eigenpair()?.mu1;
    let (lo, hi) = (16.0 / 27.0 - 0.003, 4.0 * mu1 / 27.0 + 0.003);
    let rel = (ray.lambda_star - GOLDEN_DISK_LAMBDA_STAR).abs() / GOLDEN_DISK_LAMBDA_STAR;
    let secs = start.elapsed().as_secs_f64();
    let ok = (lo..=hi).contains(&ray.lambda_star) && rel <= 5e-3 && secs <= 60.0;
    Ok((
        ok,
        format!(
            "λ*={:.6} in [{lo:.4}, {hi:.4}], golden rel diff {rel:.2e}, {secs:.2}s",
            ray.lambda_star
        ),
    ))
}

fn symmetric_reduction(s: &CheckSettings) -> Verdict {
    let disk = s.disk(256)?;
    let rect = Mesh::rect(1.0, 1.5, s.nodes(32), s.nodes(40))?;
    let bumpy: Vec<f64> = rect
        .coords()
        .iter()
        .map(|x| 0.2 + 0.8 * (PI * x[0]).sin().abs() * (x[1] / 1.5))
        .collect();
    let cases: Vec<(&Mesh, Profile, f64)> = vec![
        (&disk, constant_profile(&disk, 1.0)?, 0.7),
        (&disk, constant_profile(&disk, 1.0)?, 0.9),
        (&disk, power_profile(&disk, 1.5)?, 1.5),
        (&rect, Profile::tabulated(&rect, bumpy)?, 3.0),
    ];
    let mut steps = 0;
    let mut mismatches = 0;
    for (mesh, f, t) in &cases {
        let sys = System::new(mesh, f, f, *t, *t)?;
        sys.minimal_solve_observed(&s.solver, |_, st| {
            steps += 1;
            if st.u != st.v {
                mismatches += 1;
            }
        })?;
    }
    Ok((mismatches == 0, format!("{steps} iterates checked, {mismatches} differ")))
}

fn ordering(s: &CheckSettings) -> Verdict {
    let m = s.disk(256)?;
    let one = constant_profile(&m, 1.0)?;
    let (a, _) = lower_bound(1.0, 1.0, m.volume(), 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut worst_uv, mut worst_ratio) = (f64::INFINITY, f64::INFINITY);
    let mut converged = 0;
    for _ in 0..25 {
        let lambda = rng.gen_range(0.01..=a);
        let mu = rng.gen_range(0.0..=lambda);
        if let SolveOutcome::Converged(sol) = minimal_solve(&m, &one, &one, lambda, mu, &s.solver)? {
            converged += 1;
            let StatePair { u, v } = &sol.state;
            for k in 0..m.len() {
                worst_uv = worst_uv.min(u[k] - v[k]);
                worst_ratio = worst_ratio.min(v[k] - mu / lambda * u[k]);
            }
        }
    }
    let ok = converged == 25 && worst_uv >= -1e-8 && worst_ratio >= -1e-8;
    Ok((
        ok,
        format!("{converged}/25 converged, min(u-v)={worst_uv:.2e}, min(v-μu/λ)={worst_ratio:.2e}"),
    ))
}

fn curve_monotonicity(s: &CheckSettings) -> Verdict {
    let start = Instant::now();
    let m = s.disk(512)?;
    let one = constant_profile(&m, 1.0)?;
    let grid = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let trace = pool.install(|| trace_curve(&m, &one, &one, &grid, &s.solver, &s.bisection))?;
    let secs = start.elapsed().as_secs_f64();
    let values: Vec<String> = trace.samples.iter().map(|r| format!("{:.4}", r.lambda_star)).collect();
    Ok((
        trace.is_monotone() && secs <= 300.0,
        format!("λ* = [{}], {secs:.2}s", values.join(", ")),
    ))
}

fn scaling(s: &CheckSettings) -> Verdict {
    let mut scaled = Vec::new();
    let mut samples = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let m = Mesh::radial(2, r, s.nodes(512))?;
        let one = constant_profile(&m, 1.0)?;
        let ray = extremal_on_ray(&m, &one, &one, 1.0, &s.solver, &s.bisection)?;
        scaled.push(ray.lambda_star * r * r);
        samples.push(ray);
    }
    let (min, max) = scaled
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let spread = (max - min) / min;
    let (half, unit) = (&samples[0], &samples[1]);
    let slack = 2.0 * half.bracket_width.max(unit.bracket_width);
    let domain_ok = half.lambda_star >= unit.lambda_star * (1.0 - slack);
    Ok((
        spread <= 0.01 && domain_ok,
        format!(
            "λ*R² spread {spread:.2e}; λ*(B_1/2)={:.4} ≥ λ*(B_1)={:.4}",
            half.lambda_star, unit.lambda_star
        ),
    ))
}

fn symmetrization(s: &CheckSettings) -> Verdict {
    let start = Instant::now();
    let square = Mesh::rect(1.0, 1.0, s.nodes(64), s.nodes(64))?;
    let disk = Mesh::radial(2, equal_measure_radius(square.volume(), 2), s.nodes(512))?;
    let one = constant_profile(&square, 1.0)?;
    let indicator: Vec<f64> = square
        .coords()
        .iter()
        .map(|x| if x[0] < 0.5 { 1.0 } else { 0.0 })
        .collect();
    let indicator = Profile::tabulated(&square, indicator)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, f) in [("f=g=1", &one), ("indicator", &indicator)] {
        let c = compare_symmetrized(&square, f, f, &disk, 1.0, &s.solver, &s.bisection)?;
        ok &= c.inequality_holds();
        parts.push(format!(
            "{label}: square {:.4} vs disk {:.4}",
            c.original.lambda_star, c.symmetrized.lambda_star
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((ok && secs <= 600.0, format!("{}, {secs:.2}s", parts.join("; "))))
}

/// Stable states produced by the stability criterion, reused by the
/// stability-inequality criterion.
pub struct StableState {
    pub lambda: f64,
    pub mu: f64,
    pub state: StatePair,
}

fn stability(s: &CheckSettings) -> Result<(bool, String, (Mesh, Vec<StableState>))> {
    let m = s.disk(512)?;
    let one = constant_profile(&m, 1.0)?;
    let ray = extremal_on_ray(&m, &one, &one, 1.0, &s.solver, &s.bisection)?;
    let star = ray.lambda_lo;
    let mut stable = Vec::new();
    let mut eig_at = |lambda: f64, mu: f64| -> Result<crate::stability::EigenResult> {
        let sol = minimal_solve(&m, &one, &one, lambda, mu, &s.solver)?
            .into_solution()
            .ok_or_else(|| Error::Internal(format!("no minimal solution at ({lambda}, {mu})")))?;
        let e = linearized_eigen(&m, &one, &one, lambda, mu, &sol.state)?;
        if classify(&e) == Stability::Stable {
            stable.push(StableState {
                lambda,
                mu,
                state: sol.state,
            });
        }
        Ok(e)
    };
    let half = eig_at(0.5 * star, 0.5 * star)?;
    let near = eig_at(0.99 * star, 0.99 * star)?;
    let skew = eig_at(0.6 * star, 0.3 * star)?;
    let positive = [&half, &near, &skew].iter().all(|e| {
        m.interior_nodes()
            .iter()
            .all(|&k| e.phi1[k] > 0.0 && e.phi2[k] > 0.0)
    });
    let ratio = eigen_ratio_check(&skew, &m, 0.6 * star, 0.3 * star)?
        .min(eigen_ratio_check(&half, &m, 0.5 * star, 0.5 * star)?);
    let mu1 = m.eigenpair()?.mu1;
    let t = 0.25;
    let zero = linearized_eigen(&m, &one, &one, t, t, &StatePair::zeros(&m))?;
    let zero_err = (zero.nu1 - (mu1 - 2.0 * t)).abs();
    let ok = half.nu1 > 0.0 && near.nu1 < half.nu1 && positive && ratio >= -1e-6 && zero_err <= 1e-6;
    let detail = format!(
        "ν₁(0.5)={:.4}, ν₁(0.99)={:.4}, positive={positive}, min ratio gap={ratio:.2e}, zero-state err={zero_err:.1e}",
        half.nu1, near.nu1
    );
    Ok((ok, detail, (m, stable)))
}

fn stability_inequality(s: &CheckSettings) -> Verdict {
    let (_, _, (m, states)) = stability(s)?;
    if states.is_empty() {
        return Ok((false, "no stable samples".into()));
    }
    let one = constant_profile(&m, 1.0)?;
    let bumps = bump_fields(&m, 20, 0xb0b);
    let mut worst = f64::INFINITY;
    for st in &states {
        for phi in &bumps {
            let gap = stability_inequality_gap(&m, &one, &one, st.lambda, st.mu, &st.state, phi)?;
            let norm2 = m.operator().norm(phi).powi(2);
            worst = worst.min(gap / norm2);
        }
    }
    Ok((
        worst >= -1e-8,
        format!("{} stable states × 20 bumps, min gap/‖φ‖² = {worst:.3e}", states.len()),
    ))
}

fn singular_identity(s: &CheckSettings) -> Verdict {
    let n = s.nodes(512);
    let coarse = singular_residual(8, n)?;
    let fine = singular_residual(8, 2 * n)?;
    let ratio = coarse / fine;
    Ok((
        (3.5..=4.5).contains(&ratio),
        format!("residual {coarse:.3e} → {fine:.3e}, ratio {ratio:.3}"),
    ))
}

fn power_weight(s: &CheckSettings) -> Verdict {
    let start = Instant::now();
    let m = s.disk(1024)?;
    let f = power_profile(&m, 2.0)?;
    let lambda = 0.95 * 64.0 / 27.0;
    let out = minimal_solve(&m, &f, &f, lambda, lambda, &s.solver)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        out.is_converged() && secs <= 30.0,
        format!("λ=μ={lambda:.4}: {} after {} iterations, {secs:.2}s", out.label(), out.iterations()),
    ))
}

/// Error of the Poisson solve for `1 - r⁴` (rhs `4(N+2)r²`).
pub fn quartic_poisson_error(dimension: usize, intervals: usize) -> Result<f64> {
    let m = Mesh::radial(dimension, 1.0, intervals)?;
    let r = m.radii().expect("radial mesh");
    let rhs: Vec<f64> = r.iter().map(|r| 4.0 * (dimension as f64 + 2.0) * r * r).collect();
    let h = m.operator().solve(&rhs);
    Ok(h.iter()
        .zip(&r)
        .map(|(h, r)| (h - (1.0 - r.powi(4))).abs())
        .fold(0.0, f64::max))
}

fn infrastructure(s: &CheckSettings) -> Verdict {
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let interval = Mesh::radial(1, 1.0, s.nodes(256))?.eigenpair()?.mu1;
    let disk = Mesh::radial(2, 1.0, s.nodes(256))?.eigenpair()?.mu1;
    let square = Mesh::rect(1.0, 1.0, s.nodes(64), s.nodes(64))?.eigenpair()?.mu1;
    let errs = [
        rel(interval, PI * PI / 4.0),
        rel(disk, J01 * J01),
        rel(square, 2.0 * PI * PI),
    ];
    let mut ratios = Vec::new();
    for n_dim in [1, 2, 3] {
        let n = s.nodes(128);
        ratios.push(quartic_poisson_error(n_dim, n)? / quartic_poisson_error(n_dim, 2 * n)?);
    }
    let ok = errs.iter().all(|e| *e <= 5e-3) && ratios.iter().all(|r| (3.5..=4.5).contains(r));
    Ok((
        ok,
        format!(
            "μ₁ rel errors {:.1e}/{:.1e}/{:.1e}; Poisson ratios {:.3}/{:.3}/{:.3}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1], ratios[2]
        ),
    ))
}
