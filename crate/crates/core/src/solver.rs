//! Minimal solutions of the coupled system
//!
//! ```text
//!   -Δu = λ f / (1 - v)²,   -Δv = μ g / (1 - u)²   in Ω,
//!    0 ≤ u, v < 1,           u = v = 0             on ∂Ω,
//! ```
//!
//! by the monotone (Picard) iteration
//! `u_n = (-Δ)⁻¹[λ f / (1 - v_{n-1})²]`, `v_n = (-Δ)⁻¹[μ g / (1 - u_{n-1})²]`.
//! Started from `(0, 0)` the iterates increase to the minimal solution; started
//! from a super-solution they decrease to a solution below it. Both updates
//! read the previous pair, so with `f = g`, `λ = μ` and `u_0 = v_0` the two
//! components stay bit-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sup_norm;
use crate::mesh::Mesh;
use crate::output;
use crate::profiles::Profile;

/// Lower clamp for the denominators `1 - u`, `1 - v`.
pub const DELTA_FLOOR: f64 = 1e-10;

/// Relative residual that a converged pair must meet: `‖defect‖_∞ ≤ 1e-6·(λ+μ)`.
pub const CONVERGED_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StatePair {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            u: mesh.zeros(),
            v: mesh.zeros(),
        }
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x))
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x))
    }

    /// Checks `0 ≤ u, v ≤ 1 - δ` and zero boundary values.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.u.len() != mesh.len() || self.v.len() != mesh.len() {
            return Err(Error::Precondition("state does not match mesh size".into()));
        }
        for (name, field) in [("u", &self.u), ("v", &self.v)] {
            for (i, &x) in field.iter().enumerate() {
                if mesh.is_boundary(i) {
                    if x != 0.0 {
                        return Err(Error::Precondition(format!(
                            "{name} = {x} on boundary node {i}"
                        )));
                    }
                } else if !(0.0..=1.0 - DELTA_FLOOR).contains(&x) {
                    return Err(Error::Precondition(format!(
                        "{name} = {x} at node {i} outside [0, 1 - δ]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, mesh: &Mesh, path: impl AsRef<Path>, fingerprint: Option<&str>) -> Result<()> {
        output::write_node_fields(mesh, path, fingerprint, &[("u", &self.u), ("v", &self.v)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Sup-norm increment below which the iteration is considered converged.
    pub tol_sup: f64,
    pub max_iter: usize,
    /// An iterate escapes once `1 - max(u_n) < touch_threshold`.
    pub touch_threshold: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol_sup: 1e-10,
            max_iter: 10_000,
            touch_threshold: 1e-6,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_sup > 0.0) {
            return Err(Error::Config(format!("tol_sup must be > 0, got {}", self.tol_sup)));
        }
        if !(self.touch_threshold > self.tol_sup) || self.touch_threshold >= 1.0 {
            return Err(Error::Config(format!(
                "touch_threshold must lie in (tol_sup, 1), got {}",
                self.touch_threshold
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_max_iter(self, max_iter: usize) -> Self {
        Self { max_iter, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonexistenceReason {
    /// An iterate entered `[1 - touch_threshold, ∞)`.
    TouchedOne,
    /// The iteration budget ran out with increments growing again.
    ResidualDivergence,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub state: StatePair,
    pub iterations: usize,
    /// Sup-norm defects of the two equations.
    pub residual: (f64, f64),
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Converged(Solution),
    NonexistenceSuspected {
        reason: NonexistenceReason,
        iterations: usize,
    },
    Inconclusive {
        iterations: usize,
        last_increment: f64,
    },
}

impl SolveOutcome {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveOutcome::Converged(_))
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolveOutcome::Converged(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_solution(self) -> Option<Solution> {
        match self {
            SolveOutcome::Converged(s) => Some(s),
            _ => None,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            SolveOutcome::Converged(s) => s.iterations,
            SolveOutcome::NonexistenceSuspected { iterations, .. }
            | SolveOutcome::Inconclusive { iterations, .. } => *iterations,
        }
    }

    /// Short verdict label: `converged`, `nonexistence_suspected` or `inconclusive`.
    pub fn label(&self) -> &'static str {
        match self {
            SolveOutcome::Converged(_) => "converged",
            SolveOutcome::NonexistenceSuspected { .. } => "nonexistence_suspected",
            SolveOutcome::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// One coupled problem instance on a mesh.
#[derive(Debug, Clone, Copy)]
pub struct System<'a> {
    pub mesh: &'a Mesh,
    pub f: &'a Profile,
    pub g: &'a Profile,
    pub lambda: f64,
    pub mu: f64,
}

impl<'a> System<'a> {
    pub fn new(mesh: &'a Mesh, f: &'a Profile, g: &'a Profile, lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda >= 0.0 && mu >= 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::Precondition(format!(
                "parameters must be finite and >= 0, got λ={lambda}, μ={mu}"
            )));
        }
        f.check_mesh(mesh)?;
        g.check_mesh(mesh)?;
        Ok(Self {
            mesh,
            f,
            g,
            lambda,
            mu,
        })
    }

    fn symmetric(&self) -> bool {
        self.lambda == self.mu && self.f.values() == self.g.values()
    }

    /// `scale · weight / max(1 - other, δ)²`.
    fn source(&self, scale: f64, weight: &[f64], other: &[f64]) -> Vec<f64> {
        weight
            .iter()
            .zip(other)
            .map(|(w, o)| {
                let d = (1.0 - o).max(DELTA_FLOOR);
                scale * w / (d * d)
            })
            .collect()
    }

    fn step(&self, state: &StatePair) -> StatePair {
        let op = self.mesh.operator();
        let u = op.solve(&self.source(self.lambda, self.f.values(), &state.v));
        let v = if self.symmetric() && state.u == state.v {
            u.clone()
        } else {
            op.solve(&self.source(self.mu, self.g.values(), &state.u))
        };
        StatePair { u, v }
    }

    /// Signed defects `(-Δ)u - λf/(1-v)²` and `(-Δ)v - μg/(1-u)²` at
    /// interior nodes (zero on the boundary).
    pub fn defects(&self, state: &StatePair) -> (Vec<f64>, Vec<f64>) {
        let op = self.mesh.operator();
        let mut du = op.apply(&state.u);
        let mut dv = op.apply(&state.v);
        let su = self.source(self.lambda, self.f.values(), &state.v);
        let sv = self.source(self.mu, self.g.values(), &state.u);
        for &k in op.unknowns() {
            du[k] -= su[k];
            dv[k] -= sv[k];
        }
        (du, dv)
    }

    pub fn residual(&self, state: &StatePair) -> (f64, f64) {
        let (du, dv) = self.defects(state);
        (sup_norm(&du), sup_norm(&dv))
    }

    fn iterate<F>(&self, start: StatePair, cfg: &SolveConfig, mut observer: F) -> Result<SolveOutcome>
    where
        F: FnMut(usize, &StatePair),
    {
        cfg.validate()?;
        let mut state = start;
        let mut min_increment = f64::INFINITY;
        let mut increment = f64::INFINITY;
        for it in 1..=cfg.max_iter {
            let next = self.step(&state);
            if next.u.iter().chain(&next.v).any(|x| !x.is_finite()) {
                return Err(Error::Internal(format!("non-finite iterate at step {it}")));
            }
            increment = next
                .u
                .iter()
                .zip(&state.u)
                .chain(next.v.iter().zip(&state.v))
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            state = next;
            observer(it, &state);
            if 1.0 - state.sup_u().max(state.sup_v()) < cfg.touch_threshold {
                return Ok(SolveOutcome::NonexistenceSuspected {
                    reason: NonexistenceReason::TouchedOne,
                    iterations: it,
                });
            }
            if increment <= cfg.tol_sup {
                let residual = self.residual(&state);
                if residual.0.max(residual.1) <= CONVERGED_RESIDUAL * (self.lambda + self.mu) {
                    return Ok(SolveOutcome::Converged(Solution {
                        state,
                        iterations: it,
                        residual,
                    }));
                }
            }
            min_increment = min_increment.min(increment);
        }
        if increment > 1.5 * min_increment {
            Ok(SolveOutcome::NonexistenceSuspected {
                reason: NonexistenceReason::ResidualDivergence,
                iterations: cfg.max_iter,
            })
        } else {
            Ok(SolveOutcome::Inconclusive {
                iterations: cfg.max_iter,
                last_increment: increment,
            })
        }
    }

    pub fn minimal_solve(&self, cfg: &SolveConfig) -> Result<SolveOutcome> {
        self.minimal_solve_observed(cfg, |_, _| {})
    }

    /// As [`System::minimal_solve`], calling `observer(n, &(u_n, v_n))` after
    /// every iteration.
    pub fn minimal_solve_observed<F>(&self, cfg: &SolveConfig, observer: F) -> Result<SolveOutcome>
    where
        F: FnMut(usize, &StatePair),
    {
        self.iterate(StatePair::zeros(self.mesh), cfg, observer)
    }

    /// Checks that `(U, V)` is a discrete super-solution. Returns the first
    /// offending node otherwise.
    pub fn check_supersolution(&self, start: &StatePair) -> Result<()> {
        let mesh = self.mesh;
        if start.u.len() != mesh.len() || start.v.len() != mesh.len() {
            return Err(Error::Precondition("super-solution does not match mesh size".into()));
        }
        for (i, (&a, &b)) in start.u.iter().zip(&start.v).enumerate() {
            let bound = if mesh.is_boundary(i) { f64::INFINITY } else { 1.0 - DELTA_FLOOR };
            if !(0.0..=bound).contains(&a) || !(0.0..=bound).contains(&b) {
                return Err(Error::NotSupersolution {
                    node: i,
                    defect: f64::NAN,
                });
            }
        }
        let (du, dv) = self.defects(start);
        let su = self.source(self.lambda, self.f.values(), &start.v);
        let sv = self.source(self.mu, self.g.values(), &start.u);
        for &k in mesh.interior_nodes() {
            for (d, s) in [(du[k], su[k]), (dv[k], sv[k])] {
                if d < -1e-8 * s.max(1.0) {
                    return Err(Error::NotSupersolution { node: k, defect: d });
                }
            }
        }
        Ok(())
    }

    /// Decreasing iteration started from a super-solution `(U, V)`.
    pub fn supersolution_descend(&self, start: StatePair, cfg: &SolveConfig) -> Result<SolveOutcome> {
        self.check_supersolution(&start)?;
        self.iterate(start, cfg, |_, _| {})
    }
}

pub fn minimal_solve(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    lambda: f64,
    mu: f64,
    cfg: &SolveConfig,
) -> Result<SolveOutcome> {
    System::new(mesh, f, g, lambda, mu)?.minimal_solve(cfg)
}

pub fn supersolution_descend(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    lambda: f64,
    mu: f64,
    upper: StatePair,
    cfg: &SolveConfig,
) -> Result<SolveOutcome> {
    System::new(mesh, f, g, lambda, mu)?.supersolution_descend(upper, cfg)
}

pub fn residual(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    lambda: f64,
    mu: f64,
    state: &StatePair,
) -> Result<(f64, f64)> {
    Ok(System::new(mesh, f, g, lambda, mu)?.residual(state))
}

/// Closed-form super-solutions on the ball `B_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupersolutionKind {
    /// `(1/3)(1 - |x|²/R²)`.
    Quadratic,
    /// `1 - (|x|/R)^{2/3}`, clamped to `1 - δ` at the origin.
    Cusp,
    /// `(1/3)(1 - |x|^{2+α}/R^{2+α})`.
    PowerQuadratic(f64),
}

pub fn explicit_supersolution(mesh: &Mesh, kind: SupersolutionKind) -> Result<Vec<f64>> {
    let (Some(radii), Some(radius)) = (mesh.radii(), mesh.radius()) else {
        return Err(Error::Precondition("explicit super-solutions need a radial mesh".into()));
    };
    let field = radii.iter().map(|&r| {
        let s = (r / radius).min(1.0);
        match kind {
            SupersolutionKind::Quadratic => (1.0 - s * s) / 3.0,
            SupersolutionKind::Cusp => (1.0 - s.powf(2.0 / 3.0)).min(1.0 - DELTA_FLOOR),
            SupersolutionKind::PowerQuadratic(alpha) => (1.0 - s.powf(2.0 + alpha)) / 3.0,
        }
    });
    Ok(field.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{constant_profile, power_profile};

    fn disk(n: usize) -> Mesh {
        Mesh::radial(2, 1.0, n).unwrap()
    }

    #[test]
    fn zero_parameters_converge_immediately() {
        let m = disk(64);
        let one = constant_profile(&m, 1.0).unwrap();
        let out = minimal_solve(&m, &one, &one, 0.0, 0.0, &SolveConfig::default()).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.state.u.iter().chain(&sol.state.v).all(|&x| x == 0.0));
        assert_eq!(sol.residual, (0.0, 0.0));
    }

    #[test]
    fn symmetric_case_converges_with_identical_components() {
        let m = disk(256);
        let one = constant_profile(&m, 1.0).unwrap();
        let out = minimal_solve(&m, &one, &one, 0.5, 0.5, &SolveConfig::default()).unwrap();
        let sol = out.solution().expect("λ=μ=0.5 lies below 16/27");
        assert_eq!(sol.state.u, sol.state.v);
        assert!(sol.residual.0 <= 1e-6);
        sol.state.validate(&m).unwrap();
    }

    #[test]
    fn above_upper_bound_is_nonexistent() {
        // 0.9 > 4 j₀₁² / 27 ≈ 0.857.
        let m = disk(256);
        let one = constant_profile(&m, 1.0).unwrap();
        let out = minimal_solve(&m, &one, &one, 0.9, 0.9, &SolveConfig::default()).unwrap();
        assert!(matches!(
            out,
            SolveOutcome::NonexistenceSuspected {
                reason: NonexistenceReason::TouchedOne,
                ..
            }
        ));
    }

    #[test]
    fn iterates_increase_exactly() {
        let m = Mesh::rect(1.0, 1.0, 20, 24).unwrap();
        let one = constant_profile(&m, 1.0).unwrap();
        let g = constant_profile(&m, 0.6).unwrap();
        let sys = System::new(&m, &one, &g, 2.0, 1.3).unwrap();
        let mut prev = StatePair::zeros(&m);
        let out = sys
            .minimal_solve_observed(&SolveConfig::default(), |_, s| {
                assert!(s.u.iter().zip(&prev.u).all(|(a, b)| a >= b));
                assert!(s.v.iter().zip(&prev.v).all(|(a, b)| a >= b));
                prev = s.clone();
            })
            .unwrap();
        assert!(out.is_converged());
    }

    #[test]
    fn residual_of_zero_state() {
        let m = disk(32);
        let one = constant_profile(&m, 1.0).unwrap();
        let r = residual(&m, &one, &one, 0.0, 0.0, &StatePair::zeros(&m)).unwrap();
        assert_eq!(r, (0.0, 0.0));
    }

    #[test]
    fn explicit_supersolution_values() {
        let m = Mesh::radial(3, 2.0, 64).unwrap();
        let q = explicit_supersolution(&m, SupersolutionKind::Quadratic).unwrap();
        assert!((q[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q[64], 0.0);
        let c = explicit_supersolution(&m, SupersolutionKind::Cusp).unwrap();
        assert_eq!(c[64], 0.0);
        assert_eq!(c[0], 1.0 - DELTA_FLOOR);
        let p = explicit_supersolution(&m, SupersolutionKind::PowerQuadratic(2.0)).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(explicit_supersolution(&Mesh::rect(1.0, 1.0, 16, 16).unwrap(), SupersolutionKind::Cusp).is_err());
    }

    #[test]
    fn quadratic_supersolution_defect_is_nonnegative() {
        for (n_dim, radius) in [(1, 1.0), (2, 1.0), (3, 0.5), (5, 2.0)] {
            let m = Mesh::radial(n_dim, radius, 128).unwrap();
            let one = constant_profile(&m, 1.0).unwrap();
            let lam = 8.0 * n_dim as f64 / (27.0 * radius * radius);
            let w = explicit_supersolution(&m, SupersolutionKind::Quadratic).unwrap();
            let sys = System::new(&m, &one, &one, lam, lam).unwrap();
            let state = StatePair { u: w.clone(), v: w };
            let (du, _) = sys.defects(&state);
            assert!(du.iter().all(|&d| d >= -1e-8), "N={n_dim}");
            sys.check_supersolution(&state).unwrap();
        }
    }

    #[test]
    fn descend_from_quadratic_bounds_minimal_solution() {
        for n_dim in [1, 2, 3] {
            let m = Mesh::radial(n_dim, 1.0, 128).unwrap();
            let one = constant_profile(&m, 1.0).unwrap();
            let lam = 8.0 * n_dim as f64 / 27.0;
            let w = explicit_supersolution(&m, SupersolutionKind::Quadratic).unwrap();
            let cfg = SolveConfig::default();
            let upper = StatePair { u: w.clone(), v: w.clone() };
            let down = supersolution_descend(&m, &one, &one, lam, lam, upper, &cfg).unwrap();
            let down = down.solution().unwrap();
            let min = minimal_solve(&m, &one, &one, lam, lam, &cfg).unwrap();
            let min = min.solution().unwrap();
            for k in 0..m.len() {
                assert!(min.state.u[k] <= down.state.u[k] + 1e-8);
                assert!(down.state.u[k] <= w[k] + 1e-12);
            }
        }
    }

    #[test]
    fn descend_from_fixed_point_takes_one_step() {
        let m = disk(128);
        let one = constant_profile(&m, 1.0).unwrap();
        let cfg = SolveConfig::default();
        let min = minimal_solve(&m, &one, &one, 0.4, 0.3, &cfg).unwrap().into_solution().unwrap();
        let again = supersolution_descend(&m, &one, &one, 0.4, 0.3, min.state.clone(), &cfg).unwrap();
        let again = again.solution().unwrap();
        assert_eq!(again.iterations, 1);
        assert!(again.state.u.iter().zip(&min.state.u).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn descend_rejects_non_supersolution() {
        let m = disk(64);
        let one = constant_profile(&m, 1.0).unwrap();
        let mut w = explicit_supersolution(&m, SupersolutionKind::Quadratic).unwrap();
        w[10] -= 0.05;
        let bad = StatePair { u: w.clone(), v: w };
        let err = supersolution_descend(&m, &one, &one, 0.5, 0.5, bad, &SolveConfig::default());
        assert!(matches!(err, Err(Error::NotSupersolution { node: 10, .. })));
    }

    #[test]
    fn power_weight_bound_is_feasible() {
        let m = disk(256);
        let f = power_profile(&m, 2.0).unwrap();
        let lam = 0.95 * 64.0 / 27.0;
        assert!(minimal_solve(&m, &f, &f, lam, lam, &SolveConfig::default()).unwrap().is_converged());
    }

    #[test]
    fn inconclusive_on_tiny_budget() {
        let m = disk(64);
        let one = constant_profile(&m, 1.0).unwrap();
        let cfg = SolveConfig::default().with_max_iter(3);
        let out = minimal_solve(&m, &one, &one, 0.7, 0.7, &cfg).unwrap();
        assert!(matches!(out, SolveOutcome::Inconclusive { iterations: 3, .. }));
    }

    #[test]
    fn config_validation() {
        let cfg = SolveConfig { touch_threshold: 1e-12, ..SolveConfig::default() };
        assert!(cfg.validate().is_err());
        let m = disk(32);
        let one = constant_profile(&m, 1.0).unwrap();
        assert!(minimal_solve(&m, &one, &one, -1.0, 0.0, &SolveConfig::default()).is_err());
        let other = disk(40);
        let f2 = constant_profile(&other, 1.0).unwrap();
        assert!(minimal_solve(&m, &one, &f2, 0.1, 0.1, &SolveConfig::default()).is_err());
    }
}
