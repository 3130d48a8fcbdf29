//! Linearized stability of a solution pair.
//!
//! The linearization of the system at `(u, v)` is the block problem
//!
//! ```text
//!   -Δφ₁ - a₁₂ φ₂ = ν φ₁,   a₁₂ = 2λf / (1 - v)³,
//!   -Δφ₂ - a₂₁ φ₁ = ν φ₂,   a₂₁ = 2μg / (1 - u)³,
//! ```
//!
//! with Dirichlet conditions. The coupling is cooperative, so for any shift
//! `σ > -ν₁` the shifted block matrix is a nonsingular M-matrix and inverse
//! iteration converges to the principal eigenvalue with a positive pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sup_norm, BandedLu};
use crate::mesh::{LinearOperator, Mesh};
use crate::profiles::Profile;
use crate::solver::{StatePair, DELTA_FLOOR};

/// Half-width of the semi-stable band around `ν₁ = 0`.
pub const CLASSIFY_EPS: f64 = 1e-6;

const EIGEN_MAX_ITER: usize = 10_000;
const STAGE_LEN: usize = 40;

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub nu1: f64,
    /// Normalized so that `sup φ₁ = 1`.
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub iterations: usize,
    /// `‖L₁φ - νφ₁‖_∞ + ‖L₂φ - νφ₂‖_∞` at exit.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    SemiStable,
    Unstable,
}

pub fn classify_nu(nu1: f64) -> Stability {
    if nu1 > CLASSIFY_EPS {
        Stability::Stable
    } else if nu1 < -CLASSIFY_EPS {
        Stability::Unstable
    } else {
        Stability::SemiStable
    }
}

pub fn classify(e: &EigenResult) -> Stability {
    classify_nu(e.nu1)
}

/// Coupling coefficients at the unknowns.
fn couplings(
    op: &LinearOperator,
    f: &Profile,
    g: &Profile,
    lambda: f64,
    mu: f64,
    state: &StatePair,
) -> (Vec<f64>, Vec<f64>) {
    let cube = |x: f64| {
        let d = (1.0 - x).max(DELTA_FLOOR);
        d * d * d
    };
    let a12 = op
        .unknowns()
        .iter()
        .map(|&k| 2.0 * lambda * f.values()[k] / cube(state.v[k]))
        .collect();
    let a21 = op
        .unknowns()
        .iter()
        .map(|&k| 2.0 * mu * g.values()[k] / cube(state.u[k]))
        .collect();
    (a12, a21)
}

struct Block<'a> {
    op: &'a LinearOperator,
    a12: Vec<f64>,
    a21: Vec<f64>,
}

impl Block<'_> {
    fn n(&self) -> usize {
        self.op.n_unknowns()
    }

    /// `L φ` on interleaved unknowns `[φ₁(0), φ₂(0), φ₁(1), ...]`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let x1: Vec<f64> = (0..n).map(|k| x[2 * k]).collect();
        let x2: Vec<f64> = (0..n).map(|k| x[2 * k + 1]).collect();
        let y1 = self.op.matrix().mul_vec(&x1);
        let y2 = self.op.matrix().mul_vec(&x2);
        let mut y = vec![0.0; 2 * n];
        for k in 0..n {
            y[2 * k] = y1[k] - self.a12[k] * x2[k];
            y[2 * k + 1] = y2[k] - self.a21[k] * x1[k];
        }
        y
    }

    fn factor(&self, shift: f64) -> Result<BandedLu> {
        let a = self.op.matrix();
        let n = self.n();
        let (kl, ku) = a.bandwidth();
        let mut t = Vec::with_capacity(2 * a.nnz() + 4 * n);
        for k in 0..n {
            for (j, v) in a.row(k) {
                t.push((2 * k, 2 * j, v));
                t.push((2 * k + 1, 2 * j + 1, v));
            }
            t.push((2 * k, 2 * k, shift));
            t.push((2 * k + 1, 2 * k + 1, shift));
            t.push((2 * k, 2 * k + 1, -self.a12[k]));
            t.push((2 * k + 1, 2 * k, -self.a21[k]));
        }
        BandedLu::factor(2 * n, 2 * kl + 1, 2 * ku + 1, &t)
    }

    /// Collatz–Wielandt bounds `min/max (Lx)_i / x_i` for a positive `x`.
    fn cw_bounds(&self, x: &[f64], lx: &[f64]) -> (f64, f64) {
        x.iter().zip(lx).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            let q = b / a;
            (lo.min(q), hi.max(q))
        })
    }
}

/// Principal eigenpair of the linearization at `state`.
pub fn linearized_eigen(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    lambda: f64,
    mu: f64,
    state: &StatePair,
) -> Result<EigenResult> {
    if !(lambda >= 0.0 && mu >= 0.0) {
        return Err(Error::Precondition(format!(
            "parameters must be >= 0, got λ={lambda}, μ={mu}"
        )));
    }
    f.check_mesh(mesh)?;
    g.check_mesh(mesh)?;
    state.validate(mesh)?;
    let op = mesh.operator();
    let (a12, a21) = couplings(op, f, g, lambda, mu, state);
    let block = Block { op, a12, a21 };
    let n = block.n();
    let mu1 = mesh.eigenpair()?.mu1;
    let a_max = block.a12.iter().chain(&block.a21).fold(0.0_f64, |m, a| m.max(*a));
    // ν₁ ≥ μ₁ - max a, so this shift keeps ν₁ + σ ≥ 0.01 μ₁.
    let mut shift = a_max - 0.99 * mu1;
    let mut lu = block.factor(shift)?;
    let mut x = vec![1.0; 2 * n];
    let mut nu_prev = f64::NAN;
    let mut stage = 0;
    for it in 1..=EIGEN_MAX_ITER {
        lu.solve_in_place(&mut x);
        let top = (0..n).fold(0.0_f64, |m, k| m.max(x[2 * k]));
        if !(top > 0.0) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal("block inverse iteration lost positivity".into()));
        }
        x.iter_mut().for_each(|v| *v /= top);
        let lx = block.apply(&x);
        let w = op.unknown_weights();
        let (num, den) = (0..n).fold((0.0, 0.0), |(a, b), k| {
            let (p, q) = (x[2 * k], x[2 * k + 1]);
            (a + w[k] * (p * lx[2 * k] + q * lx[2 * k + 1]), b + w[k] * (p * p + q * q))
        });
        let nu = num / den;
        let r1 = (0..n).fold(0.0_f64, |m, k| m.max((lx[2 * k] - nu * x[2 * k]).abs()));
        let r2 = (0..n).fold(0.0_f64, |m, k| m.max((lx[2 * k + 1] - nu * x[2 * k + 1]).abs()));
        let residual = r1 + r2;
        if (nu - nu_prev).abs() <= 1e-10 * (1.0 + nu.abs()) && residual <= 1e-6 * (1.0 + nu.abs()) {
            if x.iter().any(|&v| v <= 0.0) {
                return Err(Error::Internal("principal eigenpair not positive".into()));
            }
            let phi1 = op.scatter(&(0..n).map(|k| x[2 * k]).collect::<Vec<_>>());
            let phi2 = op.scatter(&(0..n).map(|k| x[2 * k + 1]).collect::<Vec<_>>());
            return Ok(EigenResult {
                nu1: nu,
                phi1,
                phi2,
                iterations: it,
                residual,
            });
        }
        nu_prev = nu;
        stage += 1;
        if stage == STAGE_LEN {
            stage = 0;
            // Stagnation: move the shift up to just below the certified
            // lower bound on ν₁.
            let (lo, hi) = block.cw_bounds(&x, &lx);
            let margin = (0.1 * (hi - lo)).max(1e-3 * (1.0 + lo.abs()));
            let candidate = -lo + margin;
            if lo.is_finite() && candidate < shift {
                if let Ok(f) = block.factor(candidate) {
                    shift = candidate;
                    lu = f;
                }
            }
        }
    }
    Err(Error::Convergence {
        what: "linearized block eigenproblem",
        iterations: EIGEN_MAX_ITER,
    })
}

/// `min φ₂/φ₁ - μ/λ` over interior nodes. Requires `0 < μ ≤ λ`.
pub fn eigen_ratio_check(e: &EigenResult, mesh: &Mesh, lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) || mu > lambda {
        return Err(Error::Precondition(format!(
            "ratio check needs 0 < μ ≤ λ, got λ={lambda}, μ={mu}"
        )));
    }
    Ok(mesh
        .interior_nodes()
        .iter()
        .map(|&k| e.phi2[k] / e.phi1[k] - mu / lambda)
        .fold(f64::INFINITY, f64::min))
}

/// `∫|∇φ|² - 2√(λμ c_f c_g) ∫(1-u)^{-3/2}(1-v)^{-3/2} φ²` with the discrete
/// energy of the mesh operator. Profiles must be constants `c_f`, `c_g`.
pub fn stability_inequality_gap(
    mesh: &Mesh,
    f: &Profile,
    g: &Profile,
    lambda: f64,
    mu: f64,
    state: &StatePair,
    phi: &[f64],
) -> Result<f64> {
    let (Some(cf), Some(cg)) = (f.constant_value(), g.constant_value()) else {
        return Err(Error::Precondition(
            "stability inequality needs constant profiles".into(),
        ));
    };
    if phi.len() != mesh.len() {
        return Err(Error::Precondition("test field does not match mesh size".into()));
    }
    if (0..mesh.len()).any(|i| mesh.is_boundary(i) && phi[i] != 0.0) {
        return Err(Error::Precondition("test field must vanish on the boundary".into()));
    }
    state.validate(mesh)?;
    let op = mesh.operator();
    let c = 2.0 * (lambda * mu * cf * cg).sqrt();
    let potential: f64 = op
        .unknowns()
        .iter()
        .zip(op.unknown_weights())
        .map(|(&k, w)| {
            let p = ((1.0 - state.u[k]) * (1.0 - state.v[k])).powf(-1.5);
            w * p * phi[k] * phi[k]
        })
        .sum();
    Ok(op.energy(phi) - c * potential)
}

/// Smooth nonnegative bumps vanishing on the boundary, reproducible from
/// `seed`. On radial meshes the bumps are radial shells.
pub fn bump_fields(mesh: &Mesh, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = mesh.coords().iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), c| ([lo[0].min(c[0]), lo[1].min(c[1])], [hi[0].max(c[0]), hi[1].max(c[1])]),
    );
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    (0..count)
        .map(|_| {
            let c = [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
            let rho = rng.gen_range(0.15..0.8) * scale;
            let amp = rng.gen_range(0.5..2.0);
            let mut phi: Vec<f64> = mesh
                .coords()
                .iter()
                .map(|x| {
                    let d2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (rho * rho);
                    amp * (1.0 - d2).max(0.0).powi(2)
                })
                .collect();
            for (i, p) in phi.iter_mut().enumerate() {
                if mesh.is_boundary(i) {
                    *p = 0.0;
                }
            }
            if sup_norm(&phi) == 0.0 {
                // Degenerate draw: fall back to the principal mode.
                phi = mesh.eigenpair().map(|e| e.psi.clone()).unwrap_or(phi);
            }
            phi
        })
        .collect()
}
