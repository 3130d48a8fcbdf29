//! Discrete domains and the negative Dirichlet Laplacian on them.
//!
//! Two mesh kinds are supported:
//!
//! * `Radial`: the `N`-ball of radius `R` reduced to the radial coordinate,
//!   uniform nodes `r_i = i·h`, `i = 0..=n`, with the Dirichlet node at `r_n = R`.
//!   The operator is the conservative (finite-volume) form of
//!   `-(u'' + (N-1)/r·u')`: each node owns the shell `[r_i - h/2, r_i + h/2]`
//!   and fluxes are evaluated on the shell faces. At the origin this reduces to
//!   `-N·u''(0)` with the mirrored neighbour `u_{-1} = u_1`.
//! * `Cartesian2D`: an `L_x × L_y` rectangle with `n_x × n_y` interior nodes and
//!   the 5-point stencil.
//!
//! Fields are stored on every node, boundary included; boundary entries of
//! solutions are zero. Quadrature weights are the node control volumes, so the
//! weights over all nodes sum to `|Ω|` and the stiffness matrix `diag(w)·A` is
//! symmetric with nonpositive off-diagonals (an M-matrix).

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, BandedLu, CsrMatrix};

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 16;

const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Radial {
        dimension: usize,
        radius: f64,
        intervals: usize,
    },
    Cartesian2D {
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Mesh {
    kind: MeshKind,
    coords: Vec<[f64; 2]>,
    weights: Vec<f64>,
    boundary: Vec<bool>,
    operator: LinearOperator,
    eigen: OnceLock<EigenPair>,
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(dimension: usize) -> f64 {
    match dimension {
        0 => 1.0,
        1 => 2.0,
        n => 2.0 * PI / n as f64 * ball_volume(n - 2),
    }
}

/// Radius of the `N`-ball whose volume is `volume`.
pub fn equal_measure_radius(volume: f64, dimension: usize) -> f64 {
    (volume / ball_volume(dimension)).powf(1.0 / dimension as f64)
}

impl Mesh {
    /// Uniform radial grid on the `N`-ball of radius `R` with `n` intervals.
    pub fn radial(dimension: usize, radius: f64, intervals: usize) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::Config(format!("dimension must be >= 1, got {dimension}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        if intervals < MIN_NODES {
            return Err(Error::Config(format!(
                "radial node count must be >= {MIN_NODES}, got {intervals}"
            )));
        }
        let n = intervals;
        let nd = dimension as i32;
        let h = radius / n as f64;
        let omega = ball_volume(dimension);
        let sphere = dimension as f64 * omega;

        let coords: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 * h, 0.0]).collect();
        let mut weights = Vec::with_capacity(n + 1);
        weights.push(omega * (0.5 * h).powi(nd));
        for i in 1..n {
            let r = i as f64 * h;
            weights.push(omega * ((r + 0.5 * h).powi(nd) - (r - 0.5 * h).powi(nd)));
        }
        weights.push(omega * (radius.powi(nd) - (radius - 0.5 * h).powi(nd)));
        let mut boundary = vec![false; n + 1];
        boundary[n] = true;

        // Face conductances S_N r_{i+1/2}^{N-1} / h.
        let face = |i: usize| sphere * ((i as f64 + 0.5) * h).powi(nd - 1) / h;
        let mut triplets = Vec::with_capacity(3 * n);
        for i in 0..n {
            let left = if i > 0 { face(i - 1) } else { 0.0 };
            let right = face(i);
            let w = weights[i];
            triplets.push((i, i, (left + right) / w));
            if i > 0 {
                triplets.push((i, i - 1, -left / w));
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -right / w));
            }
        }
        let unknowns: Vec<usize> = (0..n).collect();
        let operator = LinearOperator::new(
            CsrMatrix::from_triplets(n, triplets),
            unknowns,
            &weights,
        )?;
        Ok(Self {
            kind: MeshKind::Radial {
                dimension,
                radius,
                intervals,
            },
            coords,
            weights,
            boundary,
            operator,
            eigen: OnceLock::new(),
        })
    }

    /// `L_x × L_y` rectangle with `n_x × n_y` interior nodes.
    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::Config(format!("side lengths must be positive, got {lx} x {ly}")));
        }
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(Error::Config(format!(
                "interior node counts must be >= {MIN_NODES}, got {nx} x {ny}"
            )));
        }
        let hx = lx / (nx + 1) as f64;
        let hy = ly / (ny + 1) as f64;
        let stride = nx + 2;
        let total = stride * (ny + 2);
        let mut coords = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut boundary = Vec::with_capacity(total);
        for jj in 0..ny + 2 {
            for ii in 0..nx + 2 {
                coords.push([ii as f64 * hx, jj as f64 * hy]);
                let edge_x = ii == 0 || ii == nx + 1;
                let edge_y = jj == 0 || jj == ny + 1;
                let mut w = hx * hy;
                if edge_x {
                    w *= 0.5;
                }
                if edge_y {
                    w *= 0.5;
                }
                weights.push(w);
                boundary.push(edge_x || edge_y);
            }
        }
        let cx = 1.0 / (hx * hx);
        let cy = 1.0 / (hy * hy);
        let mut triplets = Vec::with_capacity(5 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                triplets.push((k, k, 2.0 * cx + 2.0 * cy));
                if i > 0 {
                    triplets.push((k, k - 1, -cx));
                }
                if i + 1 < nx {
                    triplets.push((k, k + 1, -cx));
                }
                if j > 0 {
                    triplets.push((k, k - nx, -cy));
                }
                if j + 1 < ny {
                    triplets.push((k, k + nx, -cy));
                }
            }
        }
        let unknowns: Vec<usize> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (j + 1) * stride + i + 1))
            .collect();
        let operator = LinearOperator::new(
            CsrMatrix::from_triplets(nx * ny, triplets),
            unknowns,
            &weights,
        )?;
        Ok(Self {
            kind: MeshKind::Cartesian2D { lx, ly, nx, ny },
            coords,
            weights,
            boundary,
            operator,
            eigen: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> &MeshKind {
        &self.kind
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, MeshKind::Radial { .. })
    }

    /// Space dimension `N` of the domain.
    pub fn dimension(&self) -> usize {
        match self.kind {
            MeshKind::Radial { dimension, .. } => dimension,
            MeshKind::Cartesian2D { .. } => 2,
        }
    }

    /// Ball radius, for radial meshes.
    pub fn radius(&self) -> Option<f64> {
        match self.kind {
            MeshKind::Radial { radius, .. } => Some(radius),
            MeshKind::Cartesian2D { .. } => None,
        }
    }

    /// Exact `|Ω|`.
    pub fn volume(&self) -> f64 {
        match self.kind {
            MeshKind::Radial {
                dimension, radius, ..
            } => ball_volume(dimension) * radius.powi(dimension as i32),
            MeshKind::Cartesian2D { lx, ly, .. } => lx * ly,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Node coordinates; radial meshes store `[r, 0]`.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Radial node positions, for radial meshes.
    pub fn radii(&self) -> Option<Vec<f64>> {
        self.is_radial()
            .then(|| self.coords.iter().map(|c| c[0]).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        self.operator.unknowns()
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.operator
    }

    /// Principal Dirichlet eigenpair, computed on first use.
    pub fn eigenpair(&self) -> Result<&EigenPair> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = principal_eigenpair(&self.operator, self)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    /// A zero field on this mesh.
    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    /// Short stable digest of the mesh parameters.
    pub fn fingerprint(&self) -> String {
        fingerprint_str(&format!("{:?}", self.kind))
    }

    /// Linear interpolation of a radial field at radius `r`.
    pub fn sample_radial(&self, field: &[f64], r: f64) -> Result<f64> {
        let MeshKind::Radial {
            radius, intervals, ..
        } = self.kind
        else {
            return Err(Error::Precondition("sample_radial needs a radial mesh".into()));
        };
        if !(0.0..=radius * (1.0 + 1e-12)).contains(&r) {
            return Err(Error::Precondition(format!("radius {r} outside [0, {radius}]")));
        }
        let s = (r / radius * intervals as f64).min(intervals as f64);
        let i = (s.floor() as usize).min(intervals - 1);
        let t = s - i as f64;
        Ok((1.0 - t) * field[i] + t * field[i + 1])
    }
}

pub(crate) fn fingerprint_str(s: &str) -> String {
    let digest = Sha256::digest(s.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `Σ w_i · field_i` over all nodes.
pub fn integrate(mesh: &Mesh, field: &[f64]) -> f64 {
    debug_assert_eq!(field.len(), mesh.len());
    mesh.weights.iter().zip(field).map(|(w, f)| w * f).sum()
}

/// Negative Dirichlet Laplacian on the interior unknowns of a mesh.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    matrix: CsrMatrix,
    unknowns: Vec<usize>,
    weights: Vec<f64>,
    n_nodes: usize,
    lu: BandedLu,
}

impl LinearOperator {
    fn new(matrix: CsrMatrix, unknowns: Vec<usize>, node_weights: &[f64]) -> Result<Self> {
        let lu = BandedLu::from_csr(&matrix)?;
        let weights = unknowns.iter().map(|&k| node_weights[k]).collect();
        Ok(Self {
            matrix,
            unknowns,
            weights,
            n_nodes: node_weights.len(),
            lu,
        })
    }

    /// The matrix acting on interior unknowns.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Node index of each unknown.
    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    /// Quadrature weights of the unknowns.
    pub fn unknown_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&k| field[k]).collect()
    }

    pub fn scatter(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        for (&k, &v) in self.unknowns.iter().zip(values) {
            out[k] = v;
        }
        out
    }

    /// `(-Δ_h) field` at interior nodes, zero on the boundary. Boundary
    /// values of the input are taken as zero.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        self.scatter(&self.matrix.mul_vec(&self.gather(field)))
    }

    /// Direct solve of `(-Δ_h) h = rhs` with `h = 0` on the boundary.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.gather(rhs);
        self.lu.solve_in_place(&mut x);
        self.scatter(&x)
    }

    /// Same solve by Jacobi-preconditioned CG on the symmetric stiffness
    /// form `diag(w)·A`.
    pub fn solve_cg(&self, rhs: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
        let stiffness = self.matrix.scale_rows(&self.weights);
        let b: Vec<f64> = self
            .gather(rhs)
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| r * w)
            .collect();
        let sol = linalg::pcg(&stiffness, &b, rel_tol, 20 * self.n_unknowns() + 100)?;
        Ok(self.scatter(&sol.x))
    }

    /// Discrete Dirichlet energy `∫|∇φ|² ≈ Σ w_k φ_k (A φ)_k`.
    pub fn energy(&self, phi: &[f64]) -> f64 {
        let x = self.gather(phi);
        let ax = self.matrix.mul_vec(&x);
        x.iter()
            .zip(&ax)
            .zip(&self.weights)
            .map(|((x, ax), w)| w * x * ax)
            .sum()
    }

    /// Largest asymmetry of the stiffness matrix `diag(w)·A`.
    pub fn stiffness_asymmetry(&self) -> f64 {
        self.matrix.scale_rows(&self.weights).max_asymmetry()
    }

    /// Discrete weighted 2-norm over the unknowns.
    pub fn norm(&self, field: &[f64]) -> f64 {
        self.unknowns
            .iter()
            .zip(&self.weights)
            .map(|(&k, w)| w * field[k] * field[k])
            .sum::<f64>()
            .sqrt()
    }
}

/// Solves `(-Δ_h) h = rhs`, `h = 0` on the boundary.
pub fn solve_poisson(op: &LinearOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != op.n_nodes() {
        return Err(Error::Precondition(format!(
            "rhs has {} entries, mesh has {} nodes",
            rhs.len(),
            op.n_nodes()
        )));
    }
    if let Some(k) = op.unknowns().iter().find(|&&k| !rhs[k].is_finite()) {
        return Err(Error::Precondition(format!("rhs not finite at node {k}")));
    }
    Ok(op.solve(rhs))
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    /// First Dirichlet eigenvalue.
    pub mu1: f64,
    /// Eigenfunction with `sup ψ₁ = 1`.
    pub psi: Vec<f64>,
    pub iterations: usize,
}

/// Smallest Dirichlet eigenvalue and its positive eigenfunction by inverse
/// power iteration.
pub fn principal_eigenpair(op: &LinearOperator, mesh: &Mesh) -> Result<EigenPair> {
    debug_assert_eq!(op.n_nodes(), mesh.len());
    let w = op.unknown_weights();
    let n = op.n_unknowns();
    let mut x = vec![1.0; n];
    let mut mu_prev = f64::NAN;
    for it in 1..=EIGEN_MAX_ITER {
        let mut y = x.clone();
        op.lu.solve_in_place(&mut y);
        // W-Rayleigh quotient of y: <y, W A y> / <y, W y> = <y, W x> / <y, W y>.
        let num: f64 = (0..n).map(|k| w[k] * y[k] * x[k]).sum();
        let den: f64 = (0..n).map(|k| w[k] * y[k] * y[k]).sum();
        let mu = num / den;
        let top = y.iter().fold(0.0_f64, |m, v| m.max(*v));
        if !(top > 0.0) {
            return Err(Error::Internal("inverse iteration lost positivity".into()));
        }
        x = y.iter().map(|v| v / top).collect();
        let ax = op.matrix.mul_vec(&x);
        let res = ax
            .iter()
            .zip(&x)
            .fold(0.0_f64, |m, (a, v)| m.max((a - mu * v).abs()));
        // Fine meshes hit the rounding floor of `A` before 1e-9·μ; accept a
        // stagnated quotient once the 1e-8·μ contract holds.
        let stalled = (mu - mu_prev).abs() <= 1e-15 * mu && res <= 1e-8 * mu;
        mu_prev = mu;
        if res <= 1e-9 * mu || stalled {
            if x.iter().any(|&v| v <= 0.0) {
                return Err(Error::Internal("principal eigenfunction not positive".into()));
            }
            return Ok(EigenPair {
                mu1: mu,
                psi: op.scatter(&x),
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        what: "principal eigenpair",
        iterations: EIGEN_MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // First zero of J0.
    const J01: f64 = 2.404_825_557_695_773;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((ball_volume(2) - PI).abs() < 1e-15);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!(rel(ball_volume(8), PI.powi(4) / 24.0) < 1e-14);
    }

    #[test]
    fn radial_quadrature_reproduces_volume() {
        for (n_dim, n) in [(1, 64), (2, 256), (3, 100), (8, 512)] {
            let m = Mesh::radial(n_dim, 1.0, n).unwrap();
            let s: f64 = m.weights().iter().sum();
            assert!(rel(s, ball_volume(n_dim)) < 1e-10, "N={n_dim}");
        }
        let m = Mesh::radial(8, 1.0, 512).unwrap();
        assert!(rel(m.weights().iter().sum(), PI.powi(4) / 24.0) < 1e-10);
    }

    #[test]
    fn radial_nodes_increase_and_interval_case() {
        let m = Mesh::radial(1, 1.0, 64).unwrap();
        let r = m.radii().unwrap();
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(r[0], 0.0);
        assert_eq!(*r.last().unwrap(), 1.0);
        // (-1, 1): measure 2.
        assert!((integrate(&m, &vec![1.0; m.len()]) - 2.0).abs() < 1e-12);
        assert!(m.is_boundary(64) && !m.is_boundary(0));
    }

    #[test]
    fn rect_quadrature_and_symmetry() {
        let m = Mesh::rect(1.0, 1.0, 64, 64).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m.operator().matrix().max_asymmetry(), 0.0);
        let m = Mesh::rect(2.0, 1.0, 128, 64).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn radial_stiffness_is_symmetric() {
        let m = Mesh::radial(3, 1.0, 64).unwrap();
        let k = m.operator().matrix().scale_rows(m.operator().unknown_weights());
        let scale = k.diagonal().iter().fold(0.0_f64, |a, b| a.max(*b));
        assert!(m.operator().stiffness_asymmetry() <= 1e-13 * scale);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(Mesh::radial(0, 1.0, 64).is_err());
        assert!(Mesh::radial(2, -1.0, 64).is_err());
        assert!(Mesh::radial(2, 1.0, 8).is_err());
        assert!(Mesh::rect(1.0, 0.0, 64, 64).is_err());
        assert!(Mesh::rect(1.0, 1.0, 15, 64).is_err());
    }

    #[test]
    fn operator_on_constant_field() {
        let m = Mesh::radial(2, 1.0, 64).unwrap();
        let ones = vec![1.0; m.len()];
        let a1 = m.operator().apply(&ones);
        assert!(a1.iter().all(|&v| v >= -1e-9));
        // Deep interior: zero up to rounding.
        assert!(a1[..60].iter().all(|v| v.abs() < 1e-8));
        assert!(a1[63] > 0.0);
    }

    #[test]
    fn poisson_zero_rhs() {
        let m = Mesh::radial(2, 1.0, 32).unwrap();
        let h = solve_poisson(m.operator(), &m.zeros()).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poisson_quadratic_is_exact() {
        // -Δ(1 - r²) = 2N; the conservative stencil is exact on quadratics.
        for n_dim in [1, 2, 3, 8] {
            let m = Mesh::radial(n_dim, 1.0, 128).unwrap();
            let rhs = vec![2.0 * n_dim as f64; m.len()];
            let h = solve_poisson(m.operator(), &rhs).unwrap();
            let err = m
                .radii()
                .unwrap()
                .iter()
                .zip(&h)
                .fold(0.0_f64, |e, (r, v)| e.max((v - (1.0 - r * r)).abs()));
            assert!(err < 1e-10, "N={n_dim} err={err:e}");
        }
    }

    fn quartic_error(n_dim: usize, n: usize) -> f64 {
        // -Δ(1 - r⁴) = 4(N+2) r².
        let m = Mesh::radial(n_dim, 1.0, n).unwrap();
        let r = m.radii().unwrap();
        let rhs: Vec<f64> = r.iter().map(|r| 4.0 * (n_dim as f64 + 2.0) * r * r).collect();
        let h = solve_poisson(m.operator(), &rhs).unwrap();
        r.iter()
            .zip(&h)
            .fold(0.0_f64, |e, (r, v)| e.max((v - (1.0 - r.powi(4))).abs()))
    }

    #[test]
    fn poisson_second_order() {
        for n_dim in [1, 2, 3] {
            let ratio = quartic_error(n_dim, 64) / quartic_error(n_dim, 128);
            assert!((3.5..=4.5).contains(&ratio), "N={n_dim} ratio={ratio}");
        }
    }

    #[test]
    fn poisson_residual_contract() {
        let m = Mesh::rect(1.0, 1.0, 32, 32).unwrap();
        let rhs: Vec<f64> = m.coords().iter().map(|c| 1.0 + c[0] * c[1]).collect();
        let h = solve_poisson(m.operator(), &rhs).unwrap();
        let ah = m.operator().apply(&h);
        let mut res: Vec<f64> = ah.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        for (i, r) in res.iter_mut().enumerate() {
            if m.is_boundary(i) {
                *r = 0.0;
            }
        }
        assert!(m.operator().norm(&res) <= 1e-10 * (1.0 + m.operator().norm(&rhs)));
    }

    #[test]
    fn cg_agrees_with_direct() {
        for m in [
            Mesh::rect(1.0, 1.0, 24, 20).unwrap(),
            Mesh::radial(3, 1.0, 64).unwrap(),
        ] {
            let rhs: Vec<f64> = (0..m.len()).map(|i| 1.0 + (i % 7) as f64).collect();
            let a = m.operator().solve(&rhs);
            let b = m.operator().solve_cg(&rhs, 1e-12).unwrap();
            let scale = linalg::sup_norm(&a);
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9 * scale));
        }
    }

    #[test]
    fn eigenvalues_match_closed_forms() {
        let interval = Mesh::radial(1, 1.0, 256).unwrap();
        assert!(rel(interval.eigenpair().unwrap().mu1, PI * PI / 4.0) < 5e-3);
        let disk = Mesh::radial(2, 1.0, 256).unwrap();
        assert!(rel(disk.eigenpair().unwrap().mu1, J01 * J01) < 5e-3);
        let square = Mesh::rect(1.0, 1.0, 64, 64).unwrap();
        assert!(rel(square.eigenpair().unwrap().mu1, 2.0 * PI * PI) < 5e-3);
    }

    #[test]
    fn eigenpair_residual_and_positivity() {
        let m = Mesh::radial(2, 1.0, 128).unwrap();
        let e = m.eigenpair().unwrap();
        let a = m.operator().apply(&e.psi);
        let res = m
            .interior_nodes()
            .iter()
            .fold(0.0_f64, |r, &k| r.max((a[k] - e.mu1 * e.psi[k]).abs()));
        assert!(res <= 1e-8 * e.mu1);
        assert!(m.interior_nodes().iter().all(|&k| e.psi[k] > 0.0));
        assert!((linalg::sup_norm(&e.psi) - 1.0).abs() < 1e-15);
        // μ₁ ψ₁ solves back to ψ₁.
        let rhs: Vec<f64> = e.psi.iter().map(|p| e.mu1 * p).collect();
        let back = solve_poisson(m.operator(), &rhs).unwrap();
        assert!(back.iter().zip(&e.psi).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn integrate_interval_eigenfunction() {
        // ∫_{-1}^{1} cos(πx/2) dx = 4/π.
        let m = Mesh::radial(1, 1.0, 256).unwrap();
        let psi = &m.eigenpair().unwrap().psi;
        assert!(rel(integrate(&m, psi), 4.0 / PI) < 1e-3);
        assert_eq!(integrate(&m, &m.zeros()), 0.0);
        let disk = Mesh::radial(2, 1.0, 256).unwrap();
        assert!(rel(integrate(&disk, &vec![1.0; disk.len()]), PI) < 1e-12);
    }

    #[test]
    fn green_operator_is_positive() {
        let m = Mesh::rect(1.0, 1.0, 20, 20).unwrap();
        let mut rhs = m.zeros();
        rhs[m.interior_nodes()[17]] = 1.0;
        let h = m.operator().solve(&rhs);
        assert!(m.interior_nodes().iter().all(|&k| h[k] > 0.0));
    }

    #[test]
    fn sample_radial_interpolates() {
        let m = Mesh::radial(2, 2.0, 32).unwrap();
        let field: Vec<f64> = m.radii().unwrap().iter().map(|r| 3.0 * r).collect();
        assert!((m.sample_radial(&field, 0.77).unwrap() - 2.31).abs() < 1e-12);
        assert!((m.sample_radial(&field, 2.0).unwrap() - 6.0).abs() < 1e-12);
        assert!(m.sample_radial(&field, 2.5).is_err());
    }
}
