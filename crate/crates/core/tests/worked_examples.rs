use std::f64::consts::PI;

use mems_lab::curve::{
    bound_report, compare_symmetrized, extremal_on_ray, trace_curve, upper_bound, BisectionConfig,
};
use mems_lab::diagnostics::{approach_with_lambda_star, moser_integrals};
use mems_lab::linalg::{dot, pcg, CsrMatrix};
use mems_lab::mesh::{equal_measure_radius, integrate, Mesh};
use mems_lab::profiles::{constant_profile, power_profile, Profile};
use mems_lab::solver::{minimal_solve, SolveConfig, StatePair};
use mems_lab::stability::{classify, linearized_eigen, Stability};

fn cfg() -> SolveConfig {
    SolveConfig::default()
}

fn bis() -> BisectionConfig {
    BisectionConfig::default()
}

/// `λ(a) = s₀(a)²` for the radial scalar problem with `w(0) = a`, by RK4.
fn shooting_lambda(a: f64) -> f64 {
    let h = 1e-4;
    let c = 1.0 / ((1.0 - a) * (1.0 - a));
    let (mut s, mut w, mut p) = (h, a - c * h * h / 4.0, -c * h / 2.0);
    let rhs = |s: f64, w: f64, p: f64| (p, -1.0 / ((1.0 - w) * (1.0 - w)) - p / s);
    loop {
        let k1 = rhs(s, w, p);
        let k2 = rhs(s + h / 2.0, w + h / 2.0 * k1.0, p + h / 2.0 * k1.1);
        let k3 = rhs(s + h / 2.0, w + h / 2.0 * k2.0, p + h / 2.0 * k2.1);
        let k4 = rhs(s + h, w + h * k3.0, p + h * k3.1);
        let wn = w + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let pn = p + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if wn <= 0.0 {
            let s0 = s + h * w / (w - wn);
            return s0 * s0;
        }
        s += h;
        w = wn;
        p = pn;
    }
}

#[test]
fn minimal_solution_at_half_matches_oracles() {
    // 4096-interval radial run.
    const GOLDEN_SUP_U: f64 = 0.161_997_7;
    // Lower branch of λ(a) = 0.5, with λ increasing on a ∈ (0, 0.44).
    let (mut lo, mut hi) = (0.0, 0.44);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if shooting_lambda(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shoot = 0.5 * (lo + hi);
    assert!((shoot - GOLDEN_SUP_U).abs() < 1e-5, "shooting {shoot}");
    let m = Mesh::radial(2, 1.0, 1024).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    let sol = minimal_solve(&m, &one, &one, 0.5, 0.5, &cfg()).unwrap().into_solution().unwrap();
    assert_eq!(sol.state.u, sol.state.v);
    assert!((sol.state.sup_u() - GOLDEN_SUP_U).abs() < 1e-5);
}

#[test]
fn domain_monotonicity_of_minimal_solutions() {
    // Same spacing h = 1/256 on both balls, so nodes coincide.
    let big = Mesh::radial(2, 1.0, 256).unwrap();
    let small = Mesh::radial(2, 0.5, 128).unwrap();
    let (fb, fs) = (constant_profile(&big, 1.0).unwrap(), constant_profile(&small, 1.0).unwrap());
    let ub = minimal_solve(&big, &fb, &fb, 0.7, 0.5, &cfg()).unwrap().into_solution().unwrap();
    let us = minimal_solve(&small, &fs, &fs, 0.7, 0.5, &cfg()).unwrap().into_solution().unwrap();
    for i in 0..small.len() {
        assert!(us.state.u[i] <= ub.state.u[i] + 1e-6);
        assert!(us.state.v[i] <= ub.state.v[i] + 1e-6);
    }
}

#[test]
fn power_profile_integral() {
    let m = Mesh::radial(2, 1.0, 512).unwrap();
    let f = power_profile(&m, 1.0).unwrap();
    assert!((integrate(&m, f.values()) - 2.0 * PI / 3.0).abs() < 1e-4);
}

#[test]
fn bound_report_on_disk_and_interval() {
    let m = Mesh::radial(2, 1.0, 256).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    let r = bound_report(&m, &one, &one).unwrap();
    assert!((r.a_f - 16.0 / 27.0).abs() < 1e-12);
    assert!((r.upper_f.unwrap() - 0.8568).abs() < 5e-4);
    let p = power_profile(&m, 2.0).unwrap();
    let r = bound_report(&m, &p, &one).unwrap();
    assert!((r.a_f - 64.0 / 27.0).abs() < 1e-12);
    assert_eq!(r.upper_f, None);
    let (u, _) = upper_bound(PI * PI / 4.0, 1.0, 1.0);
    assert!((u.unwrap() - 0.3655).abs() < 1e-4);
}

#[test]
fn ray_scaling_mesh_convergence_and_theta_order() {
    let lam = |r: f64, n: usize, theta: f64| {
        let m = Mesh::radial(2, r, n).unwrap();
        let one = constant_profile(&m, 1.0).unwrap();
        extremal_on_ray(&m, &one, &one, theta, &cfg(), &bis()).unwrap()
    };
    let b1 = lam(1.0, 512, 1.0);
    let b2 = lam(2.0, 512, 1.0);
    assert!((b2.lambda_star - b1.lambda_star / 4.0).abs() <= 0.01 * b2.lambda_star);
    let fine = lam(1.0, 1024, 1.0);
    assert!((fine.lambda_star - b1.lambda_star).abs() <= 5e-3 * fine.lambda_star);
    assert!(lam(1.0, 512, 4.0).lambda_star <= b1.lambda_star);
    assert!(b1.certificates_hold());
}

#[test]
fn traced_disk_curve_is_monotone_and_swap_symmetric() {
    let m = Mesh::radial(2, 1.0, 256).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let t = trace_curve(&m, &one, &one, &grid, &cfg(), &bis()).unwrap();
    assert!(t.is_monotone());
    for (lo, hi) in [(0, 4), (1, 3)] {
        let (a, b) = (&t.samples[lo], &t.samples[hi]);
        let w = a.bracket_width.max(b.bracket_width);
        assert!((b.mu_star - a.lambda_star).abs() <= 2.0 * w * a.lambda_star);
    }
    assert!(t.samples.iter().all(|s| s.certificates_hold()));
}

#[test]
fn symmetrized_comparison_cases() {
    // A radial problem compared with itself.
    let m = Mesh::radial(2, 1.0, 256).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    let c = compare_symmetrized(&m, &one, &one, &m, 1.0, &cfg(), &bis()).unwrap();
    assert_eq!(c.original.lambda_star, c.symmetrized.lambda_star);
    // Indicator of a left strip of a rectangle.
    let rect = Mesh::rect(1.5, 1.0, 24, 16).unwrap();
    let ball = Mesh::radial(2, equal_measure_radius(rect.volume(), 2), 256).unwrap();
    let ind: Vec<f64> = rect.coords().iter().map(|x| if x[0] < 0.5 { 1.0 } else { 0.0 }).collect();
    let ind = Profile::tabulated(&rect, ind).unwrap();
    let c = compare_symmetrized(&rect, &ind, &ind, &ball, 2.0, &cfg(), &bis()).unwrap();
    assert!(c.inequality_holds(), "{}", c.relative_gap());
    let wrong = Mesh::radial(2, 1.0, 64).unwrap();
    assert!(compare_symmetrized(&rect, &ind, &ind, &wrong, 1.0, &cfg(), &bis()).is_err());
}

/// Scalar eigenvalue of `-Δ - q` by inverse iteration on the symmetric
/// stiffness form, with conjugate-gradient solves.
fn scalar_eigen(mesh: &Mesh, q: &[f64]) -> f64 {
    let op = mesh.operator();
    let w = op.unknown_weights();
    let n = op.n_unknowns();
    let qk = op.gather(q);
    let shift = qk.iter().fold(0.0_f64, |m, x| m.max(*x));
    let a = op.matrix();
    let mut trip = Vec::new();
    for i in 0..n {
        for (j, v) in a.row(i) {
            trip.push((i, j, w[i] * v));
        }
        trip.push((i, i, w[i] * (shift - qk[i])));
    }
    let k = CsrMatrix::from_triplets(n, trip);
    let mut x = vec![1.0; n];
    let mut nu = f64::NAN;
    for _ in 0..500 {
        let b: Vec<f64> = x.iter().zip(w).map(|(x, w)| x * w).collect();
        let y = pcg(&k, &b, 1e-14, 10 * n).unwrap().x;
        let ky = k.mul_vec(&y);
        let wy: Vec<f64> = y.iter().zip(w).map(|(y, w)| y * w).collect();
        let next = dot(&y, &ky) / dot(&y, &wy) - shift;
        let norm = dot(&y, &wy).sqrt();
        x = y.iter().map(|v| v / norm).collect();
        if (next - nu).abs() < 1e-13 * (1.0 + next.abs()) {
            return next;
        }
        nu = next;
    }
    nu
}

#[test]
fn block_eigenvalue_matches_scalar_reduction() {
    let m = Mesh::radial(2, 1.0, 256).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    for lam in [0.3, 0.7] {
        let sol = minimal_solve(&m, &one, &one, lam, lam, &cfg()).unwrap().into_solution().unwrap();
        let e = linearized_eigen(&m, &one, &one, lam, lam, &sol.state).unwrap();
        let q: Vec<f64> = sol.state.u.iter().map(|u| 2.0 * lam / (1.0 - u).powi(3)).collect();
        let scalar = scalar_eigen(&m, &q);
        assert!((e.nu1 - scalar).abs() <= 1e-8 * (1.0 + scalar.abs()), "{} vs {scalar}", e.nu1);
    }
}

#[test]
fn stability_along_the_branch() {
    let m = Mesh::radial(2, 1.0, 512).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    let ray = extremal_on_ray(&m, &one, &one, 1.0, &cfg(), &bis()).unwrap();
    let mut last = f64::INFINITY;
    for t in [0.2, 0.5, 0.8, 0.95, 0.99] {
        let lam = t * ray.lambda_lo;
        let sol = minimal_solve(&m, &one, &one, lam, lam, &cfg()).unwrap().into_solution().unwrap();
        let e = linearized_eigen(&m, &one, &one, lam, lam, &sol.state).unwrap();
        assert_eq!(classify(&e), Stability::Stable);
        assert!(e.nu1 < last);
        last = e.nu1;
        let (x, y) = moser_integrals(&m, &sol.state, 2.0).unwrap();
        assert!(x.is_finite() && y.is_finite() && x >= PI && y >= PI);
    }
}

#[test]
fn regular_regime_near_the_curve() {
    for n in [1, 2, 3] {
        let m = Mesh::radial(n, 1.0, 512).unwrap();
        let one = constant_profile(&m, 1.0).unwrap();
        let ray = extremal_on_ray(&m, &one, &one, 1.0, &cfg(), &bis()).unwrap();
        let rec = approach_with_lambda_star(&m, &one, &one, 1.0, ray.lambda_lo, &[0.5, 0.9, 0.99], 2.0, &cfg()).unwrap();
        assert!(!rec.has_unexpected_anomalies());
        assert!(rec.sup_u_monotone());
        let last = rec.samples.last().unwrap();
        assert_eq!(last.t, 0.99);
        assert!(last.sup_u <= 0.95, "N={n}: {}", last.sup_u);
        assert!(rec.samples[0].nu1 > 0.0);
    }
}

#[test]
fn zero_state_stability_inequality_gap() {
    let m = Mesh::rect(1.0, 1.0, 32, 32).unwrap();
    let one = constant_profile(&m, 1.0).unwrap();
    let z = StatePair::zeros(&m);
    let ep = m.eigenpair().unwrap();
    let t = 1.5;
    let gap = mems_lab::stability::stability_inequality_gap(&m, &one, &one, t, t, &z, &ep.psi).unwrap();
    let n2 = m.operator().norm(&ep.psi).powi(2);
    assert!((gap - (ep.mu1 - 2.0 * t) * n2).abs() < 1e-8 * n2 * ep.mu1);
}
