//! Principal eigenvalue of the linearized system along the diagonal branch.

use mems_lab::curve::{extremal_on_ray, BisectionConfig};
use mems_lab::mesh::Mesh;
use mems_lab::profiles::constant_profile;
use mems_lab::solver::{minimal_solve, SolveConfig};
use mems_lab::stability::{bump_fields, classify, linearized_eigen, stability_inequality_gap};

fn main() -> mems_lab::Result<()> {
    let mesh = Mesh::radial(2, 1.0, 512)?;
    let one = constant_profile(&mesh, 1.0)?;
    let cfg = SolveConfig::default();
    let ray = extremal_on_ray(&mesh, &one, &one, 1.0, &cfg, &BisectionConfig::default())?;
    let bumps = bump_fields(&mesh, 5, 7);
    for t in [0.25, 0.5, 0.9, 0.99] {
        let lam = t * ray.lambda_lo;
        let Some(sol) = minimal_solve(&mesh, &one, &one, lam, lam, &cfg)?.into_solution() else {
            continue;
        };
        let e = linearized_eigen(&mesh, &one, &one, lam, lam, &sol.state)?;
        let worst = bumps
            .iter()
            .map(|phi| stability_inequality_gap(&mesh, &one, &one, lam, lam, &sol.state, phi))
            .collect::<mems_lab::Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        println!("λ={lam:.5}: ν₁={:.6} {:?}, smallest gap {worst:.3e}", e.nu1, classify(&e));
    }
    Ok(())
}
