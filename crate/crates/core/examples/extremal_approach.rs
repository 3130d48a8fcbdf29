//! Samples the minimal branch while approaching the critical curve.

use mems_lab::curve::BisectionConfig;
use mems_lab::diagnostics::approach_extremal;
use mems_lab::mesh::Mesh;
use mems_lab::profiles::constant_profile;
use mems_lab::solver::SolveConfig;

fn main() -> mems_lab::Result<()> {
    for dim in [1, 2, 3] {
        let mesh = Mesh::radial(dim, 1.0, 512)?;
        let one = constant_profile(&mesh, 1.0)?;
        let fractions = [0.5, 0.9, 0.99, 0.999];
        let (ray, rec) =
            approach_extremal(&mesh, &one, &one, 2.0, &fractions, 2.0, &SolveConfig::default(), &BisectionConfig::default())?;
        println!("N={dim}: λ*(2)={:.6}", ray.lambda_star);
        for s in &rec.samples {
            println!("  t={:<6} sup u={:.4} sup v={:.4} ν₁={:.4e} X={:.3} Y={:.3}", s.t, s.sup_u, s.sup_v, s.nu1, s.x, s.y);
        }
        for a in &rec.anomalies {
            println!("  t={} {}", a.t, a.verdict);
        }
    }
    Ok(())
}
