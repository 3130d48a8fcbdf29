//! Traces λ*(θ) on a few rays through the origin.

use mems_lab::curve::{trace_curve, BisectionConfig};
use mems_lab::mesh::Mesh;
use mems_lab::profiles::constant_profile;
use mems_lab::solver::SolveConfig;

fn main() -> mems_lab::Result<()> {
    let mesh = Mesh::radial(2, 1.0, 512)?;
    let one = constant_profile(&mesh, 1.0)?;
    let thetas = [0.125, 0.5, 1.0, 2.0, 8.0];
    let trace = trace_curve(&mesh, &one, &one, &thetas, &SolveConfig::default(), &BisectionConfig::default())?;
    println!("{:>8} {:>10} {:>10} {:>10}", "theta", "lambda*", "mu*", "width");
    for s in &trace.samples {
        println!("{:>8} {:>10.6} {:>10.6} {:>10.1e}", s.theta, s.lambda_star, s.mu_star, s.bracket_width);
    }
    println!("monotone: {}", trace.is_monotone());
    Ok(())
}
