//! Minimal solution of the coupled system on the unit disk.

use mems_lab::mesh::Mesh;
use mems_lab::profiles::constant_profile;
use mems_lab::solver::{minimal_solve, SolveConfig, SolveOutcome};

fn main() -> mems_lab::Result<()> {
    let mesh = Mesh::radial(2, 1.0, 512)?;
    let one = constant_profile(&mesh, 1.0)?;
    for (lambda, mu) in [(0.5, 0.5), (0.7, 0.3), (0.9, 0.9)] {
        match minimal_solve(&mesh, &one, &one, lambda, mu, &SolveConfig::default())? {
            SolveOutcome::Converged(sol) => println!(
                "λ={lambda} μ={mu}: sup u={:.6} sup v={:.6} ({} iterations, residual {:.1e})",
                sol.state.sup_u(),
                sol.state.sup_v(),
                sol.iterations,
                sol.residual.0.max(sol.residual.1)
            ),
            other => println!("λ={lambda} μ={mu}: {}", other.label()),
        }
    }
    Ok(())
}
