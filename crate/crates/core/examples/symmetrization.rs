//! Schwarz symmetrization of a strip indicator on a rectangle, and the
//! resulting comparison of critical parameters.

use mems_lab::curve::{compare_symmetrized, BisectionConfig};
use mems_lab::mesh::{equal_measure_radius, Mesh};
use mems_lab::profiles::{superlevel_measure, symmetrize, Profile};
use mems_lab::solver::SolveConfig;

fn main() -> mems_lab::Result<()> {
    let rect = Mesh::rect(1.0, 1.0, 48, 48)?;
    let ball = Mesh::radial(2, equal_measure_radius(rect.volume(), 2), 512)?;
    let values = rect.coords().iter().map(|x| if x[0] < 0.5 { 1.0 } else { 0.0 }).collect();
    let f = Profile::tabulated(&rect, values)?;
    let fs = symmetrize(&f, &rect, &ball)?;
    for t in [0.25, 0.75] {
        println!("|{{f > {t}}}| = {:.4} vs {:.4}", superlevel_measure(&f, &rect, t), superlevel_measure(&fs, &ball, t));
    }
    let c = compare_symmetrized(&rect, &f, &f, &ball, 1.0, &SolveConfig::default(), &BisectionConfig::default())?;
    println!(
        "λ*: original {:.5}, symmetrized {:.5}, holds {}",
        c.original.lambda_star,
        c.symmetrized.lambda_star,
        c.inequality_holds()
    );
    Ok(())
}
