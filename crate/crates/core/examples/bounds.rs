//! Closed-form bounds on the critical curve for a few profiles.

use mems_lab::curve::{bound_report, ray_upper_bound};
use mems_lab::mesh::Mesh;
use mems_lab::profiles::{constant_profile, power_profile};

fn main() -> mems_lab::Result<()> {
    let disk = Mesh::radial(2, 1.0, 512)?;
    let square = Mesh::rect(1.0, 1.0, 64, 64)?;
    let cases = [
        ("disk, f=g=1", &disk, constant_profile(&disk, 1.0)?, constant_profile(&disk, 1.0)?),
        ("disk, f=|x|², g=1", &disk, power_profile(&disk, 2.0)?, constant_profile(&disk, 1.0)?),
        ("square, f=g=1", &square, constant_profile(&square, 1.0)?, constant_profile(&square, 1.0)?),
    ];
    for (name, mesh, f, g) in &cases {
        let r = bound_report(mesh, f, g)?;
        println!("{name}: μ₁={:.5} lower ({:.5}, {:.5}) upper {:?}", r.mu1, r.a_f, r.a_g, r.upper_product);
        if let Some(u) = ray_upper_bound(r.mu1, r.inf_f, r.inf_g, 4.0) {
            println!("  λ*(4) ≤ {u:.5}");
        }
    }
    Ok(())
}
