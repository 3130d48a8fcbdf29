//! Discrete residual of the singular radial solution 1 - r^{2/3}.

use mems_lab::diagnostics::singular_residual;

fn main() -> mems_lab::Result<()> {
    for n in [64, 128, 256, 512] {
        let r = singular_residual(2, n)?;
        let r2 = singular_residual(2, 2 * n)?;
        println!("n={n:<4} residual {r:.3e}, ratio to 2n {:.3}", r / r2);
    }
    Ok(())
}
