//! Volume solve in a two-layer ball and the refinement of its PDE residual.

use hsfwi::grid::Grid3;
use hsfwi::helmholtz::{discrete_residual, solve_lippmann_schwinger, VolumeField};
use hsfwi::model::{wavespeed_from_model, DomainPartition, ModelVector};
use num_complex::Complex64;

fn main() -> hsfwi::Result<()> {
    let part = DomainPartition::radial(vec![0.5], 0.05)?;
    for n in [16, 32] {
        let grid = Grid3::new(n, 1.5)?;
        let c = wavespeed_from_model(&ModelVector::new(vec![1.5])?, &part.labels_on(&grid)?)?;
        let f = VolumeField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + (x[2] - 0.3).powi(2);
            Complex64::new((-10.0 * r2).exp(), 0.0)
        });
        let u = solve_lippmann_schwinger(2.0, &c, &f, 1e-8)?;
        println!("{n}^3: |u| = {:.5e}, PDE residual {:.3e}", u.norm(), discrete_residual(2.0, &c, &u, &f));
    }
    Ok(())
}
