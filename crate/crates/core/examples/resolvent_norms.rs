//! Cut-off resolvent norms on the voxel grid and from the radial kernel.

use hsfwi::grid::Grid3;
use hsfwi::helmholtz::{estimate_resolvent_norm, radial_resolvent_norm, Cutoff, NormOptions, RadialLayers};
use hsfwi::inversion::loglog_slope;
use hsfwi::model::{wavespeed_from_model, DomainPartition, ModelVector};

fn main() -> hsfwi::Result<()> {
    let layers = RadialLayers::new(vec![0.5], vec![1.3])?;
    let near = Cutoff::Near { radius: 0.6 };
    let grid = Grid3::new(24, 1.2)?;
    let labels = DomainPartition::radial(vec![0.5], 0.1)?.labels_on(&grid)?;
    let c = wavespeed_from_model(&ModelVector::new(vec![1.3])?, &labels)?;
    let lambdas = [1.0, 2.0, 3.0];
    let table = estimate_resolvent_norm(&lambdas, &c, near, NormOptions::default())?;
    for (l, n) in lambdas.iter().zip(&table.norms) {
        println!("λ = {l}: grid {n:.4e}  radial {:.4e}", radial_resolvent_norm(*l, &layers, near, 24)?);
    }
    println!("a_c over the sample: {:.4}", table.a_c());

    let far = Cutoff::Far { inner: 1.1, outer: 1.4 };
    let high = [4.0, 8.0, 16.0];
    let norms: Vec<f64> = high
        .iter()
        .map(|l| radial_resolvent_norm(*l, &RadialLayers::homogeneous(), far, 24))
        .collect::<hsfwi::Result<_>>()?;
    println!("far-cutoff decay slope for c = 1: {:.3}", loglog_slope(&high, &norms));
    Ok(())
}
