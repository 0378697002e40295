//! Boundary trace of a single layer from the voxel solver against the
//! spherical Bessel solution for a two-layer ball.

use hsfwi::boundary::{lm_index, BoundaryField, RadialSingleLayer, TraceMethod, VoxelSingleLayer};
use hsfwi::grid::Grid3;
use hsfwi::helmholtz::{GmresOptions, RadialLayers};
use hsfwi::model::{wavespeed_from_model, DomainPartition, ModelVector};
use num_complex::Complex64;
use std::time::Instant;

fn main() -> hsfwi::Result<()> {
    let layers = RadialLayers::new(vec![0.5], vec![1.5])?;
    let l_max = 4;
    let mut w = BoundaryField::zeros(l_max, -0.5);
    for (l, m) in [(0usize, 0i64), (1, 0), (2, 1), (3, -2), (4, 4)] {
        w.coeffs[lm_index(l, m)] = Complex64::new(1.0, 0.3 * l as f64);
    }
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(48);
    let grid = Grid3::new(n, 1.5)?;
    let labels = DomainPartition::radial(vec![0.5], 0.1)?.labels_on(&grid)?;
    let c = wavespeed_from_model(&ModelVector::new(vec![1.5])?, &labels)?;
    for lambda in [1.0, 2.0, 4.0] {
        let t = Instant::now();
        let voxel = VoxelSingleLayer::new(lambda, &c, l_max, TraceMethod::Representation, GmresOptions::default())?
            .apply(&w)?;
        let exact = RadialSingleLayer::new(lambda, &layers, l_max)?.apply(&w)?;
        let num: f64 = voxel.coeffs.iter().zip(&exact.coeffs).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = exact.coeffs.iter().map(|b| b.norm_sqr()).sum();
        println!("λ = {lambda}: relative trace error {:.3e} ({:.2}s)", (num / den).sqrt(), t.elapsed().as_secs_f64());
    }
    Ok(())
}
