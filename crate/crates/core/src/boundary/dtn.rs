//! Interior Dirichlet-to-Neumann maps and the single-layer identity
//! `Λ_c - Λ_1 = S_c^{-1} - S_1^{-1}` for layered media.

use super::sobolev_weight;
use crate::error::Result;
use crate::helmholtz::{solve_radial, RadialLayers, RadialSource};
use num_complex::Complex64;

/// Interior DtN symbol `u'(1)` for `u(1) = 1`, one entry per degree.
pub fn dtn_map(lambda: f64, layers: &RadialLayers, l_max: usize) -> Result<Vec<Complex64>> {
    (0..=l_max)
        .map(|l| solve_radial(lambda, layers, l, RadialSource::Dirichlet).map(|s| s.inner_derivative))
        .collect()
}

fn single_layer_symbols(lambda: f64, layers: &RadialLayers, l_max: usize) -> Result<Vec<Complex64>> {
    (0..=l_max)
        .map(|l| solve_radial(lambda, layers, l, RadialSource::SurfaceLayer).map(|s| s.trace))
        .collect()
}

/// Residuals of the identity per degree and both sides of the two-sided
/// stability bounds between two media.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnIdentityReport {
    pub lambda: f64,
    /// `|(Λ_c - Λ_1) - (S_c^{-1} - S_1^{-1})|` divided by `|Λ_c| + |S_c^{-1}|`.
    pub block_residuals: Vec<f64>,
    /// `||Λ_c - Λ_ref||` as a map `H^{1/2} -> H^{-1/2}`.
    pub dtn_difference: f64,
    /// `||S_c^{-1}|| ||S_ref^{-1}|| ||S_c - S_ref||`.
    pub dtn_bound: f64,
    /// `||S_c - S_ref||` as a map `H^{-1/2} -> H^{1/2}`.
    pub layer_difference: f64,
    /// `||S_c|| ||S_ref|| ||Λ_c - Λ_ref||`.
    pub layer_bound: f64,
}

impl DtnIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.block_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn bounds_hold(&self) -> bool {
        self.dtn_difference <= self.dtn_bound * (1.0 + 1e-12)
            && self.layer_difference <= self.layer_bound * (1.0 + 1e-12)
    }
}

fn sup<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    (0..n).map(f).fold(0.0, f64::max)
}

/// Checks the identity for `layers` against the free medium and the
/// stability bounds between `layers` and `reference`.
pub fn verify_layer_dtn_identity(
    lambda: f64,
    layers: &RadialLayers,
    reference: &RadialLayers,
    l_max: usize,
) -> Result<DtnIdentityReport> {
    let free = RadialLayers::homogeneous();
    let lc = dtn_map(lambda, layers, l_max)?;
    let l1 = dtn_map(lambda, &free, l_max)?;
    let lr = dtn_map(lambda, reference, l_max)?;
    let sc = single_layer_symbols(lambda, layers, l_max)?;
    let s1 = single_layer_symbols(lambda, &free, l_max)?;
    let sr = single_layer_symbols(lambda, reference, l_max)?;
    let block_residuals = (0..=l_max)
        .map(|l| {
            let lhs = lc[l] - l1[l];
            let rhs = sc[l].inv() - s1[l].inv();
            (lhs - rhs).norm() / (lc[l].norm() + sc[l].inv().norm())
        })
        .collect();
    let n = l_max + 1;
    // orthonormal coordinates: S scales by (1+l(l+1))^{1/2}, Λ by its inverse
    let w = |l: usize| sobolev_weight(l, 1.0);
    let dtn_difference = sup(n, |l| (lc[l] - lr[l]).norm() / w(l));
    let layer_difference = sup(n, |l| (sc[l] - sr[l]).norm() * w(l));
    let inv_c = sup(n, |l| sc[l].inv().norm() / w(l));
    let inv_r = sup(n, |l| sr[l].inv().norm() / w(l));
    let norm_c = sup(n, |l| sc[l].norm() * w(l));
    let norm_r = sup(n, |l| sr[l].norm() * w(l));
    Ok(DtnIdentityReport {
        lambda,
        block_residuals,
        dtn_difference,
        dtn_bound: inv_c * inv_r * layer_difference,
        layer_difference,
        layer_bound: norm_c * norm_r * dtn_difference,
    })
}
