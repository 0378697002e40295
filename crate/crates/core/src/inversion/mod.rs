//! Fréchet derivative, gradient, stability constants and projected
//! Landweber iteration for the boundary data map `x ↦ F(x)`.

mod constants;
mod landweber;
mod radial;
mod voxel;

pub use constants::{estimate_constants, ConstantsEstimate};
pub use landweber::{landweber_run, write_iteration_csv, LandweberOptions, LandweberRun, LandweberState, StepSize};
pub use radial::RadialForward;
pub use voxel::VoxelForward;

use crate::boundary::DataOperator;
use crate::error::{Error, Result};
use crate::model::{perturbation_size, ModelVector};
use crate::timedomain::{DataSeries, FrequencyGrid};
use rayon::prelude::*;

/// Forward map from coefficient vectors to frequency-sampled data
/// operators `τ(R_c(λ) - R_1(λ))`.
pub trait ForwardModel: Sync {
    fn n_params(&self) -> usize;

    fn l_max(&self) -> usize;

    fn frequency_grid(&self) -> &FrequencyGrid;

    /// Data operator at one frequency.
    fn data_block(&self, x: &ModelVector, lambda: f64) -> Result<DataOperator>;

    /// Directional derivative of [`Self::data_block`] along `h`.
    fn frechet_block(&self, x: &ModelVector, h: &[f64], lambda: f64) -> Result<DataOperator>;

    /// `DF(x)^* y` by correlating forward fields with back-propagated
    /// residual fields.
    fn adjoint_state_gradient(&self, x: &ModelVector, y: &DataSeries) -> Result<Vec<f64>>;

    fn check_params(&self, x: &ModelVector) -> Result<()> {
        if x.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn forward(&self, x: &ModelVector) -> Result<DataSeries> {
        self.check_params(x)?;
        let grid = self.frequency_grid();
        let ops = grid
            .nodes
            .par_iter()
            .map(|l| self.data_block(x, *l))
            .collect::<Result<Vec<_>>>()?;
        DataSeries::new(grid.clone(), ops)
    }

    fn frechet_apply(&self, x: &ModelVector, h: &[f64]) -> Result<DataSeries> {
        self.check_params(x)?;
        if h.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: h.len(),
            });
        }
        let grid = self.frequency_grid();
        if h.iter().all(|v| *v == 0.0) {
            return Ok(DataSeries::zeros(grid, self.l_max()));
        }
        let ops = grid
            .nodes
            .par_iter()
            .map(|l| self.frechet_block(x, h, *l))
            .collect::<Result<Vec<_>>>()?;
        DataSeries::new(grid.clone(), ops)
    }

    /// Columns `DF(x) e_j`.
    fn jacobian(&self, x: &ModelVector) -> Result<Vec<DataSeries>> {
        (0..self.n_params())
            .map(|j| {
                let mut e = vec![0.0; self.n_params()];
                e[j] = 1.0;
                self.frechet_apply(x, &e)
            })
            .collect()
    }
}

/// Adjoint-state gradient `DF(x)^* residual`.
pub fn gradient<M: ForwardModel + ?Sized>(model: &M, x: &ModelVector, residual: &DataSeries) -> Result<Vec<f64>> {
    model.check_params(x)?;
    if residual.norm_sqr() == 0.0 {
        return Ok(vec![0.0; model.n_params()]);
    }
    model.adjoint_state_gradient(x, residual)
}

/// `DF(x)^* residual` from the assembled Jacobian: `⟨DF e_j, residual⟩_Y`.
pub fn gradient_assembled<M: ForwardModel + ?Sized>(model: &M, x: &ModelVector, residual: &DataSeries) -> Result<Vec<f64>> {
    model.jacobian(x)?.iter().map(|col| col.inner(residual)).collect()
}

/// Gram matrix `⟨DF e_i, DF e_j⟩_Y` of Jacobian columns.
pub fn gram(cols: &[DataSeries]) -> Result<nalgebra::DMatrix<f64>> {
    let n = cols.len();
    let mut g = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = cols[i].inner(&cols[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// `½ ||F(x) - data||_Y^2`.
pub fn half_misfit<M: ForwardModel + ?Sized>(model: &M, x: &ModelVector, data: &DataSeries) -> Result<f64> {
    Ok(0.5 * model.forward(x)?.sub(data)?.norm_sqr())
}

/// Remainder norms `||F(x + sh) - F(x) - s DF(x)h||_Y` and their log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderFit {
    pub scales: Vec<f64>,
    pub remainders: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Probes the quadratic remainder of the linearization. Every perturbed
/// model must satisfy `||c'^2 - c^2||_∞ <= 1/(2 a_c)`.
pub fn remainder_probe<M: ForwardModel + ?Sized>(
    model: &M,
    x: &ModelVector,
    h: &[f64],
    scales: &[f64],
    a_c: f64,
) -> Result<RemainderFit> {
    let shifted = |s: f64| -> Result<ModelVector> {
        ModelVector::new(x.as_slice().iter().zip(h).map(|(a, b)| a + s * b).collect())
    };
    for &s in scales {
        let size = perturbation_size(x, &shifted(s)?)?;
        if size > 0.5 / a_c {
            return Err(Error::ScaleTooLarge(format!(
                "scale {s}: ||c'^2 - c^2|| = {size:.3e} exceeds 1/(2 a_c) = {:.3e}",
                0.5 / a_c
            )));
        }
    }
    let f0 = model.forward(x)?;
    let df = model.frechet_apply(x, h)?;
    let mut remainders = Vec::with_capacity(scales.len());
    for &s in scales {
        let mut r = model.forward(&shifted(s)?)?.sub(&f0)?;
        r.axpy(-s, &df)?;
        remainders.push(r.norm_sqr().sqrt());
    }
    Ok(RemainderFit {
        slope: loglog_slope(scales, &remainders),
        scales: scales.to_vec(),
        remainders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1e-2, 5e-3, 2.5e-3];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
