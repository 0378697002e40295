//! Forward model on a labeled voxel grid.

use super::ForwardModel;
use crate::boundary::{DataOperator, TraceMethod, VoxelSingleLayer};
use crate::error::Result;
use crate::helmholtz::GmresOptions;
use crate::grid::Grid3;
use crate::model::{DomainPartition, model_projection, wavespeed_from_model, LabelGrid, ModelVector};
use crate::timedomain::{DataSeries, FrequencyGrid};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct VoxelForward {
    pub labels: LabelGrid,
    pub grid: FrequencyGrid,
    pub l_max: usize,
    pub solver: GmresOptions,
}

impl VoxelForward {
    pub fn new(partition: &DomainPartition, grid: Grid3, frequencies: FrequencyGrid, l_max: usize, solver: GmresOptions) -> Result<Self> {
        Ok(Self {
            labels: partition.labels_on(&grid)?,
            grid: frequencies,
            l_max,
            solver,
        })
    }

    fn layer(&self, x: &ModelVector, lambda: f64) -> Result<VoxelSingleLayer> {
        let c = wavespeed_from_model(x, &self.labels)?;
        VoxelSingleLayer::new(lambda, &c, self.l_max, TraceMethod::Representation, self.solver)
    }

    /// `d(λ^2 c^{-2})` per voxel along `h`.
    fn contrast_direction(&self, x: &ModelVector, h: &[f64], lambda: f64) -> Vec<f64> {
        let b = x.as_slice();
        self.labels
            .labels
            .iter()
            .map(|&lab| {
                if lab == 0 {
                    0.0
                } else {
                    let j = lab as usize - 1;
                    -2.0 * lambda * lambda * h[j] / b[j].powi(3)
                }
            })
            .collect()
    }
}

impl ForwardModel for VoxelForward {
    fn n_params(&self) -> usize {
        self.labels.n_regions
    }

    fn l_max(&self) -> usize {
        self.l_max
    }

    fn frequency_grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    fn data_block(&self, x: &ModelVector, lambda: f64) -> Result<DataOperator> {
        self.layer(x, lambda)?.data_operator()
    }

    fn frechet_block(&self, x: &ModelVector, h: &[f64], lambda: f64) -> Result<DataOperator> {
        let dq = self.contrast_direction(x, h, lambda);
        self.layer(x, lambda)?.frechet_operator(&dq)
    }

    fn adjoint_state_gradient(&self, x: &ModelVector, y: &DataSeries) -> Result<Vec<f64>> {
        let c = wavespeed_from_model(x, &self.labels)?;
        let scale = 1.0 / (4.0 * PI * self.grid.lambda0);
        let mut field = vec![0.0; c.values.len()];
        for ((&lambda, &w), op) in self.grid.nodes.iter().zip(&self.grid.weights).zip(&y.ops) {
            let corr = self.layer(x, lambda)?.adjoint_correlation(op)?;
            for ((f, k), cv) in field.iter_mut().zip(&corr).zip(&c.values) {
                *f += w * scale * k * (-2.0 * lambda * lambda / cv.powi(3));
            }
        }
        model_projection(&field, &self.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::{gradient, gradient_assembled};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> VoxelForward {
        let part = DomainPartition::radial(vec![0.5, 0.8], 0.05).unwrap();
        let solver = GmresOptions {
            tol: 1e-12,
            ..Default::default()
        };
        VoxelForward::new(&part, Grid3::new(12, 1.1).unwrap(), FrequencyGrid::gauss(1.0, 2).unwrap(), 2, solver).unwrap()
    }

    #[test]
    fn adjoint_state_matches_assembled_gradient() {
        let m = small();
        let x = ModelVector::new(vec![1.3, 1.1]).unwrap();
        let xt = ModelVector::new(vec![1.2, 1.15]).unwrap();
        let res = m.forward(&x).unwrap().sub(&m.forward(&xt).unwrap()).unwrap();
        let a = gradient(&m, &x, &res).unwrap();
        let b = gradient_assembled(&m, &x, &res).unwrap();
        let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8 * scale, "{a:?} {b:?}");
        }
    }

    #[test]
    fn frechet_matches_central_difference() {
        let m = small();
        let x = ModelVector::new(vec![1.3, 1.1]).unwrap();
        let h = [0.4, -1.0];
        let s = 1e-4;
        let shift = |t: f64| ModelVector::new(vec![1.3 + t * h[0], 1.1 + t * h[1]]).unwrap();
        let mut fd = m.forward(&shift(s)).unwrap().sub(&m.forward(&shift(-s)).unwrap()).unwrap();
        fd.scale(0.5 / s);
        let df = m.frechet_apply(&x, &h).unwrap();
        let rel = fd.sub(&df).unwrap().norm_sqr().sqrt() / df.norm_sqr().sqrt();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn random_adjoint_pairs() {
        let m = small();
        let x = ModelVector::new(vec![1.25, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let h: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut y = DataSeries::zeros(&m.grid, 2);
            for op in y.ops.iter_mut() {
                op.matrix.iter_mut().for_each(|v| *v = num_complex::Complex64::new(rng.gen(), rng.gen()));
            }
            let lhs = m.frechet_apply(&x, &h).unwrap().inner(&y).unwrap();
            let g = gradient(&m, &x, &y).unwrap();
            let rhs: f64 = g.iter().zip(&h).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(rhs.abs()), "{lhs} {rhs}");
        }
    }
}
