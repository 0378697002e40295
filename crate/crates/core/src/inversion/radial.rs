//! Semi-analytic forward model for layered radial media.

use super::ForwardModel;
use crate::boundary::{data_operator, lm_of, sobolev_weight, DataOperator, Medium};
use crate::error::Result;
use crate::helmholtz::{solve_radial, RadialLayers, RadialSource};
use crate::model::{DomainPartition, ModelVector};
use crate::special::gauss_legendre_on;
use crate::timedomain::{DataSeries, FrequencyGrid};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Layers `D_j = {r_{j-1} < |x| < r_j}` with unknown speeds `b_j`.
#[derive(Debug, Clone)]
pub struct RadialForward {
    pub radii: Vec<f64>,
    pub grid: FrequencyGrid,
    pub l_max: usize,
    /// Gauss nodes per layer for the sensitivity integrals.
    pub layer_nodes: usize,
}

impl RadialForward {
    pub fn new(partition: &DomainPartition, grid: FrequencyGrid, l_max: usize) -> Result<Self> {
        let radii = partition
            .radii()
            .ok_or_else(|| crate::Error::InvalidPartition("radial forward model needs a radial partition".into()))?
            .to_vec();
        Ok(Self {
            radii,
            grid,
            l_max,
            layer_nodes: 48,
        })
    }

    pub fn layers(&self, x: &ModelVector) -> Result<RadialLayers> {
        RadialLayers::new(self.radii.clone(), x.as_slice().to_vec())
    }

    fn bounds(&self, j: usize) -> (f64, f64) {
        (if j == 0 { 0.0 } else { self.radii[j - 1] }, self.radii[j])
    }
}

impl ForwardModel for RadialForward {
    fn n_params(&self) -> usize {
        self.radii.len()
    }

    fn l_max(&self) -> usize {
        self.l_max
    }

    fn frequency_grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    fn data_block(&self, x: &ModelVector, lambda: f64) -> Result<DataOperator> {
        data_operator(lambda, &Medium::Radial(self.layers(x)?), self.l_max)
    }

    /// `δs_l = λ^2 ∫ δ(c^{-2}) u_l^2 r^2 dr` with `δ(c^{-2}) = -2 h_j / b_j^3` on `D_j`.
    fn frechet_block(&self, x: &ModelVector, h: &[f64], lambda: f64) -> Result<DataOperator> {
        let layers = self.layers(x)?;
        let b = x.as_slice();
        let mut d = vec![Complex64::default(); self.l_max + 1];
        for (l, dl) in d.iter_mut().enumerate() {
            let sol = solve_radial(lambda, &layers, l, RadialSource::SurfaceLayer)?;
            for (j, hj) in h.iter().enumerate() {
                if *hj == 0.0 {
                    continue;
                }
                let (r0, r1) = self.bounds(j);
                *dl += sol.integral_u_squared(r0, r1, self.layer_nodes) * (-2.0 * lambda * lambda * hj / b[j].powi(3));
            }
        }
        Ok(DataOperator::from_radial(lambda, self.l_max, &d))
    }

    /// Correlates `u_l` with the back-propagated residual `conj(u_l) Y_l` on a
    /// radial mesh, weights by `-2λ^2/c^3` and integrates over each layer.
    fn adjoint_state_gradient(&self, x: &ModelVector, y: &DataSeries) -> Result<Vec<f64>> {
        let layers = self.layers(x)?;
        let n = self.n_params();
        // radial mesh: composite Gauss per layer, distinct from the forward rule
        let mesh: Vec<(usize, Vec<f64>, Vec<f64>)> = (0..n)
            .map(|j| {
                let (r0, r1) = self.bounds(j);
                let (r, w) = gauss_legendre_on(self.layer_nodes + 16, r0, r1);
                (j, r, w)
            })
            .collect();
        let scale = 1.0 / (4.0 * PI * self.grid.lambda0);
        let per_node: Vec<Vec<f64>> = self
            .grid
            .nodes
            .par_iter()
            .zip(&self.grid.weights)
            .zip(&y.ops)
            .map(|((&lambda, &wq), op)| -> Result<Vec<f64>> {
                // residual projected on each degree: W_l Σ_m Y[lm, lm]
                let mut yl = vec![Complex64::default(); self.l_max + 1];
                for k in 0..op.matrix.nrows() {
                    let l = lm_of(k).0;
                    yl[l] += op.matrix[(k, k)] * sobolev_weight(l, 1.0);
                }
                let sols = (0..=self.l_max)
                    .map(|l| solve_radial(lambda, &layers, l, RadialSource::SurfaceLayer))
                    .collect::<Result<Vec<_>>>()?;
                let mut g = vec![0.0; n];
                for (j, r, w) in &mesh {
                    let c = layers.speed_at(0.5 * (r[0] + r[r.len() - 1]));
                    let weight = -2.0 * lambda * lambda / c.powi(3);
                    let mut acc = 0.0;
                    for (ri, wi) in r.iter().zip(w) {
                        let mut corr = Complex64::default();
                        for (l, sol) in sols.iter().enumerate() {
                            let u = sol.eval(*ri).0;
                            // forward field u times adjoint field conj(u) Y_l
                            corr += (u * u).conj() * yl[l];
                        }
                        acc += wi * ri * ri * weight * corr.re;
                    }
                    g[*j] = acc * wq * scale;
                }
                Ok(g)
            })
            .collect::<Result<_>>()?;
        let mut g = vec![0.0; n];
        for p in per_node {
            g.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::*;
    use crate::model::ModelBall;

    fn two_layer(lambda0: f64) -> RadialForward {
        let part = DomainPartition::radial(vec![0.4, 0.8], 0.05).unwrap();
        RadialForward::new(&part, FrequencyGrid::new(lambda0).unwrap(), 6).unwrap()
    }

    fn x(b: &[f64]) -> ModelVector {
        ModelVector::new(b.to_vec()).unwrap()
    }

    #[test]
    fn zero_direction_and_linearity() {
        let m = two_layer(1.0);
        let p = x(&[1.3, 1.1]);
        assert_eq!(m.frechet_apply(&p, &[0.0, 0.0]).unwrap().norm_sqr(), 0.0);
        let a = m.frechet_apply(&p, &[1.0, 0.0]).unwrap();
        let b = m.frechet_apply(&p, &[0.0, 1.0]).unwrap();
        let mut ab = m.frechet_apply(&p, &[2.0, -3.0]).unwrap();
        ab.axpy(-2.0, &a).unwrap();
        ab.axpy(3.0, &b).unwrap();
        assert!(ab.norm_sqr().sqrt() < 1e-10 * a.norm_sqr().sqrt());
    }

    #[test]
    fn central_difference_error_is_quadratic() {
        let m = two_layer(2.0);
        let p = x(&[1.3, 1.1]);
        let h = [0.5, -1.0];
        let df = m.frechet_apply(&p, &h).unwrap();
        let scales = [1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = scales
            .iter()
            .map(|&s| {
                let at = |t: f64| x(&[1.3 + t * h[0], 1.1 + t * h[1]]);
                let mut fd = m.forward(&at(s)).unwrap().sub(&m.forward(&at(-s)).unwrap()).unwrap();
                fd.scale(0.5 / s);
                fd.sub(&df).unwrap().norm_sqr().sqrt()
            })
            .collect();
        let slope = loglog_slope(&scales, &errs);
        assert!((slope - 2.0).abs() < 0.1, "{slope} {errs:?}");
    }

    #[test]
    fn remainder_is_quadratic() {
        let m = two_layer(2.0);
        let fit = remainder_probe(&m, &x(&[1.3, 1.1]), &[1.0, -0.6], &[2e-2, 1e-2, 5e-3], 1.0).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.1, "{fit:?}");
        let err = remainder_probe(&m, &x(&[1.3, 1.1]), &[1.0, 0.0], &[1.0], 1.0).unwrap_err();
        assert!(matches!(err, crate::Error::ScaleTooLarge(_)));
    }

    #[test]
    fn gradient_routes_agree() {
        let m = two_layer(2.0);
        let p = x(&[1.3, 1.1]);
        let res = m.forward(&p).unwrap().sub(&m.forward(&x(&[1.2, 1.15])).unwrap()).unwrap();
        let a = gradient(&m, &p, &res).unwrap();
        let b = gradient_assembled(&m, &p, &res).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8 * v.abs(), "{a:?} {b:?}");
        }
        assert_eq!(gradient(&m, &p, &DataSeries::zeros(&m.grid, 6)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_misfit_differences() {
        let m = two_layer(1.0);
        let p = x(&[1.3, 1.0]);
        let data = m.forward(&x(&[1.2, 1.15])).unwrap();
        let res = m.forward(&p).unwrap().sub(&data).unwrap();
        let g = gradient(&m, &p, &res).unwrap();
        let central = |j: usize, s: f64| {
            let mut up = p.as_slice().to_vec();
            let mut dn = up.clone();
            up[j] += s;
            dn[j] -= s;
            (half_misfit(&m, &x(&up), &data).unwrap() - half_misfit(&m, &x(&dn), &data).unwrap()) / (2.0 * s)
        };
        for j in 0..2 {
            // one Richardson step on top of the 1e-3 central difference
            let fd = (4.0 * central(j, 5e-4) - central(j, 1e-3)) / 3.0;
            assert!((fd - g[j]).abs() < 1e-5 * g[j].abs(), "j={j} {fd} {}", g[j]);
        }
    }

    #[test]
    fn landweber_fixed_point_and_divergence() {
        let m = two_layer(1.0);
        let p = x(&[1.3, 1.1]);
        let ball = ModelBall::new(p.clone(), 0.1, 0.2).unwrap();
        let c = ConstantsEstimate::from_parts(1.0, 1.0, 1.0, 1.0);
        let opts = LandweberOptions {
            step: StepSize::Auto,
            max_iterations: 3,
            error_floor: 0.0,
            ball: ball.clone(),
        };
        let run = landweber_run(&m, &p, &p, &c, &opts).unwrap();
        assert!(run.states.iter().all(|s| s.x == p.as_slice() && s.misfit == 0.0));
        let opts = LandweberOptions {
            step: StepSize::Fixed(1e5),
            max_iterations: 50,
            error_floor: 0.0,
            ball: ModelBall::new(p.clone(), 10.0, 0.2).unwrap(),
        };
        let err = landweber_run(&m, &x(&[1.32, 1.1]), &p, &c, &opts).unwrap_err();
        assert!(matches!(err, crate::Error::StepSizeTooLarge { .. }), "{err}");
    }

    #[test]
    fn single_point_ball_is_degenerate() {
        let m = two_layer(1.0);
        let ball = ModelBall::new(x(&[1.3, 1.1]), 0.0, 0.2).unwrap();
        let c = estimate_constants(&m, &ball, 3, 0).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.l, 0.0);
    }
}
