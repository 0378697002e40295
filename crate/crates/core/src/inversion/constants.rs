//! Empirical stability and Lipschitz constants over a model ball.

use super::{gram, ForwardModel};
use crate::error::{Error, Result};
use crate::model::{ModelBall, ModelVector};
use crate::timedomain::DataSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sampled bounds `L̂ >= ||DF(x)||`, `L >= ||DF(x) - DF(x')|| / ||x - x'||`
/// and the stability constant `C_F` with
/// `||x - x'|| / √2 <= C_F ||F(x) - F(x')||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEstimate {
    #[serde(rename = "Lhat")]
    pub l_hat: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "C_F")]
    pub c_f: f64,
    pub mu_max: f64,
    #[serde(rename = "R_ball")]
    pub r_ball: f64,
    /// Rate base at the automatic step `0.9 mu_max`.
    pub rho: f64,
    pub lambda0: f64,
    /// Pairwise part of `C_F` before the local singular-value bound.
    pub c_f_pairs: f64,
    /// Set when fewer than two distinct samples were available.
    pub degenerate: bool,
}

impl ConstantsEstimate {
    pub fn from_parts(l_hat: f64, l: f64, c_f: f64, lambda0: f64) -> Self {
        let mu_max = (0.5 / (l_hat * l_hat)).min(4.0 * c_f * c_f);
        let r_ball = if l > 0.0 {
            1.0 / (2.0 * c_f * (l * l_hat).sqrt())
        } else {
            f64::INFINITY
        };
        let mut out = Self {
            l_hat,
            l,
            c_f,
            mu_max,
            r_ball,
            rho: 0.0,
            lambda0,
            c_f_pairs: c_f,
            degenerate: l == 0.0,
        };
        out.rho = out.rate_base(out.auto_step());
        out
    }

    pub fn auto_step(&self) -> f64 {
        0.9 * self.mu_max
    }

    /// `1 - mu / (4 C_F^2)`.
    pub fn rate_base(&self, mu: f64) -> f64 {
        1.0 - mu / (4.0 * self.c_f * self.c_f)
    }
}

fn sample_ball(ball: &ModelBall, rng: &mut ChaCha8Rng) -> ModelVector {
    let n = ball.center.len();
    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let r = ball.radius * rng.gen::<f64>().powf(1.0 / n as f64);
    let x: Vec<f64> = ball.center.as_slice().iter().zip(&dir).map(|(c, d)| c + r * d / norm).collect();
    ball.project(&x)
}

fn column_difference(a: &[DataSeries], b: &[DataSeries]) -> Result<Vec<DataSeries>> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

fn max_eigen(g: &nalgebra::DMatrix<f64>) -> f64 {
    g.clone().symmetric_eigenvalues().max().max(0.0)
}

/// Samples the ball center plus `samples - 1` random points.
pub fn estimate_constants<M: ForwardModel + ?Sized>(
    model: &M,
    ball: &ModelBall,
    samples: usize,
    seed: u64,
) -> Result<ConstantsEstimate> {
    if samples < 2 {
        return Err(Error::Config("estimate_constants needs at least two samples".into()));
    }
    model.check_params(&ball.center)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![ball.center.clone()];
    while points.len() < samples {
        points.push(sample_ball(ball, &mut rng));
    }
    let mut data = Vec::with_capacity(points.len());
    let mut jacobians = Vec::with_capacity(points.len());
    for p in &points {
        data.push(model.forward(p)?);
        jacobians.push(model.jacobian(p)?);
    }
    let mut l_hat: f64 = 0.0;
    let mut c_f_local: f64 = 0.0;
    for j in &jacobians {
        let eig = gram(j)?.symmetric_eigenvalues();
        l_hat = l_hat.max(eig.max().max(0.0).sqrt());
        let smin = eig.min();
        if smin > 0.0 {
            c_f_local = c_f_local.max(1.0 / (2.0 * smin).sqrt());
        }
    }
    let mut l: f64 = 0.0;
    let mut c_f_pairs: f64 = 0.0;
    let mut pairs = 0;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let dx = points[a].distance(&points[b]);
            if dx < 1e-12 {
                log::debug!("skipping coincident sample pair ({a}, {b})");
                continue;
            }
            pairs += 1;
            let dj = column_difference(&jacobians[a], &jacobians[b])?;
            l = l.max(max_eigen(&gram(&dj)?).sqrt() / dx);
            let df = data[a].sub(&data[b])?.norm_sqr().sqrt();
            if df > 0.0 {
                c_f_pairs = c_f_pairs.max(dx / (std::f64::consts::SQRT_2 * df));
            }
        }
    }
    let c_f = c_f_pairs.max(c_f_local);
    let mut out = ConstantsEstimate::from_parts(l_hat, l, c_f, model.frequency_grid().lambda0);
    out.c_f_pairs = c_f_pairs;
    out.degenerate = pairs == 0 || l == 0.0;
    if out.degenerate {
        log::warn!("constants estimate is degenerate: no distinct sample pairs");
    }
    Ok(out)
}
