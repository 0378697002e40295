//! Projected Landweber iteration `x <- P(x - mu DF(x)^*(F(x) - F(x†)))`.

use super::{gradient, gradient_assembled, ConstantsEstimate, ForwardModel};
use crate::error::{Error, Result};
use crate::model::{ModelBall, ModelVector};
use crate::timedomain::DataSeries;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `0.9 mu_max` from the constants estimate.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct LandweberOptions {
    pub step: StepSize,
    pub max_iterations: usize,
    /// Stop once `||x_m - x†||` drops below this.
    pub error_floor: f64,
    pub ball: ModelBall,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandweberState {
    pub m: usize,
    pub x: Vec<f64>,
    /// `||F(x_m) - F(x†)||_Y^2`.
    pub misfit: f64,
    pub gradient: Vec<f64>,
    pub grad_norm: f64,
    pub error: f64,
    /// `R rho^{m/2}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandweberRun {
    pub mu: f64,
    pub rho: f64,
    /// Initial error `||x_0 - x†||`, the prefactor of the rate bound.
    pub r: f64,
    pub states: Vec<LandweberState>,
}

impl LandweberRun {
    pub fn final_state(&self) -> &LandweberState {
        self.states.last().expect("at least the initial state")
    }

    /// Least-squares log-linear rate of the error curve.
    pub fn fitted_rate(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .states
            .iter()
            .filter(|s| s.error > 0.0)
            .map(|s| (s.m as f64, s.error.ln()))
            .collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs at most `max_iterations` steps from `x0` against exact data `F(x_true)`.
pub fn landweber_run<M: ForwardModel + ?Sized>(
    model: &M,
    x0: &ModelVector,
    x_true: &ModelVector,
    constants: &ConstantsEstimate,
    opts: &LandweberOptions,
) -> Result<LandweberRun> {
    model.check_params(x0)?;
    model.check_params(x_true)?;
    let mu = match opts.step {
        StepSize::Auto => constants.auto_step(),
        StepSize::Fixed(mu) => mu,
    };
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {mu}")));
    }
    let rho = constants.rate_base(mu);
    let data = model.forward(x_true)?;
    let r = x0.distance(x_true);
    let assembled = model.n_params() <= 32;
    let grad = |x: &ModelVector, res: &DataSeries| {
        if assembled {
            gradient_assembled(model, x, res)
        } else {
            gradient(model, x, res)
        }
    };
    let mut states = Vec::new();
    let mut x = x0.clone();
    let mut min_error = f64::INFINITY;
    for m in 0..=opts.max_iterations {
        let res = model.forward(&x)?.sub(&data)?;
        let misfit = res.norm_sqr();
        let g = grad(&x, &res)?;
        let error = x.distance(x_true);
        let state = LandweberState {
            m,
            x: x.as_slice().to_vec(),
            misfit,
            grad_norm: norm(&g),
            gradient: g,
            error,
            bound: r * rho.max(0.0).powf(m as f64 / 2.0),
        };
        log::debug!("landweber m={m} misfit={misfit:.3e} error={error:.3e}");
        min_error = min_error.min(error);
        if error > 2.0 * min_error && min_error > 0.0 {
            return Err(Error::StepSizeTooLarge {
                iteration: m,
                min_error,
                error,
            });
        }
        let done = error < opts.error_floor || m == opts.max_iterations;
        let step: Vec<f64> = x.as_slice().iter().zip(&state.gradient).map(|(a, b)| a - mu * b).collect();
        states.push(state);
        if done {
            break;
        }
        x = opts.ball.project(&step);
    }
    Ok(LandweberRun { mu, rho, r, states })
}

/// Columns `m, misfit, grad_norm, err_to_truth, bound_R_rho_k2`.
pub fn write_iteration_csv<W: Write>(mut w: W, run: &LandweberRun) -> std::io::Result<()> {
    writeln!(w, "m,misfit,grad_norm,err_to_truth,bound_R_rho_k2")?;
    for s in &run.states {
        writeln!(w, "{},{:.12e},{:.12e},{:.12e},{:.12e}", s.m, s.misfit, s.grad_norm, s.error, s.bound)?;
    }
    Ok(())
}
