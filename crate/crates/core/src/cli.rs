//! Scenario commands behind the `hsfwi` binary.
//!
//! Every CSV starts with a `# hsfwi <version> config-sha256 <hash>` line and
//! every JSON report carries the same data under `"meta"`.

use crate::boundary::lm_index;
use crate::config::{Backend, Scenario};
use crate::error::{Error, Result};
use crate::helmholtz::{estimate_resolvent_norm, radial_resolvent_norm, Cutoff, NormOptions, RadialLayers};
use crate::inversion::{
    estimate_constants, gradient, landweber_run, loglog_slope, remainder_probe, write_iteration_csv, LandweberOptions,
};
use crate::model::wavespeed_from_model;
use crate::timedomain::{
    hs_misfit_frequency, shift_energies, synthesize_trace, write_trace_csv, BandSource, DataSeries, MisfitRecord,
    TimeWindow, TraceKind,
};
use crate::weights::{build_psi, lowered_control, solve_u_ode, verify_weight_inequalities, RadialPotential};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward,
    Invert,
    Weights,
    Probe,
}

/// Output directory that stamps every file with version and config hash.
pub struct OutputDir {
    root: PathBuf,
    hash: String,
}

impl OutputDir {
    pub fn create(root: &Path, hash: &str) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            hash: hash.to_string(),
        })
    }

    pub fn meta(&self) -> Value {
        json!({ "version": VERSION, "config_sha256": self.hash })
    }

    /// Writes a CSV body after the header comment line.
    pub fn csv<F>(&self, name: &str, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.root.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "# hsfwi {VERSION} config-sha256 {}", self.hash)?;
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }

    /// Writes `{"meta": .., ..fields}` as pretty JSON.
    pub fn json(&self, name: &str, mut value: Value) -> Result<PathBuf> {
        if let Value::Object(map) = &mut value {
            map.insert("meta".into(), self.meta());
        }
        let path = self.root.join(name);
        let text = serde_json::to_string_pretty(&value).expect("serializable report");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Exit code for an error: 2 for bad input, 3 for numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else {
        3
    }
}

/// JSON error report written next to the outputs.
pub fn error_report(err: &Error) -> Value {
    let kind = format!("{err:?}");
    let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
    json!({
        "error": kind,
        "message": err.to_string(),
        "exit_code": exit_code(err),
        "meta": { "version": VERSION },
    })
}

pub fn run(cmd: Command, scenario: &Scenario, out: &Path) -> Result<Vec<PathBuf>> {
    let dir = OutputDir::create(out, &scenario.hash)?;
    log::info!("running {cmd:?} into {}", out.display());
    match cmd {
        Command::Forward => cmd_forward(scenario, &dir),
        Command::Invert => cmd_invert(scenario, &dir),
        Command::Weights => cmd_weights(scenario, &dir),
        Command::Probe => cmd_probe(scenario, &dir),
    }
}

fn window_times(s: &Scenario, window: &TimeWindow) -> Vec<f64> {
    let n = s.data.trace_samples.max(2);
    (0..n)
        .map(|k| window.t0 - window.half_width + window.length() * k as f64 / (n - 1) as f64)
        .collect()
}

/// Data operators for the true model, the difference traces of a
/// monopole band source, and the misfit of the initial model.
pub fn cmd_forward(s: &Scenario, dir: &OutputDir) -> Result<Vec<PathBuf>> {
    let model = s.forward_model()?;
    let truth = s.truth()?;
    let data = model.forward(&truth)?;
    let mut files = vec![dir.csv("data.csv", |w| {
        writeln!(w, "lambda,l,m,lp,mp,re,im")?;
        for op in &data.ops {
            op.write_csv(&mut *w, false)?;
        }
        Ok(())
    })?];
    let l_max = s.data.l_max;
    let mut f = BandSource::new(s.data.lambda0, l_max, 0);
    f.set(0, lm_index(0, 0), Complex64::new(1.0, 0.0));
    let window = TimeWindow::new(s.data.lambda0, s.data.t0);
    let times = window_times(s, &window);
    let traces = synthesize_trace(&data, &f, &times, TraceKind::Difference)?;
    files.push(dir.csv("traces.csv", |w| write_trace_csv(w, &traces))?);
    let x0 = s.initial()?;
    let diff = model.forward(&x0)?.sub(&data)?;
    let record = MisfitRecord {
        lambda0: s.data.lambda0,
        grid: if s.data.backend == Backend::Voxel { s.data.grid } else { 0 },
        misfit_freq: hs_misfit_frequency(&diff),
        misfit_time: shift_energies(&diff, &window, s.data.l_shift, 64).total(),
        l_shift: s.data.l_shift,
    };
    files.push(dir.json("misfit.json", serde_json::to_value(&record).expect("record"))?);
    Ok(files)
}

/// Constants estimate over the ball, then projected Landweber.
pub fn cmd_invert(s: &Scenario, dir: &OutputDir) -> Result<Vec<PathBuf>> {
    let model = s.forward_model()?;
    let (truth, x0, ball) = (s.truth()?, s.initial()?, s.ball()?);
    let constants = estimate_constants(model.as_ref(), &ball, s.landweber.samples, s.seed)?;
    if !ball.contains(&truth) || !ball.contains(&x0) {
        log::warn!("initial or true model lies outside the configured ball");
    }
    if ball.radius > constants.r_ball {
        log::warn!(
            "ball radius {:.3e} exceeds the convergence radius estimate {:.3e}",
            ball.radius,
            constants.r_ball
        );
    }
    let mut files = vec![dir.json("constants.json", serde_json::to_value(&constants).expect("constants"))?];
    let opts = LandweberOptions {
        step: s.step(),
        max_iterations: s.landweber.iterations,
        error_floor: s.landweber.relative_floor * truth.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt(),
        ball,
    };
    let run = landweber_run(model.as_ref(), &x0, &truth, &constants, &opts)?;
    files.push(dir.csv("iterations.csv", |w| write_iteration_csv(w, &run))?);
    let last = run.final_state();
    files.push(dir.json(
        "inversion.json",
        json!({
            "mu": run.mu,
            "rho": run.rho,
            "R": run.r,
            "iterations": last.m,
            "final_error": last.error,
            "final_misfit": last.misfit,
            "x_final": last.x,
            "fitted_rate": run.fitted_rate(),
        }),
    )?);
    Ok(files)
}

fn potential(s: &Scenario) -> Result<RadialPotential> {
    let w = &s.weights;
    match (&w.radii, &w.values) {
        (Some(r), Some(v)) => RadialPotential::new(r.clone(), v.clone()),
        (None, None) => {
            let layers = RadialLayers::new(s.partition()?.radii().unwrap_or(&[]).to_vec(), s.truth()?.into_vec())?;
            RadialPotential::from_layers(&layers, w.e)
        }
        _ => Err(Error::Config("weights.radii and weights.values must be given together".into())),
    }
}

/// Weight profile per `h`, checks, and the lowered negative control.
pub fn cmd_weights(s: &Scenario, dir: &OutputDir) -> Result<Vec<PathBuf>> {
    let w = &s.weights;
    let profile = build_psi(&potential(s)?, w.e, w.delta, w.dr)?;
    let mut files = vec![];
    let mut reports = vec![];
    for (k, &h) in w.h.iter().enumerate() {
        let solved = solve_u_ode(&profile, h)?;
        let report = verify_weight_inequalities(&solved, w.tolerance)?;
        if k == 0 {
            files.push(dir.csv("weight_profile.csv", |out| solved.write_csv(out))?);
            let control = verify_weight_inequalities(&lowered_control(&solved, 0.1), w.tolerance)?;
            reports.push(json!({ "h": h, "control": true, "violations": control.violation_count(), "report": control }));
        }
        let u_max = solved.u.iter().copied().fold(0.0, f64::max);
        reports.push(json!({
            "h": h,
            "control": false,
            "u_max": u_max,
            "violations": report.violation_count(),
            "passed": report.passed(),
            "report": report,
        }));
    }
    files.push(dir.json(
        "weights.json",
        json!({ "profile": serde_json::to_value(&profile).expect("profile"), "runs": reports }),
    )?);
    Ok(files)
}

/// Resolvent norms, remainder slope, adjoint defect and misfit convergence.
pub fn cmd_probe(s: &Scenario, dir: &OutputDir) -> Result<Vec<PathBuf>> {
    let p = &s.probe;
    let truth = s.truth()?;
    let part = s.partition()?;
    let near = Cutoff::Near { radius: p.near_radius };
    let far = Cutoff::Far {
        inner: p.far[0],
        outer: p.far[1],
    };
    let (near_norms, far_norms) = match s.data.backend {
        Backend::Radial => {
            let layers = RadialLayers::new(part.radii().unwrap_or(&[]).to_vec(), truth.as_slice().to_vec())?;
            let eval = |c: Cutoff| -> Result<Vec<f64>> {
                p.lambdas.iter().map(|l| radial_resolvent_norm(*l, &layers, c, 24)).collect()
            };
            (eval(near)?, eval(far)?)
        }
        Backend::Voxel => {
            let c = wavespeed_from_model(&truth, &part.labels_on(&s.grid()?)?)?;
            let opts = NormOptions {
                solver: s.solver_options(),
                seed: s.seed,
                ..Default::default()
            };
            (
                estimate_resolvent_norm(&p.lambdas, &c, near, opts)?.norms,
                estimate_resolvent_norm(&p.lambdas, &c, far, opts)?.norms,
            )
        }
    };
    let mut files = vec![dir.csv("resolvent.csv", |w| {
        writeln!(w, "lambda,near,far")?;
        for i in 0..p.lambdas.len() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", p.lambdas[i], near_norms[i], far_norms[i])?;
        }
        Ok(())
    })?];
    let a_c = 1.0 + near_norms.iter().copied().fold(0.0, f64::max);
    let far_slope = loglog_slope(&p.lambdas, &far_norms);

    let model = s.forward_model()?;
    let x = s.initial()?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let h: Vec<f64> = match &p.direction {
        Some(d) => d.clone(),
        None => (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let remainder = remainder_probe(model.as_ref(), &x, &h, &p.scales, a_c)?;

    let mut worst: f64 = 0.0;
    for _ in 0..p.adjoint_pairs {
        let dir_h: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = DataSeries::zeros(model.frequency_grid(), s.data.l_max);
        for op in y.ops.iter_mut() {
            op.matrix
                .iter_mut()
                .for_each(|v| *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let lhs = model.frechet_apply(&x, &dir_h)?.inner(&y)?;
        let g = gradient(model.as_ref(), &x, &y)?;
        let rhs: f64 = g.iter().zip(&dir_h).map(|(a, b)| a * b).sum();
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }

    let diff = model.forward(&x)?.sub(&model.forward(&truth)?)?;
    let window = TimeWindow::new(s.data.lambda0, s.data.t0);
    let l_top = p.l_shifts.iter().copied().max().unwrap_or(0).max(s.data.l_shift);
    let energies = shift_energies(&diff, &window, l_top, 64);
    let freq = hs_misfit_frequency(&diff);
    let partial: Vec<Value> = p
        .l_shifts
        .iter()
        .map(|&l| json!({ "L_shift": l, "misfit_time": energies.partial(l), "misfit_freq": freq }))
        .collect();
    files.push(dir.json(
        "probe.json",
        json!({
            "a_c": a_c,
            "far_slope": far_slope,
            "remainder": { "scales": remainder.scales, "norms": remainder.remainders, "slope": remainder.slope },
            "adjoint_max_defect": worst,
            "misfit": partial,
        }),
    )?);
    Ok(files)
}
