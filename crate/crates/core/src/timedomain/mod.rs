//! Band-limited sources, frequency synthesis of boundary traces and the
//! Hilbert–Schmidt misfit.
//!
//! Time traces are `u(t) = (1/2π) ∫ e^{-itλ} û(λ) dλ`. Source norms use
//! `∫ |f̂|^2 dλ = 2π ∫ |f(t)|^2 dt`, under which the shifted band functions
//! `â_ℓ(λ) = e^{-iℓπλ/λ0} / sqrt(2λ0)` on `[-λ0, λ0]` are orthonormal.

use crate::boundary::{free_layer_profile, lm_of, n_coeffs, sobolev_weight, DataOperator};
use crate::error::{Error, Result};
use crate::special::{gauss_legendre, gauss_legendre_on};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Quadrature nodes and weights on `[-λ0, λ0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub lambda0: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Gauss–Legendre rule with `2 * ceil(8 λ0)` nodes.
    pub fn new(lambda0: f64) -> Result<Self> {
        Self::check(lambda0)?;
        Self::gauss(lambda0, 2 * (8.0 * lambda0).ceil() as usize)
    }

    pub fn gauss(lambda0: f64, n: usize) -> Result<Self> {
        Self::check(lambda0)?;
        if n == 0 {
            return Err(Error::Config("frequency grid needs at least one node".into()));
        }
        let (x, w) = gauss_legendre(n);
        Ok(Self {
            lambda0,
            nodes: x.iter().map(|t| t * lambda0).collect(),
            weights: w.iter().map(|t| t * lambda0).collect(),
        })
    }

    /// Composite rule: `panels` equal panels with `per_panel` nodes each.
    pub fn composite(lambda0: f64, panels: usize, per_panel: usize) -> Result<Self> {
        Self::check(lambda0)?;
        let mut nodes = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        let width = 2.0 * lambda0 / panels as f64;
        for p in 0..panels {
            let a = -lambda0 + width * p as f64;
            let (x, w) = gauss_legendre_on(per_panel, a, a + width);
            nodes.extend(x);
            weights.extend(w);
        }
        Ok(Self {
            lambda0,
            nodes,
            weights,
        })
    }

    /// Composite rule fine enough for `e^{-isλ}` with `|s| <= s_max`.
    pub fn resolving(lambda0: f64, s_max: f64) -> Result<Self> {
        let panels = ((2.0 * lambda0 * (s_max + 1.0)) / 8.0).ceil().max(2.0) as usize;
        Self::composite(lambda0, panels, 16)
    }

    fn check(lambda0: f64) -> Result<()> {
        if !(lambda0 >= 1.0 && lambda0.is_finite()) {
            return Err(Error::Config(format!("lambda0 = {lambda0} must be >= 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Frequency samples of a data-space element.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries {
    pub grid: FrequencyGrid,
    pub ops: Vec<DataOperator>,
}

impl DataSeries {
    pub fn new(grid: FrequencyGrid, ops: Vec<DataOperator>) -> Result<Self> {
        if ops.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: ops.len(),
            });
        }
        Ok(Self { grid, ops })
    }

    pub fn zeros(grid: &FrequencyGrid, l_max: usize) -> Self {
        Self {
            ops: grid.nodes.iter().map(|l| DataOperator::zeros(*l, l_max)).collect(),
            grid: grid.clone(),
        }
    }

    pub fn l_max(&self) -> usize {
        self.ops.first().map_or(0, |o| o.l_max)
    }

    fn check(&self, other: &DataSeries) -> Result<()> {
        if self.grid != other.grid || self.l_max() != other.l_max() {
            return Err(Error::GridMismatch("data series on different frequency grids".into()));
        }
        Ok(())
    }

    /// `Re (1/(4πλ0)) Σ w_i tr(A_i^H B_i)`.
    pub fn inner(&self, other: &DataSeries) -> Result<f64> {
        self.check(other)?;
        let mut s = 0.0;
        for ((a, b), w) in self.ops.iter().zip(&other.ops).zip(&self.grid.weights) {
            let t: f64 = a
                .matrix
                .iter()
                .zip(b.matrix.iter())
                .map(|(x, y)| (x.conj() * y).re)
                .sum();
            s += w * t;
        }
        Ok(s / (4.0 * PI * self.grid.lambda0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ops
            .iter()
            .zip(&self.grid.weights)
            .map(|(a, w)| w * a.hs_norm_sqr())
            .sum::<f64>()
            / (4.0 * PI * self.grid.lambda0)
    }

    pub fn sub(&self, other: &DataSeries) -> Result<DataSeries> {
        self.check(other)?;
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(DataSeries {
            grid: self.grid.clone(),
            ops,
        })
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &DataSeries) -> Result<()> {
        self.check(other)?;
        for (x, y) in self.ops.iter_mut().zip(&other.ops) {
            x.matrix += &y.matrix * Complex64::new(a, 0.0);
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.ops {
            x.matrix *= Complex64::new(a, 0.0);
        }
    }
}

/// Band-limited source expanded in `â_ℓ ⊗ b_k`, `|ℓ| <= shifts`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSource {
    pub lambda0: f64,
    pub l_max: usize,
    pub shifts: i64,
    coeffs: Vec<Complex64>,
}

impl BandSource {
    pub fn new(lambda0: f64, l_max: usize, shifts: i64) -> Self {
        let n = (2 * shifts + 1) as usize * n_coeffs(l_max);
        Self {
            lambda0,
            l_max,
            shifts,
            coeffs: vec![Complex64::default(); n],
        }
    }

    /// The basis element `â_ℓ ⊗ b_k`.
    pub fn basis(lambda0: f64, l_max: usize, shift: i64, mode: usize) -> Self {
        let mut s = Self::new(lambda0, l_max, shift.abs());
        s.set(shift, mode, Complex64::new(1.0, 0.0));
        s
    }

    fn slot(&self, shift: i64, mode: usize) -> usize {
        (shift + self.shifts) as usize * n_coeffs(self.l_max) + mode
    }

    pub fn set(&mut self, shift: i64, mode: usize, value: Complex64) {
        let i = self.slot(shift, mode);
        self.coeffs[i] = value;
    }

    pub fn get(&self, shift: i64, mode: usize) -> Complex64 {
        self.coeffs[self.slot(shift, mode)]
    }

    /// `||f||^2` in the orthonormal basis.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `f̂(λ)` in `b_k` coordinates.
    pub fn spectrum(&self, lambda: f64) -> Vec<Complex64> {
        let nm = n_coeffs(self.l_max);
        let mut out = vec![Complex64::default(); nm];
        if lambda.abs() > self.lambda0 {
            return out;
        }
        let norm = 1.0 / (2.0 * self.lambda0).sqrt();
        for shift in -self.shifts..=self.shifts {
            let a = Complex64::from_polar(norm, -(shift as f64) * PI * lambda / self.lambda0);
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.get(shift, k) * a;
            }
        }
        out
    }

    /// `f(t)` in `b_k` coordinates, in closed form.
    pub fn time_value(&self, t: f64) -> Vec<Complex64> {
        let nm = n_coeffs(self.l_max);
        let mut out = vec![Complex64::default(); nm];
        for shift in -self.shifts..=self.shifts {
            let a = shifted_sinc(self.lambda0, t + shift as f64 * PI / self.lambda0);
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.get(shift, k) * a;
            }
        }
        out
    }
}

/// `(1/2π) ∫_{-λ0}^{λ0} e^{-isλ} dλ / sqrt(2λ0)`.
fn shifted_sinc(lambda0: f64, s: f64) -> f64 {
    let norm = 1.0 / (2.0 * PI * (2.0 * lambda0).sqrt());
    if (lambda0 * s).abs() < 1e-8 {
        norm * 2.0 * lambda0
    } else {
        norm * 2.0 * (lambda0 * s).sin() / s
    }
}

/// Symmetric window `|t - t0| <= π/(2λ0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t0: f64,
    pub half_width: f64,
}

impl TimeWindow {
    pub fn new(lambda0: f64, t0: f64) -> Self {
        Self {
            t0,
            half_width: PI / (2.0 * lambda0),
        }
    }

    pub fn weight(&self, t: f64) -> f64 {
        if (t - self.t0).abs() <= self.half_width {
            1.0
        } else {
            0.0
        }
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// `τ(U_c - U_1) f`.
    Difference,
    /// `τ U_c f`.
    Total,
}

/// One time sample of a boundary trace in `H^{1/2}`-orthonormal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub values: Vec<Complex64>,
}

/// Synthesizes the boundary trace of the wave field driven by `f`.
pub fn synthesize_trace(
    data: &DataSeries,
    f: &BandSource,
    times: &[f64],
    kind: TraceKind,
) -> Result<Vec<TraceSample>> {
    let grid = &data.grid;
    if (grid.lambda0 - f.lambda0).abs() > 0.0 || data.l_max() != f.l_max {
        return Err(Error::GridMismatch("source and data series disagree".into()));
    }
    let s_max = times.iter().map(|t| t.abs()).fold(0.0, f64::max) + f.shifts as f64 * PI / f.lambda0;
    let phase_budget = grid.len() as f64 * 0.8;
    if 2.0 * grid.lambda0 * s_max > phase_budget * 2.0 {
        log::warn!(
            "frequency grid with {} nodes may under-resolve e^(-itλ) for |t| up to {s_max:.2}",
            grid.len()
        );
    }
    let nm = n_coeffs(f.l_max);
    // per-node response M f̂
    let responses: Vec<Vec<Complex64>> = grid
        .nodes
        .iter()
        .zip(&data.ops)
        .map(|(&lambda, op)| {
            let fh = nalgebra::DVector::from_vec(f.spectrum(lambda));
            let mut r: Vec<Complex64> = (&op.matrix * &fh).iter().copied().collect();
            if kind == TraceKind::Total {
                let prof = free_layer_profile(lambda, f.l_max, 1.0);
                for (k, v) in r.iter_mut().enumerate() {
                    let l = lm_of(k).0;
                    *v += prof[l] * sobolev_weight(l, 1.0) * fh[k];
                }
            }
            r
        })
        .collect();
    Ok(times
        .iter()
        .map(|&t| {
            let mut values = vec![Complex64::default(); nm];
            for ((lambda, w), r) in grid.nodes.iter().zip(&grid.weights).zip(&responses) {
                let e = Complex64::from_polar(w / (2.0 * PI), -t * lambda);
                for (v, x) in values.iter_mut().zip(r) {
                    *v += e * x;
                }
            }
            TraceSample { t, values }
        })
        .collect())
}

/// Rows `(t, l, m, re, im)`.
pub fn write_trace_csv<W: Write>(mut w: W, samples: &[TraceSample]) -> std::io::Result<()> {
    writeln!(w, "t,l,m,re,im")?;
    for s in samples {
        for (k, v) in s.values.iter().enumerate() {
            let (l, m) = lm_of(k);
            writeln!(w, "{:.17e},{l},{m},{:.17e},{:.17e}", s.t, v.re, v.im)?;
        }
    }
    Ok(())
}

/// Closed-form misfit `(1/(4πλ0)) ∫ ||ΔM(λ)||_HS^2 dλ` of a data difference.
pub fn hs_misfit_frequency(diff: &DataSeries) -> f64 {
    diff.norm_sqr()
}

/// Windowed energies `∫_window ||U(t + ℓπ/λ0)||_HS^2 dt` per shift `ℓ`,
/// where `U(s)` is the time-domain response to `â_0 ⊗ b_k` summed over `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEnergies {
    pub shifts: Vec<i64>,
    pub energies: Vec<f64>,
}

impl ShiftEnergies {
    /// Sum over `|ℓ| <= l_shift`.
    pub fn partial(&self, l_shift: i64) -> f64 {
        self.shifts
            .iter()
            .zip(&self.energies)
            .filter(|(s, _)| s.abs() <= l_shift)
            .map(|(_, e)| e)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }
}

/// Time-domain energies per shift using a Gauss rule with `time_nodes`
/// points on the window.
pub fn shift_energies(diff: &DataSeries, window: &TimeWindow, l_shift: i64, time_nodes: usize) -> ShiftEnergies {
    let grid = &diff.grid;
    let n = grid.len();
    // Gram matrix G_ij = tr(M_i^H M_j)
    let mut gram = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in i..n {
            let g: Complex64 = diff.ops[i]
                .matrix
                .iter()
                .zip(diff.ops[j].matrix.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            gram[i * n + j] = g;
            gram[j * n + i] = g.conj();
        }
    }
    let (tx, tw) = gauss_legendre_on(time_nodes, window.t0 - window.half_width, window.t0 + window.half_width);
    let norm = 1.0 / (2.0 * PI * (2.0 * grid.lambda0).sqrt());
    let mut shifts = Vec::new();
    let mut energies = Vec::new();
    let mut c = vec![Complex64::default(); n];
    for shift in -l_shift..=l_shift {
        let mut e = 0.0;
        for (t, wt) in tx.iter().zip(&tw) {
            let s = t + shift as f64 * PI / grid.lambda0;
            for i in 0..n {
                c[i] = Complex64::from_polar(norm * grid.weights[i], -s * grid.nodes[i]);
            }
            let mut q = Complex64::default();
            for i in 0..n {
                let mut row = Complex64::default();
                for j in 0..n {
                    row += gram[i * n + j] * c[j];
                }
                q += c[i].conj() * row;
            }
            e += wt * q.re;
        }
        shifts.push(shift);
        energies.push(e);
    }
    ShiftEnergies { shifts, energies }
}

/// Truncated time-domain misfit over `|ℓ| <= l_shift` and all boundary modes.
pub fn hs_misfit_time(diff: &DataSeries, window: &TimeWindow, l_shift: i64) -> f64 {
    shift_energies(diff, window, l_shift, 64).total()
}

/// One entry of the misfit log.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MisfitRecord {
    pub lambda0: f64,
    pub grid: usize,
    pub misfit_freq: f64,
    pub misfit_time: f64,
    #[serde(rename = "L_shift")]
    pub l_shift: i64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{data_operator, Medium};
    use crate::helmholtz::RadialLayers;

    fn series(grid: &FrequencyGrid, radii: Vec<f64>, b: Vec<f64>, l_max: usize) -> DataSeries {
        let m = Medium::Radial(RadialLayers::new(radii, b).unwrap());
        let ops = grid.nodes.iter().map(|l| data_operator(*l, &m, l_max).unwrap()).collect();
        DataSeries::new(grid.clone(), ops).unwrap()
    }

    #[test]
    fn grid_is_symmetric_with_total_weight() {
        for g in [FrequencyGrid::new(2.5).unwrap(), FrequencyGrid::composite(3.0, 5, 7).unwrap()] {
            let n = g.len();
            for i in 0..n {
                assert!((g.nodes[i] + g.nodes[n - 1 - i]).abs() < 1e-13);
                assert!(g.weights[i] > 0.0);
            }
            assert!((g.weights.iter().sum::<f64>() - 2.0 * g.lambda0).abs() < 1e-12);
        }
        assert_eq!(FrequencyGrid::new(4.0).unwrap().len(), 64);
        assert!(FrequencyGrid::new(0.5).is_err());
    }

    #[test]
    fn parseval_in_shift_basis() {
        let lambda0 = 2.0;
        let mut f = BandSource::new(lambda0, 1, 2);
        for (i, s) in (-2..=2).enumerate() {
            for k in 0..4 {
                f.set(s, k, Complex64::new((i + k) as f64 * 0.3 - 0.5, (k as f64) * 0.2));
            }
        }
        // 2π ∫ |f(t)|^2 dt on [-T, T]; tail ~ 1/(π λ0 T) relative
        let t_max = 3000.0;
        let panels = 12000;
        let mut e = 0.0;
        for p in 0..panels {
            let a = -t_max + 2.0 * t_max * p as f64 / panels as f64;
            let (x, w) = gauss_legendre_on(8, a, a + 2.0 * t_max / panels as f64);
            for (t, wt) in x.iter().zip(&w) {
                e += wt * f.time_value(*t).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        e *= 2.0 * PI;
        assert!((e - f.norm_sqr()).abs() < 1e-4 * f.norm_sqr(), "{e} {}", f.norm_sqr());
    }

    #[test]
    fn spectrum_and_time_value_are_a_fourier_pair() {
        let f = BandSource::basis(1.5, 0, -1, 0);
        let g = FrequencyGrid::composite(1.5, 8, 16).unwrap();
        for t in [-2.0, 0.0, 0.7] {
            let num: Complex64 = g
                .nodes
                .iter()
                .zip(&g.weights)
                .map(|(l, w)| f.spectrum(*l)[0] * Complex64::from_polar(w / (2.0 * PI), -t * l))
                .sum();
            assert!((num - f.time_value(t)[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_difference_trace_vanishes() {
        let g = FrequencyGrid::new(1.0).unwrap();
        let d = series(&g, vec![], vec![], 2);
        let f = BandSource::basis(1.0, 2, 0, 3);
        let tr = synthesize_trace(&d, &f, &[0.0, 0.5], TraceKind::Difference).unwrap();
        assert!(tr.iter().all(|s| s.values.iter().all(|v| v.norm() == 0.0)));
    }

    #[test]
    fn time_shift_covariance() {
        let lambda0 = 2.0;
        let g = FrequencyGrid::resolving(lambda0, 8.0).unwrap();
        let d = series(&g, vec![0.5], vec![1.3], 2);
        let a1 = BandSource::basis(lambda0, 2, 1, 4);
        let a0 = BandSource::basis(lambda0, 2, 0, 4);
        let shift = PI / lambda0;
        for kind in [TraceKind::Difference, TraceKind::Total] {
            let u1 = synthesize_trace(&d, &a1, &[0.3], kind).unwrap();
            let u0 = synthesize_trace(&d, &a0, &[0.3 + shift], kind).unwrap();
            let scale = u0[0].values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (x, y) in u1[0].values.iter().zip(&u0[0].values) {
                assert!((x - y).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn traces_obey_bernstein_bound() {
        let lambda0 = 2.0;
        let g = FrequencyGrid::resolving(lambda0, 6.0).unwrap();
        let d = series(&g, vec![0.5], vec![1.3], 1);
        let f = BandSource::basis(lambda0, 1, 0, 0);
        let dt = 1e-3;
        let times: Vec<f64> = (0..4000).map(|i| -2.0 + i as f64 * dt).collect();
        let tr = synthesize_trace(&d, &f, &times, TraceKind::Total).unwrap();
        let amp = tr.iter().map(|s| s.values[0].norm()).fold(0.0, f64::max);
        let deriv = tr
            .windows(2)
            .map(|w| (w[1].values[0] - w[0].values[0]).norm() / dt)
            .fold(0.0, f64::max);
        // sup |u'| <= λ0 sup |u| for band-limited u, up to the finite sample range
        assert!(deriv <= lambda0 * amp * 1.05, "{deriv} {}", lambda0 * amp);
    }

    #[test]
    fn frequency_misfit_single_block() {
        let g = FrequencyGrid::new(2.0).unwrap();
        let d = series(&g, vec![0.5], vec![1.4], 4);
        let z = DataSeries::zeros(&g, 4);
        let diff = d.sub(&z).unwrap();
        // l = 2 block alone
        let mut block = diff.clone();
        for op in &mut block.ops {
            for i in 0..op.matrix.nrows() {
                if lm_of(i).0 != 2 {
                    op.matrix[(i, i)] = Complex64::default();
                }
            }
        }
        let direct: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(l, w)| {
                let s = crate::boundary::RadialSingleLayer::new(*l, &RadialLayers::new(vec![0.5], vec![1.4]).unwrap(), 2)
                    .unwrap()
                    .traces[2];
                let s1 = free_layer_profile(*l, 2, 1.0)[2];
                w * 5.0 * 7.0 * (s - s1).norm_sqr()
            })
            .sum::<f64>()
            / (4.0 * PI * 2.0);
        assert!((hs_misfit_frequency(&block) - direct).abs() < 1e-13 * direct);
        assert_eq!(hs_misfit_frequency(&d.sub(&d).unwrap()), 0.0);
    }

    #[test]
    fn misfit_is_symmetric() {
        let g = FrequencyGrid::new(1.0).unwrap();
        let a = series(&g, vec![0.4, 0.7], vec![1.2, 0.9], 3);
        let b = series(&g, vec![0.4, 0.7], vec![1.1, 1.0], 3);
        let ab = hs_misfit_frequency(&a.sub(&b).unwrap());
        let ba = hs_misfit_frequency(&b.sub(&a).unwrap());
        assert_eq!(ab, ba);
    }

    #[test]
    fn windowed_shifts_tile_from_below() {
        let lambda0 = 1.0;
        let l_shift = 12;
        let g = FrequencyGrid::resolving(lambda0, (l_shift as f64 + 1.0) * PI).unwrap();
        let a = series(&g, vec![0.5], vec![1.3], 2);
        let diff = a.sub(&DataSeries::zeros(&g, 2)).unwrap();
        let full = hs_misfit_frequency(&diff);
        for t0 in [0.0, 0.3] {
            let e = shift_energies(&diff, &TimeWindow::new(lambda0, t0), l_shift, 64);
            let partial: Vec<f64> = (0..=l_shift).map(|l| e.partial(l)).collect();
            assert!(partial.windows(2).all(|w| w[1] >= w[0]));
            assert!(partial[l_shift as usize] < full);
            assert!(partial[l_shift as usize] > 0.9 * full, "{} {full}", partial[l_shift as usize]);
        }
    }

    #[test]
    fn record_serializes() {
        let r = MisfitRecord {
            lambda0: 2.0,
            grid: 32,
            misfit_freq: 1.0,
            misfit_time: 0.9,
            l_shift: 16,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"L_shift\":16"));
    }
}
