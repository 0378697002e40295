//! Radial weights for the resolvent estimate: the piecewise profile `ψ`,
//! the Riccati equation `u' = (u^2 - ψ)/h` for `u = φ'`, and cell-wise
//! checks of `-E w'/2 <= ∂_r(w(ψ - V))`.
//!
//! Profiles are sampled on a mesh that repeats every radius where `ψ` or
//! `V` jumps, so each node pair of equal radius holds the left and right
//! limits.

use crate::error::{Error, Result};
use crate::helmholtz::RadialLayers;
use serde::Serialize;
use std::io::Write;

/// Piecewise-constant radial potential `V = values[j]` on
/// `radii[j-1] <= r < radii[j]`, zero beyond the last radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialPotential {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: radii.len(),
                got: values.len(),
            });
        }
        if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition("potential radii must be positive and increasing".into()));
        }
        Ok(Self { radii, values })
    }

    pub fn zero() -> Self {
        Self {
            radii: vec![],
            values: vec![],
        }
    }

    /// `V = E - c^{-2}` for layered speeds; needs `c = E^{-1/2}` outside,
    /// so `E = 1`.
    pub fn from_layers(layers: &RadialLayers, e: f64) -> Result<Self> {
        if (e - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "E - c^-2 is compactly supported only for E = 1 (got {e})"
            )));
        }
        Self::new(layers.radii.clone(), layers.speeds.iter().map(|c| e - c.powi(-2)).collect())
    }

    /// Support radius `R` (zero for the empty well).
    pub fn support(&self) -> f64 {
        self.radii.last().copied().unwrap_or(0.0)
    }

    /// Value on the piece containing `r`; `right` picks the right limit at
    /// a breakpoint.
    pub fn at(&self, r: f64, right: bool) -> f64 {
        for (rj, v) in self.radii.iter().zip(&self.values) {
            if r < *rj || (!right && r == *rj) {
                return *v;
            }
        }
        0.0
    }

    /// Point masses of the positive part of `∂_r V`.
    pub fn jump_measure(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (j, rj) in self.radii.iter().enumerate() {
            let next = self.values.get(j + 1).copied().unwrap_or(0.0);
            let jump = next - self.values[j];
            if jump > 0.0 {
                out.push((*rj, jump));
            }
        }
        out
    }
}

/// `w(r) = 1 - (1 + r)^{-δ}`.
pub fn weight_w(delta: f64, r: f64) -> f64 {
    1.0 - (1.0 + r).powf(-delta)
}

/// Inverse of [`weight_w`]: `(1 - y)^{-1/δ} - 1`.
pub fn weight_w_inv(delta: f64, y: f64) -> f64 {
    (1.0 - y).powf(-1.0 / delta) - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightProfile {
    #[serde(skip)]
    pub potential: RadialPotential,
    pub e: f64,
    pub delta: f64,
    /// Riccati parameter once `u` is solved.
    pub h: Option<f64>,
    /// Support radius `R` of `V`.
    pub r_well: f64,
    pub b: f64,
    pub r0: f64,
    pub r_max: f64,
    /// `max V` on `[0, R]`.
    pub v_max: f64,
    /// Point masses `(r, m)` of `μ_V`.
    pub jumps: Vec<(f64, f64)>,
    /// Additive shift of `ψ` on `(R, R0)`, nonzero only for controls.
    pub outer_shift: f64,
    #[serde(skip)]
    pub r: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub w: Vec<f64>,
}

impl WeightProfile {
    /// `ψ` at `r`, with the right limit at breakpoints when `right`.
    pub fn psi_at(&self, r: f64, right: bool) -> f64 {
        if r < self.r_well || (!right && r == self.r_well && self.r_well > 0.0) {
            let mass: f64 = self
                .jumps
                .iter()
                .filter(|(rj, _)| *rj < r || (right && *rj == r))
                .map(|(_, m)| m)
                .sum();
            mass + self.v_max
        } else if r < self.r0 || (!right && r == self.r0) {
            let base = self.b / weight_w(self.delta, r) - 0.5 * self.e;
            if r > self.r_well && r < self.r0 {
                base + self.outer_shift
            } else {
                base
            }
        } else {
            0.0
        }
    }

    /// `ψ(R)` from the inside.
    pub fn psi_at_well(&self) -> f64 {
        if self.r_well == 0.0 {
            return 0.0;
        }
        self.psi_at(self.r_well, false)
    }

    fn jump_radii(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.potential.radii.clone();
        if self.outer_shift != 0.0 && self.r0 > self.r_well {
            out.push(self.r0);
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }

    /// Resamples `r, V, ψ, w` on a mesh with cells no longer than `dr`.
    pub fn resample(&mut self, dr: f64) {
        let mut breaks = vec![0.0, self.r_well, self.r0, self.r_max];
        breaks.extend(self.potential.radii.iter().copied());
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let jumps = self.jump_radii();
        let mut r = vec![];
        let mut right = vec![];
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            let n = ((b - a) / dr).ceil().max(1.0) as usize;
            for k in 0..n {
                r.push(a + (b - a) * k as f64 / n as f64);
                right.push(true);
            }
            if jumps.contains(&b) {
                r.push(b);
                right.push(false);
            }
        }
        r.push(self.r_max);
        right.push(true);
        // left limits were pushed before the matching right-limit node
        self.v = r.iter().zip(&right).map(|(x, rt)| self.potential.at(*x, *rt)).collect();
        self.psi = r.iter().zip(&right).map(|(x, rt)| self.psi_at(*x, *rt)).collect();
        self.w = r.iter().map(|x| weight_w(self.delta, *x)).collect();
        self.u = vec![0.0; r.len()];
        self.r = r;
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,V,psi,u,w")?;
        for i in 0..self.r.len() {
            writeln!(
                out,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.r[i], self.v[i], self.psi[i], self.u[i], self.w[i]
            )?;
        }
        Ok(())
    }
}

/// Builds `ψ` from `V`, `E` and `δ` and samples it with mesh step `dr`
/// on `[0, R_max]`, `R_max = max(1.25 R0, R + 1)`.
pub fn build_psi(potential: &RadialPotential, e: f64, delta: f64, dr: f64) -> Result<WeightProfile> {
    if !(e > 0.0) || !(delta > 0.0) || !(dr > 0.0) {
        return Err(Error::Config(format!(
            "weights need E > 0, delta > 0 and a positive mesh step (E {e}, delta {delta}, dr {dr})"
        )));
    }
    let r_well = potential.support();
    let v_max = if potential.values.is_empty() {
        0.0
    } else {
        potential.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let jumps: Vec<(f64, f64)> = potential.jump_measure().into_iter().filter(|(r, _)| *r < r_well).collect();
    let psi_r = if r_well > 0.0 {
        v_max + jumps.iter().map(|j| j.1).sum::<f64>()
    } else {
        0.0
    };
    let b = weight_w(delta, r_well) * (psi_r + 0.5 * e);
    let ratio = 2.0 * b / e;
    if ratio >= 1.0 {
        return Err(Error::DeltaTooLarge { ratio });
    }
    let r0 = weight_w_inv(delta, ratio);
    let mut p = WeightProfile {
        potential: potential.clone(),
        e,
        delta,
        h: None,
        r_well,
        b,
        r0,
        r_max: (1.25 * r0).max(r_well + 1.0),
        v_max: if r_well > 0.0 { v_max } else { 0.0 },
        jumps,
        outer_shift: 0.0,
        r: vec![],
        v: vec![],
        psi: vec![],
        u: vec![],
        w: vec![],
    };
    p.resample(dr);
    Ok(p)
}

/// Negative control: `ψ` lowered by `fraction ψ(R)` on `(R, R0)`.
pub fn lowered_control(profile: &WeightProfile, fraction: f64) -> WeightProfile {
    let mut p = profile.clone();
    p.outer_shift = -fraction * profile.psi_at_well();
    let dr = profile.r.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    p.resample(dr.max(1e-6));
    if let Some(h) = profile.h {
        // keep the original u; the control perturbs ψ only
        let orig = profile.clone();
        p.u = p.r.iter().map(|r| interpolate_u(&orig, *r)).collect();
        p.h = Some(h);
    }
    p
}

fn interpolate_u(p: &WeightProfile, r: f64) -> f64 {
    let i = p.r.partition_point(|x| *x <= r);
    if i == 0 {
        return p.u[0];
    }
    if i >= p.r.len() {
        return *p.u.last().unwrap();
    }
    let (a, b) = (p.r[i - 1], p.r[i]);
    if b == a {
        return p.u[i];
    }
    p.u[i - 1] + (p.u[i] - p.u[i - 1]) * (r - a) / (b - a)
}

/// Integrates `u' = (u^2 - ψ)/h` from `u(R0) = 0` down to `r = 0` with the
/// implicit trapezoidal rule on a mesh refined to cells `<= h/10`.
/// Jump radii are mesh nodes, so no step straddles a discontinuity.
pub fn solve_u_ode(profile: &WeightProfile, h: f64) -> Result<WeightProfile> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("Riccati parameter h must be positive, got {h}")));
    }
    let mut p = profile.clone();
    let current = p.r.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if current > 0.1 * h {
        p.resample(0.1 * h);
    }
    p.h = Some(h);
    let n = p.r.len();
    let mut u = vec![0.0; n];
    let start = p.r.iter().rposition(|r| *r <= p.r0).unwrap_or(0);
    for i in (0..start).rev() {
        let dt = p.r[i + 1] - p.r[i];
        if dt == 0.0 {
            u[i] = u[i + 1];
            continue;
        }
        u[i] = trapezoid_back(u[i + 1], p.psi[i + 1], p.psi[i], dt, h, p.r[i])?;
    }
    p.u = u;
    Ok(p)
}

/// One backward trapezoid step; halves the step on a negative
/// discriminant before giving up.
fn trapezoid_back(u1: f64, psi1: f64, psi0: f64, dt: f64, h: f64, r: f64) -> Result<f64> {
    let mut pieces = 1usize;
    'outer: for _ in 0..20 {
        let mut u = u1;
        let sub = dt / pieces as f64;
        for k in 0..pieces {
            // ψ is smooth within a cell; interpolate between its endpoints
            let t1 = 1.0 - k as f64 / pieces as f64;
            let t0 = 1.0 - (k + 1) as f64 / pieces as f64;
            let p1 = psi0 + (psi1 - psi0) * t1;
            let p0 = psi0 + (psi1 - psi0) * t0;
            let a = 0.5 * sub / h;
            let c = u - a * (u * u - p1 - p0);
            let disc = 1.0 + 4.0 * a * c;
            if disc < 0.0 {
                pieces *= 2;
                continue 'outer;
            }
            u = 2.0 * c / (1.0 + disc.sqrt());
        }
        return Ok(u);
    }
    Err(Error::Stiffness(format!(
        "step rejected 20 times near r = {r:.6} (h = {h}, step {dt:.3e})"
    )))
}

/// Closed form `√ψ0 tanh(√ψ0 (R0 - r)/h)` for constant `ψ = ψ0 >= 0`.
pub fn riccati_constant(psi0: f64, r0: f64, h: f64, r: f64) -> f64 {
    if r >= r0 {
        return 0.0;
    }
    let s = psi0.sqrt();
    s * (s * (r0 - r) / h).tanh()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellViolation {
    pub r_a: f64,
    pub r_b: f64,
    /// `-(E/2)(w(r_b) - w(r_a))`.
    pub lhs: f64,
    /// `[w(ψ - V)]_{r_a}^{r_b}`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpViolation {
    pub r: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub tolerance: f64,
    pub ode_max_residual: f64,
    pub ode_violations: Vec<f64>,
    pub cell_violations: Vec<CellViolation>,
    pub jump_violations: Vec<JumpViolation>,
    /// Mesh radii where `u < 0` or `u > √ψ(R)`.
    pub bound_violations: Vec<f64>,
}

impl WeightReport {
    pub fn passed(&self) -> bool {
        self.ode_violations.is_empty()
            && self.cell_violations.is_empty()
            && self.jump_violations.is_empty()
            && self.bound_violations.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.ode_violations.len() + self.cell_violations.len() + self.jump_violations.len() + self.bound_violations.len()
    }
}

/// Checks the discrete ODE residual, the cell inequality, the sign of
/// jumps of `w(ψ - V)` and the bounds `0 <= u <= √ψ(R)`.
pub fn verify_weight_inequalities(profile: &WeightProfile, tol: f64) -> Result<WeightReport> {
    let h = profile
        .h
        .ok_or_else(|| Error::Config("verify_weight_inequalities needs a solved profile".into()))?;
    let p = profile;
    let mut report = WeightReport {
        tolerance: tol,
        ode_max_residual: 0.0,
        ode_violations: vec![],
        cell_violations: vec![],
        jump_violations: vec![],
        bound_violations: vec![],
    };
    let g = |i: usize| p.w[i] * (p.psi[i] - p.v[i]);
    for i in 0..p.r.len() - 1 {
        let (ra, rb) = (p.r[i], p.r[i + 1]);
        if rb == ra {
            let jump = g(i + 1) - g(i);
            if jump < -tol {
                report.jump_violations.push(JumpViolation { r: ra, jump });
            }
            continue;
        }
        if rb <= p.r0 {
            let du = (p.u[i + 1] - p.u[i]) / (rb - ra);
            let f = 0.5 * ((p.u[i] * p.u[i] - p.psi[i]) + (p.u[i + 1] * p.u[i + 1] - p.psi[i + 1])) / h;
            let res = (du - f).abs() * (rb - ra);
            report.ode_max_residual = report.ode_max_residual.max(res);
            if res > tol {
                report.ode_violations.push(ra);
            }
        }
        let lhs = -0.5 * p.e * (p.w[i + 1] - p.w[i]);
        let rhs = g(i + 1) - g(i);
        if lhs > rhs + tol {
            report.cell_violations.push(CellViolation { r_a: ra, r_b: rb, lhs, rhs });
        }
    }
    let cap = p.psi_at_well().max(0.0).sqrt();
    for (r, u) in p.r.iter().zip(&p.u) {
        if *u < -tol || *u > cap + tol || (*r > p.r0 && *u != 0.0) {
            report.bound_violations.push(*r);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square_well() -> WeightProfile {
        let v = RadialPotential::new(vec![1.0], vec![1.0]).unwrap();
        build_psi(&v, 1.0, 0.05, 1e-2).unwrap()
    }

    #[test]
    fn empty_well_is_trivial() {
        let p = build_psi(&RadialPotential::zero(), 1.0, 0.05, 0.1).unwrap();
        assert_eq!((p.b, p.r0), (0.0, 0.0));
        assert!(p.psi.iter().all(|v| *v == 0.0));
        let s = solve_u_ode(&p, 0.1).unwrap();
        assert!(s.u.iter().all(|v| *v == 0.0));
        assert!(verify_weight_inequalities(&s, 1e-12).unwrap().passed());
    }

    #[test]
    fn square_well_constants() {
        let p = square_well();
        assert!((weight_w(0.05, 1.0) - 0.0340636710751544).abs() < 1e-15);
        assert!((p.b - 0.0510955066127316).abs() < 1e-15);
        assert!((p.r0 - 7.636167069941084).abs() < 1e-10);
        assert!(p.jumps.is_empty());
        assert_eq!(p.psi_at(0.3, true), 1.0);
        assert!((p.psi_at(1.0, false) - p.psi_at(1.0, true)).abs() < 1e-12);
        assert!((p.psi_at(p.r0, false) - p.psi_at(p.r0, true)).abs() < 1e-12);
    }

    #[test]
    fn delta_too_large() {
        let v = RadialPotential::new(vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(build_psi(&v, 1.0, 2.0, 0.1), Err(Error::DeltaTooLarge { .. })));
    }

    #[test]
    fn positive_jumps_feed_psi() {
        // V rises from 0.2 to 0.5 at r = 0.4
        let v = RadialPotential::new(vec![0.4, 1.0], vec![0.2, 0.5]).unwrap();
        let p = build_psi(&v, 1.0, 0.05, 0.05).unwrap();
        assert_eq!(p.jumps.len(), 1);
        assert!((p.jumps[0].1 - 0.3).abs() < 1e-15);
        assert!((p.psi_at(0.2, true) - 0.5).abs() < 1e-15);
        assert!((p.psi_at(0.6, true) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn constant_psi_matches_tanh() {
        let mut p = square_well();
        // constant ψ = 1 on [0, R0]
        p.r0 = 1.0;
        p.r_max = 1.5;
        p.resample(2e-4);
        let h = 0.1;
        let s = solve_u_ode(&p, h).unwrap();
        let err = s
            .r
            .iter()
            .zip(&s.u)
            .map(|(r, u)| (u - riccati_constant(1.0, 1.0, h, *r)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn square_well_has_no_violations() {
        let s = solve_u_ode(&square_well(), 0.1).unwrap();
        let report = verify_weight_inequalities(&s, 1e-8).unwrap();
        assert!(report.passed(), "{report:?}");
        let cap = s.psi_at_well().sqrt();
        for (r, u) in s.r.iter().zip(&s.u) {
            assert!(*u >= 0.0 && *u <= cap);
            assert!(*u <= riccati_constant(cap * cap, s.r0, 0.1, *r) + 1e-12);
        }
    }

    #[test]
    fn lowered_profile_is_flagged() {
        let s = solve_u_ode(&square_well(), 0.1).unwrap();
        let control = lowered_control(&s, 0.1);
        let report = verify_weight_inequalities(&control, 1e-8).unwrap();
        assert!(!report.cell_violations.is_empty());
    }

    #[test]
    fn bounds_are_uniform_in_h() {
        let p = square_well();
        for h in [0.1, 0.05, 0.025] {
            let s = solve_u_ode(&p, h).unwrap();
            let max = s.u.iter().copied().fold(0.0, f64::max);
            assert!(max <= s.psi_at_well().sqrt());
            let last = s.r.iter().zip(&s.u).filter(|(_, u)| **u > 0.0).map(|(r, _)| *r).fold(0.0, f64::max);
            assert!(last <= p.r0);
        }
    }

    #[test]
    fn csv_has_header() {
        let p = build_psi(&RadialPotential::zero(), 1.0, 0.05, 0.5).unwrap();
        let mut buf = vec![];
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,V,psi,u,w\n"));
    }

    proptest! {
        #[test]
        fn two_layer_wells_satisfy_bounds(a in 0.2f64..0.8, v1 in 0.05f64..1.0, v2 in 0.05f64..1.0) {
            let v = RadialPotential::new(vec![a, 1.0], vec![v1, v2]).unwrap();
            let p = build_psi(&v, 1.0, 0.05, 0.02).unwrap();
            let s = solve_u_ode(&p, 0.1).unwrap();
            let report = verify_weight_inequalities(&s, 1e-8).unwrap();
            prop_assert!(report.passed(), "{:?}", report);
        }
    }
}
