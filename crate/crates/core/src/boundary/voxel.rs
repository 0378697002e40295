//! Single-layer traces for general voxel wavespeeds.

use super::data::{free_layer_profile, DataOperator};
use super::{lm_of, n_coeffs, sh_analyze, sobolev_weight, spherical_harmonics, BoundaryField, SphereQuadrature};
use crate::error::Result;
use crate::grid::Grid3;
use crate::helmholtz::{GmresOptions, LippmannSchwinger};
use crate::model::Wavespeed;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// How the voxel solver produces the boundary trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    /// Scattered-field formulation with an analytic incident field; the
    /// scattered trace is projected onto `Y_lm` exactly through the addition
    /// theorem for the free kernel.
    Representation,
    /// Surface density smeared over a hat of width two voxels, full volume
    /// solve, trilinear interpolation to sphere nodes.
    Mollified,
}

/// Volume solver set up for one frequency and wavespeed.
pub struct VoxelSingleLayer {
    lambda: f64,
    l_max: usize,
    method: TraceMethod,
    ls: LippmannSchwinger,
    grid: Grid3,
    /// Voxels inside the unit ball.
    support: Vec<usize>,
    /// Free profiles `s_l(|y|)` per support voxel.
    profiles: Vec<Vec<Complex64>>,
    /// `Y_lm(y/|y|)` per support voxel.
    harmonics: Vec<Vec<Complex64>>,
}

fn direction(p: [f64; 3]) -> (f64, f64) {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if r == 0.0 {
        return (1.0, 0.0);
    }
    (p[2] / r, p[1].atan2(p[0]))
}

/// Trilinear interpolation of voxel-center samples.
pub(crate) fn interpolate(grid: &Grid3, values: &[Complex64], p: [f64; 3]) -> Complex64 {
    let h = grid.spacing();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let t = (p[d] + grid.half_width) / h - 0.5;
        let i = (t.floor() as i64).clamp(0, grid.n as i64 - 2);
        base[d] = i as usize;
        frac[d] = t - i as f64;
    }
    let mut out = Complex64::default();
    for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
        for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
            for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                out += values[grid.index(base[0] + di, base[1] + dj, base[2] + dk)] * (wi * wj * wk);
            }
        }
    }
    out
}

impl VoxelSingleLayer {
    pub fn new(lambda: f64, c: &Wavespeed, l_max: usize, method: TraceMethod, solver: GmresOptions) -> Result<Self> {
        let grid = c.grid;
        let ls = LippmannSchwinger::new(lambda, c, solver);
        let support: Vec<usize> = (0..grid.len()).filter(|i| grid.center_radius(*i) < 1.0).collect();
        let (profiles, harmonics) = if method == TraceMethod::Representation {
            support
                .iter()
                .map(|&i| {
                    let p = grid.center(i);
                    let (x, phi) = direction(p);
                    (
                        free_layer_profile(lambda, l_max, grid.center_radius(i)),
                        spherical_harmonics(l_max, x, phi),
                    )
                })
                .unzip()
        } else {
            (vec![], vec![])
        };
        Ok(Self {
            lambda,
            l_max,
            method,
            ls,
            grid,
            support,
            profiles,
            harmonics,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Coefficients of `τ(R_c(λ) - R_1(λ))(w dS)`.
    pub fn scattered_trace(&self, w: &BoundaryField) -> Result<BoundaryField> {
        match self.method {
            TraceMethod::Representation => self.scattered_representation(w),
            TraceMethod::Mollified => {
                let (total, free) = self.mollified_traces(w)?;
                let coeffs = total.coeffs.iter().zip(&free.coeffs).map(|(a, b)| a - b).collect();
                BoundaryField::new(self.l_max, 0.5, coeffs)
            }
        }
    }

    /// Coefficients of `τ R_c(λ)(w dS)`.
    pub fn apply(&self, w: &BoundaryField) -> Result<BoundaryField> {
        match self.method {
            TraceMethod::Representation => {
                let mut out = self.scattered_representation(w)?;
                let free = free_layer_profile(self.lambda, self.l_max, 1.0);
                for (i, c) in out.coeffs.iter_mut().enumerate() {
                    *c += free[lm_of(i).0] * w.coeffs[i];
                }
                Ok(out)
            }
            TraceMethod::Mollified => Ok(self.mollified_traces(w)?.0),
        }
    }

    fn scattered_representation(&self, w: &BoundaryField) -> Result<BoundaryField> {
        let nc = n_coeffs(self.l_max);
        let mut rhs = vec![Complex64::default(); self.grid.len()];
        for (k, &idx) in self.support.iter().enumerate() {
            let mut s = Complex64::default();
            for i in 0..nc.min(w.coeffs.len()) {
                s += self.profiles[k][lm_of(i).0] * self.harmonics[k][i] * w.coeffs[i];
            }
            rhs[idx] = s;
        }
        let u = self.ls.solve_scattering(&rhs)?.field;
        let q = self.ls.contrast();
        let vol = self.grid.voxel_volume();
        let mut out = BoundaryField::zeros(self.l_max, 0.5);
        for (k, &idx) in self.support.iter().enumerate() {
            let qu = u[idx] * q[idx] * vol;
            for i in 0..nc {
                out.coeffs[i] += self.profiles[k][lm_of(i).0] * self.harmonics[k][i].conj() * qu;
            }
        }
        Ok(out)
    }

    /// Total and free traces for the smeared surface source.
    fn mollified_traces(&self, w: &BoundaryField) -> Result<(BoundaryField, BoundaryField)> {
        let grid = self.grid;
        let h = grid.spacing();
        let mut f = vec![Complex64::default(); grid.len()];
        for (idx, fi) in f.iter_mut().enumerate() {
            let r = grid.center_radius(idx);
            let t = (r - 1.0).abs();
            if t >= h {
                continue;
            }
            let hat = (1.0 - t / h) / h / (r * r);
            let (x, phi) = direction(grid.center(idx));
            let y = spherical_harmonics(w.l_max, x, phi);
            let s: Complex64 = y.iter().zip(&w.coeffs).map(|(a, b)| a * b).sum();
            *fi = s * hat;
        }
        let total = self.ls.solve(&f)?.field;
        let free = self.ls.free().apply(&f);
        let quad = SphereQuadrature::new(self.l_max + 8);
        let sample = |v: &[Complex64]| -> Vec<Complex64> {
            (0..quad.len()).map(|i| interpolate(&grid, v, quad.point(i))).collect()
        };
        let trunc = |b: BoundaryField| -> Result<BoundaryField> {
            BoundaryField::new(self.l_max, 0.5, b.coeffs[..n_coeffs(self.l_max)].to_vec())
        };
        Ok((
            trunc(sh_analyze(&quad, &sample(&total), 0.5)?)?,
            trunc(sh_analyze(&quad, &sample(&free), 0.5)?)?,
        ))
    }

    /// Incident field of mode `k` on the support (zero elsewhere).
    fn incident(&self, k: usize, conj_harmonic: bool) -> Vec<Complex64> {
        let l = lm_of(k).0;
        let mut v = vec![Complex64::default(); self.grid.len()];
        for (i, &idx) in self.support.iter().enumerate() {
            let y = self.harmonics[i][k];
            v[idx] = self.profiles[i][l] * if conj_harmonic { y.conj() } else { y };
        }
        v
    }

    /// Projection `h^3 Σ ψ_k t` of a volume density onto every output mode.
    fn project(&self, t: &[Complex64]) -> Vec<Complex64> {
        let nc = n_coeffs(self.l_max);
        let vol = self.grid.voxel_volume();
        let mut out = vec![Complex64::default(); nc];
        for (i, &idx) in self.support.iter().enumerate() {
            if t[idx] == Complex64::default() {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.profiles[i][lm_of(k).0] * self.harmonics[i][k].conj() * t[idx] * vol;
            }
        }
        out
    }

    fn require_representation(&self) -> Result<()> {
        if self.method != TraceMethod::Representation {
            return Err(crate::error::Error::Config(
                "derivatives need the representation trace method".into(),
            ));
        }
        Ok(())
    }

    /// Derivative of the data operator along a contrast perturbation `dq`
    /// (per voxel, supported inside the unit ball). Two chained solves per
    /// basis column: `u = (I - GQ)^{-1} φ`, `δu = (I - GQ)^{-1} G(dq u)`.
    pub fn frechet_operator(&self, dq: &[f64]) -> Result<DataOperator> {
        self.require_representation()?;
        let nc = n_coeffs(self.l_max);
        let q = self.ls.contrast();
        let cols: Vec<Vec<Complex64>> = (0..nc)
            .into_par_iter()
            .map(|k| {
                let u = self.ls.solve_scattering(&self.incident(k, false))?.field;
                let du: Vec<Complex64> = u.iter().zip(dq).map(|(a, d)| a * d).collect();
                let rhs = self.ls.free().apply(&du);
                let delta = self.ls.solve_scattering(&rhs)?.field;
                let t: Vec<Complex64> = (0..u.len()).map(|i| du[i] + delta[i] * q[i]).collect();
                Ok(self.project(&t))
            })
            .collect::<Result<_>>()?;
        let w = |k: usize| sobolev_weight(lm_of(k).0, 0.5);
        let matrix = DMatrix::from_fn(nc, nc, |i, k| cols[k][i] * (w(i) * w(k)));
        Ok(DataOperator {
            lambda: self.lambda,
            l_max: self.l_max,
            matrix,
        })
    }

    /// Correlation field `Re Σ_k conj(u_k ṽ_k)` of the forward fields with the
    /// back-propagated residual, such that
    /// `Re Σ conj(D(dq))_{ij} Y_{ij} = h^3 Σ_voxels dq · field`.
    pub fn adjoint_correlation(&self, y: &DataOperator) -> Result<Vec<f64>> {
        self.require_representation()?;
        let nc = n_coeffs(self.l_max);
        let w = |k: usize| sobolev_weight(lm_of(k).0, 0.5);
        let psi: Vec<Vec<Complex64>> = (0..nc).map(|k| self.incident(k, true)).collect();
        let parts: Vec<Vec<f64>> = (0..nc)
            .into_par_iter()
            .map(|kp| {
                let u = self.ls.solve_scattering(&self.incident(kp, false))?.field;
                let mut z = vec![Complex64::default(); self.grid.len()];
                for (k, p) in psi.iter().enumerate() {
                    let a = y.matrix[(k, kp)].conj() * (w(k) * w(kp));
                    if a == Complex64::default() {
                        continue;
                    }
                    for &idx in &self.support {
                        z[idx] += p[idx] * a;
                    }
                }
                let v = self.ls.solve_scattering(&z)?.field;
                Ok(u.iter().zip(&v).map(|(a, b)| (a * b).re).collect())
            })
            .collect::<Result<_>>()?;
        let mut field = vec![0.0; self.grid.len()];
        for p in parts {
            field.iter_mut().zip(&p).for_each(|(f, x)| *f += x);
        }
        Ok(field)
    }

    /// Full data operator, one volume solve per basis column.
    pub fn data_operator(&self) -> Result<DataOperator> {
        let nc = n_coeffs(self.l_max);
        let cols: Vec<BoundaryField> = (0..nc)
            .into_par_iter()
            .map(|k| {
                let (l, m) = lm_of(k);
                self.scattered_trace(&BoundaryField::basis(self.l_max, -0.5, l, m))
            })
            .collect::<Result<_>>()?;
        let matrix = DMatrix::from_fn(nc, nc, |i, k| cols[k].coeffs[i] * sobolev_weight(lm_of(i).0, 0.5));
        Ok(DataOperator {
            lambda: self.lambda,
            l_max: self.l_max,
            matrix,
        })
    }
}
