//! Outgoing Helmholtz resolvent `(-c^2 Δ - λ^2)^{-1}` at real frequency.
//!
//! Two independent solvers live here: a Lippmann–Schwinger volume integral
//! solver on the voxel grid and a semi-analytic radial solver for layered
//! media. The sign convention is `e^{iλ|x-y|}/(4π|x-y|)` for signed `λ`,
//! so that the resolvent at `-λ` is the complex conjugate of the one at `λ`.

mod fft;
mod gmres;
mod radial;
mod resolvent;

pub use fft::{Convolver, Fft3};
pub use gmres::{gmres, GmresOptions, GmresOutcome};
pub use radial::{
    radial_green_kernel, solve_radial, RadialBasis, RadialLayers, RadialRegion, RadialSolution,
    RadialSource,
};
pub use resolvent::{
    estimate_resolvent_norm, radial_resolvent_norm, Cutoff, NormOptions, ResolventNormTable,
};

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::model::Wavespeed;
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Free outgoing kernel `e^{iλ|x-y|}/(4π|x-y|)`.
pub fn free_green(lambda: f64, x: [f64; 3], y: [f64; 3]) -> Result<Complex64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::SingularKernel);
    }
    Ok(green_at(lambda, r))
}

pub(crate) fn green_at(lambda: f64, r: f64) -> Complex64 {
    (I * lambda * r).exp() / (4.0 * PI * r)
}

pub(crate) fn dist(x: [f64; 3], y: [f64; 3]) -> f64 {
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
}

/// Integral of the free kernel over a ball of radius `a` centered at the
/// singularity: `(e^{iλa}(1 - iλa) - 1)/λ^2`.
pub fn self_cell_integral(lambda: f64, a: f64) -> Complex64 {
    let z = I * lambda * a;
    if z.norm() < 0.5 {
        // a^2 * sum_{n>=2} (n-1) z^{n-2} / n!
        let mut sum = Complex64::default();
        let mut zp = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        for n in 2..24 {
            if n > 2 {
                fact *= n as f64;
            }
            sum += zp * ((n - 1) as f64 / fact);
            zp *= z;
        }
        sum * a * a
    } else {
        (z.exp() * (1.0 - z) - 1.0) / (lambda * lambda)
    }
}

/// Complex field sampled at voxel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    pub grid: Grid3,
    pub values: Vec<Complex64>,
}

impl VolumeField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn new(grid: Grid3, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidModel("non-finite volume field entry".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    /// Discrete `L^2` norm including the voxel volume.
    pub fn norm(&self) -> f64 {
        (norm_sqr(&self.values) * self.grid.voxel_volume()).sqrt()
    }

    /// Unweighted bilinear pairing `sum u v h^3` (no conjugation).
    pub fn pair(&self, other: &VolumeField) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<Complex64>()
            * self.grid.voxel_volume()
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Convolution with the free kernel on a fixed grid and frequency.
pub struct FreeResolvent {
    grid: Grid3,
    lambda: f64,
    conv: Convolver,
}

impl FreeResolvent {
    pub fn new(grid: Grid3, lambda: f64) -> Self {
        let h = grid.spacing();
        let vol = grid.voxel_volume();
        let a = (3.0 / (4.0 * PI)).powf(1.0 / 3.0) * h;
        let k0 = self_cell_integral(lambda, a);
        let conv = Convolver::new(grid.n, |i, j, k| {
            if i == 0 && j == 0 && k == 0 {
                k0
            } else {
                let r = h * ((i * i + j * j + k * k) as f64).sqrt();
                green_at(lambda, r) * vol
            }
        });
        Self { grid, lambda, conv }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.conv.apply(f)
    }
}

/// Discrete free resolvent applied to a volume field.
pub fn apply_free_resolvent(lambda: f64, f: &VolumeField) -> VolumeField {
    let g = FreeResolvent::new(f.grid, lambda);
    VolumeField {
        grid: f.grid,
        values: g.apply(&f.values),
    }
}

/// Result of a Lippmann–Schwinger solve.
#[derive(Debug, Clone)]
pub struct LsSolve {
    pub field: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// The operator `u - G[λ^2 (c^{-2} - 1) u]` for a fixed wavespeed.
pub struct LippmannSchwinger {
    free: FreeResolvent,
    inv_c2: Vec<f64>,
    q: Vec<f64>,
    opts: GmresOptions,
}

impl LippmannSchwinger {
    pub fn new(lambda: f64, c: &Wavespeed, opts: GmresOptions) -> Self {
        Self::with_free(FreeResolvent::new(c.grid, lambda), c, opts)
    }

    pub fn with_free(free: FreeResolvent, c: &Wavespeed, opts: GmresOptions) -> Self {
        let lambda = free.lambda();
        let inv_c2: Vec<f64> = c.values.iter().map(|v| 1.0 / (v * v)).collect();
        let q = inv_c2.iter().map(|s| lambda * lambda * (s - 1.0)).collect();
        Self {
            free,
            inv_c2,
            q,
            opts,
        }
    }

    pub fn free(&self) -> &FreeResolvent {
        &self.free
    }

    pub fn grid(&self) -> Grid3 {
        self.free.grid()
    }

    pub fn lambda(&self) -> f64 {
        self.free.lambda()
    }

    /// Contrast `λ^2 (c^{-2} - 1)` per voxel.
    pub fn contrast(&self) -> &[f64] {
        &self.q
    }

    pub fn inv_c2(&self) -> &[f64] {
        &self.inv_c2
    }

    pub fn apply_operator(&self, u: &[Complex64]) -> Vec<Complex64> {
        let qu: Vec<Complex64> = u.iter().zip(&self.q).map(|(a, q)| a * q).collect();
        let g = self.free.apply(&qu);
        u.iter().zip(g).map(|(a, b)| a - b).collect()
    }

    /// Solves `u - G(q u) = rhs`.
    pub fn solve_scattering(&self, rhs: &[Complex64]) -> Result<LsSolve> {
        if self.q.iter().all(|q| *q == 0.0) {
            return Ok(LsSolve {
                field: rhs.to_vec(),
                iterations: 0,
                residual: 0.0,
            });
        }
        let out = gmres(|v| self.apply_operator(v), rhs, rhs.to_vec(), self.opts);
        if !out.converged {
            return Err(Error::SolverStagnation {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        Ok(LsSolve {
            field: out.x,
            iterations: out.iterations,
            residual: out.residual,
        })
    }

    /// Solves `(-c^2 Δ - λ^2) u = f`.
    pub fn solve(&self, f: &[Complex64]) -> Result<LsSolve> {
        let src: Vec<Complex64> = f.iter().zip(&self.inv_c2).map(|(a, s)| a * s).collect();
        let rhs = self.free.apply(&src);
        self.solve_scattering(&rhs)
    }

    /// `R^H g = c^{-2} conj(R(c^2 conj g))`, the adjoint in the unweighted pairing.
    pub fn solve_adjoint(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let src: Vec<Complex64> = g
            .iter()
            .zip(&self.inv_c2)
            .map(|(a, s)| a.conj() / s)
            .collect();
        let u = self.solve(&src)?;
        Ok(u
            .field
            .iter()
            .zip(&self.inv_c2)
            .map(|(a, s)| a.conj() * s)
            .collect())
    }
}

/// Solves the Lippmann–Schwinger equation for the resolvent applied to `f`.
pub fn solve_lippmann_schwinger(
    lambda: f64,
    c: &Wavespeed,
    f: &VolumeField,
    tol: f64,
) -> Result<VolumeField> {
    c.grid.check_same(&f.grid)?;
    let ls = LippmannSchwinger::new(
        lambda,
        c,
        GmresOptions {
            tol,
            ..GmresOptions::default()
        },
    );
    let u = ls.solve(&f.values)?;
    Ok(VolumeField {
        grid: f.grid,
        values: u.field,
    })
}

/// Relative residual `||(-c^2 Δ_h - λ^2)u - f|| / ||f||` over voxels whose
/// 7-point stencil lies inside the grid.
pub fn discrete_residual(lambda: f64, c: &Wavespeed, u: &VolumeField, f: &VolumeField) -> f64 {
    let g = u.grid;
    let n = g.n;
    let h2 = g.spacing() * g.spacing();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            for k in 1..n - 1 {
                let idx = g.index(i, j, k);
                let lap = (u.values[g.index(i + 1, j, k)]
                    + u.values[g.index(i - 1, j, k)]
                    + u.values[g.index(i, j + 1, k)]
                    + u.values[g.index(i, j - 1, k)]
                    + u.values[g.index(i, j, k + 1)]
                    + u.values[g.index(i, j, k - 1)]
                    - u.values[idx] * 6.0)
                    / h2;
                let c2 = c.values[idx] * c.values[idx];
                let r = -lap * c2 - u.values[idx] * lambda * lambda - f.values[idx];
                num += r.norm_sqr();
                den += f.values[idx].norm_sqr();
            }
        }
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{wavespeed_from_model, DomainPartition, ModelVector};
    use nalgebra::DMatrix;

    #[test]
    fn free_green_examples() {
        let g = free_green(0.0, [0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert!((g - Complex64::new(1.0 / (4.0 * PI), 0.0)).norm() < 1e-15);
        let g = free_green(PI, [0.0; 3], [0.0, 1.0, 0.0]).unwrap();
        assert!((g - Complex64::new(-1.0 / (4.0 * PI), 0.0)).norm() < 1e-15);
        assert!(matches!(
            free_green(1.0, [0.2; 3], [0.2; 3]),
            Err(Error::SingularKernel)
        ));
        let (x, y) = ([0.1, -0.3, 0.7], [1.1, 0.4, -0.2]);
        assert_eq!(free_green(2.3, x, y).unwrap(), free_green(2.3, y, x).unwrap());
    }

    #[test]
    fn self_cell_series_matches_closed_form() {
        let a = 0.05;
        for lambda in [1.0, 4.0, 9.9] {
            let z = I * lambda * a;
            let closed = (z.exp() * (1.0 - z) - 1.0) / (lambda * lambda);
            let s = self_cell_integral(lambda, a);
            assert!((s - closed).norm() < 1e-9 * closed.norm(), "{s} {closed}");
        }
        assert!((self_cell_integral(0.0, 0.3) - 0.045).norm() < 1e-15);
        let s = self_cell_integral(1e-3, a);
        let taylor = Complex64::new(0.5 - (1e-3 * a).powi(2) / 8.0, 1e-3 * a / 3.0) * a * a;
        assert!((s - taylor).norm() < 1e-12 * a * a);
        // -λ conjugates
        assert!((self_cell_integral(-3.0, 0.2) - self_cell_integral(3.0, 0.2).conj()).norm() < 1e-15);
    }

    #[test]
    fn free_resolvent_of_zero_is_zero() {
        let g = Grid3::new(6, 1.5).unwrap();
        let u = apply_free_resolvent(2.0, &VolumeField::zeros(g));
        assert!(u.values.iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn point_mass_matches_kernel() {
        let g = Grid3::new(11, 1.1).unwrap();
        let mut f = VolumeField::zeros(g);
        let c = g.index(5, 5, 5);
        f.values[c] = Complex64::new(1.0, 0.0);
        let u = apply_free_resolvent(3.0, &f);
        for idx in [g.index(9, 5, 5), g.index(1, 2, 8), g.index(10, 10, 10)] {
            let expect = free_green(3.0, g.center(c), g.center(idx)).unwrap() * g.voxel_volume();
            assert!((u.values[idx] - expect).norm() < 1e-12 * expect.norm());
        }
    }

    fn layered(grid: Grid3) -> Wavespeed {
        let p = DomainPartition::radial(vec![0.5], 0.1).unwrap();
        let labels = p.labels_on(&grid).unwrap();
        wavespeed_from_model(&ModelVector::new(vec![1.5]).unwrap(), &labels).unwrap()
    }

    fn bump(grid: Grid3) -> VolumeField {
        VolumeField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + (x[2] - 0.2).powi(2);
            Complex64::new((-r2 * 8.0).exp(), 0.3 * x[0] * (-r2 * 8.0).exp())
        })
    }

    #[test]
    fn constant_speed_reduces_to_free_resolvent() {
        let g = Grid3::new(10, 1.5).unwrap();
        let f = bump(g);
        let u = solve_lippmann_schwinger(2.0, &Wavespeed::constant_one(g), &f, 1e-8).unwrap();
        assert_eq!(u, apply_free_resolvent(2.0, &f));
    }

    #[test]
    fn matches_dense_direct_solve() {
        let g = Grid3::new(9, 1.5).unwrap();
        let c = layered(g);
        let f = bump(g);
        let lambda = 2.5;
        let u = solve_lippmann_schwinger(lambda, &c, &f, 1e-12).unwrap();

        let n = g.len();
        let h = g.spacing();
        let a = (3.0 / (4.0 * PI)).powf(1.0 / 3.0) * h;
        let kern = |p: usize, q: usize| {
            if p == q {
                self_cell_integral(lambda, a)
            } else {
                free_green(lambda, g.center(p), g.center(q)).unwrap() * g.voxel_volume()
            }
        };
        let s: Vec<f64> = c.values.iter().map(|v| 1.0 / (v * v)).collect();
        let a_mat = DMatrix::from_fn(n, n, |p, q| {
            let d = if p == q { 1.0 } else { 0.0 };
            Complex64::new(d, 0.0) - kern(p, q) * lambda * lambda * (s[q] - 1.0)
        });
        let src = DMatrix::from_fn(n, 1, |q, _| f.values[q] * s[q]);
        let rhs = DMatrix::from_fn(n, n, |p, q| kern(p, q)) * src;
        let x = a_mat.lu().solve(&rhs).unwrap();
        let num: f64 = (0..n).map(|i| (x[i] - u.values[i]).norm_sqr()).sum();
        let den: f64 = (0..n).map(|i| x[i].norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-8, "rel {}", (num / den).sqrt());
    }

    #[test]
    fn conjugation_symmetry_and_reciprocity() {
        let g = Grid3::new(12, 1.5).unwrap();
        let c = layered(g);
        let lambda = 3.0;
        let mut f1 = VolumeField::zeros(g);
        let mut f2 = VolumeField::zeros(g);
        f1.values[g.index(3, 6, 5)] = Complex64::new(1.0, 0.0);
        f2.values[g.index(8, 4, 7)] = Complex64::new(1.0, 0.0);
        let up = solve_lippmann_schwinger(lambda, &c, &f1, 1e-11).unwrap();
        let um = solve_lippmann_schwinger(-lambda, &c, &f1, 1e-11).unwrap();
        let diff: f64 = up
            .values
            .iter()
            .zip(&um.values)
            .map(|(a, b)| (a - b.conj()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-9 * norm_sqr(&up.values).sqrt());
        // reciprocity for R_c: the symmetric pairing carries the c^{-2} weight
        let u2 = solve_lippmann_schwinger(lambda, &c, &f2, 1e-11).unwrap();
        let w = |u: &VolumeField, f: &VolumeField| -> Complex64 {
            u.values
                .iter()
                .zip(&f.values)
                .zip(&c.values)
                .map(|((a, b), s)| a * b / (s * s))
                .sum()
        };
        let (a, b) = (w(&up, &f2), w(&u2, &f1));
        assert!((a - b).norm() < 1e-6 * a.norm(), "{a} {b}");
    }

    #[test]
    fn adjoint_solve_is_hermitian_transpose() {
        let g = Grid3::new(10, 1.5).unwrap();
        let c = layered(g);
        let ls = LippmannSchwinger::new(
            2.0,
            &c,
            GmresOptions {
                tol: 1e-12,
                ..GmresOptions::default()
            },
        );
        let f = bump(g).values;
        let y: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.13).cos(), (i as f64 * 0.7).sin()))
            .collect();
        let rf = ls.solve(&f).unwrap().field;
        let rhy = ls.solve_adjoint(&y).unwrap();
        let lhs: Complex64 = y.iter().zip(&rf).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = rhy.iter().zip(&f).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs - rhs).norm() < 1e-9 * lhs.norm());
    }

    #[test]
    fn pde_residual_decreases_under_refinement() {
        let lambda = 2.0;
        let mut res = Vec::new();
        for n in [16, 32] {
            let g = Grid3::new(n, 1.5).unwrap();
            let c = layered(g);
            let f = VolumeField::from_fn(g, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                Complex64::new((-r2 * 6.0).exp(), 0.0)
            });
            let u = solve_lippmann_schwinger(lambda, &c, &f, 1e-10).unwrap();
            res.push(discrete_residual(lambda, &Wavespeed::constant_one(g), &u, &f)
                .min(discrete_residual(lambda, &c, &u, &f)));
        }
        assert!(res[1] < res[0], "{res:?}");
    }
}
