//! Single-layer traces and the per-frequency data operator.

use super::voxel::{TraceMethod, VoxelSingleLayer};
use super::{lm_index, lm_of, n_coeffs, sobolev_weight, BoundaryField};
use crate::error::{Error, Result};
use crate::helmholtz::{solve_radial, GmresOptions, RadialLayers, RadialSource};
use crate::model::Wavespeed;
use crate::special::{spherical_jn, spherical_yn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::Write;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Radial profiles `s_l(r)` of the free single layer on the unit sphere:
/// `R_1(λ)(Y_lm dS)(x) = s_l(|x|) Y_lm(x/|x|)`.
pub fn free_layer_profile(lambda: f64, l_max: usize, r: f64) -> Vec<Complex64> {
    let a = lambda.abs();
    let mut out = vec![Complex64::default(); l_max + 1];
    if a < 1e-12 {
        for (l, o) in out.iter_mut().enumerate() {
            let p = if r <= 1.0 { r.powi(l as i32) } else { r.powi(-(l as i32) - 1) };
            *o = Complex64::new(p / (2 * l + 1) as f64, 0.0);
        }
        return out;
    }
    let (lo, hi) = if r <= 1.0 { (r, 1.0) } else { (1.0, r) };
    let j = spherical_jn(l_max, a * lo);
    let jh = spherical_jn(l_max, a * hi);
    let yh = spherical_yn(l_max, a * hi);
    for l in 0..=l_max {
        let v = I * a * j[l] * Complex64::new(jh[l], yh[l]);
        out[l] = if lambda < 0.0 { v.conj() } else { v };
    }
    out
}

/// Matrix of `τ(R_c(λ) - R_1(λ))` from the `H^{-1/2}`-orthonormal basis
/// `b_lm = (1 + l(l+1))^{1/4} Y_lm` to `H^{1/2}`-orthonormal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DataOperator {
    pub lambda: f64,
    pub l_max: usize,
    pub matrix: DMatrix<Complex64>,
}

impl DataOperator {
    pub fn zeros(lambda: f64, l_max: usize) -> Self {
        let n = n_coeffs(l_max);
        Self {
            lambda,
            l_max,
            matrix: DMatrix::zeros(n, n),
        }
    }

    /// Block-diagonal operator with entry `(1 + l(l+1))^{1/2} d_l` on block `l`,
    /// where `d_l` is the difference of plain single-layer traces.
    pub fn from_radial(lambda: f64, l_max: usize, d: &[Complex64]) -> Self {
        let mut op = Self::zeros(lambda, l_max);
        for i in 0..n_coeffs(l_max) {
            let (l, _) = lm_of(i);
            op.matrix[(i, i)] = d[l] * sobolev_weight(l, 1.0);
        }
        op
    }

    pub fn hs_norm_sqr(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Hilbert–Schmidt norm of each diagonal `l`-block.
    pub fn block_norms(&self) -> Vec<f64> {
        (0..=self.l_max)
            .map(|l| {
                let (a, b) = (l * l, (l + 1) * (l + 1));
                let mut s = 0.0;
                for i in a..b {
                    for k in a..b {
                        s += self.matrix[(i, k)].norm_sqr();
                    }
                }
                s.sqrt()
            })
            .collect()
    }

    /// Hilbert–Schmidt norm of everything outside the diagonal blocks.
    pub fn off_block_norm(&self) -> f64 {
        let mut s = 0.0;
        for ((i, k), z) in self.matrix.iter().enumerate().map(|(n, z)| ((n % self.matrix.nrows(), n / self.matrix.nrows()), z)) {
            if lm_of(i).0 != lm_of(k).0 {
                s += z.norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn sub(&self, other: &DataOperator) -> Result<DataOperator> {
        if self.l_max != other.l_max {
            return Err(Error::DimensionMismatch {
                expected: n_coeffs(self.l_max),
                got: n_coeffs(other.l_max),
            });
        }
        Ok(DataOperator {
            lambda: self.lambda,
            l_max: self.l_max,
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Entry for the reciprocal pair `(l' -m', l -m)` with the sign picked up
    /// by conjugating harmonics.
    pub fn reciprocity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let (l, m) = lm_of(i);
            for k in 0..n {
                let (lp, mp) = lm_of(k);
                let sign = if (m + mp).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let t = self.matrix[(lm_index(lp, -mp), lm_index(l, -m))] * sign;
                worst = worst.max((self.matrix[(i, k)] - t).norm() / scale);
            }
        }
        worst
    }

    /// Rows `(lambda, l, m, l', m', re, im)`; zeros are skipped.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "lambda,l,m,lp,mp,re,im")?;
        }
        for i in 0..self.matrix.nrows() {
            let (l, m) = lm_of(i);
            for k in 0..self.matrix.ncols() {
                let z = self.matrix[(i, k)];
                if z == Complex64::default() {
                    continue;
                }
                let (lp, mp) = lm_of(k);
                writeln!(w, "{:.17e},{l},{m},{lp},{mp},{:.17e},{:.17e}", self.lambda, z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Single-layer traces for a layered radial medium, one per degree.
#[derive(Debug, Clone)]
pub struct RadialSingleLayer {
    pub lambda: f64,
    pub traces: Vec<Complex64>,
}

impl RadialSingleLayer {
    pub fn new(lambda: f64, layers: &RadialLayers, l_max: usize) -> Result<Self> {
        let traces = (0..=l_max)
            .map(|l| solve_radial(lambda, layers, l, RadialSource::SurfaceLayer).map(|s| s.trace))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lambda, traces })
    }

    pub fn apply(&self, w: &BoundaryField) -> Result<BoundaryField> {
        if w.l_max + 1 > self.traces.len() {
            return Err(Error::DimensionMismatch {
                expected: self.traces.len(),
                got: w.l_max + 1,
            });
        }
        let coeffs = w
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.traces[lm_of(i).0])
            .collect();
        BoundaryField::new(w.l_max, 0.5, coeffs)
    }
}

/// Wavespeed description accepted by the boundary operators.
#[derive(Debug, Clone)]
pub enum Medium {
    Radial(RadialLayers),
    Voxel {
        c: Wavespeed,
        method: TraceMethod,
        solver: GmresOptions,
    },
}

/// Trace on the unit sphere of `R_c(λ)(w dS)`.
pub fn single_layer_apply(lambda: f64, medium: &Medium, w: &BoundaryField) -> Result<BoundaryField> {
    match medium {
        Medium::Radial(layers) => RadialSingleLayer::new(lambda, layers, w.l_max)?.apply(w),
        Medium::Voxel { c, method, solver } => {
            VoxelSingleLayer::new(lambda, c, w.l_max, *method, *solver)?.apply(w)
        }
    }
}

/// Data operator `τ(R_c(λ) - R_1(λ))` in orthonormal coordinates.
pub fn data_operator(lambda: f64, medium: &Medium, l_max: usize) -> Result<DataOperator> {
    match medium {
        Medium::Radial(layers) => {
            let c = RadialSingleLayer::new(lambda, layers, l_max)?;
            let one = RadialSingleLayer::new(lambda, &RadialLayers::homogeneous(), l_max)?;
            let d: Vec<Complex64> = c.traces.iter().zip(&one.traces).map(|(a, b)| a - b).collect();
            Ok(DataOperator::from_radial(lambda, l_max, &d))
        }
        Medium::Voxel { c, method, solver } => {
            VoxelSingleLayer::new(lambda, c, l_max, *method, *solver)?.data_operator()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gauss_legendre_on;

    #[test]
    fn free_l0_trace_matches_surface_quadrature() {
        // ∫_S G(x - y) dS(y) for |x| = 1 reduces to (1/2) ∫_0^2 e^{iλρ} dρ
        for lambda in [0.5, 2.0, 4.0] {
            let s = free_layer_profile(lambda, 0, 1.0)[0];
            let (x, w) = gauss_legendre_on(64, 0.0, 2.0);
            let q: Complex64 = x.iter().zip(&w).map(|(r, wi)| (I * lambda * r).exp() * (0.5 * wi)).sum();
            assert!((s - q).norm() < 1e-13, "{s} {q}");
        }
    }

    #[test]
    fn profile_matches_radial_solver() {
        let hom = RadialLayers::homogeneous();
        for lambda in [-2.5, 0.0, 1.5] {
            for r in [0.3, 1.0, 1.7] {
                let p = free_layer_profile(lambda, 5, r);
                for l in 0..=5 {
                    let s = solve_radial(lambda, &hom, l, RadialSource::SurfaceLayer).unwrap().eval(r).0;
                    assert!((p[l] - s).norm() < 1e-13 * s.norm().max(1e-3), "{lambda} {r} {l}");
                }
            }
        }
    }

    #[test]
    fn homogeneous_medium_gives_zero_operator() {
        let m = Medium::Radial(RadialLayers::homogeneous());
        let op = data_operator(2.0, &m, 6).unwrap();
        assert_eq!(op.hs_norm_sqr(), 0.0);
    }

    #[test]
    fn radial_operator_is_block_diagonal_and_decays() {
        let m = Medium::Radial(RadialLayers::new(vec![0.5], vec![1.5]).unwrap());
        let op = data_operator(2.0, &m, 12).unwrap();
        assert_eq!(op.off_block_norm(), 0.0);
        let b = op.block_norms();
        // geometric decay (ratio bounded away from 1) beats any power of (1 + l)
        let ratio: Vec<f64> = (2..12).map(|l| b[l + 1] / b[l]).collect();
        assert!(ratio.iter().all(|r| *r < 0.3), "{ratio:?}");
        assert!(b[12] * 13f64.powi(8) < b[2] * 3f64.powi(8));
        assert!(op.reciprocity_defect() < 1e-14);
    }

    #[test]
    fn truncation_is_stable() {
        let m = Medium::Radial(RadialLayers::new(vec![0.4, 0.7], vec![1.3, 0.8]).unwrap());
        for lambda in [1.0, 4.0] {
            let a = data_operator(lambda, &m, 8).unwrap().hs_norm_sqr().sqrt();
            let b = data_operator(lambda, &m, 12).unwrap().hs_norm_sqr().sqrt();
            assert!((a - b).abs() <= 1e-3 * b, "{a} {b}");
        }
    }

    #[test]
    fn linear_in_density() {
        let m = Medium::Radial(RadialLayers::new(vec![0.5], vec![1.5]).unwrap());
        let mut w1 = BoundaryField::zeros(4, -0.5);
        let mut w2 = BoundaryField::zeros(4, -0.5);
        for (i, (a, b)) in w1.coeffs.iter_mut().zip(w2.coeffs.iter_mut()).enumerate() {
            *a = Complex64::new(i as f64 * 0.1, 1.0);
            *b = Complex64::new(-1.0, (i as f64).sin());
        }
        let mut w3 = w1.clone();
        for (c, d) in w3.coeffs.iter_mut().zip(&w2.coeffs) {
            *c = *c * 2.0 - d * 0.5;
        }
        let (s1, s2, s3) = (
            single_layer_apply(3.0, &m, &w1).unwrap(),
            single_layer_apply(3.0, &m, &w2).unwrap(),
            single_layer_apply(3.0, &m, &w3).unwrap(),
        );
        for i in 0..w1.coeffs.len() {
            let e = s1.coeffs[i] * 2.0 - s2.coeffs[i] * 0.5;
            assert!((s3.coeffs[i] - e).norm() < 1e-10);
        }
    }

    #[test]
    fn csv_export_lists_nonzero_entries() {
        let m = Medium::Radial(RadialLayers::new(vec![0.5], vec![1.5]).unwrap());
        let op = data_operator(1.0, &m, 2).unwrap();
        let mut buf = Vec::new();
        op.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
        assert!(text.lines().nth(1).unwrap().starts_with("1.00000000000000000e0,0,0,0,0,"));
    }
}
