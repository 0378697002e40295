//! Spherical-harmonic analysis on the unit sphere, Sobolev norms and the
//! boundary data operators built from single-layer potentials.

mod data;
mod dtn;
mod voxel;

pub use data::{
    data_operator, free_layer_profile, single_layer_apply, DataOperator, Medium, RadialSingleLayer,
};
pub use dtn::{dtn_map, verify_layer_dtn_identity, DtnIdentityReport};
pub use voxel::{TraceMethod, VoxelSingleLayer};

use crate::error::{Error, Result};
use crate::special::gauss_legendre;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Index of `(l, m)` in a coefficient vector.
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Degree and order for a coefficient index.
pub fn lm_of(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

pub fn n_coeffs(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// `(1 + l(l+1))^{s/2}`.
pub fn sobolev_weight(l: usize, s: f64) -> f64 {
    (1.0 + (l * (l + 1)) as f64).powf(s / 2.0)
}

/// Orthonormal complex spherical harmonics with the Condon–Shortley phase,
/// all degrees up to `l_max`, at polar cosine `x` and azimuth `phi`.
pub fn spherical_harmonics(l_max: usize, x: f64, phi: f64) -> Vec<Complex64> {
    let n = l_max + 1;
    let sin_t = (1.0 - x * x).max(0.0).sqrt();
    // normalized associated Legendre functions p[l][m], m >= 0
    let mut p = vec![vec![0.0; n]; n];
    p[0][0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..n {
        p[m][m] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t * p[m - 1][m - 1];
    }
    for m in 0..n {
        if m + 1 < n {
            p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * x * p[m][m];
        }
        for l in m + 2..n {
            let a = |l: usize| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
            p[l][m] = a(l) * (x * p[l - 1][m] - p[l - 2][m] / a(l - 1));
        }
    }
    let mut out = vec![Complex64::default(); n * n];
    for l in 0..n {
        for m in 0..=l {
            let e = Complex64::from_polar(1.0, m as f64 * phi);
            let y = e * p[l][m];
            out[lm_index(l, m as i64)] = y;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[lm_index(l, -(m as i64))] = y.conj() * sign;
            }
        }
    }
    out
}

/// Spherical-harmonic coefficients `u_lm`, `l <= l_max`, with a declared
/// Sobolev index.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub l_max: usize,
    pub s: f64,
    pub coeffs: Vec<Complex64>,
}

impl BoundaryField {
    pub fn zeros(l_max: usize, s: f64) -> Self {
        Self {
            l_max,
            s,
            coeffs: vec![Complex64::default(); n_coeffs(l_max)],
        }
    }

    pub fn new(l_max: usize, s: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != n_coeffs(l_max) {
            return Err(Error::DimensionMismatch {
                expected: n_coeffs(l_max),
                got: coeffs.len(),
            });
        }
        Ok(Self { l_max, s, coeffs })
    }

    /// Single harmonic `Y_lm` with coefficient one.
    pub fn unit(l_max: usize, s: f64, l: usize, m: i64) -> Self {
        let mut f = Self::zeros(l_max, s);
        f.coeffs[lm_index(l, m)] = Complex64::new(1.0, 0.0);
        f
    }

    /// Element `(1 + l(l+1))^{-s/2} Y_lm` of the `H^s`-orthonormal basis.
    pub fn basis(l_max: usize, s: f64, l: usize, m: i64) -> Self {
        let mut f = Self::zeros(l_max, s);
        f.coeffs[lm_index(l, m)] = Complex64::new(sobolev_weight(l, -s), 0.0);
        f
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.coeffs[lm_index(l, m)]
    }

    /// `L^2(S^2)` pairing `sum u_lm conj(v_lm)`.
    pub fn inner(&self, other: &BoundaryField) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }
}

/// Multiplier norm `(sum (1 + l(l+1))^s |u_lm|^2)^{1/2}`.
pub fn sobolev_norm(u: &BoundaryField, s: f64) -> f64 {
    u.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (l, _) = lm_of(i);
            sobolev_weight(l, s).powi(2) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Product rule on the sphere exact for harmonics of total degree `2 l_max`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub l_max: usize,
    /// `(cos θ, φ)` per node.
    pub nodes: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    harmonics: Vec<Vec<Complex64>>,
}

impl SphereQuadrature {
    pub fn new(l_max: usize) -> Self {
        let (x, wx) = gauss_legendre(l_max + 1);
        let nphi = 2 * l_max + 1;
        let mut nodes = Vec::with_capacity(x.len() * nphi);
        let mut weights = Vec::with_capacity(x.len() * nphi);
        for (xi, wi) in x.iter().zip(&wx) {
            for k in 0..nphi {
                nodes.push((*xi, 2.0 * PI * k as f64 / nphi as f64));
                weights.push(wi * 2.0 * PI / nphi as f64);
            }
        }
        let harmonics = nodes.iter().map(|(x, p)| spherical_harmonics(l_max, *x, *p)).collect();
        Self {
            l_max,
            nodes,
            weights,
            harmonics,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cartesian unit vector of node `i`.
    pub fn point(&self, i: usize) -> [f64; 3] {
        let (x, phi) = self.nodes[i];
        let s = (1.0 - x * x).max(0.0).sqrt();
        [s * phi.cos(), s * phi.sin(), x]
    }

    pub fn harmonics_at(&self, i: usize) -> &[Complex64] {
        &self.harmonics[i]
    }
}

/// Projects point values onto `Y_lm`, `l <= l_max` of the quadrature.
pub fn sh_analyze(q: &SphereQuadrature, values: &[Complex64], s: f64) -> Result<BoundaryField> {
    if values.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: values.len(),
        });
    }
    let mut out = BoundaryField::zeros(q.l_max, s);
    for (i, v) in values.iter().enumerate() {
        let wv = v * q.weights[i];
        for (c, y) in out.coeffs.iter_mut().zip(&q.harmonics[i]) {
            *c += wv * y.conj();
        }
    }
    Ok(out)
}

/// Evaluates a coefficient vector at the quadrature nodes.
pub fn sh_synthesize(q: &SphereQuadrature, u: &BoundaryField) -> Result<Vec<Complex64>> {
    if u.l_max > q.l_max {
        return Err(Error::DimensionMismatch {
            expected: n_coeffs(q.l_max),
            got: u.coeffs.len(),
        });
    }
    Ok(q.harmonics
        .iter()
        .map(|h| h.iter().zip(&u.coeffs).map(|(y, c)| y * c).sum())
        .collect())
}
