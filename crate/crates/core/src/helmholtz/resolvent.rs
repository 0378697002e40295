//! Norm estimates for cut-off resolvents `χ R_c(λ) χ`.

use super::radial::{radial_green_kernel, RadialLayers};
use super::{norm_sqr, GmresOptions, LippmannSchwinger};
use crate::error::{Error, Result};
use crate::model::Wavespeed;
use crate::special::gauss_legendre_on;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;

/// Radial indicator used as the cutoff `χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// Ball `|x| < radius` covering the inhomogeneity.
    Near { radius: f64 },
    /// Shell `inner < |x| < outer`.
    Far { inner: f64, outer: f64 },
}

impl Cutoff {
    pub fn contains(&self, r: f64) -> bool {
        match *self {
            Cutoff::Near { radius } => r < radius,
            Cutoff::Far { inner, outer } => r > inner && r < outer,
        }
    }

    fn interval(&self) -> (f64, f64) {
        match *self {
            Cutoff::Near { radius } => (0.0, radius),
            Cutoff::Far { inner, outer } => (inner, outer),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    /// Relative tolerance on the singular value estimate.
    pub tol: f64,
    pub max_iterations: usize,
    pub solver: GmresOptions,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iterations: 200,
            solver: GmresOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventNormTable {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
}

impl ResolventNormTable {
    /// `a_c = 1 + max` over the sampled frequencies.
    pub fn a_c(&self) -> f64 {
        1.0 + self.norms.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,norm")?;
        for (l, n) in self.lambdas.iter().zip(&self.norms) {
            writeln!(w, "{l:.17e},{n:.17e}")?;
        }
        Ok(())
    }
}

/// Largest singular value of a matrix-free operator by power iteration on
/// `A^H A`.
pub(crate) fn power_norm<A, B>(
    n: usize,
    apply: A,
    adjoint: B,
    tol: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<f64>
where
    A: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    B: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = norm_sqr(&v).sqrt();
    v.iter_mut().for_each(|z| *z /= nv);
    let mut sigma = 0.0;
    for _ in 0..max_iterations {
        let w = apply(&v)?;
        let s = norm_sqr(&w).sqrt();
        let mut z = adjoint(&w)?;
        let nz = norm_sqr(&z).sqrt();
        if nz == 0.0 {
            return Ok(0.0);
        }
        z.iter_mut().for_each(|x| *x /= nz);
        v = z;
        let done = (s - sigma).abs() <= tol * s;
        sigma = s;
        if done {
            break;
        }
    }
    Ok(sigma)
}

/// Estimates `||χ R_c(λ) χ||` on the voxel grid for each sampled `λ`.
pub fn estimate_resolvent_norm(
    lambdas: &[f64],
    c: &Wavespeed,
    cutoff: Cutoff,
    opts: NormOptions,
) -> Result<ResolventNormTable> {
    let grid = c.grid;
    let mask: Vec<bool> = (0..grid.len()).map(|i| cutoff.contains(grid.center_radius(i))).collect();
    if !mask.iter().any(|m| *m) {
        return Err(Error::InvalidPartition("cutoff contains no voxels".into()));
    }
    let chi = |v: &[Complex64]| -> Vec<Complex64> {
        v.iter()
            .zip(&mask)
            .map(|(z, m)| if *m { *z } else { Complex64::default() })
            .collect()
    };
    let mut norms = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let ls = LippmannSchwinger::new(lambda, c, opts.solver);
        let n = power_norm(
            grid.len(),
            |v| Ok(chi(&ls.solve(&chi(v))?.field)),
            |w| Ok(chi(&ls.solve_adjoint(&chi(w))?)),
            opts.tol * 0.1,
            opts.max_iterations,
            opts.seed,
        )?;
        norms.push(n);
    }
    Ok(ResolventNormTable {
        lambdas: lambdas.to_vec(),
        norms,
    })
}

/// Same norm for a layered radial medium, computed block by block from the
/// radial Green's kernel discretized with composite Gauss–Legendre rules.
pub fn radial_resolvent_norm(lambda: f64, layers: &RadialLayers, cutoff: Cutoff, nodes_per_panel: usize) -> Result<f64> {
    let (a, b) = cutoff.interval();
    let mut breaks = vec![a];
    breaks.extend(layers.radii.iter().copied().filter(|r| *r > a && *r < b));
    breaks.push(b);
    // refine panels to width <= 0.1
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let m = ((w[1] - w[0]) / 0.1).ceil().max(1.0) as usize;
        for p in 0..m {
            let lo = w[0] + (w[1] - w[0]) * p as f64 / m as f64;
            let hi = w[0] + (w[1] - w[0]) * (p + 1) as f64 / m as f64;
            let (x, wt) = gauss_legendre_on(nodes_per_panel, lo, hi);
            nodes.extend(x);
            weights.extend(wt);
        }
    }
    let n = nodes.len();
    let sq: Vec<f64> = nodes.iter().zip(&weights).map(|(r, w)| (w * r * r).sqrt()).collect();
    let inv_c2: Vec<f64> = nodes.iter().map(|r| layers.speed_at(*r).powi(-2)).collect();
    let l_cut = (lambda.abs() * b).ceil() as usize + 6;
    let mut best: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut l = 0;
    loop {
        let g = radial_green_kernel(lambda, layers, l)?;
        let mut mat = vec![Complex64::default(); n * n];
        for i in 0..n {
            for k in 0..n {
                mat[i * n + k] = g.eval(nodes[i], nodes[k]) * (sq[i] * sq[k] * inv_c2[k]);
            }
        }
        let apply = |v: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok((0..n).map(|i| (0..n).map(|k| mat[i * n + k] * v[k]).sum()).collect())
        };
        let adjoint = |v: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok((0..n).map(|k| (0..n).map(|i| mat[i * n + k].conj() * v[i]).sum()).collect())
        };
        let s = power_norm(n, apply, adjoint, 1e-9, 2000, l as u64)?;
        best = best.max(s);
        // past λb the blocks are evanescent and decrease monotonically
        if l >= l_cut && (s < 1e-3 * best || s < prev) {
            break;
        }
        prev = s;
        l += 1;
        if l > 200 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;

    #[test]
    fn power_norm_of_diagonal() {
        let d = [0.5, 3.0, -2.0, 1.0];
        let app = |v: &[Complex64]| Ok(v.iter().zip(&d).map(|(a, b)| a * b).collect());
        let s = power_norm(4, app, app, 1e-12, 1000, 7).unwrap();
        assert!((s - 3.0).abs() < 1e-9);
    }

    #[test]
    fn table_aggregate_and_csv() {
        let t = ResolventNormTable {
            lambdas: vec![-1.0, 0.0, 1.0],
            norms: vec![0.2, 0.3, 0.2],
        };
        assert!((t.a_c() - 1.3).abs() < 1e-15);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn grid_and_radial_estimates_agree_roughly() {
        let grid = Grid3::new(24, 0.6).unwrap();
        let c = Wavespeed::constant_one(grid);
        let cut = Cutoff::Near { radius: 0.5 };
        let t = estimate_resolvent_norm(&[0.0, 2.0, -2.0], &c, cut, NormOptions::default()).unwrap();
        let r0 = radial_resolvent_norm(0.0, &RadialLayers::homogeneous(), cut, 16).unwrap();
        let r2 = radial_resolvent_norm(2.0, &RadialLayers::homogeneous(), cut, 16).unwrap();
        assert!(t.norms.iter().all(|n| n.is_finite()));
        assert!((t.norms[0] - r0).abs() < 0.05 * r0, "{} {}", t.norms[0], r0);
        assert!((t.norms[1] - r2).abs() < 0.05 * r2, "{} {}", t.norms[1], r2);
        assert!((t.norms[1] - t.norms[2]).abs() < 1e-3 * t.norms[1]);
    }
}
