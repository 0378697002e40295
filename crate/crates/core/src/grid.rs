//! Uniform voxel grid on the computational cube `[-S, S]^3`.

use crate::error::{Error, Result};

/// Cubic grid with `n` voxels per axis over `[-half_width, half_width]^3`.
/// Voxel values live at cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub n: usize,
    pub half_width: f64,
}

impl Grid3 {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 || !(half_width > 0.0) {
            return Err(Error::GridMismatch(format!(
                "grid needs n >= 2 and positive half width (n = {n}, S = {half_width})"
            )));
        }
        Ok(Self { n, half_width })
    }

    /// Default 48^3 grid on `[-1.5, 1.5]^3`.
    pub fn default_grid() -> Self {
        Self {
            n: 48,
            half_width: 1.5,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Center coordinate of index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Row-major linear index (x slowest, z fastest).
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn center(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let k = idx % n;
        let j = (idx / n) % n;
        let i = idx / (n * n);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    pub fn center_radius(&self, idx: usize) -> f64 {
        let [x, y, z] = self.center(idx);
        (x * x + y * y + z * z).sqrt()
    }

    pub fn check_same(&self, other: &Grid3) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{}^3 on [-{}, {}] vs {}^3 on [-{}, {}]",
                self.n, self.half_width, self.half_width, other.n, other.half_width, other.half_width
            )));
        }
        Ok(())
    }
}
