//! Zero-padded 3-D FFT convolution with a translation-invariant kernel.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// In-place 3-D FFT on a cube of side `m`, row-major with the last axis
/// contiguous.
pub struct Fft3 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn side(&self) -> usize {
        self.m
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis: contiguous rows
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); m];
        // middle axis
        for i in 0..m {
            for k in 0..m {
                for j in 0..m {
                    line[j] = data[(i * m + j) * m + k];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for j in 0..m {
                    data[(i * m + j) * m + k] = line[j];
                }
            }
        }
        // first axis
        for j in 0..m {
            for k in 0..m {
                for i in 0..m {
                    line[i] = data[(i * m + j) * m + k];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for i in 0..m {
                    data[(i * m + j) * m + k] = line[i];
                }
            }
        }
    }
}

/// Linear convolution `u[x] = sum_y K[x - y] f[y]` on an `n^3` grid, with
/// the kernel given as a function of the integer offset.
pub struct Convolver {
    n: usize,
    fft: Fft3,
    kernel_hat: Vec<Complex64>,
}

impl Convolver {
    pub fn new(n: usize, kernel: impl Fn(i64, i64, i64) -> Complex64) -> Self {
        let m = 2 * n;
        let fft = Fft3::new(m);
        let mut k = vec![Complex64::default(); m * m * m];
        let wrap = |d: i64| -> i64 { if d < m as i64 / 2 { d } else { d - m as i64 } };
        for i in 0..m {
            let di = wrap(i as i64);
            for j in 0..m {
                let dj = wrap(j as i64);
                for l in 0..m {
                    let dl = wrap(l as i64);
                    // offset +-n never occurs between two cells of an n-grid
                    if di.unsigned_abs() as usize == n
                        || dj.unsigned_abs() as usize == n
                        || dl.unsigned_abs() as usize == n
                    {
                        continue;
                    }
                    k[(i * m + j) * m + l] = kernel(di, dj, dl);
                }
            }
        }
        fft.forward(&mut k);
        Self {
            n,
            fft,
            kernel_hat: k,
        }
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let m = 2 * n;
        assert_eq!(f.len(), n * n * n);
        let mut buf = vec![Complex64::default(); m * m * m];
        for i in 0..n {
            for j in 0..n {
                let src = (i * n + j) * n;
                let dst = (i * m + j) * m;
                buf[dst..dst + n].copy_from_slice(&f[src..src + n]);
            }
        }
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft.inverse(&mut buf);
        let scale = 1.0 / (m * m * m) as f64;
        let mut out = vec![Complex64::default(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                let src = (i * m + j) * m;
                let dst = (i * n + j) * n;
                for l in 0..n {
                    out[dst + l] = buf[src + l] * scale;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let n = 5;
        let kernel = |a: i64, b: i64, c: i64| {
            Complex64::new(1.0 / (1.0 + (a * a + 2 * b * b + 3 * c * c) as f64), a as f64 * 0.1)
        };
        let conv = Convolver::new(n, kernel);
        let f: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let u = conv.apply(&f);
        for x in [(0, 0, 0), (2, 3, 1), (4, 4, 4), (1, 0, 3)] {
            let mut s = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        s += kernel(
                            x.0 as i64 - i as i64,
                            x.1 as i64 - j as i64,
                            x.2 as i64 - l as i64,
                        ) * f[(i * n + j) * n + l];
                    }
                }
            }
            let got = u[(x.0 * n + x.1) * n + x.2];
            assert!((got - s).norm() < 1e-12, "{got} vs {s}");
        }
    }
}
