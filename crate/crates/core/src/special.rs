//! Special functions and quadrature rules shared by the solvers.
//!
//! Spherical Bessel functions use Miller's downward recurrence for `j_l`
//! and the upward recurrence for `y_l`, both seeded with the closed forms
//! for `l = 0, 1`.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Spherical Bessel functions `j_0(x) ..= j_lmax(x)` for `x >= 0`.
pub fn spherical_jn(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    let ax = x.abs();
    if ax < 1e-300 {
        out[0] = 1.0;
        return out;
    }
    if ax < 1e-3 {
        // Two-term series is exact to rounding here.
        let mut dfact = 1.0;
        let mut xl = 1.0;
        for (l, o) in out.iter_mut().enumerate() {
            if l > 0 {
                dfact *= (2 * l + 1) as f64;
                xl *= x;
            }
            let lf = l as f64;
            *o = xl / dfact * (1.0 - x * x / (2.0 * (2.0 * lf + 3.0)));
        }
        return out;
    }
    let start = lmax + 20 + (1.5 * ax) as usize + (4.0 * ax.sqrt()) as usize;
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    for l in (1..=start).rev() {
        let jm1 = (2 * l + 1) as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        let lm1 = l - 1;
        if lm1 <= lmax {
            out[lm1] = j;
            if lm1 + 1 <= lmax {
                out[lm1 + 1] = jp1;
            }
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            for o in out.iter_mut() {
                *o *= 1e-250;
            }
        }
    }
    // Normalize against whichever closed form is better conditioned.
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let scale = if j0.abs() >= j1.abs() || lmax == 0 {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for o in out.iter_mut() {
        *o *= scale;
    }
    out
}

/// Spherical Neumann functions `y_0(x) ..= y_lmax(x)` for `x > 0`.
pub fn spherical_yn(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    out[0] = -x.cos() / x;
    if lmax >= 1 {
        out[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for l in 1..lmax {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
    out
}

/// Values and first derivatives `(f_l(x), f_l'(x))` for `l = 0..=lmax`,
/// given the values `f_0..=f_{lmax+1}` of a spherical Bessel family.
pub fn with_derivatives(values: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let lmax = values.len() - 2;
    let mut d = vec![0.0; lmax + 1];
    d[0] = -values[1];
    for l in 1..=lmax {
        d[l] = values[l - 1] - (l as f64 + 1.0) / x * values[l];
    }
    (values[..=lmax].to_vec(), d)
}

/// Double factorial `(2l+1)!!`.
pub fn odd_double_factorial(l: usize) -> f64 {
    (1..=l).fold(1.0, |acc, k| acc * (2 * k + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // x^10 is degree 10 <= 2n-1 = 11
        let i: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(10)).sum();
        assert!((i - 2.0 / 11.0).abs() < 1e-14);
        let (x1, _) = gauss_legendre(7);
        assert!(x1[3].abs() < 1e-15);
    }

    #[test]
    fn bessel_closed_forms() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 20.0, 45.0] {
            let j = spherical_jn(3, x);
            let y = spherical_yn(3, x);
            let (s, c) = x.sin_cos();
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            let y2 = -(3.0 / (x * x) - 1.0) * c / x - 3.0 * s / (x * x);
            assert!((j[0] - s / x).abs() < 1e-13, "x={x}");
            assert!((j[2] - j2).abs() < 1e-10 * (1.0 + j2.abs()), "x={x}");
            assert!((y[2] - y2).abs() < 1e-10 * y2.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn small_argument_series() {
        let x = 1e-4;
        let j = spherical_jn(3, x);
        assert!((j[2] - x * x / 15.0 * (1.0 - x * x / 14.0)).abs() < 1e-22);
        let y = spherical_yn(2, x);
        assert!((y[2] + 3.0 / x.powi(3)).abs() < 1e-8 * 3.0 / x.powi(3));
    }

    #[test]
    fn wronskian_holds_for_high_order() {
        for &x in &[0.05, 0.7, 3.0, 12.0, 30.0] {
            let j = spherical_jn(14, x);
            let y = spherical_yn(14, x);
            for l in 0..13 {
                // j_{l+1} y_l - j_l y_{l+1} = 1/x^2
                let w = j[l + 1] * y[l] - j[l] * y[l + 1];
                let scale = (j[l + 1] * y[l]).abs().max((j[l] * y[l + 1]).abs());
                assert!(
                    (w - 1.0 / (x * x)).abs() < 1e-11 * scale.max(1.0 / (x * x)),
                    "l={l} x={x}"
                );
            }
        }
    }
}
