//! Separation of variables for piecewise-constant radial wavespeeds.

use crate::error::{Error, Result};
use crate::special::{gauss_legendre_on, spherical_jn, spherical_yn, with_derivatives};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO_FREQ: f64 = 1e-12;

/// Interface radii `r_1 < ... < r_N < 1` and layer speeds `b_1..b_N`; the
/// speed is 1 beyond `r_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLayers {
    pub radii: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl RadialLayers {
    pub fn new(radii: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        if radii.len() != speeds.len() {
            return Err(Error::DimensionMismatch {
                expected: radii.len(),
                got: speeds.len(),
            });
        }
        if radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition(format!("radii {radii:?} must increase inside (0,1)")));
        }
        if speeds.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidModel(format!("speeds {speeds:?} must be positive")));
        }
        Ok(Self { radii, speeds })
    }

    pub fn homogeneous() -> Self {
        Self {
            radii: vec![],
            speeds: vec![],
        }
    }

    pub fn speed_at(&self, r: f64) -> f64 {
        self.radii
            .iter()
            .position(|ri| r < *ri)
            .map_or(1.0, |j| self.speeds[j])
    }

    /// Same interfaces, new speeds.
    pub fn with_speeds(&self, speeds: &[f64]) -> Result<Self> {
        Self::new(self.radii.clone(), speeds.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialSource {
    /// Unit surface density at `r = 1`, outgoing beyond.
    SurfaceLayer,
    /// Interior problem with `u(1) = 1`.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialBasis {
    /// `α j_l(k r) + β y_l(k r)`.
    Bessel { k: f64 },
    /// `α r^l + β r^{-l-1}`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRegion {
    pub inner: f64,
    pub outer: f64,
    pub basis: RadialBasis,
    pub alpha: Complex64,
    pub beta: Complex64,
}

/// `[f1, f1', f2, f2']` of the region basis at `r`.
fn basis_values(basis: RadialBasis, l: usize, r: f64, need_second: bool) -> [f64; 4] {
    match basis {
        RadialBasis::Bessel { k } => {
            let x = k * r;
            let (j, dj) = with_derivatives(&spherical_jn(l + 1, x), x);
            let (y, dy) = if need_second {
                let (y, dy) = with_derivatives(&spherical_yn(l + 1, x), x);
                (y[l], dy[l])
            } else {
                (0.0, 0.0)
            };
            [j[l], k * dj[l], y, k * dy]
        }
        RadialBasis::Power => {
            let lf = l as f64;
            [
                r.powi(l as i32),
                if l == 0 { 0.0 } else { lf * r.powi(l as i32 - 1) },
                r.powi(-(l as i32) - 1),
                -(lf + 1.0) * r.powi(-(l as i32) - 2),
            ]
        }
    }
}

/// Wronskian `f1 f2' - f1' f2` of the basis.
fn basis_wronskian(basis: RadialBasis, l: usize, r: f64) -> f64 {
    match basis {
        RadialBasis::Bessel { k } => 1.0 / (k * r * r),
        RadialBasis::Power => -((2 * l + 1) as f64) / (r * r),
    }
}

impl RadialRegion {
    fn eval(&self, l: usize, r: f64) -> (Complex64, Complex64) {
        let b = basis_values(self.basis, l, r, self.beta != Complex64::default());
        let mut u = self.alpha * b[0];
        let mut du = self.alpha * b[1];
        if self.beta != Complex64::default() {
            u += self.beta * b[2];
            du += self.beta * b[3];
        }
        (u, du)
    }

    fn matching(basis: RadialBasis, l: usize, r: f64, u: Complex64, du: Complex64, inner: f64, outer: f64) -> Self {
        let b = basis_values(basis, l, r, true);
        let w = basis_wronskian(basis, l, r);
        Self {
            inner,
            outer,
            basis,
            alpha: (u * b[3] - du * b[2]) / w,
            beta: (du * b[0] - u * b[1]) / w,
        }
    }
}

/// Piecewise representation of a radial function `u(r)` for one `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub lambda: f64,
    pub l: usize,
    pub source: RadialSource,
    pub regions: Vec<RadialRegion>,
    /// `u(1)`.
    pub trace: Complex64,
    /// `u'(1-)`.
    pub inner_derivative: Complex64,
}

impl RadialSolution {
    /// Value and radial derivative at `r`.
    pub fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let r = r.max(1e-12);
        let reg = self
            .regions
            .iter()
            .find(|g| r <= g.outer)
            .unwrap_or_else(|| self.regions.last().unwrap());
        reg.eval(self.l, r)
    }

    /// Largest mismatch of `(u, u')` across internal interfaces, relative to
    /// the local magnitude. The source sphere is skipped.
    pub fn continuity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.regions.windows(2) {
            let r = w[0].outer;
            if self.source == RadialSource::SurfaceLayer && r == 1.0 {
                continue;
            }
            let (u0, d0) = w[0].eval(self.l, r);
            let (u1, d1) = w[1].eval(self.l, r);
            let scale = u0.norm() + d0.norm() + f64::MIN_POSITIVE;
            worst = worst.max(((u0 - u1).norm() + (d0 - d1).norm()) / scale);
        }
        worst
    }

    /// Jump `u'(1+) - u'(1-)` across the source sphere.
    pub fn source_jump(&self) -> Complex64 {
        let ext = self.regions.last().unwrap();
        let (_, d) = ext.eval(self.l, 1.0);
        d - self.inner_derivative
    }

    /// `∫_a^b u(r)^2 r^2 dr` by Gauss–Legendre with `n` nodes.
    pub fn integral_u_squared(&self, a: f64, b: f64, n: usize) -> Complex64 {
        let (x, w) = gauss_legendre_on(n, a, b);
        x.iter()
            .zip(&w)
            .map(|(r, wi)| {
                let u = self.eval(*r).0;
                u * u * (r * r * wi)
            })
            .sum()
    }
}

fn conj_regions(regions: &mut [RadialRegion]) {
    for g in regions {
        g.alpha = g.alpha.conj();
        g.beta = g.beta.conj();
    }
}

fn interior_basis(layers: &RadialLayers, a: f64, j: usize) -> RadialBasis {
    if a < ZERO_FREQ {
        RadialBasis::Power
    } else {
        let c = if j < layers.speeds.len() { layers.speeds[j] } else { 1.0 };
        RadialBasis::Bessel { k: a / c }
    }
}

/// Regular solution propagated outward up to `r_end`, scaled by `α = 1` in
/// the innermost layer.
fn regular_regions(layers: &RadialLayers, a: f64, l: usize, r_end: f64) -> Vec<RadialRegion> {
    let mut bounds = layers.radii.clone();
    bounds.push(r_end);
    let mut out: Vec<RadialRegion> = Vec::with_capacity(bounds.len());
    let mut inner = 0.0;
    for (j, &outer) in bounds.iter().enumerate() {
        let basis = interior_basis(layers, a, j);
        let reg = match out.last() {
            None => RadialRegion {
                inner,
                outer,
                basis,
                alpha: Complex64::new(1.0, 0.0),
                beta: Complex64::default(),
            },
            Some(prev) => {
                let (u, du) = prev.eval(l, inner);
                RadialRegion::matching(basis, l, inner, u, du, inner, outer)
            }
        };
        out.push(reg);
        inner = outer;
    }
    out
}

fn scale_regions(regions: &mut [RadialRegion], s: Complex64) {
    for g in regions {
        g.alpha *= s;
        g.beta *= s;
    }
}

/// Solves one angular block of the layered problem.
///
/// For [`RadialSource::SurfaceLayer`] the result is the outgoing solution of
/// `(-c^2 Δ - λ^2) u = δ(r - 1)` in the `l`-th harmonic; for
/// [`RadialSource::Dirichlet`] it is the interior solution with `u(1) = 1`.
pub fn solve_radial(lambda: f64, layers: &RadialLayers, l: usize, source: RadialSource) -> Result<RadialSolution> {
    let a = lambda.abs();
    let mut regions = regular_regions(layers, a, l, 1.0);
    let (uin, duin) = regions.last().unwrap().eval(l, 1.0);
    let sol = match source {
        RadialSource::SurfaceLayer => {
            let (ext_basis, uout, duout, ext_alpha, ext_beta) = if a < ZERO_FREQ {
                let b = basis_values(RadialBasis::Power, l, 1.0, true);
                (RadialBasis::Power, b[2].into(), b[3].into(), Complex64::default(), Complex64::new(1.0, 0.0))
            } else {
                let b = basis_values(RadialBasis::Bessel { k: a }, l, 1.0, true);
                (
                    RadialBasis::Bessel { k: a },
                    Complex64::new(b[0], b[2]),
                    Complex64::new(b[1], b[3]),
                    Complex64::new(1.0, 0.0),
                    I,
                )
            };
            let wr = uin * duout - duin * uout;
            let scale = (uin * duout).norm() + (duin * uout).norm();
            if !(wr.norm() > 1e-14 * scale) {
                return Err(Error::DegenerateFrequency(format!(
                    "matching system singular at lambda = {lambda}, l = {l}"
                )));
            }
            let c = -uout / wr;
            scale_regions(&mut regions, c);
            let gamma = c * uin / uout;
            regions.push(RadialRegion {
                inner: 1.0,
                outer: f64::INFINITY,
                basis: ext_basis,
                alpha: ext_alpha * gamma,
                beta: ext_beta * gamma,
            });
            RadialSolution {
                lambda,
                l,
                source,
                regions,
                trace: c * uin,
                inner_derivative: c * duin,
            }
        }
        RadialSource::Dirichlet => {
            let kappa = a.max(l as f64 + 1.0);
            let condition = (uin.norm() + duin.norm() / kappa) / uin.norm();
            if !(condition < 1e12) {
                return Err(Error::NearEigenvalue { l, condition });
            }
            let s = uin.inv();
            scale_regions(&mut regions, s);
            RadialSolution {
                lambda,
                l,
                source,
                regions,
                trace: Complex64::new(1.0, 0.0),
                inner_derivative: duin * s,
            }
        }
    };
    let mut sol = sol;
    if lambda < 0.0 {
        conj_regions(&mut sol.regions);
        sol.trace = sol.trace.conj();
        sol.inner_derivative = sol.inner_derivative.conj();
    }
    Ok(sol)
}

/// Kernel `g_l(r, s)` of the `l`-th radial block of `(-Δ - λ^2/c^2)^{-1}`
/// with respect to `s^2 ds`, outgoing at infinity.
pub struct RadialGreen {
    l: usize,
    regular: Vec<RadialRegion>,
    outgoing: Vec<RadialRegion>,
    /// `r^2 (u_in u_out' - u_in' u_out)`.
    wr: Complex64,
    conj: bool,
}

impl RadialGreen {
    pub fn eval(&self, r: f64, s: f64) -> Complex64 {
        let (lo, hi) = if r < s { (r, s) } else { (s, r) };
        let lo = lo.max(1e-12);
        let find = |regs: &[RadialRegion], x: f64| -> Complex64 {
            let g = regs.iter().find(|g| x <= g.outer).unwrap_or_else(|| regs.last().unwrap());
            g.eval(self.l, x).0
        };
        let v = -find(&self.regular, lo) * find(&self.outgoing, hi) / self.wr;
        if self.conj {
            v.conj()
        } else {
            v
        }
    }
}

/// Builds the radial Green's kernel for block `l`.
pub fn radial_green_kernel(lambda: f64, layers: &RadialLayers, l: usize) -> Result<RadialGreen> {
    let a = lambda.abs();
    let last = layers.radii.last().copied().unwrap_or(0.0);
    let regular = regular_regions(layers, a, l, f64::INFINITY);
    // outgoing solution: h_l(a r) beyond the last interface, propagated inward
    let n = layers.radii.len();
    let mut outgoing = vec![
        RadialRegion {
            inner: 0.0,
            outer: 0.0,
            basis: RadialBasis::Power,
            alpha: Complex64::default(),
            beta: Complex64::default(),
        };
        n + 1
    ];
    outgoing[n] = if a < ZERO_FREQ {
        RadialRegion {
            inner: last,
            outer: f64::INFINITY,
            basis: RadialBasis::Power,
            alpha: Complex64::default(),
            beta: Complex64::new(1.0, 0.0),
        }
    } else {
        RadialRegion {
            inner: last,
            outer: f64::INFINITY,
            basis: RadialBasis::Bessel { k: a },
            alpha: Complex64::new(1.0, 0.0),
            beta: I,
        }
    };
    for j in (0..n).rev() {
        let r = layers.radii[j];
        let (u, du) = outgoing[j + 1].eval(l, r);
        let inner = if j == 0 { 0.0 } else { layers.radii[j - 1] };
        outgoing[j] = RadialRegion::matching(interior_basis(layers, a, j), l, r, u, du, inner, r);
    }
    let r0 = if n == 0 { 1.0 } else { layers.radii[0] * 0.5 };
    let (ui, dui) = regular.iter().find(|g| r0 <= g.outer).unwrap().eval(l, r0);
    let (uo, duo) = outgoing.iter().find(|g| r0 <= g.outer).unwrap().eval(l, r0);
    let wr = (ui * duo - dui * uo) * r0 * r0;
    if !(wr.norm() > 0.0 && wr.norm().is_finite()) {
        return Err(Error::DegenerateFrequency(format!(
            "radial Green's kernel singular at lambda = {lambda}, l = {l}"
        )));
    }
    Ok(RadialGreen {
        l,
        regular,
        outgoing,
        wr,
        conj: lambda < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::spherical_yn;

    fn two_layer() -> RadialLayers {
        RadialLayers::new(vec![0.5], vec![1.5]).unwrap()
    }

    #[test]
    fn homogeneous_trace_closed_form() {
        for &lambda in &[0.7, 2.0, 5.3] {
            for l in 0..6 {
                let s = solve_radial(lambda, &RadialLayers::homogeneous(), l, RadialSource::SurfaceLayer).unwrap();
                let j = spherical_jn(l, lambda)[l];
                let y = spherical_yn(l, lambda)[l];
                let expect = I * lambda * j * Complex64::new(j, y);
                assert!((s.trace - expect).norm() < 1e-12 * expect.norm().max(1e-3));
                if l == 0 {
                    // i λ j0 h0 = sin(λ) e^{iλ} / λ
                    let closed = (I * lambda).exp() * lambda.sin() / lambda;
                    assert!((s.trace - closed).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn homogeneous_l0_matches_ode_integration() {
        // integrate u'' + 2u'/r + λ^2 u = 0 from r=1 inward and outward with RK4
        let lambda = 1.7;
        let s = solve_radial(lambda, &RadialLayers::homogeneous(), 0, RadialSource::SurfaceLayer).unwrap();
        let rhs = |r: f64, y: [Complex64; 2]| [y[1], -y[1] * (2.0 / r) - y[0] * lambda * lambda];
        let rk4 = |mut r: f64, mut y: [Complex64; 2], r_end: f64, n: usize| {
            let h = (r_end - r) / n as f64;
            for _ in 0..n {
                let k1 = rhs(r, y);
                let k2 = rhs(r + h / 2.0, [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)]);
                let k3 = rhs(r + h / 2.0, [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)]);
                let k4 = rhs(r + h, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
                for i in 0..2 {
                    y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                }
                r += h;
            }
            y
        };
        let y = rk4(1.0, [s.trace, s.inner_derivative], 0.3, 4000);
        let (u, du) = s.eval(0.3);
        assert!((y[0] - u).norm() < 1e-9 && (y[1] - du).norm() < 1e-9);
        let y = rk4(1.0, [s.trace, s.inner_derivative - 1.0], 2.5, 4000);
        let (u, du) = s.eval(2.5);
        assert!((y[0] - u).norm() < 1e-9 && (y[1] - du).norm() < 1e-9);
    }

    #[test]
    fn interfaces_are_continuous_and_jump_is_unit() {
        let layers = RadialLayers::new(vec![0.3, 0.6, 0.85], vec![1.4, 0.8, 1.2]).unwrap();
        for &lambda in &[0.0, 0.5, 3.0, -3.0, 7.5] {
            for l in [0, 1, 4, 9] {
                let s = solve_radial(lambda, &layers, l, RadialSource::SurfaceLayer).unwrap();
                assert!(s.continuity_residual() < 1e-12, "{lambda} {l}");
                assert!((s.source_jump() + 1.0).norm() < 1e-10, "{lambda} {l} {}", s.source_jump());
                assert_eq!(s.regions[0].beta, Complex64::default());
            }
        }
    }

    #[test]
    fn zero_frequency_trace() {
        for l in 0..5 {
            let s = solve_radial(0.0, &two_layer(), l, RadialSource::SurfaceLayer).unwrap();
            assert!((s.trace - 1.0 / (2 * l + 1) as f64).norm() < 1e-14);
        }
    }

    #[test]
    fn negative_frequency_conjugates() {
        let a = solve_radial(2.2, &two_layer(), 3, RadialSource::SurfaceLayer).unwrap();
        let b = solve_radial(-2.2, &two_layer(), 3, RadialSource::SurfaceLayer).unwrap();
        assert!((a.trace.conj() - b.trace).norm() < 1e-15);
        assert!((a.eval(0.4).0.conj() - b.eval(0.4).0).norm() < 1e-14);
    }

    #[test]
    fn dirichlet_detects_eigenvalue() {
        // first Dirichlet eigenvalue of the unit ball for l = 0 is π
        let err = solve_radial(std::f64::consts::PI, &RadialLayers::homogeneous(), 0, RadialSource::Dirichlet);
        assert!(matches!(err, Err(Error::NearEigenvalue { l: 0, .. })));
        let ok = solve_radial(2.0, &two_layer(), 2, RadialSource::Dirichlet).unwrap();
        assert!((ok.eval(1.0).0 - 1.0).norm() < 1e-14);
    }

    #[test]
    fn green_kernel_reproduces_surface_solution() {
        // the surface-layer solution equals g_l(r, 1) since c = 1 at the source
        let layers = two_layer();
        for &lambda in &[1.3, -2.0, 0.0] {
            let g = radial_green_kernel(lambda, &layers, 2).unwrap();
            let s = solve_radial(lambda, &layers, 2, RadialSource::SurfaceLayer).unwrap();
            for r in [0.2, 0.7, 1.0, 1.6] {
                let a = g.eval(r, 1.0);
                let b = s.eval(r).0;
                assert!((a - b).norm() < 1e-12 * b.norm(), "{lambda} {r} {a} {b}");
            }
            assert!((g.eval(0.3, 0.8) - g.eval(0.8, 0.3)).norm() < 1e-15);
        }
    }
}
