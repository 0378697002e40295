//! Round trip of a band-limited boundary function through the sphere quadrature.

use hsfwi::boundary::{lm_index, sh_analyze, sh_synthesize, sobolev_norm, BoundaryField, SphereQuadrature};
use num_complex::Complex64;

fn main() -> hsfwi::Result<()> {
    let l_max = 6;
    let q = SphereQuadrature::new(l_max);
    let mut u = BoundaryField::zeros(l_max, 0.5);
    u.coeffs[lm_index(2, -1)] = Complex64::new(1.0, -0.5);
    u.coeffs[lm_index(5, 3)] = Complex64::new(0.25, 0.0);
    let values = sh_synthesize(&q, &u)?;
    let back = sh_analyze(&q, &values, 0.5)?;
    let err: f64 = u.coeffs.iter().zip(&back.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("{} quadrature nodes, max coefficient error {err:.2e}", q.len());
    println!("H^1/2 norm {:.6}", sobolev_norm(&u, 0.5));
    Ok(())
}
