//! Weight profile for a square well and its inequality report.

use hsfwi::weights::{build_psi, lowered_control, solve_u_ode, verify_weight_inequalities, RadialPotential};

fn main() -> hsfwi::Result<()> {
    let well = RadialPotential::new(vec![1.0], vec![1.0])?;
    let profile = build_psi(&well, 1.0, 0.05, 0.01)?;
    println!("B = {:.6e}, R0 = {:.6}", profile.b, profile.r0);
    for h in [0.1, 0.05, 0.025] {
        let solved = solve_u_ode(&profile, h)?;
        let report = verify_weight_inequalities(&solved, 1e-8)?;
        let u_max = solved.u.iter().copied().fold(0.0, f64::max);
        println!("h = {h}: max u {u_max:.6}, violations {}", report.violation_count());
        if h == 0.1 {
            let control = verify_weight_inequalities(&lowered_control(&solved, 0.1), 1e-8)?;
            println!("lowered control: {} violations", control.violation_count());
        }
    }
    Ok(())
}
