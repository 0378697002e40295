//! Linearization checks for a two-shell model: quadratic remainder and
//! agreement of the two gradient routes.

use hsfwi::inversion::{gradient, gradient_assembled, remainder_probe, ForwardModel, RadialForward};
use hsfwi::model::{DomainPartition, ModelVector};
use hsfwi::timedomain::FrequencyGrid;

fn main() -> hsfwi::Result<()> {
    let part = DomainPartition::radial(vec![0.4, 0.8], 0.05)?;
    let m = RadialForward::new(&part, FrequencyGrid::new(2.0)?, 6)?;
    let x = ModelVector::new(vec![1.3, 1.1])?;
    let fit = remainder_probe(&m, &x, &[0.5, -1.0], &[2e-2, 1e-2, 5e-3], 1.5)?;
    for (s, r) in fit.scales.iter().zip(&fit.remainders) {
        println!("s = {s:.1e}: remainder {r:.3e}");
    }
    println!("slope {:.3}", fit.slope);

    let res = m.forward(&x)?.sub(&m.forward(&ModelVector::new(vec![1.2, 1.15])?)?)?;
    println!("adjoint state {:?}", gradient(&m, &x, &res)?);
    println!("assembled     {:?}", gradient_assembled(&m, &x, &res)?);
    Ok(())
}
