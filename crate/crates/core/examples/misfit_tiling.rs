//! Windowed time-domain misfit summed over shifted windows against the
//! closed-form frequency integral.

use hsfwi::boundary::{data_operator, Medium};
use hsfwi::helmholtz::RadialLayers;
use hsfwi::timedomain::{hs_misfit_frequency, shift_energies, DataSeries, FrequencyGrid, TimeWindow};
use std::f64::consts::PI;

fn series(g: &FrequencyGrid, b: f64, l_max: usize) -> hsfwi::Result<DataSeries> {
    let m = Medium::Radial(RadialLayers::new(vec![0.5], vec![b])?);
    let ops = g.nodes.iter().map(|l| data_operator(*l, &m, l_max)).collect::<hsfwi::Result<_>>()?;
    DataSeries::new(g.clone(), ops)
}

fn main() -> hsfwi::Result<()> {
    let lambda0 = 2.0;
    let l_max = 8;
    let g0 = FrequencyGrid::new(lambda0)?;
    let closed = hs_misfit_frequency(&series(&g0, 1.5, l_max)?.sub(&series(&g0, 1.3, l_max)?)?);
    let top = 64;
    let g = FrequencyGrid::resolving(lambda0, (top as f64 + 1.0) * PI / lambda0)?;
    let diff = series(&g, 1.5, l_max)?.sub(&series(&g, 1.3, l_max)?)?;
    let e = shift_energies(&diff, &TimeWindow::new(lambda0, 0.0), top, 64);
    println!("closed form {closed:.6e}");
    for l in [1, 2, 4, 8, 16, 32, 64] {
        let p = e.partial(l);
        println!("L = {l:3}: {p:.6e}  relative gap {:.3e}", (closed - p) / closed);
    }
    Ok(())
}
