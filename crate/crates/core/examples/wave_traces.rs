//! Boundary traces of the scattered wave from a band-limited monopole burst.

use hsfwi::boundary::{data_operator, lm_index, Medium};
use hsfwi::helmholtz::RadialLayers;
use hsfwi::timedomain::{synthesize_trace, write_trace_csv, BandSource, DataSeries, FrequencyGrid, TraceKind};
use num_complex::Complex64;

fn main() -> hsfwi::Result<()> {
    let lambda0 = 2.0;
    let l_max = 4;
    let grid = FrequencyGrid::new(lambda0)?;
    let m = Medium::Radial(RadialLayers::new(vec![0.6], vec![1.4])?);
    let ops = grid.nodes.iter().map(|l| data_operator(*l, &m, l_max)).collect::<hsfwi::Result<_>>()?;
    let data = DataSeries::new(grid, ops)?;
    let mut f = BandSource::new(lambda0, l_max, 0);
    f.set(0, lm_index(0, 0), Complex64::new(1.0, 0.0));
    let times: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
    let traces = synthesize_trace(&data, &f, &times, TraceKind::Difference)?;
    write_trace_csv(std::io::stdout().lock(), &traces)?;
    Ok(())
}
