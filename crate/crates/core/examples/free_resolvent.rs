//! FFT convolution with the outgoing free kernel versus direct summation.

use hsfwi::grid::Grid3;
use hsfwi::helmholtz::{apply_free_resolvent, free_green, VolumeField};
use num_complex::Complex64;

fn main() -> hsfwi::Result<()> {
    let grid = Grid3::new(24, 1.5)?;
    let lambda = 3.0;
    let src = grid.index(8, 12, 15);
    let mut f = VolumeField::zeros(grid);
    f.values[src] = Complex64::new(1.0, 0.0);
    let u = apply_free_resolvent(lambda, &f);
    for idx in [grid.index(20, 12, 15), grid.index(2, 3, 4)] {
        let direct = free_green(lambda, grid.center(src), grid.center(idx))? * grid.voxel_volume();
        println!("fft {:.6e}  direct {:.6e}", u.values[idx], direct);
    }
    Ok(())
}
