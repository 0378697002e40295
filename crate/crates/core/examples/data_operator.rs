//! Data operator of a layered ball: per-degree block norms and CSV export.

use hsfwi::boundary::{data_operator, Medium};
use hsfwi::helmholtz::RadialLayers;

fn main() -> hsfwi::Result<()> {
    let medium = Medium::Radial(RadialLayers::new(vec![0.3, 0.7], vec![1.4, 1.1])?);
    let op = data_operator(2.0, &medium, 8)?;
    for (l, b) in op.block_norms().iter().enumerate() {
        println!("l = {l}: {b:.4e}");
    }
    println!("reciprocity defect {:.2e}", op.reciprocity_defect());
    op.write_csv(std::io::stdout().lock(), true)?;
    Ok(())
}
