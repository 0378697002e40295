//! Dirichlet-to-Neumann maps versus inverse single layers for a layered ball.

use hsfwi::boundary::verify_layer_dtn_identity;
use hsfwi::helmholtz::RadialLayers;

fn main() -> hsfwi::Result<()> {
    let layers = RadialLayers::new(vec![0.5], vec![1.5])?;
    let report = verify_layer_dtn_identity(1.0, &layers, &RadialLayers::homogeneous(), 10)?;
    for (l, r) in report.block_residuals.iter().enumerate() {
        println!("l = {l}: residual {r:.2e}");
    }
    println!(
        "||ΔΛ|| = {:.4e} <= {:.4e}; ||ΔS|| = {:.4e} <= {:.4e}",
        report.dtn_difference, report.dtn_bound, report.layer_difference, report.layer_bound
    );
    Ok(())
}
