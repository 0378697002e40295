//! Projected Landweber on a three-shell phantom with the automatic step.

use hsfwi::inversion::{estimate_constants, landweber_run, write_iteration_csv, LandweberOptions, RadialForward, StepSize};
use hsfwi::model::{DomainPartition, ModelBall, ModelVector};
use hsfwi::timedomain::FrequencyGrid;

fn main() -> hsfwi::Result<()> {
    let part = DomainPartition::radial(vec![0.2, 0.55, 0.95], 0.04)?;
    let m = RadialForward::new(&part, FrequencyGrid::new(4.0)?, 8)?;
    let truth = ModelVector::new(vec![0.4, 0.8, 1.2])?;
    let start = ModelVector::new(vec![0.425, 0.775, 1.225])?;
    let ball = ModelBall::new(ModelVector::new(vec![0.4125, 0.7875, 1.2125])?, 0.025, 0.2)?;
    let c = estimate_constants(&m, &ball, 6, 7)?;
    println!("{}", serde_json::to_string_pretty(&c).expect("constants"));
    let opts = LandweberOptions {
        step: StepSize::Auto,
        max_iterations: 200,
        error_floor: 1e-3 * truth.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt(),
        ball,
    };
    let run = landweber_run(&m, &start, &truth, &c, &opts)?;
    write_iteration_csv(std::io::stdout().lock(), &run)?;
    eprintln!("final model {:?}", run.final_state().x);
    Ok(())
}
