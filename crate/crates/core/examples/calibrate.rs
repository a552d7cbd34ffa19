//! Builds a labeled synthetic scenario set with a few planted labeling
//! errors, scans candidate thresholds and reports the one with the best
//! Youden index.
//!
//! cargo run --release --example calibrate

use oius::eval::{calibrate_threshold, calibration_curve, synthesize_labeled, youden, SyntheticSpec};
use oius::model_tools::models;

fn main() -> Result<(), oius::eval::EvalError> {
    let net = models::falls_extended();
    let spec = SyntheticSpec {
        contradictory: 95,
        consistent: 96,
        planted_false_negatives: 3,
        planted_false_positives: 2,
        ..SyntheticSpec::default()
    };
    let set = synthesize_labeled(&net, &spec, 11)?;
    println!("{} scenarios", set.len());

    let grid = [1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 1e-4];
    for (epsilon, table) in calibration_curve(&net, &set, &grid)? {
        println!("{epsilon:>7.0e}  {table}  Youden {:.3}", youden(&table));
    }
    let (epsilon, table) = calibrate_threshold(&net, &set, &grid)?;
    println!("chosen {epsilon:e}: accuracy {:.3}", table.accuracy());
    Ok(())
}
