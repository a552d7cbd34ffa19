//! Formula comparison against reference formulas, and Spearman correlation
//! between OR-set rankings.
//!
//! cargo run --example compare

use oius::detection::{detect, Observation, ObservationSet, DEFAULT_EPSILON};
use oius::eval::{compare_formulas, spearman, tree_to_formula, Formula, RankAssignment};
use oius::model_tools::models;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = models::falls_extended();
    let obs = [
        ("livesAlone", "1"),
        ("driveCar", "2"),
        ("parkinson", "0"),
        ("fearFalling", "0"),
        ("strokeTIA", "0"),
        ("difficultyWalking", "0"),
        ("muscleImpairment", "0"),
    ]
    .iter()
    .enumerate()
    .fold(ObservationSet::new(), |set, (t, (v, s))| set.with(Observation::new(*v, *s, t as i64)));
    let new = Observation::new("autonomyLoss", "1", 20);

    let tree = detect(&net, &obs, &new, DEFAULT_EPSILON)?.tree.expect("contradictory");
    let ours = tree_to_formula(&tree);
    println!("detected  {ours}");

    for reference in [
        "{muscleImpairment | parkinson | strokeTIA} & {driveCar} & {livesAlone}",
        "{muscleImpairment | strokeTIA} & {driveCar & livesAlone}",
    ] {
        let reference: Formula = reference.parse()?;
        let report = compare_formulas(&ours, &reference);
        println!("reference {reference}\n  match: {}\n{report}", report.is_match());
    }

    let system = RankAssignment::from_order(["muscleImpairment", "strokeTIA", "parkinson", "dementia"])?;
    let expert = RankAssignment::from_order(["muscleImpairment", "parkinson", "strokeTIA", "dementia"])?;
    println!("spearman {:.2}", spearman(&system, &expert)?);
    Ok(())
}
