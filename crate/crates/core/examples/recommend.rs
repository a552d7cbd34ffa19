//! Recommendation tree for the worked autonomy example: OR leaves ordered
//! from least to most probable, every leaf with a proposed replacement.
//!
//! cargo run --example recommend

use oius::detection::{oida, Observation, ObservationSet, DEFAULT_EPSILON};
use oius::eval::rank_or_sets;
use oius::model_tools::models;
use oius::recommender::{four_significant, oora};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = models::autonomy_submodel();
    let obs = [
        ("dementia", "0"),
        ("strokeTIA", "0"),
        ("muscleImpairment", "0"),
        ("parkinson", "0"),
        ("driveCar", "2"),
        ("doShopping", "1"),
        ("getUpAlone", "1"),
        ("livesAlone", "1"),
    ]
    .iter()
    .enumerate()
    .fold(ObservationSet::new(), |set, (t, (v, s))| set.with(Observation::new(*v, *s, t as i64)));
    let new = Observation::new("autonomyLoss", "1", 20);

    let tree = oida(&net, &obs, &new, DEFAULT_EPSILON)?.expect("contradictory");
    let rec = oora(&tree, &net, &new)?;
    print!("{}", rec.to_text());

    for g in &rec.groups {
        for leaf in &g.and_set {
            println!("remove {} = {} -> propose {} ({})", leaf.variable, leaf.old_state, leaf.proposed_state, four_significant(leaf.proposed_prob));
        }
        if let Some(first) = g.or_set.first() {
            println!("check {} first (P = {})", first.variable, four_significant(first.posterior.unwrap_or(0.0)));
        }
    }
    for r in rank_or_sets(&rec) {
        println!("OR ranking: {}", r.order().join(" > "));
    }
    Ok(())
}
