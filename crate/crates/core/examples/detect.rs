//! The three detection steps on the worked autonomy example, then the
//! composed AND-OR tree.
//!
//! cargo run --example detect

use oius::detection::{decompose, detect, restrict, Observation, ObservationSet, DEFAULT_EPSILON};
use oius::model_tools::models;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = models::autonomy_submodel();
    let stored = [
        ("sex", "1"),
        ("diabetes", "0"),
        ("dementia", "0"),
        ("strokeTIA", "0"),
        ("muscleImpairment", "0"),
        ("parkinson", "0"),
        ("visionPb", "0"),
        ("driveCar", "2"),
        ("doShopping", "1"),
        ("leaveHome", "2"),
        ("getUpAlone", "1"),
        ("livesAlone", "1"),
    ];
    let mut obs = ObservationSet::new();
    for (t, (v, s)) in stored.iter().enumerate() {
        obs.insert(Observation::new(*v, *s, t as i64 + 1));
    }
    let new = Observation::new("autonomyLoss", "1", 20);

    let kept = restrict(&net, &obs, &new)?;
    let dropped: Vec<String> = obs.iter().map(|o| o.variable).filter(|v| !kept.contains(v)).collect();
    println!("step 1 drops {dropped:?}");

    for (i, g) in decompose(&net, &obs, &kept, &new, DEFAULT_EPSILON)?.iter().enumerate() {
        let and: Vec<String> = g.and_set.iter().map(|o| o.to_string()).collect();
        let or: Vec<String> = g.or_set.iter().map(|o| o.to_string()).collect();
        println!("step 2 group {}: AND {and:?} OR {or:?}", i + 1);
    }

    let found = detect(&net, &obs, &new, DEFAULT_EPSILON)?;
    println!("P({new} | stored) = {:.3e}, epsilon {}", found.probability, found.epsilon);
    if let Some(tree) = found.tree {
        print!("step 3\n{}", tree.to_text());
    }
    Ok(())
}
