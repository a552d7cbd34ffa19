//! Most likely values for unobserved variables of one person on the
//! extended model.
//!
//! cargo run --example predict

use oius::detection::{Observation, ObservationSet};
use oius::model_tools::models;
use oius::recommender::predict;

fn main() -> Result<(), oius::recommender::RecommendError> {
    let net = models::falls_extended();
    // age band 55-63, good eyesight, no muscle impairment, no Parkinson's, no dementia
    let record = [("age", "0"), ("visionPb", "0"), ("muscleImpairment", "0"), ("parkinson", "0"), ("dementia", "0")]
        .iter()
        .fold(ObservationSet::new(), |set, (v, s)| set.with(Observation::new(*v, *s, 1)));

    for target in ["walkingStick", "physiotherapy", "fallsNb", "autonomyLoss"] {
        println!("{}", predict(&net, &record, target)?);
    }
    // after a new diagnosis the same questions get different answers
    let later = record.with(Observation::new("parkinson", "1", 2)).with(Observation::new("difficultyWalking", "1", 2));
    for target in ["walkingStick", "physiotherapy"] {
        println!("{}", predict(&net, &later, target)?);
    }
    Ok(())
}
