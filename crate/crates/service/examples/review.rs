//! One review cycle through the store, without HTTP: seed a record, submit
//! a contradictory observation, commit the reviewer's decisions.
//!
//! cargo run -p oius-service --example review

use std::collections::BTreeMap;

use oius::detection::Observation;
use oius::model_tools::models;
use oius_service::{Decision, Store};

fn main() -> Result<(), oius_service::ServiceError> {
    let store = Store::in_memory(models::autonomy_submodel(), 1e-2)?;
    let seed = [
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
    .map(|(v, s)| Observation::new(*v, *s, 1))
    .collect();
    let patient = store.create_patient(None, seed)?;

    let session = store.submit_observation(&patient.patient_id, Observation::new("autonomyLoss", "1", 2))?;
    println!("session {} is {}", session.session_id, session.state);
    let tree = session.recommendation.as_ref().expect("contradictory");
    print!("{}", tree.to_text());

    // drop the mandatory leaves, update the first OR leaf to its proposal
    let mut decisions = BTreeMap::new();
    for g in &tree.groups {
        for leaf in &g.and_set {
            decisions.insert(leaf.variable.clone(), Decision::Delete);
        }
        if let Some(leaf) = g.or_set.first() {
            decisions.insert(leaf.variable.clone(), Decision::Replace { state: leaf.proposed_state.clone() });
        }
    }
    let outcome = store.commit_session(&session.session_id, decisions)?;
    println!("revision {}; residual session: {}", outcome.record.revision, outcome.residual_session.is_some());
    for obs in outcome.record.observations.iter() {
        println!("  {obs} @ {}", obs.timestamp);
    }
    for entry in &outcome.record.audit_log {
        println!("  r{} {} {}", entry.revision, &entry.digest[..12], serde_json::to_string(&entry.action).unwrap());
    }
    Ok(())
}
