#![allow(dead_code)]

use std::sync::Arc;

use oius::detection::Observation;
use oius::model_tools::models;
use oius_service::Store;

/// Fixed commit time used by [`store`].
pub const NOW: i64 = 1_000;

/// The twelve stored observations of the worked autonomy example.
pub fn example2() -> Vec<Observation> {
    [
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
    ]
    .iter()
    .enumerate()
    .map(|(i, (v, s))| Observation::new(*v, *s, i as i64 + 1))
    .collect()
}

pub fn autonomy_loss() -> Observation {
    Observation::new("autonomyLoss", "1", 20)
}

/// In-memory store over the autonomy submodel with a fixed clock.
pub fn store() -> Store {
    Store::in_memory(models::autonomy_submodel(), 1e-2).unwrap().with_clock(Arc::new(|| NOW))
}
