//! Obsolete-information detection.
//!
//! A stored observation set is ε-contradictory to a new, certain
//! observation when P(new | stored) ≤ ε. When that happens the stored
//! observations that may be obsolete are found in three steps:
//!
//! 1. [`restrict`]: drop observations d-separated from the new observation's
//!    variable given the other stored observations;
//! 2. [`decompose`]: group the rest into dependency groups and split each
//!    into an AND-set (individually contradictory, certainly obsolete) and an
//!    OR-set (at least one is obsolete);
//! 3. [`build_tree`]: compose the groups under an AND root.
//!
//! [`oida`] runs all three; [`detect`] also returns the intermediate sets.

mod observation;
mod pipeline;
mod tree;

use thiserror::Error;

use crate::bn::BnError;

pub use observation::{NewObservation, Observation, ObservationEntry, ObservationSet, Timestamp};
pub use pipeline::{
    contradiction_probability, decompose, decompose_with, detect, is_contradictory, oida, restrict, Detection,
    OrSetRule, DEFAULT_EPSILON,
};
pub use tree::{build_tree, AndOrTree, DependencyGroup, LeafText};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error(transparent)]
    Bn(#[from] BnError),

    #[error("epsilon {0} is outside [0, 1]")]
    InvalidEpsilon(f64),

    #[error("`{0}` is already among the stored observations")]
    AlreadyObserved(String),

    #[error("cannot build a tree from an empty group list")]
    EmptyGroups,

    #[error("new observation has probability {probability:e} but no stored observation explains it")]
    NoCandidates { probability: f64 },

    #[error("malformed tree text: {0}")]
    TreeFormat(String),
}
