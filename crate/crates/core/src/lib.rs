//! Obsolete personal information detection and update recommendations.
//!
//! A causal Bayesian network over a person's attributes is used to decide
//! whether a newly acquired, certain observation contradicts what is already
//! stored about that person. When it does, the stored observations that may
//! have become obsolete are organized as an AND-OR tree, which is then
//! annotated with removal priorities and replacement proposals.
//!
//! Modules:
//!
//! - [`bn`]: networks, the text file format, variable elimination, d-separation
//! - [`detection`]: the contradiction test and the restrict / decompose / compose pipeline
//! - [`recommender`]: prioritized recommendation trees and on-demand predictions
//! - [`model_tools`]: discretization, network validation, the shipped example models
//! - [`eval`]: scenario generation, threshold calibration, formula comparison, rank correlation

pub mod bn;
pub mod detection;
pub mod recommender;
pub mod model_tools;
pub mod eval;
