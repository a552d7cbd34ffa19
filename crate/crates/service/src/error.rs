use oius::bn::BnError;
use oius::detection::DetectionError;
use oius::recommender::RecommendError;
use thiserror::Error;

use crate::store::SweepFinding;

/// Proposition checked on AND leaves at commit.
pub const AND_PROPOSITION: &str = "every observation of an AND-set is obsolete";
/// Proposition checked on each OR child at commit.
pub const OR_PROPOSITION: &str = "at least one observation of an OR-set is obsolete";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown patient `{0}`")]
    UnknownPatient(String),

    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("patient `{0}` already exists")]
    PatientExists(String),

    #[error("invalid patient id `{0}`")]
    InvalidPatientId(String),

    #[error("duplicate observation ({variable}, {state})")]
    DuplicateObservation { variable: String, state: String },

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("record is inconsistent: {}", describe(.0))]
    InconsistentRecord(Vec<SweepFinding>),

    #[error("session `{session_id}` is {state}")]
    SessionNotOpen { session_id: String, state: String },

    #[error("stale revision: session is based on {expected}, record is at {actual}")]
    StaleRevision { expected: u64, actual: u64 },

    #[error("invalid decision: {0}")]
    InvalidDecision(String),

    #[error("violates \"{proposition}\": {detail}")]
    InvariantViolated { proposition: &'static str, detail: String },

    #[error("`{0}` is already observed")]
    TargetObserved(String),

    #[error("inference failed: {0}")]
    Inference(String),

    #[error("storage: {0}")]
    Storage(String),

    #[error("configuration: {0}")]
    Config(String),
}

fn describe(findings: &[SweepFinding]) -> String {
    let parts: Vec<String> = findings
        .iter()
        .map(|f| format!("({}, {}) has p = {:e}", f.observation.variable, f.observation.state, f.probability))
        .collect();
    parts.join(", ")
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownPatient(_) => "unknown_patient",
            Self::UnknownSession(_) => "unknown_session",
            Self::PatientExists(_) => "patient_exists",
            Self::InvalidPatientId(_) => "invalid_patient_id",
            Self::DuplicateObservation { .. } => "duplicate_observation",
            Self::InvalidObservation(_) => "invalid_observation",
            Self::InconsistentRecord(_) => "inconsistent_record",
            Self::SessionNotOpen { .. } => "session_not_open",
            Self::StaleRevision { .. } => "stale_revision",
            Self::InvalidDecision(_) => "invalid_decision",
            Self::InvariantViolated { .. } => "invariant_violated",
            Self::TargetObserved(_) => "target_observed",
            Self::Inference(_) => "inference_failed",
            Self::Storage(_) => "storage",
            Self::Config(_) => "config",
        }
    }
}

impl From<BnError> for ServiceError {
    fn from(e: BnError) -> Self {
        match e {
            BnError::TargetObserved(v) => Self::TargetObserved(v),
            BnError::UnknownVariable(_) | BnError::UnknownState { .. } => Self::InvalidObservation(e.to_string()),
            other => Self::Inference(other.to_string()),
        }
    }
}

impl From<DetectionError> for ServiceError {
    fn from(e: DetectionError) -> Self {
        match e {
            DetectionError::Bn(b) => b.into(),
            other => Self::Inference(other.to_string()),
        }
    }
}

impl From<RecommendError> for ServiceError {
    fn from(e: RecommendError) -> Self {
        match e {
            RecommendError::Bn(b) => b.into(),
            other => Self::Inference(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        Self::Storage(e.to_string())
    }
}
