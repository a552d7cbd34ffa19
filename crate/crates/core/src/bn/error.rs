use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error in `{variable}`: {message}")]
    Validation { variable: String, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown state `{state}` for variable `{variable}`")]
    UnknownState { variable: String, state: String },

    #[error("assignment is not over the full network: {0}")]
    IncompleteAssignment(String),

    #[error("evidence has zero probability")]
    ImpossibleEvidence,

    #[error("target `{0}` is already observed")]
    TargetObserved(String),

    #[error("query needs two distinct variables, got `{0}` twice")]
    SameVariable(String),
}
