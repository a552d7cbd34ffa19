//! Evaluation harness: scenario generation, threshold calibration,
//! contingency tables, formula comparison and rank correlation.

mod calibrate;
mod formula;
mod rank;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::BnError;
use crate::detection::DetectionError;

pub use calibrate::{calibrate_threshold, calibration_curve, evaluate, youden};
pub use formula::{compare_formulas, tree_to_formula, Formula, FormulaGroup, GroupDiff, Literal, MatchReport};
pub use rank::{rank_or_sets, spearman, RankAssignment};
pub use scenario::{
    generate_scenarios, parse_scenarios, synthesize_labeled, write_scenarios, Label, LabeledScenario, Scenario,
    ScenarioRecord, SyntheticSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Detection(#[from] DetectionError),

    #[error(transparent)]
    Bn(#[from] BnError),

    #[error("formula: {0}")]
    Formula(String),

    #[error("ranking: {0}")]
    Rank(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("labeled set must contain both contradictory and consistent scenarios")]
    SingleClass,

    #[error("epsilon grid is empty")]
    EmptyGrid,

    #[error("no scenarios given")]
    Empty,

    #[error("could not synthesize: {0}")]
    Synthesis(String),
}

/// Counts of predictions (contradictory or not) against labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ContingencyTable {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// TP / (TP + FN), or 0 without positives.
    pub fn tp_rate(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// FP / (FP + TN), or 0 without negatives.
    pub fn fp_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    fn add(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fn_: self.fn_ + other.fn_,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
        }
    }

    fn record(predicted: bool, label: Label) -> Self {
        let mut t = Self::default();
        match (predicted, label) {
            (true, Label::Contradictory) => t.tp = 1,
            (false, Label::Contradictory) => t.fn_ = 1,
            (true, Label::Consistent) => t.fp = 1,
            (false, Label::Consistent) => t.tn = 1,
        }
        t
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl std::fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "TP {} FN {} FP {} TN {} (TP rate {:.4}, FP rate {:.4})",
            self.tp,
            self.fn_,
            self.fp,
            self.tn,
            self.tp_rate(),
            self.fp_rate()
        )
    }
}
