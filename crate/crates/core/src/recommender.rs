//! Removal and substitution recommendations, and on-demand predictions.
//!
//! [`oora`] turns the AND-OR tree from detection into a recommendation tree:
//! every leaf gets the most likely replacement value given the new
//! observation, and OR leaves also get their own posterior given the new
//! observation and are packed left to right from least to most probable.
//! The least probable OR leaf is the one to check first.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{BnError, Evidence, Network};
use crate::detection::{AndOrTree, DependencyGroup, LeafText, NewObservation, Observation, ObservationSet, Timestamp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error(transparent)]
    Bn(#[from] BnError),

    #[error("leaf `{0}` is the new observation's own variable")]
    SameVariable(String),
}

/// An annotated tree leaf `(X, x, p_x, x', p_x')`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendationLeaf {
    pub variable: String,
    pub old_state: String,
    /// P(X = x | o_new); only set on OR leaves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior: Option<f64>,
    pub proposed_state: String,
    pub proposed_prob: f64,
    pub timestamp: Timestamp,
}

pub type RecommendationTree = AndOrTree<RecommendationLeaf>;

/// A most-likely value for an unobserved variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub variable: String,
    pub state: String,
    pub confidence: f64,
}

impl std::fmt::Display for Prediction {
    /// `(variable, state, confidence)` with two decimals.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {:.2})", self.variable, self.state, self.confidence)
    }
}

/// Decimal rendering with four significant digits.
pub fn four_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

impl LeafText for RecommendationLeaf {
    fn to_tokens(&self) -> Vec<String> {
        let mut t = vec![self.variable.clone(), self.old_state.clone(), self.timestamp.to_string()];
        if let Some(p) = self.posterior {
            t.push(format!("p={}", four_significant(p)));
        }
        t.push(format!("proposed={}", self.proposed_state));
        t.push(format!("proposed_p={}", four_significant(self.proposed_prob)));
        t
    }

    fn from_tokens(tokens: &[&str]) -> Result<Self, String> {
        let [variable, old_state, ts, rest @ ..] = tokens else {
            return Err(format!("expected `variable state timestamp key=value...`, got {tokens:?}"));
        };
        let timestamp = ts.parse().map_err(|_| format!("bad timestamp `{ts}`"))?;
        let (mut posterior, mut proposed_state, mut proposed_prob) = (None, None, None);
        for kv in rest {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            let num = || v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
            match k {
                "p" => posterior = Some(num()?),
                "proposed" => proposed_state = Some(v.to_string()),
                "proposed_p" => proposed_prob = Some(num()?),
                other => return Err(format!("unknown leaf field `{other}`")),
            }
        }
        Ok(RecommendationLeaf {
            variable: variable.to_string(),
            old_state: old_state.to_string(),
            posterior,
            proposed_state: proposed_state.ok_or("missing `proposed`")?,
            proposed_prob: proposed_prob.ok_or("missing `proposed_p`")?,
            timestamp,
        })
    }
}

fn given_new(net: &Network, variable: &str, new_obs: &NewObservation) -> Result<Vec<f64>, RecommendError> {
    if variable == new_obs.variable {
        return Err(RecommendError::SameVariable(variable.to_string()));
    }
    let ev = Evidence::new().with(new_obs.variable.as_str(), new_obs.state.as_str());
    Ok(net.posterior(&ev, variable)?)
}

/// Index and value of the largest entry; the lowest index wins ties.
fn argmax(dist: &[f64]) -> (usize, f64) {
    dist.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best })
}

/// P(X = x | o_new).
pub fn posterior_proba(net: &Network, x: &Observation, new_obs: &NewObservation) -> Result<f64, RecommendError> {
    let dist = given_new(net, &x.variable, new_obs)?;
    let var = net.var_id(&x.variable)?;
    Ok(dist[net.state_id(var, &x.state)?])
}

/// The state of `target` with the highest posterior given `o_new`.
pub fn most_likely_value(
    target: &str,
    net: &Network,
    new_obs: &NewObservation,
) -> Result<(String, f64), RecommendError> {
    let dist = given_new(net, target, new_obs)?;
    let (i, p) = argmax(&dist);
    Ok((net.variable(net.var_id(target)?).states[i].clone(), p))
}

fn annotate(
    net: &Network,
    leaf: &Observation,
    new_obs: &NewObservation,
    with_posterior: bool,
) -> Result<RecommendationLeaf, RecommendError> {
    let dist = given_new(net, &leaf.variable, new_obs)?;
    let var = net.var_id(&leaf.variable)?;
    let (best, p_best) = argmax(&dist);
    let posterior = if with_posterior { Some(dist[net.state_id(var, &leaf.state)?]) } else { None };
    Ok(RecommendationLeaf {
        variable: leaf.variable.clone(),
        old_state: leaf.state.clone(),
        posterior,
        proposed_state: net.variable(var).states[best].clone(),
        proposed_prob: p_best,
        timestamp: leaf.timestamp,
    })
}

/// OR-leaf priority: lower posterior first, then older, then by name.
fn or_priority(a: &RecommendationLeaf, b: &RecommendationLeaf) -> Ordering {
    a.posterior
        .unwrap_or(0.0)
        .total_cmp(&b.posterior.unwrap_or(0.0))
        .then(a.timestamp.cmp(&b.timestamp))
        .then_with(|| a.variable.cmp(&b.variable))
}

/// The obsolete observations recommendation algorithm.
pub fn oora(tree: &AndOrTree, net: &Network, new_obs: &NewObservation) -> Result<RecommendationTree, RecommendError> {
    let mut groups = Vec::with_capacity(tree.groups.len());
    for g in &tree.groups {
        let mut or_set = g
            .or_set
            .iter()
            .map(|leaf| annotate(net, leaf, new_obs, true))
            .collect::<Result<Vec<_>, _>>()?;
        or_set.sort_by(or_priority);
        let and_set = g
            .and_set
            .iter()
            .map(|leaf| annotate(net, leaf, new_obs, false))
            .collect::<Result<Vec<_>, _>>()?;
        groups.push(DependencyGroup { and_set, or_set });
    }
    Ok(AndOrTree { groups })
}

/// Most likely value of an unobserved `target` given everything in `obs`.
pub fn predict(net: &Network, obs: &ObservationSet, target: &str) -> Result<Prediction, RecommendError> {
    if obs.contains(target) {
        return Err(BnError::TargetObserved(target.to_string()).into());
    }
    let dist = net.posterior(&obs.to_evidence(), target)?;
    let (i, confidence) = argmax(&dist);
    Ok(Prediction {
        variable: target.to_string(),
        state: net.variable(net.var_id(target)?).states[i].clone(),
        confidence,
    })
}
