use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::recommender::RecommendationTree;

use super::EvalError;

/// Ranks `1..=k` over the variables of one OR-set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankAssignment {
    ranks: BTreeMap<String, usize>,
}

impl RankAssignment {
    /// Explicit `(variable, rank)` pairs; the ranks must be a permutation of
    /// `1..=k`.
    pub fn new<I, S>(pairs: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut ranks = BTreeMap::new();
        for (v, r) in pairs {
            let v = v.into();
            if ranks.insert(v.clone(), r).is_some() {
                return Err(EvalError::Rank(format!("`{v}` ranked twice")));
            }
        }
        let mut seen: Vec<usize> = ranks.values().copied().collect();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &r)| r != i + 1) {
            return Err(EvalError::Rank(format!("ranks {seen:?} are not a permutation of 1..={}", seen.len())));
        }
        Ok(Self { ranks })
    }

    /// First variable gets rank 1.
    pub fn from_order<I, S>(order: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(order.into_iter().enumerate().map(|(i, v)| (v, i + 1)))
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank(&self, variable: &str) -> Option<usize> {
        self.ranks.get(variable).copied()
    }

    /// Variables from rank 1 upward.
    pub fn order(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self.ranks.iter().map(|(k, &r)| (k.as_str(), r)).collect();
        v.sort_by_key(|&(_, r)| r);
        v.into_iter().map(|(k, _)| k).collect()
    }
}

/// Spearman's rank correlation `1 - 6 Σd² / (k (k² - 1))`.
pub fn spearman(r: &RankAssignment, s: &RankAssignment) -> Result<f64, EvalError> {
    if !r.ranks.keys().eq(s.ranks.keys()) {
        return Err(EvalError::Rank("rankings cover different variables".into()));
    }
    let k = r.len() as u64;
    if k < 2 {
        return Err(EvalError::Rank(format!("need at least two ranked variables, got {k}")));
    }
    let sum_d2: u64 = r
        .ranks
        .values()
        .zip(s.ranks.values())
        .map(|(&a, &b)| (a.abs_diff(b) as u64).pow(2))
        .sum();
    Ok(1.0 - (6 * sum_d2) as f64 / (k * (k * k - 1)) as f64)
}

/// One ranking per non-empty OR-set, leftmost leaf first.
pub fn rank_or_sets(rec_tree: &RecommendationTree) -> Vec<RankAssignment> {
    rec_tree
        .groups
        .iter()
        .filter(|g| !g.or_set.is_empty())
        .map(|g| {
            RankAssignment::from_order(g.or_set.iter().map(|l| l.variable.clone()))
                .expect("tree leaves have distinct variables")
        })
        .collect()
}
