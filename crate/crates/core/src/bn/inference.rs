//! Exact inference by variable elimination.
//!
//! Factors hold log-probabilities; products are sums and marginalization is
//! a log-sum-exp, so long products of small conditionals never underflow.
//! Only the ancestors of the query and evidence variables take part in a
//! query (everything else is barren and sums to one). Elimination order is
//! greedy min-fill with min-degree and lowest-id tie breaks.

use std::collections::BTreeSet;

use super::error::BnError;
use super::network::{Evidence, Network, VarId};

#[derive(Clone, Debug)]
pub(crate) struct Factor {
    /// Scope, strictly ascending.
    vars: Vec<VarId>,
    cards: Vec<usize>,
    /// Row-major log values, last scope variable fastest.
    logv: Vec<f64>,
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl Factor {
    fn scalar(logv: f64) -> Self {
        Self { vars: Vec::new(), cards: Vec::new(), logv: vec![logv] }
    }

    /// CPT of `var` with evidence variables fixed and dropped from the scope.
    fn from_cpt(net: &Network, var: VarId, evidence: &[Option<usize>]) -> Self {
        let mut scope: Vec<VarId> = net.parents(var).to_vec();
        scope.push(var);
        scope.retain(|v| evidence[*v].is_none());
        scope.sort_unstable();
        let cards: Vec<usize> = scope.iter().map(|&v| net.variable(v).cardinality()).collect();
        let size: usize = cards.iter().product();

        let mut states = vec![0usize; net.len()];
        for (v, s) in evidence.iter().enumerate() {
            if let Some(s) = s {
                states[v] = *s;
            }
        }
        let card = net.variable(var).cardinality();
        let table = &net.log_tables[var];
        let mut logv = Vec::with_capacity(size);
        let mut digits = vec![0usize; scope.len()];
        for _ in 0..size {
            for (k, &v) in scope.iter().enumerate() {
                states[v] = digits[k];
            }
            logv.push(table[net.config_index(var, &states) * card + states[var]]);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < cards[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        Self { vars: scope, cards, logv }
    }

    fn product(&self, other: &Factor) -> Factor {
        let vars: Vec<VarId> = self.vars.iter().chain(&other.vars).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|x| x == v)
                    .map(|i| self.cards[i])
                    .unwrap_or_else(|| other.cards[other.vars.iter().position(|x| x == v).unwrap()])
            })
            .collect();
        let stride_a = strides_in(&vars, &self.vars, &self.cards);
        let stride_b = strides_in(&vars, &other.vars, &other.cards);
        let size: usize = cards.iter().product();
        let mut logv = Vec::with_capacity(size);
        let mut digits = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            logv.push(self.logv[ia] + other.logv[ib]);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < cards[k] {
                    ia += stride_a[k];
                    ib += stride_b[k];
                    break;
                }
                digits[k] = 0;
                ia -= stride_a[k] * (cards[k] - 1);
                ib -= stride_b[k] * (cards[k] - 1);
            }
        }
        Factor { vars, cards, logv }
    }

    fn sum_out(&self, var: VarId) -> Factor {
        let pos = self.vars.iter().position(|&v| v == var).expect("variable in scope");
        let outer: usize = self.cards[..pos].iter().product();
        let inner: usize = self.cards[pos + 1..].iter().product();
        let card = self.cards[pos];
        let mut logv = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let base = o * card * inner + i;
                logv.push(log_sum_exp((0..card).map(|j| self.logv[base + j * inner])));
            }
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        Factor { vars, cards, logv }
    }
}

/// Stride of each `union` variable inside a factor over `scope` (0 if absent).
fn strides_in(union: &[VarId], scope: &[VarId], cards: &[usize]) -> Vec<usize> {
    let mut own = vec![1usize; scope.len()];
    for k in (0..scope.len().saturating_sub(1)).rev() {
        own[k] = own[k + 1] * cards[k + 1];
    }
    union
        .iter()
        .map(|v| scope.iter().position(|x| x == v).map(|i| own[i]).unwrap_or(0))
        .collect()
}

/// Greedy min-fill elimination order over `candidates`.
fn min_fill_order(factors: &[Factor], candidates: &[VarId], n: usize) -> Vec<VarId> {
    let mut adj: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); n];
    for f in factors {
        for &a in &f.vars {
            for &b in &f.vars {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let mut remaining: BTreeSet<VarId> = candidates.iter().copied().collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let best = *remaining
            .iter()
            .min_by_key(|&&v| {
                let nb: Vec<VarId> = adj[v].iter().copied().collect();
                let mut fill = 0usize;
                for i in 0..nb.len() {
                    for j in i + 1..nb.len() {
                        if !adj[nb[i]].contains(&nb[j]) {
                            fill += 1;
                        }
                    }
                }
                (fill, nb.len(), v)
            })
            .unwrap();
        let nb: Vec<VarId> = adj[best].iter().copied().collect();
        for &a in &nb {
            adj[a].remove(&best);
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        adj[best].clear();
        remaining.remove(&best);
        order.push(best);
    }
    order
}

impl Network {
    /// Unnormalized log factor over `targets` (ascending) with `evidence` applied.
    pub(crate) fn log_query(&self, evidence: &[(VarId, usize)], targets: &[VarId]) -> Factor {
        let mut fixed = vec![None; self.len()];
        for &(v, s) in evidence {
            fixed[v] = Some(s);
        }
        let mut seeds: Vec<VarId> = targets.to_vec();
        seeds.extend(evidence.iter().map(|&(v, _)| v));
        let relevant = self.ancestors_mask(&seeds);

        let mut constant = 0.0;
        let mut factors = Vec::new();
        for v in (0..self.len()).filter(|&v| relevant[v]) {
            let f = Factor::from_cpt(self, v, &fixed);
            if f.vars.is_empty() {
                constant += f.logv[0];
            } else {
                factors.push(f);
            }
        }

        let candidates: Vec<VarId> = (0..self.len())
            .filter(|&v| relevant[v] && fixed[v].is_none() && !targets.contains(&v))
            .collect();
        for var in min_fill_order(&factors, &candidates, self.len()) {
            let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&var));
            factors = rest;
            if let Some(first) = touching.first() {
                let joined = touching[1..].iter().fold(first.clone(), |acc, f| acc.product(f));
                let reduced = joined.sum_out(var);
                if reduced.vars.is_empty() {
                    constant += reduced.logv[0];
                } else {
                    factors.push(reduced);
                }
            }
        }

        // Every target is a seed, so its own CPT factor keeps it in scope.
        factors.iter().fold(Factor::scalar(constant), |acc, f| acc.product(f))
    }

    /// P(target | evidence) over index-resolved evidence.
    pub fn posterior_ids(&self, evidence: &[(VarId, usize)], target: VarId) -> Result<Vec<f64>, BnError> {
        if evidence.iter().any(|&(v, _)| v == target) {
            return Err(BnError::TargetObserved(self.variable(target).name.clone()));
        }
        let f = self.log_query(evidence, &[target]);
        let log_z = log_sum_exp(f.logv.iter().copied());
        if !log_z.is_finite() {
            return Err(BnError::ImpossibleEvidence);
        }
        Ok(f.logv.iter().map(|l| (l - log_z).exp()).collect())
    }

    /// Natural log of P(evidence).
    pub fn log_evidence_probability_ids(&self, evidence: &[(VarId, usize)]) -> f64 {
        let f = self.log_query(evidence, &[]);
        log_sum_exp(f.logv.iter().copied())
    }

    pub fn evidence_probability(&self, evidence: &Evidence) -> Result<f64, BnError> {
        let ev = self.resolve(evidence)?;
        Ok(self.log_evidence_probability_ids(&ev).exp())
    }

    /// Normalized posterior distribution of `target` given `evidence`.
    pub fn posterior(&self, evidence: &Evidence, target: &str) -> Result<Vec<f64>, BnError> {
        let t = self.var_id(target)?;
        if evidence.contains(target) {
            return Err(BnError::TargetObserved(target.to_string()));
        }
        let ev = self.resolve(evidence)?;
        self.posterior_ids(&ev, t)
    }

    /// P(variable = state | evidence).
    pub fn prob_of(&self, evidence: &Evidence, variable: &str, state: &str) -> Result<f64, BnError> {
        let t = self.var_id(variable)?;
        let s = self.state_id(t, state)?;
        Ok(self.posterior(evidence, variable)?[s])
    }

    /// Chain-rule product of the CPT entries selected by a full assignment.
    pub fn joint_probability(&self, assignment: &Evidence) -> Result<f64, BnError> {
        let mut states = vec![usize::MAX; self.len()];
        for (v, s) in assignment.iter() {
            let id = self
                .var_id(v)
                .map_err(|_| BnError::IncompleteAssignment(format!("extra variable `{v}`")))?;
            states[id] = self.state_id(id, s)?;
        }
        if let Some(missing) = states.iter().position(|&s| s == usize::MAX) {
            return Err(BnError::IncompleteAssignment(format!(
                "missing variable `{}`",
                self.variable(missing).name
            )));
        }
        Ok(self.log_joint_ids(&states).exp())
    }

    /// Log of the chain-rule product for a complete state vector.
    pub fn log_joint_ids(&self, states: &[usize]) -> f64 {
        (0..self.len())
            .map(|v| {
                let card = self.variable(v).cardinality();
                self.log_tables[v][self.config_index(v, states) * card + states[v]]
            })
            .sum()
    }
}
