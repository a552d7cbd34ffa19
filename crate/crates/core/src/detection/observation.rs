use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bn::{BnError, Evidence, Network, VarId};

/// Seconds since the Unix epoch.
pub type Timestamp = i64;

/// One stored or incoming `(variable, state)` fact with its acquisition time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    pub variable: String,
    pub state: String,
    pub timestamp: Timestamp,
}

/// A newly acquired observation that is taken to be certain.
pub type NewObservation = Observation;

impl Observation {
    pub fn new<V: Into<String>, S: Into<String>>(variable: V, state: S, timestamp: Timestamp) -> Self {
        Self { variable: variable.into(), state: state.into(), timestamp }
    }

    pub(crate) fn resolve(&self, net: &Network) -> Result<(VarId, usize), BnError> {
        let v = net.var_id(&self.variable)?;
        Ok((v, net.state_id(v, &self.state)?))
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.variable, self.state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationEntry {
    pub state: String,
    pub timestamp: Timestamp,
}

/// Everything known about one person: at most one entry per variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservationSet {
    pub entries: BTreeMap<String, ObservationEntry>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or overwrites the entry for `obs.variable`; returns the old one.
    pub fn insert(&mut self, obs: Observation) -> Option<Observation> {
        let Observation { variable, state, timestamp } = obs;
        self.entries
            .insert(variable.clone(), ObservationEntry { state, timestamp })
            .map(|e| Observation { variable, state: e.state, timestamp: e.timestamp })
    }

    pub fn with(mut self, obs: Observation) -> Self {
        self.insert(obs);
        self
    }

    pub fn remove(&mut self, variable: &str) -> Option<Observation> {
        self.entries
            .remove(variable)
            .map(|e| Observation { variable: variable.to_string(), state: e.state, timestamp: e.timestamp })
    }

    pub fn get(&self, variable: &str) -> Option<Observation> {
        self.entries
            .get(variable)
            .map(|e| Observation { variable: variable.to_string(), state: e.state.clone(), timestamp: e.timestamp })
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.entries.contains_key(variable)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Observations in variable-name order.
    pub fn iter(&self) -> impl Iterator<Item = Observation> + '_ {
        self.entries
            .iter()
            .map(|(v, e)| Observation { variable: v.clone(), state: e.state.clone(), timestamp: e.timestamp })
    }

    pub fn to_evidence(&self) -> Evidence {
        self.entries.iter().map(|(v, e)| (v.clone(), e.state.clone())).collect()
    }

    /// Checks every entry against the network's variables and states.
    pub fn validate(&self, net: &Network) -> Result<(), BnError> {
        for obs in self.iter() {
            obs.resolve(net)?;
        }
        Ok(())
    }

    pub(crate) fn resolve(&self, net: &Network) -> Result<Vec<(VarId, usize)>, BnError> {
        self.iter().map(|o| o.resolve(net)).collect()
    }
}

impl FromIterator<Observation> for ObservationSet {
    fn from_iter<I: IntoIterator<Item = Observation>>(iter: I) -> Self {
        let mut set = ObservationSet::new();
        for o in iter {
            set.insert(o);
        }
        set
    }
}
