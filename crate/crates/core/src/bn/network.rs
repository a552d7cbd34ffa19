//! Discrete causal Bayesian network: variables, CPTs and the validated,
//! immutable [`Network`] that every query in this crate runs against.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::error::BnError;

/// Index of a variable inside a [`Network`].
pub type VarId = usize;

/// Entries below this value are raised to it when a network is built.
pub const DEFAULT_CLAMP_FLOOR: f64 = 1e-4;

/// Rows whose sum is further than this from 1 are rejected outright.
/// Rows inside the band are renormalized and the drift is recorded.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;

/// A discrete random variable with an ordered list of state labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, states: &[&str]) -> Self {
        Self {
            name: name.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
            description: None,
        }
    }

    pub fn with_description<S: Into<String>>(mut self, description: S) -> Self {
        self.description = Some(description.into());
        self
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Conditional probability table of `owner` given `parents`.
///
/// `rows` holds one distribution over the owner's states per parent
/// configuration, row-major in parent-list order (the last parent varies
/// fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub owner: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new<S: Into<String>>(owner: S, parents: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            owner: owner.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            rows,
        }
    }
}

/// Observed values keyed by variable name. At most one state per variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence {
    assignments: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<V: Into<String>, S: Into<String>>(mut self, variable: V, state: S) -> Self {
        self.insert(variable, state);
        self
    }

    /// Sets `variable` to `state`, returning the previous state if any.
    pub fn insert<V: Into<String>, S: Into<String>>(&mut self, variable: V, state: S) -> Option<String> {
        self.assignments.insert(variable.into(), state.into())
    }

    pub fn remove(&mut self, variable: &str) -> Option<String> {
        self.assignments.remove(variable)
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.assignments.get(variable).map(String::as_str)
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.assignments.contains_key(variable)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(v, s)| (v.as_str(), s.as_str()))
    }
}

impl<V: Into<String>, S: Into<String>> FromIterator<(V, S)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (V, S)>>(iter: I) -> Self {
        let mut ev = Evidence::new();
        for (v, s) in iter {
            ev.insert(v, s);
        }
        ev
    }
}

/// What happened to a CPT while the network was being built.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LoadNotes {
    /// Entries raised to the clamp floor.
    pub clamped_entries: usize,
    /// Largest |row sum - 1| seen before renormalization.
    pub max_row_drift: f64,
}

/// A validated discrete Bayesian network. Immutable once built.
#[derive(Clone, Debug)]
pub struct Network {
    pub(crate) name: Option<String>,
    pub(crate) variables: Vec<Variable>,
    pub(crate) index: HashMap<String, VarId>,
    pub(crate) parents: Vec<Vec<VarId>>,
    pub(crate) children: Vec<Vec<VarId>>,
    pub(crate) cpts: Vec<Cpt>,
    /// Flattened CPT in log space: `[config * card + state]`.
    pub(crate) log_tables: Vec<Vec<f64>>,
    pub(crate) topo_order: Vec<VarId>,
    pub(crate) notes: Vec<LoadNotes>,
    pub(crate) clamp_floor: f64,
}

impl Network {
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn var_id(&self, name: &str) -> Result<VarId, BnError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| BnError::UnknownVariable(name.to_string()))
    }

    pub fn state_id(&self, var: VarId, state: &str) -> Result<usize, BnError> {
        self.variables[var]
            .state_index(state)
            .ok_or_else(|| BnError::UnknownState {
                variable: self.variables[var].name.clone(),
                state: state.to_string(),
            })
    }

    pub fn lookup(&self, variable: &str) -> Option<&Variable> {
        self.index.get(variable).map(|&id| &self.variables[id])
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id]
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id]
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn topological_order(&self) -> &[VarId] {
        &self.topo_order
    }

    pub fn clamp_floor(&self) -> f64 {
        self.clamp_floor
    }

    pub fn load_notes(&self, id: VarId) -> &LoadNotes {
        &self.notes[id]
    }

    /// All `(parent, child)` pairs, ordered by child then by CPT parent order.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((self.variables[p].name.as_str(), self.variables[child].name.as_str()));
            }
        }
        out
    }

    /// Row index of a parent configuration given the states of every variable.
    pub(crate) fn config_index(&self, var: VarId, states: &[usize]) -> usize {
        let mut idx = 0;
        for &p in &self.parents[var] {
            idx = idx * self.variables[p].cardinality() + states[p];
        }
        idx
    }

    /// Conditional probability P(var = state | parents as in `states`).
    pub fn conditional(&self, var: VarId, states: &[usize]) -> f64 {
        let card = self.variables[var].cardinality();
        self.log_tables[var][self.config_index(var, states) * card + states[var]].exp()
    }

    /// Resolves named evidence into `(variable, state)` index pairs.
    pub fn resolve(&self, evidence: &Evidence) -> Result<Vec<(VarId, usize)>, BnError> {
        evidence
            .iter()
            .map(|(v, s)| {
                let id = self.var_id(v)?;
                Ok((id, self.state_id(id, s)?))
            })
            .collect()
    }

    /// Ancestors of `seeds`, seeds included.
    pub fn ancestors_mask(&self, seeds: &[VarId]) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack: Vec<VarId> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if mask[v] {
                continue;
            }
            mask[v] = true;
            stack.extend(self.parents[v].iter().copied().filter(|&p| !mask[p]));
        }
        mask
    }
}

/// Incremental construction of a [`Network`]. `build` performs every check.
#[derive(Clone, Debug)]
pub struct NetworkBuilder {
    name: Option<String>,
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: Vec<Cpt>,
    clamp_floor: f64,
}

impl Default for NetworkBuilder {
    fn default() -> Self {
        Self {
            name: None,
            variables: Vec::new(),
            edges: Vec::new(),
            cpts: Vec::new(),
            clamp_floor: DEFAULT_CLAMP_FLOOR,
        }
    }
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn name<S: Into<String>>(mut self, name: S) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Minimum CPT entry enforced at build time. Zero disables clamping.
    pub fn clamp_floor(mut self, floor: f64) -> Self {
        self.clamp_floor = floor;
        self
    }

    pub fn variable(mut self, variable: Variable) -> Self {
        self.variables.push(variable);
        self
    }

    pub fn edge<P: Into<String>, C: Into<String>>(mut self, parent: P, child: C) -> Self {
        self.edges.push((parent.into(), child.into()));
        self
    }

    pub fn cpt(mut self, cpt: Cpt) -> Self {
        self.cpts.push(cpt);
        self
    }

    pub(crate) fn push_variable(&mut self, variable: Variable) {
        self.variables.push(variable);
    }

    pub(crate) fn push_edge(&mut self, parent: String, child: String) {
        self.edges.push((parent, child));
    }

    pub(crate) fn push_cpt(&mut self, cpt: Cpt) {
        self.cpts.push(cpt);
    }

    pub(crate) fn set_name(&mut self, name: String) {
        self.name = Some(name);
    }

    pub fn build(self) -> Result<Network, BnError> {
        let invalid = |variable: &str, message: String| BnError::Validation {
            variable: variable.to_string(),
            message,
        };

        if !(0.0..1.0).contains(&self.clamp_floor) || self.clamp_floor.is_nan() {
            return Err(invalid("*", format!("clamp floor {} outside [0, 1)", self.clamp_floor)));
        }

        let mut index = HashMap::new();
        for (id, var) in self.variables.iter().enumerate() {
            if var.name.is_empty() || var.name.chars().any(char::is_whitespace) {
                return Err(invalid(&var.name, "variable names must be non-empty and contain no whitespace".into()));
            }
            if index.insert(var.name.clone(), id).is_some() {
                return Err(invalid(&var.name, "duplicate variable".into()));
            }
            if var.states.len() < 2 {
                return Err(invalid(&var.name, "a variable needs at least two states".into()));
            }
            let unique: BTreeSet<&String> = var.states.iter().collect();
            if unique.len() != var.states.len() {
                return Err(invalid(&var.name, "duplicate state label".into()));
            }
            if var.states.iter().any(|s| s.is_empty() || s.chars().any(char::is_whitespace)) {
                return Err(invalid(&var.name, "state labels must be non-empty and contain no whitespace".into()));
            }
        }

        let n = self.variables.len();
        let mut incoming: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); n];
        for (p, c) in &self.edges {
            let pid = *index.get(p).ok_or_else(|| invalid(c, format!("edge references unknown parent `{p}`")))?;
            let cid = *index.get(c).ok_or_else(|| invalid(p, format!("edge references unknown child `{c}`")))?;
            if pid == cid {
                return Err(invalid(c, "self loop: cycle".into()));
            }
            if !incoming[cid].insert(pid) {
                return Err(invalid(c, format!("duplicate edge {p} -> {c}")));
            }
        }

        let mut children = vec![Vec::new(); n];
        for (c, ps) in incoming.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let topo_order = topological_order(&incoming, &children)
            .map_err(|v| invalid(&self.variables[v].name, "graph contains a cycle".into()))?;

        let mut slots: Vec<Option<Cpt>> = vec![None; n];
        for cpt in self.cpts {
            let id = *index
                .get(&cpt.owner)
                .ok_or_else(|| invalid(&cpt.owner, "CPT for unknown variable".into()))?;
            if slots[id].is_some() {
                return Err(invalid(&cpt.owner, "more than one CPT".into()));
            }
            slots[id] = Some(cpt);
        }

        let mut parents = vec![Vec::new(); n];
        let mut cpts = Vec::with_capacity(n);
        let mut log_tables = Vec::with_capacity(n);
        let mut notes = Vec::with_capacity(n);
        for (id, slot) in slots.into_iter().enumerate() {
            let var = &self.variables[id];
            let mut cpt = slot.ok_or_else(|| invalid(&var.name, "missing CPT".into()))?;
            let mut pids = Vec::with_capacity(cpt.parents.len());
            for p in &cpt.parents {
                let pid = *index
                    .get(p)
                    .ok_or_else(|| invalid(&var.name, format!("CPT parent `{p}` is not a variable")))?;
                pids.push(pid);
            }
            let as_set: BTreeSet<VarId> = pids.iter().copied().collect();
            if as_set.len() != pids.len() || as_set != incoming[id] {
                return Err(invalid(&var.name, "CPT parents do not match incoming edges".into()));
            }
            let expected_rows: usize = pids.iter().map(|&p| self.variables[p].cardinality()).product();
            if cpt.rows.len() != expected_rows {
                return Err(invalid(
                    &var.name,
                    format!("cardinality mismatch: expected {expected_rows} rows, found {}", cpt.rows.len()),
                ));
            }
            let card = var.cardinality();
            let mut note = LoadNotes::default();
            let mut table = Vec::with_capacity(expected_rows * card);
            for (r, row) in cpt.rows.iter_mut().enumerate() {
                if row.len() != card {
                    return Err(invalid(
                        &var.name,
                        format!("cardinality mismatch: row {r} has {} entries, expected {card}", row.len()),
                    ));
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(invalid(&var.name, format!("row {r} has a negative or non-finite entry")));
                }
                let sum: f64 = row.iter().sum();
                let drift = (sum - 1.0).abs();
                if drift > ROW_SUM_TOLERANCE {
                    return Err(invalid(&var.name, format!("row sum {sum} in row {r} is not 1")));
                }
                note.max_row_drift = note.max_row_drift.max(drift);
                for p in row.iter_mut() {
                    *p /= sum;
                }
                note.clamped_entries += clamp_row(row, self.clamp_floor);
                table.extend(row.iter().map(|p| p.ln()));
            }
            parents[id] = pids;
            cpts.push(cpt);
            log_tables.push(table);
            notes.push(note);
        }

        Ok(Network {
            name: self.name,
            variables: self.variables,
            index,
            parents,
            children,
            cpts,
            log_tables,
            topo_order,
            notes,
            clamp_floor: self.clamp_floor,
        })
    }
}

/// Raises entries below `floor` to `floor` and rescales the rest so the row
/// still sums to one. Returns the number of entries that were raised.
fn clamp_row(row: &mut [f64], floor: f64) -> usize {
    if floor <= 0.0 {
        return 0;
    }
    let mut pinned = vec![false; row.len()];
    let mut raised = 0;
    loop {
        let mut changed = false;
        for (i, p) in row.iter().enumerate() {
            if !pinned[i] && *p < floor {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let n_pinned = pinned.iter().filter(|&&b| b).count();
        let free_mass: f64 = row.iter().zip(&pinned).filter(|(_, &b)| !b).map(|(p, _)| *p).sum();
        let target = 1.0 - floor * n_pinned as f64;
        for (p, &b) in row.iter_mut().zip(&pinned) {
            if b {
                *p = floor;
            } else {
                *p *= target / free_mass;
            }
        }
    }
    for (i, b) in pinned.iter().enumerate() {
        if *b {
            raised += 1;
            row[i] = floor;
        }
    }
    raised
}

/// Kahn's algorithm with smallest-id-first tie breaking. On failure returns a
/// variable that sits on a cycle.
fn topological_order(incoming: &[BTreeSet<VarId>], children: &[Vec<VarId>]) -> Result<Vec<VarId>, VarId> {
    let n = incoming.len();
    let mut indeg: Vec<usize> = incoming.iter().map(BTreeSet::len).collect();
    let mut ready: BTreeSet<VarId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&v| indeg[v] > 0).unwrap_or(0))
    }
}
