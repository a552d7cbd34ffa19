//! ε-contradiction test and the restrict → decompose → compose pipeline.

use std::collections::BTreeSet;

use crate::bn::{Network, VarId};

use super::observation::{NewObservation, Observation, ObservationSet};
use super::tree::{build_tree, AndOrTree, DependencyGroup};
use super::DetectionError;

/// Contradiction tolerance used when the caller has no better value.
pub const DEFAULT_EPSILON: f64 = 1e-2;

/// How the OR-set of a group is chosen once the AND-set is removed and the
/// remainder is still contradictory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrSetRule {
    /// Keep a remainder member only if replacing it alone by some other
    /// state lifts the remainder above ε. Falls back to the whole remainder
    /// when no single replacement does.
    SingleReplacement,
    /// The whole remainder.
    WholeRemainder,
}

/// Output of [`detect`]: the contradiction probability and every
/// intermediate set, plus the tree when a contradiction was found.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    /// P(O_new = o_new | OBS').
    pub probability: f64,
    pub epsilon: f64,
    pub restricted: ObservationSet,
    /// Observations removed by the restriction step.
    pub dropped: Vec<Observation>,
    pub groups: Vec<DependencyGroup>,
    pub tree: Option<AndOrTree>,
}

fn check_epsilon(epsilon: f64) -> Result<(), DetectionError> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(DetectionError::InvalidEpsilon(epsilon))
    }
}

struct Query<'a> {
    net: &'a Network,
    target: VarId,
    state: usize,
}

impl Query<'_> {
    fn prob(&self, evidence: &[(VarId, usize)]) -> Result<f64, DetectionError> {
        Ok(self.net.posterior_ids(evidence, self.target)?[self.state])
    }
}

fn prepare<'a>(
    net: &'a Network,
    obs_prime: &ObservationSet,
    new_obs: &NewObservation,
) -> Result<(Query<'a>, Vec<(VarId, usize)>), DetectionError> {
    let (target, state) = new_obs.resolve(net)?;
    if obs_prime.contains(&new_obs.variable) {
        return Err(DetectionError::AlreadyObserved(new_obs.variable.clone()));
    }
    Ok((Query { net, target, state }, obs_prime.resolve(net)?))
}

/// P(O_new = o_new | OBS').
pub fn contradiction_probability(
    net: &Network,
    obs_prime: &ObservationSet,
    new_obs: &NewObservation,
) -> Result<f64, DetectionError> {
    let (q, ev) = prepare(net, obs_prime, new_obs)?;
    q.prob(&ev)
}

/// Whether `obs_prime` is ε-contradictory to `new_obs`.
pub fn is_contradictory(
    net: &Network,
    obs_prime: &ObservationSet,
    new_obs: &NewObservation,
    epsilon: f64,
) -> Result<bool, DetectionError> {
    check_epsilon(epsilon)?;
    Ok(contradiction_probability(net, obs_prime, new_obs)? <= epsilon)
}

/// Keeps the observations that are not d-separated from the new
/// observation's variable given the other stored observations.
pub fn restrict(
    net: &Network,
    obs_prime: &ObservationSet,
    new_obs: &NewObservation,
) -> Result<ObservationSet, DetectionError> {
    let (q, ev) = prepare(net, obs_prime, new_obs)?;
    let mut observed = vec![false; net.len()];
    for &(v, _) in &ev {
        observed[v] = true;
    }
    let mut kept = ObservationSet::new();
    for (obs, &(v, _)) in obs_prime.iter().zip(&ev) {
        observed[v] = false;
        if net.d_connected_from(v, &observed)[q.target] {
            kept.insert(obs);
        }
        observed[v] = true;
    }
    Ok(kept)
}

/// Splits the restricted observations into dependency groups with their
/// AND/OR sets, using [`OrSetRule::SingleReplacement`].
pub fn decompose(
    net: &Network,
    obs_prime: &ObservationSet,
    restricted: &ObservationSet,
    new_obs: &NewObservation,
    epsilon: f64,
) -> Result<Vec<DependencyGroup>, DetectionError> {
    decompose_with(net, obs_prime, restricted, new_obs, epsilon, OrSetRule::SingleReplacement)
}

/// Groups are the maximal sets of restricted observations that are pairwise
/// d-connected given the new observation and every other stored observation.
/// Groups may overlap. They are ordered by their sorted member names.
pub fn decompose_with(
    net: &Network,
    obs_prime: &ObservationSet,
    restricted: &ObservationSet,
    new_obs: &NewObservation,
    epsilon: f64,
    rule: OrSetRule,
) -> Result<Vec<DependencyGroup>, DetectionError> {
    check_epsilon(epsilon)?;
    let (q, context) = prepare(net, obs_prime, new_obs)?;
    let members: Vec<Observation> = restricted.iter().collect();
    let resolved: Vec<(VarId, usize)> = members.iter().map(|o| o.resolve(net)).collect::<Result<_, _>>()?;
    let k = members.len();

    let mut observed = vec![false; net.len()];
    for &(v, _) in &context {
        observed[v] = true;
    }
    for &(v, _) in &resolved {
        observed[v] = true;
    }
    observed[q.target] = true;

    let mut adjacent = vec![vec![false; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (resolved[i].0, resolved[j].0);
            observed[a] = false;
            observed[b] = false;
            let dependent = net.d_connected_from(a, &observed)[b];
            observed[a] = true;
            observed[b] = true;
            adjacent[i][j] = dependent;
            adjacent[j][i] = dependent;
        }
    }

    let mut individual = Vec::with_capacity(k);
    for &x in &resolved {
        individual.push(q.prob(&[x])?);
    }

    let mut cliques = maximal_cliques(&adjacent);
    cliques.sort_by(|a, b| {
        let na: Vec<&str> = a.iter().map(|&i| members[i].variable.as_str()).collect();
        let nb: Vec<&str> = b.iter().map(|&i| members[i].variable.as_str()).collect();
        na.cmp(&nb)
    });

    let mut groups = Vec::new();
    for clique in cliques {
        let (and_idx, rest): (Vec<usize>, Vec<usize>) = clique.iter().partition(|&&i| individual[i] <= epsilon);
        let mut or_idx = Vec::new();
        if !rest.is_empty() {
            let remainder: Vec<(VarId, usize)> = rest.iter().map(|&i| resolved[i]).collect();
            if q.prob(&remainder)? <= epsilon {
                or_idx = match rule {
                    OrSetRule::WholeRemainder => rest.clone(),
                    OrSetRule::SingleReplacement => {
                        let mut keep = Vec::new();
                        for (pos, &i) in rest.iter().enumerate() {
                            if replacement_resolves(net, &q, &remainder, pos, epsilon)? {
                                keep.push(i);
                            }
                        }
                        if keep.is_empty() {
                            rest.clone()
                        } else {
                            keep
                        }
                    }
                };
            }
        }
        let group = DependencyGroup {
            and_set: and_idx.iter().map(|&i| members[i].clone()).collect(),
            or_set: or_idx.iter().map(|&i| members[i].clone()).collect(),
        };
        if !group.is_empty() {
            groups.push(group);
        }
    }
    Ok(groups)
}

/// Whether some other state for `remainder[pos]` lifts P(o_new | remainder) above ε.
fn replacement_resolves(
    net: &Network,
    q: &Query<'_>,
    remainder: &[(VarId, usize)],
    pos: usize,
    epsilon: f64,
) -> Result<bool, DetectionError> {
    let (var, current) = remainder[pos];
    let mut evidence = remainder.to_vec();
    for alt in (0..net.variable(var).cardinality()).filter(|&s| s != current) {
        evidence[pos] = (var, alt);
        if q.prob(&evidence)? > epsilon {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Bron–Kerbosch with pivoting. Cliques come back with ascending members.
fn maximal_cliques(adjacent: &[Vec<bool>]) -> Vec<Vec<usize>> {
    fn expand(
        adjacent: &[Vec<bool>],
        r: &mut Vec<usize>,
        p: BTreeSet<usize>,
        mut x: BTreeSet<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let pivot = *p
            .iter()
            .chain(&x)
            .max_by_key(|&&u| (p.iter().filter(|&&v| adjacent[u][v]).count(), std::cmp::Reverse(u)))
            .unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adjacent[pivot][v]).collect();
        let mut p = p;
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&u| adjacent[v][u]).collect();
            let nx = x.iter().copied().filter(|&u| adjacent[v][u]).collect();
            expand(adjacent, r, np, nx, out);
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
    let mut out = Vec::new();
    expand(adjacent, &mut Vec::new(), (0..adjacent.len()).collect(), BTreeSet::new(), &mut out);
    out
}

/// Runs the whole pipeline and returns every intermediate result.
///
/// `obs` may contain an entry for the new observation's variable; it is
/// ignored (that entry is what the new observation replaces). When the
/// single-replacement OR-sets leave a contradiction behind after every tree
/// leaf is removed, the groups are recomputed with whole remainders. If
/// observations left outside the tree are still contradictory together,
/// they are added as further groups.
pub fn detect(
    net: &Network,
    obs: &ObservationSet,
    new_obs: &NewObservation,
    epsilon: f64,
) -> Result<Detection, DetectionError> {
    check_epsilon(epsilon)?;
    let mut obs_prime = obs.clone();
    obs_prime.remove(&new_obs.variable);
    let probability = contradiction_probability(net, &obs_prime, new_obs)?;
    let restricted = restrict(net, &obs_prime, new_obs)?;
    let dropped: Vec<Observation> = obs_prime.iter().filter(|o| !restricted.contains(&o.variable)).collect();

    if probability > epsilon {
        return Ok(Detection { probability, epsilon, restricted, dropped, groups: Vec::new(), tree: None });
    }

    let mut groups = decompose(net, &obs_prime, &restricted, new_obs, epsilon)?;
    if !clears_contradiction(net, &obs_prime, &groups, new_obs, epsilon)? {
        groups = decompose_with(net, &obs_prime, &restricted, new_obs, epsilon, OrSetRule::WholeRemainder)?;
    }
    add_residual_groups(net, &obs_prime, &mut groups, new_obs, epsilon)?;
    if groups.is_empty() {
        return Err(DetectionError::NoCandidates { probability });
    }
    let tree = build_tree(&groups)?;
    Ok(Detection { probability, epsilon, restricted, dropped, groups, tree: Some(tree) })
}

fn without_leaves(obs_prime: &ObservationSet, groups: &[DependencyGroup]) -> ObservationSet {
    let mut rest = obs_prime.clone();
    for leaf in groups.iter().flat_map(DependencyGroup::leaves) {
        rest.remove(&leaf.variable);
    }
    rest
}

/// Removing every leaf of `groups` from `obs_prime` leaves a set that is no
/// longer ε-contradictory.
fn clears_contradiction(
    net: &Network,
    obs_prime: &ObservationSet,
    groups: &[DependencyGroup],
    new_obs: &NewObservation,
    epsilon: f64,
) -> Result<bool, DetectionError> {
    let rest = without_leaves(obs_prime, groups);
    Ok(contradiction_probability(net, &rest, new_obs)? > epsilon)
}

/// Observations that are pairwise independent given the new observation can
/// still be contradictory together. While the observations left outside the
/// tree remain ε-contradictory, their restriction becomes one more group:
/// individually contradictory members go to its AND-set, the others to its
/// OR-set. Stops early when the restriction is empty, which only happens when
/// the new observation is ε-improbable on its own.
fn add_residual_groups(
    net: &Network,
    obs_prime: &ObservationSet,
    groups: &mut Vec<DependencyGroup>,
    new_obs: &NewObservation,
    epsilon: f64,
) -> Result<(), DetectionError> {
    loop {
        let rest = without_leaves(obs_prime, groups);
        if contradiction_probability(net, &rest, new_obs)? > epsilon {
            return Ok(());
        }
        let residual = restrict(net, &rest, new_obs)?;
        if residual.is_empty() {
            return Ok(());
        }
        let mut group = DependencyGroup { and_set: Vec::new(), or_set: Vec::new() };
        for x in residual.iter() {
            if contradiction_probability(net, &ObservationSet::new().with(x.clone()), new_obs)? <= epsilon {
                group.and_set.push(x);
            } else {
                group.or_set.push(x);
            }
        }
        groups.push(group);
    }
}

/// The obsolete-information detection algorithm: `None` when `obs` is not
/// ε-contradictory to `new_obs`, the AND-OR tree otherwise.
pub fn oida(
    net: &Network,
    obs: &ObservationSet,
    new_obs: &NewObservation,
    epsilon: f64,
) -> Result<Option<AndOrTree>, DetectionError> {
    Ok(detect(net, obs, new_obs, epsilon)?.tree)
}
