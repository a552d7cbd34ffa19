use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bn::{Network, VarId};
use crate::detection::{contradiction_probability, NewObservation, Observation, ObservationSet};

use super::{EvalError, Formula, RankAssignment};

const MIN_PRIOR: usize = 3;
const MAX_PRIOR: usize = 12;
const MAX_ATTEMPTS: usize = 100;
const MAX_SYNTHESIS_ATTEMPTS: usize = 2000;

/// Stored observations plus one new observation on another variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub prior_observations: ObservationSet,
    pub new_observation: NewObservation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Contradictory,
    Consistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledScenario {
    pub scenario: Scenario,
    pub label: Label,
    /// Only for contradictory scenarios.
    pub expert_formula: Option<Formula>,
    pub expert_or_rankings: Option<Vec<RankAssignment>>,
}

/// One line of a scenario file; labels and expert annotations are optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: Scenario,
    pub label: Option<Label>,
    pub expert_formula: Option<Formula>,
    pub expert_or_rankings: Option<Vec<RankAssignment>>,
}

impl ScenarioRecord {
    pub fn labeled(self) -> Option<LabeledScenario> {
        Some(LabeledScenario {
            label: self.label?,
            scenario: self.scenario,
            expert_formula: self.expert_formula,
            expert_or_rankings: self.expert_or_rankings,
        })
    }
}

impl From<Scenario> for ScenarioRecord {
    fn from(scenario: Scenario) -> Self {
        Self { scenario, label: None, expert_formula: None, expert_or_rankings: None }
    }
}

impl From<LabeledScenario> for ScenarioRecord {
    fn from(l: LabeledScenario) -> Self {
        Self {
            scenario: l.scenario,
            label: Some(l.label),
            expert_formula: l.expert_formula,
            expert_or_rankings: l.expert_or_rankings,
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Every observation has conditional probability at least the clamp floor
/// given the ones before it.
fn chain_consistent(net: &Network, evidence: &[(VarId, usize)]) -> bool {
    let floor = net.clamp_floor().ln();
    let mut previous = 0.0;
    for j in 1..=evidence.len() {
        let current = net.log_evidence_probability_ids(&evidence[..j]);
        if current - previous < floor {
            return false;
        }
        previous = current;
    }
    true
}

fn to_observations(net: &Network, evidence: &[(VarId, usize)]) -> ObservationSet {
    let mut set = ObservationSet::new();
    for (t, &(v, s)) in evidence.iter().enumerate() {
        let var = net.variable(v);
        set.insert(Observation::new(var.name.clone(), var.states[s].clone(), t as i64 + 1));
    }
    set
}

fn prior_count_range(net: &Network) -> Result<std::ops::RangeInclusive<usize>, EvalError> {
    let n = net.len();
    if n < 2 {
        return Err(EvalError::Synthesis("network needs at least two variables".into()));
    }
    Ok(MIN_PRIOR.min(n - 1)..=MAX_PRIOR.min(n - 1))
}

/// Random scenarios: a uniform subset of 3 to 12 variables with uniform
/// states, then one more variable and state as the new observation.
///
/// Prior sets in which some observation has conditional probability below
/// the network's clamp floor given the earlier ones are redrawn, up to 100
/// times (the last draw is kept). Scenario `i` uses its own random stream,
/// so the output depends only on `seed`.
pub fn generate_scenarios(net: &Network, count: usize, seed: u64) -> Result<Vec<Scenario>, EvalError> {
    if count == 0 {
        return Err(EvalError::Empty);
    }
    let range = prior_count_range(net)?;
    let out = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut draw = Vec::new();
            for _ in 0..MAX_ATTEMPTS {
                let k = rng.gen_range(range.clone());
                draw = sample(&mut rng, net.len(), k + 1)
                    .into_iter()
                    .map(|v| (v, rng.gen_range(0..net.variable(v).cardinality())))
                    .collect();
                if chain_consistent(net, &draw[..k]) {
                    break;
                }
            }
            let (new_var, new_state) = draw.pop().expect("at least two variables drawn");
            let var = net.variable(new_var);
            Scenario {
                id: format!("g{i}"),
                prior_observations: to_observations(net, &draw),
                new_observation: Observation::new(var.name.clone(), var.states[new_state].clone(), draw.len() as i64 + 1),
            }
        })
        .collect();
    Ok(out)
}

/// Construction of a labeled set with known ground truth.
///
/// Prior observations are read off a sample of the network, so they are
/// jointly consistent. The new observation is then chosen so that
/// P(new | prior) is at most `low` (contradictory) or at least `high`
/// (consistent). Planted false negatives are consistent by construction but
/// labeled contradictory; planted false positives the reverse. For any
/// `low <= ε < high` the contingency table is therefore exactly
/// `tp = contradictory`, `fn = planted_false_negatives`,
/// `fp = planted_false_positives`, `tn = consistent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub contradictory: usize,
    pub consistent: usize,
    pub planted_false_negatives: usize,
    pub planted_false_positives: usize,
    pub low: f64,
    pub high: f64,
}

impl Default for SyntheticSpec {
    /// 380 scenarios, 190 per label.
    fn default() -> Self {
        Self {
            contradictory: 185,
            consistent: 187,
            planted_false_negatives: 5,
            planted_false_positives: 3,
            low: 5e-3,
            high: 5e-2,
        }
    }
}

impl SyntheticSpec {
    pub fn total(&self) -> usize {
        self.contradictory + self.consistent + self.planted_false_negatives + self.planted_false_positives
    }
}

fn sample_world(net: &Network, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut states = vec![0; net.len()];
    for &v in net.topological_order() {
        let u: f64 = rng.gen();
        let card = net.variable(v).cardinality();
        let mut acc = 0.0;
        states[v] = card - 1;
        for s in 0..card {
            states[v] = s;
            acc += net.conditional(v, &states);
            if u < acc {
                break;
            }
        }
    }
    states
}

fn synthesize_one(
    net: &Network,
    rng: &mut ChaCha8Rng,
    want_low: bool,
    spec: &SyntheticSpec,
    id: String,
) -> Result<Scenario, EvalError> {
    let range = prior_count_range(net)?;
    for _ in 0..MAX_SYNTHESIS_ATTEMPTS {
        let world = sample_world(net, rng);
        let k = rng.gen_range(range.clone());
        let mut order: Vec<VarId> = (0..net.len()).collect();
        order.shuffle(rng);
        let evidence: Vec<(VarId, usize)> = order[..k].iter().map(|&v| (v, world[v])).collect();
        if !chain_consistent(net, &evidence) {
            continue;
        }
        let prior = to_observations(net, &evidence);
        for &v in &order[k..] {
            let var = net.variable(v);
            let candidates: Vec<(String, f64)> = var
                .states
                .iter()
                .map(|s| {
                    let new = Observation::new(var.name.clone(), s.clone(), k as i64 + 1);
                    contradiction_probability(net, &prior, &new).map(|p| (s.clone(), p))
                })
                .collect::<Result<_, _>>()?;
            let fitting: Vec<&String> = candidates
                .iter()
                .filter(|(_, p)| if want_low { *p <= spec.low } else { *p >= spec.high })
                .map(|(s, _)| s)
                .collect();
            if let Some(state) = fitting.choose(rng) {
                return Ok(Scenario {
                    id,
                    prior_observations: prior,
                    new_observation: Observation::new(var.name.clone(), (*state).clone(), k as i64 + 1),
                });
            }
        }
    }
    let band = if want_low { format!("<= {}", spec.low) } else { format!(">= {}", spec.high) };
    Err(EvalError::Synthesis(format!("no new observation with probability {band} found for {id}")))
}

/// Builds the labeled set described by `spec`, in a seed-determined shuffled
/// order.
pub fn synthesize_labeled(net: &Network, spec: &SyntheticSpec, seed: u64) -> Result<Vec<LabeledScenario>, EvalError> {
    if spec.total() == 0 {
        return Err(EvalError::Empty);
    }
    if !(0.0 < spec.low && spec.low < spec.high && spec.high <= 1.0) {
        return Err(EvalError::Synthesis(format!("need 0 < low < high <= 1, got {} and {}", spec.low, spec.high)));
    }
    // (probability is low, label)
    let mut plan = Vec::with_capacity(spec.total());
    plan.extend(std::iter::repeat_n((true, Label::Contradictory), spec.contradictory));
    plan.extend(std::iter::repeat_n((false, Label::Contradictory), spec.planted_false_negatives));
    plan.extend(std::iter::repeat_n((false, Label::Consistent), spec.consistent));
    plan.extend(std::iter::repeat_n((true, Label::Consistent), spec.planted_false_positives));
    plan.shuffle(&mut stream_rng(seed, u64::MAX));

    plan.into_par_iter()
        .enumerate()
        .map(|(i, (want_low, label))| {
            let mut rng = stream_rng(seed, i as u64);
            let scenario = synthesize_one(net, &mut rng, want_low, spec, format!("s{i}"))?;
            Ok(LabeledScenario { scenario, label, expert_formula: None, expert_or_rankings: None })
        })
        .collect()
}

/// Line-oriented scenario file.
///
/// ```text
/// oius-scenarios 1
/// scenario s1 new=autonomyLoss:1@9 obs=sex:1@1,driveCar:2@2 label=1 ranks=a>b>c;d>e expert={driveCar} & {a | b}
/// ```
///
/// `obs` holds `variable:state@timestamp` triples. `label`, `ranks` and
/// `expert` are optional; `expert` takes the rest of the line.
pub fn write_scenarios(records: &[ScenarioRecord]) -> String {
    let mut out = String::from("oius-scenarios 1\n");
    let triple = |o: &Observation| format!("{}:{}@{}", o.variable, o.state, o.timestamp);
    for r in records {
        let s = &r.scenario;
        let obs: Vec<String> = s.prior_observations.iter().map(|o| triple(&o)).collect();
        let _ = write!(out, "scenario {} new={} obs={}", s.id, triple(&s.new_observation), obs.join(","));
        if let Some(label) = r.label {
            let _ = write!(out, " label={}", if label == Label::Contradictory { 1 } else { 0 });
        }
        if let Some(ranks) = &r.expert_or_rankings {
            let sets: Vec<String> = ranks.iter().map(|a| a.order().join(">")).collect();
            let _ = write!(out, " ranks={}", sets.join(";"));
        }
        if let Some(f) = &r.expert_formula {
            let _ = write!(out, " expert={f}");
        }
        out.push('\n');
    }
    out
}

fn parse_triple(t: &str) -> Option<Observation> {
    let (var, rest) = t.split_once(':')?;
    let (state, ts) = rest.split_once('@')?;
    if var.is_empty() || state.is_empty() {
        return None;
    }
    Some(Observation::new(var, state, ts.parse().ok()?))
}

pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioRecord>, EvalError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, "oius-scenarios 1")) => {}
        Some((line, other)) => {
            return Err(EvalError::Parse { line, message: format!("expected `oius-scenarios 1`, found `{other}`") })
        }
        None => return Err(EvalError::Parse { line: 0, message: "empty document".into() }),
    }
    let mut out: Vec<ScenarioRecord> = Vec::new();
    for (line, text) in lines {
        let err = |message: String| EvalError::Parse { line, message };
        let (body, expert) = match text.split_once(" expert=") {
            Some((b, e)) => (b, Some(e.parse::<Formula>().map_err(|e| err(e.to_string()))?)),
            None => (text, None),
        };
        let mut tokens = body.split_whitespace();
        if tokens.next() != Some("scenario") {
            return Err(err("records start with `scenario`".into()));
        }
        let id = tokens.next().ok_or_else(|| err("missing scenario id".into()))?.to_string();
        if out.iter().any(|r| r.scenario.id == id) {
            return Err(err(format!("duplicate scenario id `{id}`")));
        }
        let (mut new, mut obs, mut label, mut ranks) = (None, None, None, None);
        for token in tokens {
            let (key, value) = token.split_once('=').ok_or_else(|| err(format!("expected key=value, found `{token}`")))?;
            match key {
                "new" => new = Some(parse_triple(value).ok_or_else(|| err(format!("bad observation `{value}`")))?),
                "obs" => {
                    let mut set = ObservationSet::new();
                    for t in value.split(',').filter(|t| !t.is_empty()) {
                        let o = parse_triple(t).ok_or_else(|| err(format!("bad observation `{t}`")))?;
                        if set.insert(o).is_some() {
                            return Err(err(format!("variable observed twice in `{value}`")));
                        }
                    }
                    obs = Some(set);
                }
                "label" => {
                    label = Some(match value {
                        "1" => Label::Contradictory,
                        "0" => Label::Consistent,
                        _ => return Err(err(format!("label must be 0 or 1, found `{value}`"))),
                    })
                }
                "ranks" => {
                    ranks = Some(
                        value
                            .split(';')
                            .map(|set| RankAssignment::from_order(set.split('>')))
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| err(e.to_string()))?,
                    )
                }
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        let new_observation: Observation = new.ok_or_else(|| err("missing `new=`".into()))?;
        let prior_observations = obs.unwrap_or_default();
        if prior_observations.contains(&new_observation.variable) {
            return Err(err(format!("`{}` is both stored and new", new_observation.variable)));
        }
        if expert.is_some() && label != Some(Label::Contradictory) {
            return Err(err("an expert formula needs label=1".into()));
        }
        out.push(ScenarioRecord {
            scenario: Scenario { id, prior_observations, new_observation },
            label,
            expert_formula: expert,
            expert_or_rankings: ranks,
        });
    }
    Ok(out)
}
