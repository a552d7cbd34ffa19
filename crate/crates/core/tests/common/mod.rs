//! Shared fixtures and brute-force oracles.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use oius::bn::{Cpt, Network, NetworkBuilder, VarId, Variable};
use oius::detection::{Observation, ObservationSet};
use rand::Rng;

/// The published AND-OR tree of the worked autonomy example.
pub const FIG6: &str = "\
(AND
  (AND
    (AND
      (leaf livesAlone 1 12)))
  (AND
    (OR
      (leaf dementia 0 3)
      (leaf muscleImpairment 0 5)
      (leaf parkinson 0 6)
      (leaf strokeTIA 0 4)))
  (AND
    (AND
      (leaf doShopping 1 9)
      (leaf driveCar 2 8)))
  (AND
    (AND
      (leaf getUpAlone 1 11))))
";

pub fn observations(pairs: &[(&str, &str)]) -> ObservationSet {
    let mut set = ObservationSet::new();
    for (i, (v, s)) in pairs.iter().enumerate() {
        set.insert(Observation::new(*v, *s, i as i64 + 1));
    }
    set
}

/// The twelve stored observations of the worked autonomy example and the new
/// observation `autonomyLoss = 1`.
pub fn example2() -> (ObservationSet, Observation) {
    let obs = observations(&[
        ("sex", "1"),
        ("diabetes", "0"),
        ("dementia", "0"),
        ("strokeTIA", "0"),
        ("muscleImpairment", "0"),
        ("parkinson", "0"),
        ("visionPb", "0"),
        ("driveCar", "2"),
        ("doShopping", "1"),
        ("leaveHome", "2"),
        ("getUpAlone", "1"),
        ("livesAlone", "1"),
    ]);
    (obs, Observation::new("autonomyLoss", "1", 20))
}

/// Inputs of the four worked scenarios and the formula in the system column.
pub fn table4(n: usize) -> (ObservationSet, Observation, &'static str) {
    match n {
        1 => (
            observations(&[
                ("heartDisease", "0"),
                ("drugsNb", "1"),
                ("akinesia", "0"),
                ("parkinson", "0"),
                ("diabetes", "0"),
                ("psychotropicDrugs", "0"),
            ]),
            Observation::new("cardiovascularDrugs", "1", 20),
            "{heartDisease} & {drugsNb & psychotropicDrugs}",
        ),
        2 => (
            observations(&[
                ("depression", "0"),
                ("psychotropicDrugs", "0"),
                ("parkinson", "0"),
                ("physiotherapy", "0"),
                ("driveCar", "2"),
            ]),
            Observation::new("akinesia", "1", 20),
            "{parkinson | psychotropicDrugs} & {physiotherapy} & {driveCar}",
        ),
        3 => (
            observations(&[
                ("parkinson", "0"),
                ("strokeTIA", "0"),
                ("hypotension", "0"),
                ("diabetes", "1"),
                ("difficultyWalking", "0"),
                ("difficultyBalance", "0"),
                ("osteoporosis", "1"),
                ("muscleImpairment", "0"),
                ("getUpAlone", "0"),
                ("telealarm", "0"),
            ]),
            Observation::new("fallsNb", "3", 20),
            "{strokeTIA | hypotension | difficultyWalking | difficultyBalance} & {getUpAlone | telealarm}",
        ),
        4 => (
            observations(&[
                ("livesAlone", "1"),
                ("driveCar", "2"),
                ("parkinson", "0"),
                ("fearFalling", "0"),
                ("strokeTIA", "0"),
                ("difficultyWalking", "0"),
                ("muscleImpairment", "0"),
            ]),
            Observation::new("autonomyLoss", "1", 20),
            "{muscleImpairment | parkinson | strokeTIA} & {driveCar} & {livesAlone}",
        ),
        _ => panic!("scenarios are numbered 1 to 4"),
    }
}

/// Random binary network on `n` variables `v0..`; each variable draws up to
/// `max_parents` parents among the earlier ones. Entries lie in [0.02, 0.98].
pub fn random_network<R: Rng>(rng: &mut R, n: usize, max_parents: usize) -> Network {
    let mut b = NetworkBuilder::new();
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    for name in &names {
        b = b.variable(Variable::new(name.as_str(), &["0", "1"]));
    }
    for i in 0..n {
        let mut parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.5)).collect();
        while parents.len() > max_parents {
            parents.remove(rng.gen_range(0..parents.len()));
        }
        for &p in &parents {
            b = b.edge(names[p].as_str(), names[i].as_str());
        }
        let rows = (0..1usize << parents.len())
            .map(|_| {
                let p: f64 = rng.gen_range(0.02..0.98);
                vec![p, 1.0 - p]
            })
            .collect();
        let parent_names: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
        b = b.cpt(Cpt::new(names[i].as_str(), &parent_names, rows));
    }
    b.build().expect("random network is valid")
}

/// P(full assignment) as the product of CPT entries read by name.
pub fn chain_rule(net: &Network, states: &[usize]) -> f64 {
    net.cpts()
        .iter()
        .map(|cpt| {
            let owner = net.var_id(&cpt.owner).unwrap();
            let mut row = 0;
            for p in &cpt.parents {
                let pid = net.var_id(p).unwrap();
                row = row * net.variable(pid).cardinality() + states[pid];
            }
            cpt.rows[row][states[owner]]
        })
        .product()
}

/// Posterior of `target` by summing the chain rule over every completion of
/// `evidence`.
pub fn enumerate_posterior(net: &Network, evidence: &[(VarId, usize)], target: VarId) -> Vec<f64> {
    let cards: Vec<usize> = net.variables().iter().map(|v| v.cardinality()).collect();
    let mut mass = vec![0.0; cards[target]];
    let mut states = vec![0usize; cards.len()];
    loop {
        if evidence.iter().all(|&(v, s)| states[v] == s) {
            mass[states[target]] += chain_rule(net, &states);
        }
        let mut k = 0;
        loop {
            if k == cards.len() {
                let z: f64 = mass.iter().sum();
                return mass.into_iter().map(|m| m / z).collect();
            }
            states[k] += 1;
            if states[k] < cards[k] {
                break;
            }
            states[k] = 0;
            k += 1;
        }
    }
}

/// d-separation via the moralized ancestral graph of `{a, b} ∪ given`.
pub fn moral_d_separated(net: &Network, a: VarId, b: VarId, given: &[VarId]) -> bool {
    let n = net.len();
    let mut keep = vec![false; n];
    let mut stack: Vec<VarId> = [a, b].iter().chain(given).copied().collect();
    while let Some(v) = stack.pop() {
        if !keep[v] {
            keep[v] = true;
            stack.extend_from_slice(net.parents(v));
        }
    }
    let mut adj: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); n];
    for v in (0..n).filter(|&v| keep[v]) {
        let ps = net.parents(v);
        for &p in ps {
            adj[v].insert(p);
            adj[p].insert(v);
        }
        for &p in ps {
            for &q in ps {
                if p != q {
                    adj[p].insert(q);
                }
            }
        }
    }
    let blocked: BTreeSet<VarId> = given.iter().copied().collect();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([a]);
    seen[a] = true;
    while let Some(v) = queue.pop_front() {
        if v == b {
            return false;
        }
        for &w in &adj[v] {
            if !seen[w] && !blocked.contains(&w) {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    true
}

/// Pearson correlation computed directly from the definition.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
