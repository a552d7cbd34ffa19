use rayon::prelude::*;

use crate::bn::Network;
use crate::detection::{contradiction_probability, DetectionError};

use super::{ContingencyTable, EvalError, Label, LabeledScenario};

fn probabilities(net: &Network, labeled: &[LabeledScenario]) -> Result<Vec<f64>, EvalError> {
    labeled
        .par_iter()
        .map(|l| {
            let s = &l.scenario;
            Ok(contradiction_probability(net, &s.prior_observations, &s.new_observation)?)
        })
        .collect()
}

fn tabulate(labeled: &[LabeledScenario], probabilities: &[f64], epsilon: f64) -> ContingencyTable {
    labeled
        .iter()
        .zip(probabilities)
        .map(|(l, &p)| ContingencyTable::record(p <= epsilon, l.label))
        .fold(ContingencyTable::default(), ContingencyTable::add)
}

fn check_epsilon(epsilon: f64) -> Result<(), EvalError> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(DetectionError::InvalidEpsilon(epsilon).into())
    }
}

/// Contingency of the ε-contradiction test against the labels.
pub fn evaluate(net: &Network, labeled: &[LabeledScenario], epsilon: f64) -> Result<ContingencyTable, EvalError> {
    if labeled.is_empty() {
        return Err(EvalError::Empty);
    }
    check_epsilon(epsilon)?;
    labeled
        .par_iter()
        .map(|l| {
            let s = &l.scenario;
            let p = contradiction_probability(net, &s.prior_observations, &s.new_observation)?;
            Ok(ContingencyTable::record(p <= epsilon, l.label))
        })
        .try_reduce(ContingencyTable::default, |a, b| Ok(a.add(b)))
}

/// Youden's index, TP rate minus FP rate.
pub fn youden(table: &ContingencyTable) -> f64 {
    table.tp_rate() - table.fp_rate()
}

/// The contingency table for every ε of `grid`, in grid order.
pub fn calibration_curve(
    net: &Network,
    labeled: &[LabeledScenario],
    grid: &[f64],
) -> Result<Vec<(f64, ContingencyTable)>, EvalError> {
    if labeled.is_empty() {
        return Err(EvalError::Empty);
    }
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    for &e in grid {
        check_epsilon(e)?;
    }
    let probs = probabilities(net, labeled)?;
    Ok(grid.iter().map(|&e| (e, tabulate(labeled, &probs, e))).collect())
}

/// The grid value with the largest Youden index; the smaller ε wins ties.
pub fn calibrate_threshold(
    net: &Network,
    labeled: &[LabeledScenario],
    grid: &[f64],
) -> Result<(f64, ContingencyTable), EvalError> {
    let has = |label| labeled.iter().any(|l| l.label == label);
    if !labeled.is_empty() && !(has(Label::Contradictory) && has(Label::Consistent)) {
        return Err(EvalError::SingleClass);
    }
    let curve = calibration_curve(net, labeled, grid)?;
    let mut best = curve[0];
    for &(e, t) in &curve[1..] {
        let (j, jb) = (youden(&t), youden(&best.1));
        if j > jb || (j == jb && e < best.0) {
            best = (e, t);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::load_network;
    use crate::detection::{Observation, ObservationSet};
    use crate::eval::Scenario;

    const NET: &str = "oius-network 1\n[variables]\nA = 0 1\nB = 0 1\n[edges]\nA -> B\n[cpts]\ncpt A\n0.5 0.5\ncpt B | A\n0.9995 0.0005\n0.2 0.8\n";

    fn case(a: &str, b: &str, label: Label) -> LabeledScenario {
        LabeledScenario {
            scenario: Scenario {
                id: format!("{a}{b}"),
                prior_observations: ObservationSet::new().with(Observation::new("A", a, 1)),
                new_observation: Observation::new("B", b, 2),
            },
            label,
            expert_formula: None,
            expert_or_rankings: None,
        }
    }

    #[test]
    fn tie_goes_to_smaller_epsilon() {
        let net = load_network(NET).unwrap();
        // P(B=1 | A=0) = 5e-4, P(B=0 | A=1) = 0.2, P(B=0 | A=0) = 0.9995
        let set = vec![
            case("0", "1", Label::Contradictory),
            case("1", "0", Label::Consistent),
            case("0", "0", Label::Consistent),
        ];
        let (e, t) = calibrate_threshold(&net, &set, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert_eq!(e, 1e-3);
        assert_eq!((t.tp, t.fn_, t.fp, t.tn), (1, 0, 0, 2));
        let (e, _) = calibrate_threshold(&net, &set, &[0.5]).unwrap();
        assert_eq!(e, 0.5);
    }

    #[test]
    fn flipped_labels_swap_cells() {
        let net = load_network(NET).unwrap();
        let set = vec![case("0", "1", Label::Contradictory), case("1", "0", Label::Consistent)];
        let flipped: Vec<_> = set
            .iter()
            .cloned()
            .map(|mut l| {
                l.label = if l.label == Label::Contradictory { Label::Consistent } else { Label::Contradictory };
                l
            })
            .collect();
        let a = evaluate(&net, &set, 1e-2).unwrap();
        let b = evaluate(&net, &flipped, 1e-2).unwrap();
        assert_eq!((a.tp, a.tn, a.fn_, a.fp), (b.fp, b.fn_, b.tn, b.tp));
    }

    #[test]
    fn input_errors() {
        let net = load_network(NET).unwrap();
        let one = vec![case("0", "1", Label::Contradictory)];
        assert_eq!(calibrate_threshold(&net, &one, &[0.1]), Err(EvalError::SingleClass));
        assert_eq!(calibrate_threshold(&net, &[], &[0.1]), Err(EvalError::Empty));
        let two = vec![case("0", "1", Label::Contradictory), case("1", "1", Label::Consistent)];
        assert_eq!(calibrate_threshold(&net, &two, &[]), Err(EvalError::EmptyGrid));
        assert!(evaluate(&net, &two, 2.0).is_err());
    }
}
