mod common;

use oius::detection::{build_tree, oida, DependencyGroup, DEFAULT_EPSILON};
use oius::eval::{
    calibrate_threshold, compare_formulas, evaluate, generate_scenarios, parse_scenarios, rank_or_sets, spearman,
    synthesize_labeled, tree_to_formula, write_scenarios, youden, Formula, FormulaGroup, Label, Literal,
    RankAssignment, ScenarioRecord, SyntheticSpec,
};
use oius::model_tools::models;
use oius::recommender::{oora, RecommendationLeaf};
use proptest::prelude::*;

use common::{example2, pearson};

fn assignment(perm: &[usize]) -> RankAssignment {
    RankAssignment::new(perm.iter().enumerate().map(|(i, &r)| (format!("x{i}"), r + 1))).unwrap()
}

fn literal() -> impl Strategy<Value = Literal> {
    (0u8..6, prop::option::of(0u8..2)).prop_map(|(v, s)| Literal {
        variable: format!("v{v}"),
        state: s.map(|s| s.to_string()),
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    let group = (prop::collection::vec(literal(), 0..3), prop::collection::vec(literal(), 0..3))
        .prop_filter("non-empty group", |(c, d)| !c.is_empty() || !d.is_empty())
        .prop_map(|(conjunction, disjunction)| FormulaGroup { conjunction, disjunction });
    prop::collection::vec(group, 1..4).prop_map(|groups| Formula { groups })
}

proptest! {
    #[test]
    fn spearman_is_rank_pearson(
        (r, s) in (2usize..12).prop_flat_map(|k| {
            let base: Vec<usize> = (0..k).collect();
            (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
        })
    ) {
        let rho = spearman(&assignment(&r), &assignment(&s)).unwrap();
        let direct = pearson(
            &r.iter().map(|&v| v as f64).collect::<Vec<_>>(),
            &s.iter().map(|&v| v as f64).collect::<Vec<_>>(),
        );
        prop_assert!((rho - direct).abs() < 1e-12);
        prop_assert_eq!(rho, spearman(&assignment(&s), &assignment(&r)).unwrap());
        prop_assert_eq!(spearman(&assignment(&r), &assignment(&r)).unwrap(), 1.0);
        prop_assert!((-1.0..=1.0).contains(&rho));
    }

    #[test]
    fn formula_comparison_is_reflexive_and_symmetric(a in formula(), b in formula()) {
        prop_assert!(compare_formulas(&a, &a).is_match());
        prop_assert_eq!(compare_formulas(&a, &b).is_match(), compare_formulas(&b, &a).is_match());
        let mut reversed = a.clone();
        reversed.groups.reverse();
        prop_assert!(compare_formulas(&a, &reversed).is_match());
        prop_assert_eq!(a.to_string().parse::<Formula>().unwrap(), a);
    }
}

#[test]
fn scenario_one_reports_the_extra_literal() {
    let oids: Formula = "{heartDisease} & {drugsNb & psychotropicDrugs}".parse().unwrap();
    let expert: Formula = "{heartDisease} & {drugsNb}".parse().unwrap();
    let report = compare_formulas(&oids, &expert);
    assert!(report.same_group_count() && !report.is_match());
    let diff = report.groups.iter().find(|d| !d.is_exact()).unwrap();
    assert_eq!(diff.candidate, Some(1));
    assert_eq!(diff.extra_conjunction, vec![Literal::bare("psychotropicDrugs")]);
    assert!(report.to_string().contains("extra conjunction [psychotropicDrugs]"));
}

#[test]
fn fig6_formula() {
    let net = models::autonomy_submodel();
    let (obs, new) = example2();
    let tree = oida(&net, &obs, &new, DEFAULT_EPSILON).unwrap().unwrap();
    let expected: Formula =
        "{dementia=0 | strokeTIA=0 | muscleImpairment=0 | parkinson=0} & {livesAlone=1} & {getUpAlone=1} & {doShopping=1 & driveCar=2}"
            .parse()
            .unwrap();
    assert!(compare_formulas(&tree_to_formula(&tree), &expected).is_match());
}

fn leaf(v: &str) -> RecommendationLeaf {
    RecommendationLeaf {
        variable: v.into(),
        old_state: "0".into(),
        posterior: Some(0.5),
        proposed_state: "1".into(),
        proposed_prob: 0.5,
        timestamp: 1,
    }
}

#[test]
fn rank_or_sets_edge_cases() {
    let and_only = build_tree(&[DependencyGroup { and_set: vec![leaf("a")], or_set: vec![] }]).unwrap();
    assert!(rank_or_sets(&and_only).is_empty());
    let single = build_tree(&[DependencyGroup { and_set: vec![], or_set: vec![leaf("b")] }]).unwrap();
    let ranks = rank_or_sets(&single);
    assert_eq!((ranks.len(), ranks[0].rank("b")), (1, Some(1)));
    let net = models::autonomy_submodel();
    let (obs, new) = example2();
    let rec = oora(&oida(&net, &obs, &new, DEFAULT_EPSILON).unwrap().unwrap(), &net, &new).unwrap();
    assert_eq!(rank_or_sets(&rec)[0].order()[0], "muscleImpairment");
}

#[test]
fn generated_scenarios_satisfy_invariants() {
    let net = models::falls_extended();
    let scenarios = generate_scenarios(&net, 1000, 42).unwrap();
    assert_eq!(scenarios.len(), 1000);
    let mut ids = std::collections::BTreeSet::new();
    for s in &scenarios {
        assert!(ids.insert(s.id.clone()));
        assert!((3..=12).contains(&s.prior_observations.len()), "{}", s.id);
        assert!(!s.prior_observations.contains(&s.new_observation.variable));
        s.prior_observations.validate(&net).unwrap();
        let v = net.lookup(&s.new_observation.variable).unwrap();
        assert!(v.state_index(&s.new_observation.state).is_some());
    }
    assert_eq!(scenarios, generate_scenarios(&net, 1000, 42).unwrap());
    let records: Vec<ScenarioRecord> = scenarios.into_iter().map(Into::into).collect();
    assert_eq!(parse_scenarios(&write_scenarios(&records)).unwrap(), records);
}

#[test]
fn synthetic_set_yields_planted_table_and_best_youden() {
    let net = models::falls_extended();
    let spec = SyntheticSpec {
        contradictory: 30,
        consistent: 28,
        planted_false_negatives: 2,
        planted_false_positives: 3,
        ..SyntheticSpec::default()
    };
    let set = synthesize_labeled(&net, &spec, 9).unwrap();
    assert_eq!(set.len(), 63);
    for eps in [spec.low, 1e-2, 4.9e-2] {
        let t = evaluate(&net, &set, eps).unwrap();
        assert_eq!((t.tp, t.fn_, t.fp, t.tn), (30, 2, 3, 28), "at {eps}");
    }
    let grid = [1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 1e-4];
    let (chosen, table) = calibrate_threshold(&net, &set, &grid).unwrap();
    assert!(grid.contains(&chosen));
    let best = grid.iter().map(|&e| youden(&evaluate(&net, &set, e).unwrap())).fold(f64::MIN, f64::max);
    assert_eq!(youden(&table), best);
    for &e in grid.iter().filter(|&&e| e < chosen) {
        assert!(youden(&evaluate(&net, &set, e).unwrap()) < best, "smaller tie at {e}");
    }
    // labels survive the file format
    let records: Vec<ScenarioRecord> = set.iter().cloned().map(Into::into).collect();
    let back: Vec<_> = parse_scenarios(&write_scenarios(&records)).unwrap().into_iter().map(|r| r.labeled().unwrap()).collect();
    assert_eq!(back, set);
    assert_eq!(back.iter().filter(|l| l.label == Label::Contradictory).count(), 32);
}

#[test]
fn evaluation_ignores_thread_count() {
    let net = models::falls_extended();
    let spec = SyntheticSpec { contradictory: 8, consistent: 8, planted_false_negatives: 1, planted_false_positives: 1, ..Default::default() };
    let set = synthesize_labeled(&net, &spec, 1).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (a, again) = single.install(|| (evaluate(&net, &set, 1e-2).unwrap(), synthesize_labeled(&net, &spec, 1).unwrap()));
    assert_eq!(a, evaluate(&net, &set, 1e-2).unwrap());
    assert_eq!(again, set);
    assert_eq!(a.total(), set.len());
}
