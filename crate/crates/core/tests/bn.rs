mod common;

use approx::assert_abs_diff_eq;
use oius::bn::{load_network, write_network, Cpt, Evidence, NetworkBuilder, Variable};
use oius::model_tools::models;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{enumerate_posterior, example2, moral_d_separated, random_network};

fn random_evidence(rng: &mut ChaCha8Rng, n: usize, target: usize) -> Vec<(usize, usize)> {
    let mut evidence = Vec::new();
    for v in (0..n).filter(|&v| v != target) {
        if rng.gen_bool(0.4) {
            evidence.push((v, rng.gen_range(0..2)));
        }
    }
    evidence
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_matches_enumeration(seed in any::<u64>(), n in 2usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, 3);
        let target = rng.gen_range(0..n);
        let evidence = random_evidence(&mut rng, n, target);
        let fast = net.posterior_ids(&evidence, target).unwrap();
        let slow = enumerate_posterior(&net, &evidence, target);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-9, "{fast:?} vs {slow:?}");
        }
        prop_assert!((fast.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d_separation_matches_moral_graph(seed in any::<u64>(), n in 2usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, 3);
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let given: Vec<usize> = (0..n).filter(|&v| v != a && v != b && rng.gen_bool(0.35)).collect();
        prop_assert_eq!(net.d_separated_ids(a, b, &given), moral_d_separated(&net, a, b, &given));
        prop_assert_eq!(net.d_separated_ids(a, b, &given), net.d_separated_ids(b, a, &given));
    }

    #[test]
    fn written_network_reloads_with_same_posteriors(seed in any::<u64>(), n in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, 2);
        let again = load_network(&write_network(&net)).unwrap();
        prop_assert_eq!(again.edges(), net.edges());
        let target = rng.gen_range(0..n);
        let evidence = random_evidence(&mut rng, n, target);
        let (a, b) = (net.posterior_ids(&evidence, target).unwrap(), again.posterior_ids(&evidence, target).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn clamped_rows_respect_the_floor(p in 0.0f64..=1.0) {
        let doc = format!("oius-network 1\n[variables]\nA = 0 1\n[cpts]\ncpt A\n{p} {}\n", 1.0 - p);
        let net = load_network(&doc).unwrap();
        let row = &net.cpt(0).rows[0];
        prop_assert!(row.iter().all(|&x| x >= 1e-4 - 1e-15));
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn joint_of_four_variables_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = random_network(&mut rng, 4, 3);
    let mut total = 0.0;
    for code in 0..16usize {
        let mut ev = Evidence::new();
        for v in 0..4 {
            ev.insert(format!("v{v}"), ((code >> v) & 1).to_string());
        }
        total += net.joint_probability(&ev).unwrap();
    }
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
}

#[test]
fn collider_explains_away() {
    let net = NetworkBuilder::new()
        .variable(Variable::new("A", &["0", "1"]))
        .variable(Variable::new("B", &["0", "1"]))
        .variable(Variable::new("C", &["0", "1"]))
        .edge("A", "C")
        .edge("B", "C")
        .cpt(Cpt::new("A", &[], vec![vec![0.7, 0.3]]))
        .cpt(Cpt::new("B", &[], vec![vec![0.6, 0.4]]))
        .cpt(Cpt::new("C", &["A", "B"], vec![vec![0.95, 0.05], vec![0.2, 0.8], vec![0.3, 0.7], vec![0.1, 0.9]]))
        .build()
        .unwrap();
    let c = net.var_id("C").unwrap();
    let a = net.var_id("A").unwrap();
    let b = net.var_id("B").unwrap();
    let given_c = net.posterior(&Evidence::new().with("C", "1"), "A").unwrap();
    let oracle = enumerate_posterior(&net, &[(c, 1)], a);
    for (x, y) in given_c.iter().zip(&oracle) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-9);
    }
    let given_cb = net.posterior(&Evidence::new().with("C", "1").with("B", "1"), "A").unwrap();
    assert_abs_diff_eq!(given_cb[1], enumerate_posterior(&net, &[(c, 1), (b, 1)], a)[1], epsilon = 1e-9);
    assert!(given_cb[1] < given_c[1], "observing the other cause lowers A");
    assert!(net.d_separated("A", "B", &[] as &[&str]).unwrap());
    assert!(!net.d_separated("A", "B", &["C"]).unwrap());
}

#[test]
fn autonomy_example_is_improbable_by_enumeration() {
    let net = models::autonomy_submodel();
    let (obs, new) = example2();
    let evidence: Vec<(usize, usize)> = obs
        .iter()
        .map(|o| {
            let v = net.var_id(&o.variable).unwrap();
            (v, net.state_id(v, &o.state).unwrap())
        })
        .collect();
    let target = net.var_id(&new.variable).unwrap();
    let fast = net.posterior(&obs.to_evidence(), &new.variable).unwrap();
    let slow = enumerate_posterior(&net, &evidence, target);
    assert_abs_diff_eq!(fast[1], slow[1], epsilon = 1e-12);
    assert!(fast[1] <= 1e-2, "{}", fast[1]);
}

#[test]
fn sex_is_separated_from_autonomy_given_the_rest() {
    let net = models::autonomy_submodel();
    let (obs, _) = example2();
    let rest: Vec<String> = obs.iter().map(|o| o.variable).filter(|v| v != "sex").collect();
    assert!(net.d_separated("sex", "autonomyLoss", &rest).unwrap());
}

#[test]
fn shipped_models_pass_the_moral_graph_oracle() {
    let net = models::falls_extended();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let n = net.len();
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let given: Vec<usize> = (0..n).filter(|&v| v != a && v != b && rng.gen_bool(0.25)).collect();
        assert_eq!(net.d_separated_ids(a, b, &given), moral_d_separated(&net, a, b, &given));
    }
}
