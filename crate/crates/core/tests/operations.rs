mod common;

use common::{idx, load};
use gamemetric::concurrent::{build_reduction, estimate_metric_concurrent, reachability_value, EstimatorParams};
use gamemetric::matchdist::{ensure_supported, onestep};
use gamemetric::metrics::{apply_transformer, bis_kernel, fixpoint, sim_kernel};
use gamemetric::payoffs::{average_value_estimate, check_bounds, pre, BoundKind, PayoffSpec, DEFAULT_ALPHAS};
use gamemetric::{
    Base, Combine, Distribution, Error, GameKind, GameStructure, Interval, MetricKind, MetricMatrix, Player, Status,
    Valuation,
};

fn chain(rewards: [f64; 4]) -> GameStructure {
    let names = ["s", "t", "s1", "t1"].map(String::from).to_vec();
    let mut g = GameStructure::new(Interval::new(0.0, 10.0), names).unwrap();
    g.set_variable("r", rewards.to_vec());
    for (s, next) in [(0, 1), (1, 1), (2, 3), (3, 3)] {
        g.set_transition(s, 0, 0, Distribution::point(next));
    }
    g
}

#[test]
fn transformer_on_a_restricted_fixpoint() {
    let g = load("fig2.game");
    let (s, t, s1, t1) = (idx(&g, "s"), idx(&g, "t"), idx(&g, "s1"), idx(&g, "t1"));
    let mut d = MetricMatrix::zeros(4);
    d.set(t1, t, 3.0);
    d.set(t, t1, 3.0);
    let kind = MetricKind::new(Base::Bisimulation, Combine::Max, 0.9).unwrap();
    let h = apply_transformer(&g, &d, kind).unwrap();
    assert!((h.get(s1, s) - 2.7).abs() < 1e-12);
    assert_eq!(apply_transformer(&g, &MetricMatrix::zeros(4), kind).unwrap().get(s, s), 0.0);
}

#[test]
fn sum_transformer_on_a_chain() {
    let g = chain([1.0, 4.0, 2.0, 8.0]);
    let d = MetricMatrix::from_fn(4, |a, b| g.prop_distance(a, b));
    let kind = MetricKind::new(Base::Simulation, Combine::Sum, 0.5).unwrap();
    let h = apply_transformer(&g, &d, kind).unwrap();
    assert!((h.get(0, 2) - (1.0 + 0.5 * 4.0)).abs() < 1e-12);
}

#[test]
fn uniform_absorbing_game_is_all_zero() {
    let mut g = chain([3.0; 4]);
    for s in 0..4 {
        g.set_transition(s, 0, 0, Distribution::point(s));
    }
    let (d, report) = fixpoint(&g, MetricKind::simulation(), 1e-6, None).unwrap();
    assert_eq!(report.iterations, 1);
    assert_eq!(d.max_value(), 0.0);
    assert_eq!(bis_kernel(&g).unwrap().len(), 1);
}

#[test]
fn perturbed_example_separates_t_and_t1() {
    let g = load("fig3.game");
    let (t, t1) = (idx(&g, "t"), idx(&g, "t1"));
    assert!(!sim_kernel(&g).unwrap().contains(t, t1));
    assert!(!bis_kernel(&g).unwrap().same_block(t, t1));
}

#[test]
fn one_step_pre_at_an_mdp_state() {
    let g = load("fig3.game");
    let mut k = vec![0.0; g.num_states()];
    k[idx(&g, "u")] = 1.0;
    k[idx(&g, "t1")] = 0.4;
    let p = pre(&g, &Valuation(k), Player::One).unwrap();
    assert_eq!(p[idx(&g, "t")], 1.0);
    assert_eq!(p[idx(&g, "u")], 1.0);
}

#[test]
fn player_two_states_are_supported() {
    // Player 2 picks at `a` and `b`; `b` has an extra move mixing the two
    // moves of `a`, which cannot help the minimizer, so they are bisimilar.
    let text = r#"{
      "interval": [0, 1],
      "states": ["a", "b", "x", "y"],
      "variables": {"r": {"a": 0, "b": 0, "x": 1, "y": 0}},
      "moves2": {"a": ["l", "r"], "b": ["l", "r", "m"]},
      "trans": [
        {"state": "a", "m2": "l", "dist": {"x": 1}},
        {"state": "a", "m2": "r", "dist": {"y": 1}},
        {"state": "b", "m2": "l", "dist": {"x": 1}},
        {"state": "b", "m2": "r", "dist": {"y": 1}},
        {"state": "b", "m2": "m", "dist": {"x": 0.5, "y": 0.5}},
        {"state": "x", "dist": {"x": 1}},
        {"state": "y", "dist": {"y": 1}}
      ]
    }"#;
    let g = GameStructure::from_json(text).unwrap();
    assert_eq!(g.classify().unwrap(), GameKind::Mdp2);
    let (d, _) = fixpoint(&g, MetricKind::bisimulation(), 1e-9, None).unwrap();
    assert!(d.get(0, 1) < 1e-9);
    assert!(bis_kernel(&g).unwrap().same_block(0, 1));
    // The minimizer's value at both is 0.
    let p = pre(&g, &Valuation(vec![0.0, 0.0, 1.0, 0.0]), Player::One).unwrap();
    assert_eq!((p[0], p[1]), (0.0, 0.0));
}

#[test]
fn turn_based_pairs_across_owners() {
    let text = r#"{
      "interval": [0, 1],
      "states": ["p", "o", "x", "y"],
      "variables": {"turn": {"p": 0, "o": 1, "x": 0, "y": 0}, "r": {"p": 0, "o": 0, "x": 1, "y": 0}},
      "moves1": {"p": ["l", "r"]},
      "moves2": {"o": ["l", "r"]},
      "trans": [
        {"state": "p", "m1": "l", "dist": {"x": 1}},
        {"state": "p", "m1": "r", "dist": {"y": 1}},
        {"state": "o", "m2": "l", "dist": {"x": 1}},
        {"state": "o", "m2": "r", "dist": {"y": 1}},
        {"state": "x", "dist": {"x": 1}},
        {"state": "y", "dist": {"y": 1}}
      ]
    }"#;
    let g = GameStructure::from_json(text).unwrap();
    assert_eq!(ensure_supported(&g).unwrap(), GameKind::TurnBased);
    let (d, _) = fixpoint(&g, MetricKind::simulation(), 1e-9, None).unwrap();
    // Different turn labels put the pair at the full interval width.
    assert_eq!(d.get(0, 1), 1.0);
    let zero = MetricMatrix::zeros(4);
    assert_eq!(onestep(&g, 0, 1, &zero).unwrap(), 1.0);
}

#[test]
fn concurrent_structures_are_rejected_by_exact_algorithms() {
    let g = load("mismatch.game");
    assert_eq!(g.classify().unwrap(), GameKind::Concurrent);
    assert!(matches!(fixpoint(&g, MetricKind::simulation(), 1e-6, None), Err(Error::Unsupported(_))));
    assert!(matches!(bis_kernel(&g), Err(Error::Unsupported(_))));
}

#[test]
fn reachability_on_a_single_path() {
    let text = r#"{
      "interval": [0, 1],
      "states": ["s", "m", "goal", "sink"],
      "variables": {"q": {"s": 0, "m": 0, "goal": 1, "sink": 0}},
      "trans": [
        {"state": "s", "dist": {"m": 0.6, "sink": 0.4}},
        {"state": "m", "dist": {"goal": 0.5, "sink": 0.5}},
        {"state": "goal", "dist": {"goal": 1}},
        {"state": "sink", "dist": {"sink": 1}}
      ]
    }"#;
    let g = GameStructure::from_json(text).unwrap();
    let r = reachability_value(&g, "q").unwrap();
    assert!((r.value[0] - 0.3).abs() < 1e-12);
    let reduced = build_reduction(&g, "q").unwrap();
    assert_eq!(reduced.num_states(), 5);
    assert_eq!(reduced.classify().unwrap(), GameKind::Mdp1);
    // The reduction is exact for MDPs: the metric to t' is the probability.
    let (d, _) = fixpoint(&reduced, MetricKind::simulation(), 1e-9, None).unwrap();
    assert!((d.get(0, 4) - 0.3).abs() < 1e-6);
}

#[test]
fn fresh_state_is_added_even_with_an_existing_trap() {
    let g = load("mismatch.game");
    let reduced = build_reduction(&g, "q").unwrap();
    assert_eq!(reduced.state_names().last().unwrap(), "t'");
    let again = build_reduction(&reduced, "q").unwrap();
    assert_eq!(again.state_names().last().unwrap(), "t''");
}

#[test]
fn concurrent_metric_estimate_is_labelled() {
    let g = build_reduction(&load("mismatch.game"), "q").unwrap();
    let (d, report) =
        estimate_metric_concurrent(&g, MetricKind::simulation(), &EstimatorParams::default(), 1e-6, None).unwrap();
    assert_eq!(report.status, Status::HeuristicLowerBound);
    assert!((0..4).all(|s| d.get(s, s) == 0.0));
    assert!(d.get(0, 3) >= 0.45 && d.get(0, 3) <= 0.5 + 1e-9);
}

#[test]
fn check_bounds_on_identical_states() {
    let g = chain([2.0, 5.0, 2.0, 5.0]);
    let (d, _) = fixpoint(&g, MetricKind::simulation(), 1e-9, None).unwrap();
    assert_eq!(d.get(0, 2), 0.0);
    let report = check_bounds(&g, &PayoffSpec::new("r", 0.9, Player::One), &d, MetricKind::simulation()).unwrap();
    assert!(report.violations.is_empty());
    assert!(report.checked > 0);
}

#[test]
fn counterexample_reported_only_for_the_discounted_max_metric() {
    let g = load("fig2.game");
    let spec = PayoffSpec::new("r", 0.9, Player::One);
    let discounted = MetricKind::new(Base::Bisimulation, Combine::Max, 0.9).unwrap();
    let (d, _) = fixpoint(&g, discounted, 1e-9, None).unwrap();
    let report = check_bounds(&g, &spec, &d, discounted).unwrap();
    assert!(report.violations.is_empty());
    assert!(report
        .counterexamples
        .iter()
        .all(|f| f.kind == BoundKind::DiscountedExceedsDiscountedMetric));
    assert!(report.counterexamples.iter().any(|f| (f.s, f.t) == (idx(&g, "s1"), idx(&g, "s"))));
}

#[test]
fn average_values_approach_the_absorbing_rewards() {
    let g = load("fig2.game");
    let est = average_value_estimate(&g, "r", Player::One, &DEFAULT_ALPHAS).unwrap();
    assert!((est.value[idx(&g, "s")] - 5.0).abs() < 0.01);
    assert!((est.value[idx(&g, "s1")] - 8.0).abs() < 0.01);
}

#[test]
fn invalid_files_name_the_location() {
    let text = r#"{"interval": [0, 1], "states": ["s"], "trans": [{"state": "s", "dist": {"s": 0.9}}]}"#;
    let g = GameStructure::from_json(text).unwrap();
    let v = g.validate();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].location, "trans(s, -, -)");
    let err = GameStructure::from_json(r#"{"interval": [0, 1], "states": ["s"], "trans": [{"state": "x", "dist": {}}]}"#)
        .unwrap_err();
    assert!(err.to_string().contains("`x`"), "{err}");
}
