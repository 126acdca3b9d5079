//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! verdict lines are always printed; exits nonzero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{idx, load};
use gamemetric::concurrent::{
    build_reduction, estimate_metric_concurrent, estimate_onestep, reachability_value, EstimatorParams,
};
use gamemetric::matchdist::{onestep, onestep_move, transport_cost, Side};
use gamemetric::metrics::{bis_kernel, fixpoint};
use gamemetric::payoffs::{bound_suite, discounted_value, total_reward_iterates, BoundKind, PayoffSpec};
use gamemetric::random::{mismatch_game, random_game, random_reachability};
use gamemetric::{Base, Combine, Distribution, MetricKind, MetricMatrix, Player, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:.0?}"))
    }
}

fn metric_table() -> Outcome {
    let start = Instant::now();
    let g = load("fig3.game");
    let (d, report) = fixpoint(&g, MetricKind::simulation(), 1e-9, None).map_err(|e| e.to_string())?;
    if report.status != Status::Converged {
        return Err(format!("status {}", report.status));
    }
    let special = [("s", "s1", 0.1), ("t", "t1", 0.6), ("t", "w1", 0.1), ("u", "u1", 0.0), ("v", "v1", 0.0)];
    let mut worst = 0.0f64;
    for row in ["s", "t", "u", "v"] {
        for col in ["s1", "t1", "w1", "u1", "v1"] {
            let want = special.iter().find(|e| e.0 == row && e.1 == col).map_or(1.0, |e| e.2);
            let err = (d.get(idx(&g, row), idx(&g, col)) - want).abs();
            if err > 1e-6 {
                return Err(format!("d({row},{col}) off by {err:e}"));
            }
            worst = worst.max(err);
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("20 entries, max error {worst:.1e}, {:.2?}", start.elapsed()))
}

fn transport_table() -> Outcome {
    let g = load("fig3.game");
    let (d, _) = fixpoint(&g, MetricKind::simulation(), 1e-9, None).map_err(|e| e.to_string())?;
    let t = idx(&g, "t");
    let mut worst = 0.0f64;
    for (target, costs) in [("w1", [0.1, 0.1, 0.0]), ("t1", [0.4, 0.6, 0.1])] {
        for (a, want) in costs.into_iter().enumerate() {
            let got = onestep_move(&g, t, idx(&g, target), &d, a).map_err(|e| e.to_string())?;
            let err = (got - want).abs();
            if err > 1e-6 {
                return Err(format!("(t, {target}) move {a}: {got} vs {want}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("6 entries, max error {worst:.1e}"))
}

fn discount_counterexample() -> Outcome {
    let g = load("fig2.game");
    let (s, s1) = (idx(&g, "s"), idx(&g, "s1"));
    let kind = MetricKind::new(Base::Bisimulation, Combine::Max, 0.9).map_err(|e| e.to_string())?;
    let (d, _) = fixpoint(&g, kind, 1e-9, None).map_err(|e| e.to_string())?;
    let metric = d.get(s1, s);
    if (metric - 2.7).abs() > 1e-6 {
        return Err(format!("discounted metric {metric}"));
    }
    let w = discounted_value(&g, &PayoffSpec::new("r", 0.9, Player::One), 1e-10).map_err(|e| e.to_string())?;
    let diff = w[s1] - w[s];
    if (diff - 2.71).abs() > 1e-6 {
        return Err(format!("value difference {diff}"));
    }
    let suite = bound_suite(&g, "r", 0.9).map_err(|e| e.to_string())?;
    let flagged = suite.bounds.counterexamples.iter().any(|f| {
        f.kind == BoundKind::DiscountedExceedsDiscountedMetric
            && f.metric.starts_with("bis/max")
            && (f.s, f.t) == (s1, s)
    });
    if !flagged {
        return Err("pair not flagged as exceeding the discounted metric".into());
    }
    if !suite.bounds.violations.is_empty() {
        return Err(format!("{} bound violations", suite.bounds.violations.len()));
    }
    let undiscounted = suite.metrics[1].1.get(s1, s);
    Ok(format!("metric {metric:.9}, difference {diff:.9}, flagged; undiscounted {undiscounted:.6} holds"))
}

const RANDOM_GAMES: u64 = 200;

fn bound_suite_random() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for seed in 0..RANDOM_GAMES {
        let g = random_game(seed);
        let suite = bound_suite(&g, "r", 0.9).map_err(|e| format!("seed {seed}: {e}"))?;
        if let Some(v) = suite.bounds.violations.first() {
            return Err(format!(
                "seed {seed}: {} {} at ({}, {}): {} > {}",
                v.kind, v.metric, v.s, v.t, v.lhs, v.rhs
            ));
        }
        checked += suite.bounds.checked;
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{RANDOM_GAMES} games, {checked} comparisons, 0 violations, {:.1?}", start.elapsed()))
}

fn kernel_coincidence() -> Outcome {
    let kinds = [
        MetricKind::new(Base::Bisimulation, Combine::Max, 1.0),
        MetricKind::new(Base::Bisimulation, Combine::Max, 0.5),
        MetricKind::new(Base::Bisimulation, Combine::Sum, 0.5),
    ];
    let mut nontrivial = 0;
    for seed in 0..RANDOM_GAMES {
        let g = random_game(seed);
        let n = g.num_states();
        let part = bis_kernel(&g).map_err(|e| e.to_string())?;
        if part.len() < n {
            nontrivial += 1;
        }
        for kind in &kinds {
            let kind = kind.clone().map_err(|e| e.to_string())?;
            let (d, _) = fixpoint(&g, kind, 1e-9, None).map_err(|e| e.to_string())?;
            for s in 0..n {
                for t in 0..n {
                    let near = !d.is_divergent(s, t) && d.get(s, t) < 1e-5;
                    if near != part.same_block(s, t) {
                        return Err(format!(
                            "seed {seed} ({s},{t}): alpha {} {:?} distance {} vs kernel {}",
                            kind.alpha,
                            kind.combine,
                            d.get(s, t),
                            part.same_block(s, t)
                        ));
                    }
                }
            }
        }
    }
    Ok(format!("{RANDOM_GAMES} games agree ({nontrivial} with nontrivial blocks)"))
}

fn total_divergence() -> Outcome {
    let g = load("fig2_total.game");
    let (s, s1) = (idx(&g, "s"), idx(&g, "s1"));
    let kind = MetricKind::new(Base::Simulation, Combine::Sum, 1.0).map_err(|e| e.to_string())?;
    let (d, report) = fixpoint(&g, kind, 1e-6, None).map_err(|e| e.to_string())?;
    if report.status != Status::Divergent || !d.is_divergent(s, s1) {
        return Err(format!("status {}, d(s,s1) = {}", report.status, d.get(s, s1)));
    }
    let ts = total_reward_iterates(&g, "r", Player::One, 50).map_err(|e| e.to_string())?;
    let t50 = ts[49][s];
    if t50 <= 100.0 {
        return Err(format!("T(50) = {t50}"));
    }
    Ok(format!("divergent after {} iterations, T(50) = {t50}", report.iterations))
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Distribution {
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=4) as f64).collect();
    if w.iter().sum::<f64>() == 0.0 {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    Distribution::new(w.into_iter().enumerate().map(|(s, x)| (s, x / total)).collect())
}

fn duality_grid() -> Outcome {
    const STEP: f64 = 1.0 / 32.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for instance in 0..50 {
        let n = rng.gen_range(2..=4);
        let d = MetricMatrix::from_fn(n, |s, t| if s == t { 0.0 } else { rng.gen_range(0..=32) as f64 * STEP });
        let source = random_distribution(&mut rng, n);
        let targets: Vec<Distribution> = (0..rng.gen_range(1..=2)).map(|_| random_distribution(&mut rng, n)).collect();
        let side = if targets.len() == 1 { Side::Fixed(&targets[0]) } else { Side::Mixed(targets.iter().collect()) };
        let lp = transport_cost(&Side::Fixed(&source), &side, &d).map_err(|e| e.to_string())?;

        // sup over k in C(d) on the 1/32 grid of [0, 1]^n of
        // E_source(k) - max_j E_target_j(k).
        let mut best = f64::NEG_INFINITY;
        let mut k = vec![0.0; n];
        let points = 33usize.pow(n as u32);
        for code in 0..points {
            let mut c = code;
            for x in k.iter_mut() {
                *x = (c % 33) as f64 * STEP;
                c /= 33;
            }
            let feasible = (0..n).all(|u| (0..n).all(|v| k[u] - k[v] <= d.get(u, v) + 1e-12));
            if feasible {
                let inner = targets.iter().map(|t| t.expect(&k)).fold(f64::NEG_INFINITY, f64::max);
                best = best.max(source.expect(&k) - inner);
            }
        }
        let gap = (lp - best).abs();
        if gap > 0.05 {
            return Err(format!("instance {instance}: LP {lp} vs grid {best}"));
        }
        worst = worst.max(gap);
    }
    Ok(format!("50 instances, max gap {worst:.2e}"))
}

fn reduction_check() -> Outcome {
    let start = Instant::now();
    let games: Vec<_> = std::iter::once(mismatch_game()).chain((0..9).map(random_reachability)).collect();
    let kind = MetricKind::simulation();
    let mut worst_gap = 0.0f64;
    for (i, g) in games.iter().enumerate() {
        let reach = reachability_value(g, "q").map_err(|e| e.to_string())?;
        let reduced = build_reduction(g, "q").map_err(|e| e.to_string())?;
        let fresh = reduced.num_states() - 1;
        let (d, _) = estimate_metric_concurrent(&reduced, kind, &EstimatorParams::default(), 1e-6, None)
            .map_err(|e| e.to_string())?;
        for s in 0..g.num_states() {
            let (est, exact) = (d.get(s, fresh), reach.value[s]);
            if est > exact + 1e-6 || est < exact - 0.1 {
                return Err(format!("game {i} state {s}: estimate {est} vs reachability {exact}"));
            }
            worst_gap = worst_gap.max(exact - est);
        }
        if i == 0 && (reach.value[0] - 0.5).abs() > 1e-12 {
            return Err(format!("mismatch game value {}", reach.value[0]));
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("10 games, max gap {worst_gap:.2e}, {:.1?}", start.elapsed()))
}

fn estimator_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..100u64 {
        let g = random_game(1000 + trial);
        let n = g.num_states();
        let (d, _) = fixpoint(&g, MetricKind::simulation(), 1e-6, None).map_err(|e| e.to_string())?;
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let exact = onestep(&g, s, t, &d).map_err(|e| e.to_string())?;
        let params = EstimatorParams { seed: trial, ..EstimatorParams::default() };
        let est = estimate_onestep(&g, s, t, &d, &params).map_err(|e| e.to_string())?;
        if est > exact + 1e-6 {
            return Err(format!("trial {trial} ({s},{t}): estimate {est} > exact {exact}"));
        }
        worst = worst.max(est - exact);
    }
    Ok(format!("100 trials, max excess {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("metric table on the two-MDP example", metric_table),
        ("per-move transport costs", transport_table),
        ("discounted metric counterexample", discount_counterexample),
        ("payoff bounds on random games", bound_suite_random),
        ("kernel coincidence", kernel_coincidence),
        ("total metric divergence", total_divergence),
        ("transport duality against grid search", duality_grid),
        ("reachability reduction", reduction_check),
        ("estimator soundness", estimator_soundness),
    ];
    // Optional arguments pick criteria by number, e.g. `-- 4 5`.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut ran, mut failed) = (0, 0);
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
