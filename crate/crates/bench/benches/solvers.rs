use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use gamemetric::concurrent::{estimate_onestep, EstimatorParams};
use gamemetric::metrics::{bis_kernel, fixpoint, sim_kernel};
use gamemetric::payoffs::{discounted_value, matrix_game_value, MatrixGame, PayoffSpec};
use gamemetric::random::{mismatch_game, random_concurrent};
use gamemetric::{MetricKind, MetricMatrix, Player};
use gamemetric_bench::games_with_states;

fn metric_fixpoint(c: &mut Criterion) {
    let mut group = c.benchmark_group("sim-fixpoint");
    for n in [3, 4, 6] {
        let games = games_with_states(n, 4, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &games, |b, games| {
            b.iter(|| {
                for g in games {
                    black_box(fixpoint(g, MetricKind::simulation(), 1e-6, None).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let games = games_with_states(6, 4, 100);
    c.bench_function("sim-kernel/6", |b| {
        b.iter(|| games.iter().for_each(|g| drop(black_box(sim_kernel(g).unwrap()))))
    });
    c.bench_function("bis-kernel/6", |b| {
        b.iter(|| games.iter().for_each(|g| drop(black_box(bis_kernel(g).unwrap()))))
    });
}

fn payoffs(c: &mut Criterion) {
    let m = MatrixGame::new(vec![
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
        vec![-1.0, 1.0, 0.0],
    ])
    .unwrap();
    c.bench_function("matrix-game/3x3", |b| b.iter(|| black_box(matrix_game_value(&m).unwrap())));

    let games = games_with_states(6, 4, 200);
    let spec = PayoffSpec::new("r", 0.9, Player::One);
    c.bench_function("discounted/alpha=0.9", |b| {
        b.iter(|| games.iter().for_each(|g| drop(black_box(discounted_value(g, &spec, 1e-9).unwrap()))))
    });
}

fn estimator(c: &mut Criterion) {
    let params = EstimatorParams::default();
    let g = mismatch_game();
    let d = MetricMatrix::zeros(g.num_states());
    c.bench_function("estimate-onestep/mismatch", |b| {
        b.iter(|| black_box(estimate_onestep(&g, 0, 2, &d, &params).unwrap()))
    });
    let g = random_concurrent(7);
    let d = MetricMatrix::zeros(g.num_states());
    c.bench_function("estimate-onestep/random", |b| {
        b.iter(|| black_box(estimate_onestep(&g, 0, 1, &d, &params).unwrap()))
    });
}

criterion_group!(benches, metric_fixpoint, kernels, payoffs, estimator);
criterion_main!(benches);
