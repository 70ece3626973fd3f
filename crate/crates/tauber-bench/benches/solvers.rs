use criterion::{black_box, criterion_group, criterion_main, Criterion};

use tauber_bench::bench_game;
use tauber_core::counterexample::{argmax_f, value_g, ActionSetKind, CounterexampleParams};
use tauber_core::matrix_game::{solve_matrix_game, MatrixGame};
use tauber_core::operator::{discounted_value, n_stage_value};
use tauber_core::stochastic::shapley_operator;
use tauber_core::value::ValueVector;

fn matrix_game_bench(c: &mut Criterion) {
    let sizes = [(3usize, 3usize), (8, 8), (20, 20)];
    for (m, n) in sizes {
        let payoff: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..n).map(|j| ((i * 31 + j * 17) % 13) as f64 - 6.0).collect())
            .collect();
        let game = MatrixGame::new(payoff).unwrap();
        c.bench_function(&format!("matrix_game_{m}x{n}"), |b| {
            b.iter(|| solve_matrix_game(black_box(&game), 1e-9).unwrap())
        });
    }
}

fn operator_bench(c: &mut Criterion) {
    let game = bench_game(7, 10, 4);
    let op = shapley_operator(&game);
    let f = ValueVector::constant(op.dim(), 0.25);
    c.bench_function("shapley_apply_10_states", |b| {
        b.iter(|| op.apply(black_box(&f)).unwrap())
    });
    c.bench_function("n_stage_value_n200", |b| {
        b.iter(|| n_stage_value(black_box(&op), 200).unwrap())
    });
    c.bench_function("discounted_value_lambda_0.05", |b| {
        b.iter(|| discounted_value(black_box(&op), 0.05, 1e-8).unwrap())
    });
}

fn counterexample_bench(c: &mut Criterion) {
    let params = CounterexampleParams::default();
    c.bench_function("value_g_sweep_j2_40", |b| {
        b.iter(|| {
            for j in 2..=40 {
                black_box(value_g(2.0f64.powi(-j), &params).unwrap());
            }
        })
    });
    c.bench_function("argmax_f_deep_lambda", |b| {
        b.iter(|| argmax_f(black_box(2.0f64.powi(-40)), ActionSetKind::MultiplesOfR, &params).unwrap())
    });
}

criterion_group!(benches, matrix_game_bench, operator_bench, counterexample_bench);
criterion_main!(benches);
