//! Shared fixtures for the benchmark targets.

use tauber_core::stochastic::{random_game, FiniteGame, GeneratorConfig};

pub fn bench_game(seed: u64, states: usize, actions: usize) -> FiniteGame {
    random_game(&GeneratorConfig {
        seed,
        num_states: states,
        actions_p1: actions,
        actions_p2: actions,
        payoff_range: (-1.0, 1.0),
        sparsity: 0.3,
    })
    .expect("valid generator config")
}
