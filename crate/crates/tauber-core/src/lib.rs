//! Values of zero-sum stochastic games through nonexpansive operators.
//!
//! The crate revolves around [`OperatorHandle`], a dynamic-programming
//! operator Ψ on value vectors. From it we compute n-stage values
//! `v_n = Ψⁿ(0)/n` and discounted values `v_λ` (the fixed point of the
//! contraction `f ↦ λΨ((1-λ)f/λ)`), certify the structural properties
//! that make the two families comparable ([`checks`]), and study a
//! family of one-shot reductions where the two limits provably differ
//! ([`counterexample`]).
//!
//! Concrete operators come from finite stochastic games
//! ([`stochastic`]), from dynamic-programming problems without an
//! adversary, and from games with a hidden state solved on a belief
//! grid ([`hidden`]). Stage games are solved by an exact LP-based
//! matrix-game solver ([`matrix_game`]).

pub mod checks;
pub mod counterexample;
pub mod error;
pub mod hidden;
pub mod matrix_game;
pub mod operator;
pub mod stochastic;
pub mod value;

#[cfg(any(test, feature = "testkit"))]
pub mod oracle;

pub use error::{Error, Result};
pub use matrix_game::{solve_matrix_game, GameSolution, MatrixGame};
pub use operator::{
    discounted_value, n_stage_value, tauberian_gap, IterationReport, OperatorHandle,
};
pub use stochastic::{game_values, shapley_operator, FiniteGame};
pub use value::ValueVector;
