//! Finite-state, finite-action zero-sum stochastic games and deterministic
//! dynamic-programming problems, exposed through their one-stage operators.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix_game::{solve_matrix_game, MatrixGame};
use crate::operator::{discounted_value, n_stage_value, IterationReport, OperatorHandle};
use crate::value::ValueVector;

const PROB_TOL: f64 = 1e-12;

/// A finite zero-sum stochastic game: payoff tensor `g[k][i][j]` and
/// transition kernel `q[k][i][j] -> Delta(K)`. Action counts may vary by
/// state; everything is stored densely per state.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGame {
    payoff: Vec<Vec<Vec<f64>>>,
    transition: Vec<Vec<Vec<Vec<f64>>>>,
    payoff_bound: f64,
}

impl FiniteGame {
    pub fn new(payoff: Vec<Vec<Vec<f64>>>, transition: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let k = payoff.len();
        if k == 0 || transition.len() != k {
            return Err(Error::InvalidInput(
                "payoff and transition must cover the same nonempty state set".into(),
            ));
        }
        let mut bound = 0.0f64;
        for state in 0..k {
            let m = payoff[state].len();
            if m == 0 || transition[state].len() != m {
                return Err(Error::InvalidInput(format!(
                    "state {state}: empty or inconsistent action set for player 1"
                )));
            }
            for i in 0..m {
                let n = payoff[state][i].len();
                if n == 0 || transition[state][i].len() != n {
                    return Err(Error::InvalidInput(format!(
                        "state {state}: empty or inconsistent action set for player 2"
                    )));
                }
                for j in 0..n {
                    let g = payoff[state][i][j];
                    if !g.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "non-finite payoff at ({state},{i},{j})"
                        )));
                    }
                    bound = bound.max(g.abs());
                    let row = &transition[state][i][j];
                    if row.len() != k {
                        return Err(Error::InvalidInput(format!(
                            "transition row at ({state},{i},{j}) has wrong length"
                        )));
                    }
                    if row.iter().any(|&p| p < -PROB_TOL || !p.is_finite()) {
                        return Err(Error::InvalidInput(format!(
                            "negative transition probability at ({state},{i},{j})"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > PROB_TOL {
                        return Err(Error::InvalidInput(format!(
                            "transition row at ({state},{i},{j}) sums to {sum}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            payoff,
            transition,
            payoff_bound: bound,
        })
    }

    pub fn num_states(&self) -> usize {
        self.payoff.len()
    }

    pub fn actions_p1(&self, state: usize) -> usize {
        self.payoff[state].len()
    }

    pub fn actions_p2(&self, state: usize) -> usize {
        self.payoff[state][0].len()
    }

    pub fn payoff(&self, state: usize, i: usize, j: usize) -> f64 {
        self.payoff[state][i][j]
    }

    pub fn transition(&self, state: usize, i: usize, j: usize) -> &[f64] {
        &self.transition[state][i][j]
    }

    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }
}

/// Deterministic dynamic programming: successor correspondence plus a
/// payoff attached to the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct DPProblem {
    successors: Vec<Vec<usize>>,
    payoff: Vec<f64>,
}

impl DPProblem {
    pub fn new(successors: Vec<Vec<usize>>, payoff: Vec<f64>) -> Result<Self> {
        let k = payoff.len();
        if k == 0 || successors.len() != k {
            return Err(Error::InvalidInput("inconsistent DP problem sizes".into()));
        }
        for (state, succ) in successors.iter().enumerate() {
            if succ.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "state {state} has no successor"
                )));
            }
            if succ.iter().any(|&s| s >= k) {
                return Err(Error::InvalidInput(format!(
                    "state {state} has an out-of-range successor"
                )));
            }
        }
        if payoff.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite DP payoff".into()));
        }
        Ok(Self { successors, payoff })
    }

    pub fn num_states(&self) -> usize {
        self.payoff.len()
    }
}

/// One-stage operator of a finite game: per state, the matrix-game value of
/// `g(k,i,j) + sum_k' q(k,i,j)(k') f(k')`.
pub fn shapley_operator(game: &FiniteGame) -> OperatorHandle {
    shapley_operator_with_tol(game, crate::matrix_game::DEFAULT_GAME_TOL)
}

pub fn shapley_operator_with_tol(game: &FiniteGame, stage_tol: f64) -> OperatorHandle {
    let game = game.clone();
    let dim = game.num_states();
    let bound = game.payoff_bound();
    OperatorHandle::new(dim, bound, bound, move |f| {
        let out: Result<Vec<f64>> = (0..dim)
            .map(|state| apply_at_state(&game, state, f, stage_tol))
            .collect();
        Ok(ValueVector::from(out?))
    })
}

fn apply_at_state(game: &FiniteGame, state: usize, f: &ValueVector, tol: f64) -> Result<f64> {
    let aux = auxiliary_matrix(game, state, f);
    let matrix = MatrixGame::new(aux)?;
    solve_matrix_game(&matrix, tol)
        .map(|sol| sol.value)
        .map_err(|e| Error::SolverAtState {
            state,
            source: Box::new(e),
        })
}

/// The one-shot auxiliary matrix `g + q . f` at one state.
pub fn auxiliary_matrix(game: &FiniteGame, state: usize, f: &ValueVector) -> Vec<Vec<f64>> {
    let (m, n) = (game.actions_p1(state), game.actions_p2(state));
    (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let cont: f64 = game
                        .transition(state, i, j)
                        .iter()
                        .zip(f.entries())
                        .map(|(q, v)| q * v)
                        .sum();
                    game.payoff(state, i, j) + cont
                })
                .collect()
        })
        .collect()
}

/// `Psi(f)(k) = g(k) + max_{k' in F(k)} f(k')`.
pub fn dp_operator(problem: &DPProblem) -> OperatorHandle {
    let problem = problem.clone();
    let dim = problem.num_states();
    let bound = problem.payoff.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    OperatorHandle::new(dim, bound, bound, move |f| {
        let out: Vec<f64> = (0..dim)
            .map(|k| {
                problem.payoff[k]
                    + problem.successors[k]
                        .iter()
                        .map(|&k2| f.entries()[k2])
                        .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Ok(ValueVector::from(out))
    })
}

/// Both value families of a finite game through its operator.
pub fn game_values(
    game: &FiniteGame,
    n: u64,
    lambda: f64,
    tol: f64,
) -> Result<(ValueVector, IterationReport)> {
    let op = shapley_operator(game);
    let v_n = n_stage_value(&op, n)?;
    let report = discounted_value(&op, lambda, tol)?;
    Ok((v_n, report))
}

/// Seeded random game generator.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub num_states: usize,
    pub actions_p1: usize,
    pub actions_p2: usize,
    pub payoff_range: (f64, f64),
    /// Probability of zeroing a transition weight before normalization.
    pub sparsity: f64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.actions_p1 == 0 || self.actions_p2 == 0 {
            return Err(Error::InvalidInput("empty state or action set".into()));
        }
        if !(self.payoff_range.0 <= self.payoff_range.1) {
            return Err(Error::InvalidInput("invalid payoff range".into()));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::InvalidInput("sparsity outside [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn random_game(config: &GeneratorConfig) -> Result<FiniteGame> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.num_states;
    let (lo, hi) = config.payoff_range;
    let mut payoff = Vec::with_capacity(k);
    let mut transition = Vec::with_capacity(k);
    for _ in 0..k {
        let mut pk = Vec::with_capacity(config.actions_p1);
        let mut tk = Vec::with_capacity(config.actions_p1);
        for _ in 0..config.actions_p1 {
            let mut pi = Vec::with_capacity(config.actions_p2);
            let mut ti = Vec::with_capacity(config.actions_p2);
            for _ in 0..config.actions_p2 {
                pi.push(if lo == hi { lo } else { rng.gen_range(lo..hi) });
                let mut row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
                for w in row.iter_mut() {
                    if rng.gen_bool(config.sparsity) {
                        *w = 0.0;
                    }
                }
                if row.iter().all(|&w| w == 0.0) {
                    let keep = rng.gen_range(0..k);
                    row[keep] = 1.0;
                }
                let sum: f64 = row.iter().sum();
                ti.push(row.into_iter().map(|w| w / sum).collect());
            }
            pk.push(pi);
            tk.push(ti);
        }
        payoff.push(pk);
        transition.push(tk);
    }
    FiniteGame::new(payoff, transition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{check_assumption1, check_operator_laws};
    use crate::operator::discounted_value;
    use crate::oracle::{pure_stationary_bounds, reference_discounted_value, support_enumeration_value};
    use approx::assert_abs_diff_eq;

    fn single_state_game(matrix: Vec<Vec<f64>>) -> FiniteGame {
        let transition = vec![matrix
            .iter()
            .map(|row| row.iter().map(|_| vec![1.0]).collect())
            .collect()];
        FiniteGame::new(vec![matrix], transition).unwrap()
    }

    #[test]
    fn single_state_operator_is_val_plus_f() {
        let matrix = vec![vec![3.0, -1.0], vec![0.0, 2.0]];
        let game = single_state_game(matrix.clone());
        let op = shapley_operator(&game);
        let f = ValueVector::from(vec![0.7]);
        let out = op.apply(&f).unwrap();
        let val = support_enumeration_value(&matrix).unwrap();
        assert_abs_diff_eq!(out.entries()[0], val + 0.7, epsilon = 1e-8);
    }

    #[test]
    fn absorbing_game_at_zero_gives_stage_values() {
        // Two absorbing states with different stage games.
        let payoff = vec![
            vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            vec![vec![2.0, 0.5], vec![0.0, 1.0]],
        ];
        let self_loop = |k: usize| {
            let mut row = vec![0.0, 0.0];
            row[k] = 1.0;
            row
        };
        let transition = vec![
            vec![vec![self_loop(0); 2]; 2],
            vec![vec![self_loop(1); 2]; 2],
        ];
        let game = FiniteGame::new(payoff.clone(), transition).unwrap();
        let op = shapley_operator(&game);
        let out = op.apply(&ValueVector::zeros(2)).unwrap();
        for k in 0..2 {
            let val = support_enumeration_value(&payoff[k]).unwrap();
            assert_abs_diff_eq!(out.entries()[k], val, epsilon = 1e-8);
        }
    }

    #[test]
    fn operator_matches_per_state_oracle() {
        let config = GeneratorConfig {
            seed: 99,
            num_states: 3,
            actions_p1: 2,
            actions_p2: 3,
            payoff_range: (-2.0, 2.0),
            sparsity: 0.0,
        };
        let game = random_game(&config).unwrap();
        let op = shapley_operator(&game);
        let f = ValueVector::from(vec![0.4, -0.8, 1.3]);
        let out = op.apply(&f).unwrap();
        for state in 0..3 {
            let aux = auxiliary_matrix(&game, state, &f);
            let oracle = support_enumeration_value(&aux).unwrap();
            assert_abs_diff_eq!(out.entries()[state], oracle, epsilon = 1e-7);
        }
    }

    #[test]
    fn dp_frozen_chain() {
        let problem =
            DPProblem::new(vec![vec![0], vec![1]], vec![0.3, -0.9]).unwrap();
        let op = dp_operator(&problem);
        let v_n = n_stage_value(&op, 17).unwrap();
        assert_abs_diff_eq!(v_n.entries()[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(v_n.entries()[1], -0.9, epsilon = 1e-12);
        let v_l = discounted_value(&op, 0.25, 1e-11).unwrap().value;
        assert_abs_diff_eq!(v_l.entries()[0], 0.3, epsilon = 1e-10);
        assert_abs_diff_eq!(v_l.entries()[1], -0.9, epsilon = 1e-10);
    }

    #[test]
    fn dp_two_state_hand_recursion() {
        // g = (0, 1), F(0) = {0, 1}, F(1) = {1}.
        let problem = DPProblem::new(vec![vec![0, 1], vec![1]], vec![0.0, 1.0]).unwrap();
        let op = dp_operator(&problem);
        for n in [2u64, 5, 20, 100] {
            let v_n = n_stage_value(&op, n).unwrap();
            assert_abs_diff_eq!(
                v_n.entries()[0],
                (n - 1) as f64 / n as f64,
                epsilon = 1e-12
            );
        }
        for lambda in [0.5, 0.1, 0.01] {
            let v_l = discounted_value(&op, lambda, 1e-12).unwrap().value;
            assert_abs_diff_eq!(v_l.entries()[0], 1.0 - lambda, epsilon = 1e-10);
        }
    }

    #[test]
    fn dp_matches_path_enumeration() {
        let problem = DPProblem::new(
            vec![vec![1, 2], vec![2, 3], vec![3], vec![0, 3]],
            vec![0.5, -1.0, 2.0, 0.0],
        )
        .unwrap();
        let op = dp_operator(&problem);
        fn best(p: &DPProblem, k: usize, steps: u64) -> f64 {
            if steps == 0 {
                return 0.0;
            }
            p.payoff[k]
                + p.successors[k]
                    .iter()
                    .map(|&k2| best(p, k2, steps - 1))
                    .fold(f64::NEG_INFINITY, f64::max)
        }
        for n in 1..=8u64 {
            let v_n = n_stage_value(&op, n).unwrap();
            for k in 0..4 {
                assert_abs_diff_eq!(
                    v_n.entries()[k],
                    best(&problem, k, n) / n as f64,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn dp_discounted_recursion_consistency() {
        let problem = DPProblem::new(
            vec![vec![0, 1], vec![1, 2], vec![0]],
            vec![1.0, -0.5, 0.25],
        )
        .unwrap();
        let op = dp_operator(&problem);
        let tol = 1e-10;
        let lambda = 0.3;
        let v = discounted_value(&op, lambda, tol).unwrap().value;
        for k in 0..3 {
            let best = problem.successors[k]
                .iter()
                .map(|&k2| v.entries()[k2])
                .fold(f64::NEG_INFINITY, f64::max);
            let rhs = lambda * problem.payoff[k] + (1.0 - lambda) * best;
            assert!((v.entries()[k] - rhs).abs() <= 2.0 * tol);
        }
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let config = GeneratorConfig {
            seed: 2024,
            num_states: 4,
            actions_p1: 3,
            actions_p2: 2,
            payoff_range: (-1.0, 1.0),
            sparsity: 0.4,
        };
        let a = random_game(&config).unwrap();
        let b = random_game(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_zero_sparsity_all_positive() {
        let config = GeneratorConfig {
            seed: 5,
            num_states: 3,
            actions_p1: 2,
            actions_p2: 2,
            payoff_range: (-1.0, 1.0),
            sparsity: 0.0,
        };
        let game = random_game(&config).unwrap();
        for s in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(game.transition(s, i, j).iter().all(|&p| p > 0.0));
                }
            }
        }
    }

    #[test]
    fn game_values_single_state_matrix_game() {
        let matrix = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let game = single_state_game(matrix);
        let (v_n, report) = game_values(&game, 12, 0.3, 1e-10).unwrap();
        assert_abs_diff_eq!(v_n.entries()[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.value.entries()[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn game_values_absorbing_reward_state() {
        // State 0 pays 0 and moves deterministically to state 1, which
        // pays 1 and absorbs. Single action for both players.
        let payoff = vec![vec![vec![0.0]], vec![vec![1.0]]];
        let transition = vec![vec![vec![vec![0.0, 1.0]]], vec![vec![vec![0.0, 1.0]]]];
        let game = FiniteGame::new(payoff, transition).unwrap();
        for n in [2u64, 6, 30] {
            let (v_n, _) = game_values(&game, n, 0.5, 1e-10).unwrap();
            assert_abs_diff_eq!(
                v_n.entries()[0],
                (n - 1) as f64 / n as f64,
                epsilon = 1e-10
            );
        }
        for lambda in [0.5, 0.2, 0.05] {
            let (_, report) = game_values(&game, 2, lambda, 1e-11).unwrap();
            assert_abs_diff_eq!(report.value.entries()[0], 1.0 - lambda, epsilon = 1e-9);
        }
    }

    #[test]
    fn discounted_value_within_stationary_bounds_and_reference() {
        let config = GeneratorConfig {
            seed: 31,
            num_states: 2,
            actions_p1: 2,
            actions_p2: 2,
            payoff_range: (-1.0, 1.0),
            sparsity: 0.0,
        };
        let game = random_game(&config).unwrap();
        let lambda = 0.3;
        let (_, report) = game_values(&game, 2, lambda, 1e-10).unwrap();
        let (lower, upper) = pure_stationary_bounds(&game, lambda);
        for s in 0..2 {
            let v = report.value.entries()[s];
            assert!(v >= lower[s] - 1e-8, "v {v} below lower bound {}", lower[s]);
            assert!(v <= upper[s] + 1e-8, "v {v} above upper bound {}", upper[s]);
        }
        let reference = reference_discounted_value(&game, lambda, 200).unwrap();
        for s in 0..2 {
            assert_abs_diff_eq!(report.value.entries()[s], reference[s], epsilon = 1e-6);
        }
    }

    #[test]
    fn big_match_style_game_on_lambda_grid() {
        // 2x2 game with an absorbing row: close to the Big Match shape.
        let payoff = vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        ];
        // Row 0 absorbs into the zero-payoff state on action j=0 only.
        let transition = vec![
            vec![
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            ],
            vec![
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
        ];
        let game = FiniteGame::new(payoff, transition).unwrap();
        for lambda in [0.5, 0.3, 0.1] {
            let (_, report) = game_values(&game, 2, lambda, 1e-10).unwrap();
            let reference = reference_discounted_value(&game, lambda, 400).unwrap();
            for s in 0..2 {
                assert_abs_diff_eq!(report.value.entries()[s], reference[s], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn shapley_operator_laws_and_assumption() {
        for seed in 0..5 {
            let config = GeneratorConfig {
                seed,
                num_states: 3,
                actions_p1: 2,
                actions_p2: 2,
                payoff_range: (-1.0, 1.0),
                sparsity: 0.2,
            };
            let game = random_game(&config).unwrap();
            let op = shapley_operator(&game);
            let laws = check_operator_laws(&op, 40, seed ^ 0xf00d).unwrap();
            assert!(laws.passes(1e-8), "laws failed for seed {seed}: {laws:?}");
            let a1 = check_assumption1(&op, 40, seed ^ 0xbeef, 1e-8).unwrap();
            assert!(a1.passes, "assumption failed for seed {seed}: {a1:?}");
        }
    }
}
