//! Minimax solver for finite zero-sum matrix games, via the classical
//! linear-programming formulation solved with a dense simplex tableau.

use crate::error::{Error, Result};

pub const DEFAULT_GAME_TOL: f64 = 1e-9;

/// Row player maximizes, column player minimizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    payoff: Vec<Vec<f64>>,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<f64>>) -> Result<Self> {
        if payoff.is_empty() || payoff[0].is_empty() {
            return Err(Error::InvalidInput("empty payoff matrix".into()));
        }
        let cols = payoff[0].len();
        for row in &payoff {
            if row.len() != cols {
                return Err(Error::InvalidInput("ragged payoff matrix".into()));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite payoff entry".into()));
            }
        }
        Ok(Self { payoff })
    }

    pub fn rows(&self) -> usize {
        self.payoff.len()
    }

    pub fn cols(&self) -> usize {
        self.payoff[0].len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.payoff[i][j]
    }

    pub fn payoff(&self) -> &[Vec<f64>] {
        &self.payoff
    }
}

#[derive(Debug, Clone)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    pub duality_gap: f64,
}

/// Solves the mixed extension of a matrix game.
///
/// Payoffs are shifted to be strictly positive, then the column player's
/// LP `max 1'y s.t. M y <= 1, y >= 0` is solved by the simplex method with
/// Bland's least-index rule; the row strategy is read off the duals.
pub fn solve_matrix_game(game: &MatrixGame, tol: f64) -> Result<GameSolution> {
    assert!(tol > 0.0);
    let m = game.rows();
    let n = game.cols();
    let min_entry = game
        .payoff
        .iter()
        .flatten()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let shift = 1.0 - min_entry;

    // Tableau: m rows, columns = n structural + m slack + rhs.
    let width = n + m + 1;
    let mut tab: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            for j in 0..n {
                row[j] = game.payoff[i][j] + shift;
            }
            row[n + i] = 1.0;
            row[width - 1] = 1.0;
            row
        })
        .collect();
    // Objective row: reduced costs for max 1'y (stored negated so that a
    // negative entry marks an improving column).
    let mut obj = vec![0.0; width];
    for j in 0..n {
        obj[j] = -1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot_eps = 1e-11;
    let max_pivots = 50 * (m + n).max(10);
    for _ in 0..max_pivots {
        // Bland: entering column = smallest index with negative reduced cost.
        let Some(enter) = (0..n + m).find(|&j| obj[j] < -pivot_eps) else {
            return extract_solution(game, &tab, &obj, &basis, shift, tol);
        };
        // Leaving row: min ratio, ties broken by smallest basis index.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = tab[i][enter];
            if a > pivot_eps {
                let ratio = tab[i][width - 1] / a;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.map_or(true, |l| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Unbounded cannot happen for a positive matrix; treat as failure.
            return Err(Error::Solver("unbounded simplex tableau".into()));
        };
        // Pivot.
        let piv = tab[leave][enter];
        for x in tab[leave].iter_mut() {
            *x /= piv;
        }
        for i in 0..m {
            if i != leave {
                let factor = tab[i][enter];
                if factor != 0.0 {
                    for j in 0..width {
                        tab[i][j] -= factor * tab[leave][j];
                    }
                }
            }
        }
        let factor = obj[enter];
        if factor != 0.0 {
            for j in 0..width {
                obj[j] -= factor * tab[leave][j];
            }
        }
        basis[leave] = enter;
    }
    Err(Error::Solver(format!(
        "pivot cap {max_pivots} exhausted on {m}x{n} game"
    )))
}

fn extract_solution(
    game: &MatrixGame,
    tab: &[Vec<f64>],
    obj: &[f64],
    basis: &[usize],
    shift: f64,
    tol: f64,
) -> Result<GameSolution> {
    let m = game.rows();
    let n = game.cols();
    let width = n + m + 1;
    let mut y = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            y[b] = tab[i][width - 1].max(0.0);
        }
    }
    let z: f64 = y.iter().sum();
    if z <= 0.0 {
        return Err(Error::Solver("degenerate optimum with zero objective".into()));
    }
    let shifted_value = 1.0 / z;
    // Duals of the m constraints are the reduced costs on the slack columns.
    let u: Vec<f64> = (0..m).map(|i| obj[n + i].max(0.0)).collect();
    let us: f64 = u.iter().sum();
    if us <= 0.0 {
        return Err(Error::Solver("degenerate duals".into()));
    }
    let row_strategy: Vec<f64> = u.iter().map(|x| x / us).collect();
    let col_strategy: Vec<f64> = y.iter().map(|x| x / z).collect();
    let value = shifted_value - shift;
    let mut sol = GameSolution {
        value,
        row_strategy,
        col_strategy,
        duality_gap: 0.0,
    };
    sol.duality_gap = verify_solution(game, &sol);
    if sol.duality_gap > tol {
        return Err(Error::Solver(format!(
            "duality gap {} exceeds tol {tol}",
            sol.duality_gap
        )));
    }
    Ok(sol)
}

/// Recomputes both one-sided guarantees from scratch and returns the
/// worst violation; independent of the solver internals.
pub fn verify_solution(game: &MatrixGame, sol: &GameSolution) -> f64 {
    let m = game.rows();
    let n = game.cols();
    let row_guarantee = (0..n)
        .map(|j| (0..m).map(|i| sol.row_strategy[i] * game.payoff[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let col_guarantee = (0..m)
        .map(|i| (0..n).map(|j| game.payoff[i][j] * sol.col_strategy[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (sol.value - row_guarantee)
        .max(col_guarantee - sol.value)
        .max(0.0)
}
