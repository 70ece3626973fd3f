//! Independent reference computations used by the test suites. Everything
//! here deliberately avoids the production solver paths: matrix games are
//! solved by support enumeration over square subsystems, and discounted
//! values by a plain uncertified recursion on top of that.

use crate::error::{Error, Result};
use crate::stochastic::FiniteGame;

/// Gaussian elimination with partial pivoting. Returns `None` on a
/// (numerically) singular system.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Value of a matrix game by exhaustive enumeration of equal-size support
/// pairs (Shapley–Snow): solve each square subsystem, keep the first pair
/// whose strategies are feasible and unimprovable.
pub fn support_enumeration_value(payoff: &[Vec<f64>]) -> Result<f64> {
    let m = payoff.len();
    let n = payoff[0].len();
    let eps = 1e-8;
    for size in 1..=m.min(n) {
        for rows in subsets_of_size(m, size) {
            'cols: for cols in subsets_of_size(n, size) {
                // Unknowns: x on `rows` plus v. Equations: x' M_j = v on `cols`,
                // sum x = 1.
                let mut a = vec![vec![0.0; size + 1]; size + 1];
                let mut b = vec![0.0; size + 1];
                for (eq, &j) in cols.iter().enumerate() {
                    for (t, &i) in rows.iter().enumerate() {
                        a[eq][t] = payoff[i][j];
                    }
                    a[eq][size] = -1.0;
                }
                for t in 0..size {
                    a[size][t] = 1.0;
                }
                b[size] = 1.0;
                let Some(xv) = solve_linear(a, b) else { continue };
                let v = xv[size];
                // Column side: M_i y = v on `rows`, sum y = 1.
                let mut a2 = vec![vec![0.0; size + 1]; size + 1];
                let mut b2 = vec![0.0; size + 1];
                for (eq, &i) in rows.iter().enumerate() {
                    for (t, &j) in cols.iter().enumerate() {
                        a2[eq][t] = payoff[i][j];
                    }
                    a2[eq][size] = -1.0;
                }
                for t in 0..size {
                    a2[size][t] = 1.0;
                }
                b2[size] = 1.0;
                let Some(yw) = solve_linear(a2, b2) else { continue };
                if (yw[size] - v).abs() > eps {
                    continue;
                }
                // Feasibility.
                if xv[..size].iter().any(|&p| p < -eps) || yw[..size].iter().any(|&p| p < -eps) {
                    continue;
                }
                let mut x = vec![0.0; m];
                for (t, &i) in rows.iter().enumerate() {
                    x[i] = xv[t].max(0.0);
                }
                let mut y = vec![0.0; n];
                for (t, &j) in cols.iter().enumerate() {
                    y[j] = yw[t].max(0.0);
                }
                // Unimprovability outside the supports.
                for j in 0..n {
                    let got: f64 = (0..m).map(|i| x[i] * payoff[i][j]).sum();
                    if got < v - eps {
                        continue 'cols;
                    }
                }
                for i in 0..m {
                    let got: f64 = (0..n).map(|j| payoff[i][j] * y[j]).sum();
                    if got > v + eps {
                        continue 'cols;
                    }
                }
                return Ok(v);
            }
        }
    }
    Err(Error::Solver(
        "support enumeration found no equilibrium (numerical degeneracy)".into(),
    ))
}

/// Uncertified reference for the discounted value of a finite game: plain
/// recursion on the discounted Shapley equation, with per-state one-shot
/// games solved by support enumeration.
pub fn reference_discounted_value(game: &FiniteGame, lambda: f64, sweeps: u64) -> Result<Vec<f64>> {
    let k = game.num_states();
    let mut v = vec![0.0; k];
    for _ in 0..sweeps {
        let mut next = vec![0.0; k];
        for state in 0..k {
            let (m, n) = (game.actions_p1(state), game.actions_p2(state));
            let aux: Vec<Vec<f64>> = (0..m)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let cont: f64 = (0..k)
                                .map(|k2| game.transition(state, i, j)[k2] * v[k2])
                                .sum();
                            lambda * game.payoff(state, i, j) + (1.0 - lambda) * cont
                        })
                        .collect()
                })
                .collect();
            next[state] = support_enumeration_value(&aux)?;
        }
        v = next;
    }
    Ok(v)
}

/// Discounted payoff vector under a fixed pair of pure stationary policies,
/// from the linear system `v = lambda*g + (1-lambda)*P v`.
pub fn stationary_pair_value(
    game: &FiniteGame,
    lambda: f64,
    policy_p1: &[usize],
    policy_p2: &[usize],
) -> Option<Vec<f64>> {
    let k = game.num_states();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for s in 0..k {
        let (i, j) = (policy_p1[s], policy_p2[s]);
        for k2 in 0..k {
            a[s][k2] = -(1.0 - lambda) * game.transition(s, i, j)[k2];
        }
        a[s][s] += 1.0;
        b[s] = lambda * game.payoff(s, i, j);
    }
    solve_linear(a, b)
}

/// Bounds on the discounted value from exhaustive search over pure
/// stationary policy pairs: `max_sigma min_tau <= v <= min_tau max_sigma`
/// entrywise.
pub fn pure_stationary_bounds(game: &FiniteGame, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let k = game.num_states();
    let p1_policies = enumerate_policies(&(0..k).map(|s| game.actions_p1(s)).collect::<Vec<_>>());
    let p2_policies = enumerate_policies(&(0..k).map(|s| game.actions_p2(s)).collect::<Vec<_>>());
    let mut lower = vec![f64::NEG_INFINITY; k];
    let mut upper = vec![f64::INFINITY; k];
    for sigma in &p1_policies {
        let mut worst = vec![f64::INFINITY; k];
        for tau in &p2_policies {
            let v = stationary_pair_value(game, lambda, sigma, tau).expect("singular system");
            for s in 0..k {
                worst[s] = worst[s].min(v[s]);
            }
        }
        for s in 0..k {
            lower[s] = lower[s].max(worst[s]);
        }
    }
    for tau in &p2_policies {
        let mut best = vec![f64::NEG_INFINITY; k];
        for sigma in &p1_policies {
            let v = stationary_pair_value(game, lambda, sigma, tau).expect("singular system");
            for s in 0..k {
                best[s] = best[s].max(v[s]);
            }
        }
        for s in 0..k {
            upper[s] = upper[s].min(best[s]);
        }
    }
    (lower, upper)
}

fn enumerate_policies(action_counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &count in action_counts {
        let mut next = Vec::new();
        for partial in &out {
            for a in 0..count {
                let mut p = partial.clone();
                p.push(a);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Plain value iteration for a finite MDP given as explicit reward and
/// transition matrices over an abstract state set (used against the
/// belief-grid operator for single-player hidden games).
pub fn mdp_discounted_value(
    reward: &[Vec<f64>],
    transition: &[Vec<Vec<f64>>],
    lambda: f64,
    sweeps: u64,
) -> Vec<f64> {
    let n = reward.len();
    let mut v = vec![0.0; n];
    for _ in 0..sweeps {
        let mut next = vec![0.0; n];
        for s in 0..n {
            next[s] = (0..reward[s].len())
                .map(|a| {
                    let cont: f64 = (0..n).map(|s2| transition[s][a][s2] * v[s2]).sum();
                    lambda * reward[s][a] + (1.0 - lambda) * cont
                })
                .fold(f64::NEG_INFINITY, f64::max);
        }
        v = next;
    }
    v
}

/// `n`-stage MDP value by the finite-horizon recursion on the same data.
pub fn mdp_n_stage_value(reward: &[Vec<f64>], transition: &[Vec<Vec<f64>>], n: u64) -> Vec<f64> {
    let states = reward.len();
    let mut w = vec![0.0; states];
    for _ in 0..n {
        let mut next = vec![0.0; states];
        for s in 0..states {
            next[s] = (0..reward[s].len())
                .map(|a| {
                    let cont: f64 = (0..states).map(|s2| transition[s][a][s2] * w[s2]).sum();
                    reward[s][a] + cont
                })
                .fold(f64::NEG_INFINITY, f64::max);
        }
        w = next;
    }
    w.into_iter().map(|x| x / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_solver_roundtrip() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_linear(a, vec![5.0, 10.0]).unwrap();
        assert!((2.0 * x[0] + x[1] - 5.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn support_enumeration_matching_pennies() {
        let v = support_enumeration_value(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn support_enumeration_saddle_point() {
        // (1,0) is a saddle: row 1 max-min, col 0 min-max.
        let v = support_enumeration_value(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((v - 3.0).abs() < 1e-10);
    }
}
