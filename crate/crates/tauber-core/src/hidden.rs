//! Public-signal hidden stochastic games solved on a discretized belief
//! simplex. The joint kernel gives, per `(state, i, j)`, the law of the
//! pair (next state, public signal); beliefs evolve by Bayes updates and
//! the one-stage operator acts on functions of the grid nodes.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix_game::{solve_matrix_game, MatrixGame, DEFAULT_GAME_TOL};
use crate::operator::{discounted_value, n_stage_value, IterationReport, OperatorHandle};
use crate::value::ValueVector;

const PROB_TOL: f64 = 1e-12;
/// Below this weight a signal branch is skipped entirely.
pub const SIGNAL_FLOOR: f64 = 1e-15;

/// Finite game with state hidden behind a public signal. Action sets are
/// state-independent (the players cannot condition on what they cannot see).
#[derive(Debug, Clone)]
pub struct HiddenGameSpec {
    num_states: usize,
    actions_p1: usize,
    actions_p2: usize,
    num_signals: usize,
    /// `payoff[k][i][j]`
    payoff: Vec<Vec<Vec<f64>>>,
    /// `kernel[k][i][j][k2 * num_signals + a]`: joint law of (next state, signal).
    kernel: Vec<Vec<Vec<Vec<f64>>>>,
    payoff_bound: f64,
}

impl HiddenGameSpec {
    pub fn new(
        num_signals: usize,
        payoff: Vec<Vec<Vec<f64>>>,
        kernel: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        let k = payoff.len();
        if k == 0 || kernel.len() != k || num_signals == 0 {
            return Err(Error::InvalidInput("empty hidden game".into()));
        }
        let m = payoff[0].len();
        let n = payoff[0][0].len();
        let mut bound = 0.0f64;
        for state in 0..k {
            if payoff[state].len() != m || kernel[state].len() != m {
                return Err(Error::InvalidInput("inconsistent action sets".into()));
            }
            for i in 0..m {
                if payoff[state][i].len() != n || kernel[state][i].len() != n {
                    return Err(Error::InvalidInput("inconsistent action sets".into()));
                }
                for j in 0..n {
                    let g = payoff[state][i][j];
                    if !g.is_finite() {
                        return Err(Error::InvalidInput("non-finite payoff".into()));
                    }
                    bound = bound.max(g.abs());
                    let row = &kernel[state][i][j];
                    if row.len() != k * num_signals {
                        return Err(Error::InvalidInput(format!(
                            "kernel row at ({state},{i},{j}) has wrong length"
                        )));
                    }
                    if row.iter().any(|&p| p < -PROB_TOL || !p.is_finite()) {
                        return Err(Error::InvalidInput("negative kernel entry".into()));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > PROB_TOL {
                        return Err(Error::InvalidInput(format!(
                            "kernel row at ({state},{i},{j}) sums to {sum}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            num_states: k,
            actions_p1: m,
            actions_p2: n,
            num_signals,
            payoff,
            kernel,
            payoff_bound: bound,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn actions_p1(&self) -> usize {
        self.actions_p1
    }

    pub fn actions_p2(&self) -> usize {
        self.actions_p2
    }

    pub fn num_signals(&self) -> usize {
        self.num_signals
    }

    pub fn payoff(&self, k: usize, i: usize, j: usize) -> f64 {
        self.payoff[k][i][j]
    }

    pub fn kernel_entry(&self, k: usize, i: usize, j: usize, k2: usize, a: usize) -> f64 {
        self.kernel[k][i][j][k2 * self.num_signals + a]
    }

    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }

    /// Transition over next states, marginalized over signals.
    pub fn transition_marginal(&self, k: usize, i: usize, j: usize) -> Vec<f64> {
        (0..self.num_states)
            .map(|k2| (0..self.num_signals).map(|a| self.kernel_entry(k, i, j, k2, a)).sum())
            .collect()
    }
}

/// A probability vector over the hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPoint {
    probs: Vec<f64>,
}

impl BeliefPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|&p| p < -PROB_TOL || !p.is_finite()) {
            return Err(Error::InvalidInput("invalid belief entries".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("belief sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn vertex(num_states: usize, state: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[state] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Bayes update of a public belief after actions `(i, j)` and signal `a`.
///
/// Returns the posterior and the probability of observing `a`. When that
/// probability vanishes the posterior is `None` and the branch carries no
/// weight.
pub fn belief_update(
    spec: &HiddenGameSpec,
    p: &BeliefPoint,
    i: usize,
    j: usize,
    a: usize,
) -> Result<(Option<BeliefPoint>, f64)> {
    if p.dim() != spec.num_states || i >= spec.actions_p1 || j >= spec.actions_p2
        || a >= spec.num_signals
    {
        return Err(Error::InvalidInput("belief_update: index out of range".into()));
    }
    let k = spec.num_states;
    let mut joint: Vec<f64> = vec![0.0; k];
    for k2 in 0..k {
        joint[k2] = (0..k)
            .map(|k1| p.probs[k1] * spec.kernel_entry(k1, i, j, k2, a))
            .sum();
    }
    let signal_probability: f64 = joint.iter().sum();
    if signal_probability <= SIGNAL_FLOOR {
        return Ok((None, signal_probability.max(0.0)));
    }
    let posterior = BeliefPoint::new(joint.into_iter().map(|x| x / signal_probability).collect())?;
    Ok((Some(posterior), signal_probability))
}

/// The regular grid of beliefs with denominator `d`, with barycentric
/// interpolation on the Freudenthal-style triangulation of the simplex.
#[derive(Debug, Clone)]
pub struct BeliefGrid {
    resolution: u32,
    num_states: usize,
    nodes: Vec<BeliefPoint>,
    index: HashMap<Vec<u32>, usize>,
}

impl BeliefGrid {
    pub fn new(num_states: usize, resolution: u32) -> Result<Self> {
        if num_states == 0 || resolution == 0 {
            return Err(Error::InvalidInput("empty belief grid".into()));
        }
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        let mut composition = vec![0u32; num_states];
        enumerate_compositions(resolution, 0, &mut composition, &mut |c| {
            index.insert(c.to_vec(), nodes.len());
            nodes.push(BeliefPoint {
                probs: c.iter().map(|&x| x as f64 / resolution as f64).collect(),
            });
        });
        Ok(Self {
            resolution,
            num_states,
            nodes,
            index,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[BeliefPoint] {
        &self.nodes
    }

    pub fn node_index(&self, numerators: &[u32]) -> Option<usize> {
        self.index.get(numerators).copied()
    }

    pub fn vertex_index(&self, state: usize) -> usize {
        let mut c = vec![0u32; self.num_states];
        c[state] = self.resolution;
        self.index[&c]
    }

    /// Interpolation weights for an arbitrary belief: node indices with
    /// nonnegative weights summing to one.
    ///
    /// Works in the cumulative coordinates `x_k = d * sum_{l >= k} p_l`,
    /// where the grid cells triangulate into simplices whose vertices are
    /// obtained by rounding up along the sorted fractional parts.
    pub fn interpolate(&self, p: &BeliefPoint) -> Result<Vec<(usize, f64)>> {
        if p.dim() != self.num_states {
            return Err(Error::DimensionMismatch {
                expected: self.num_states,
                got: p.dim(),
            });
        }
        let k = self.num_states;
        let d = self.resolution as f64;
        // Cumulative (non-increasing) coordinates; x[0] = d exactly.
        let mut x = vec![0.0; k];
        let mut acc = 0.0;
        for kk in (0..k).rev() {
            acc += p.probs[kk];
            x[kk] = d * acc;
        }
        x[0] = d;
        let mut base: Vec<i64> = x.iter().map(|&v| v.floor() as i64).collect();
        let mut frac: Vec<f64> = x.iter().zip(&base).map(|(&v, &b)| v - b as f64).collect();
        // Guard against x_k landing a hair above an integer.
        for kk in 0..k {
            if frac[kk] > 1.0 - 1e-12 {
                base[kk] += 1;
                frac[kk] = 0.0;
            }
        }
        frac[0] = 0.0;
        // Sort coordinates by descending fractional part, index tiebreak;
        // this keeps every produced vertex non-increasing.
        let mut order: Vec<usize> = (1..k).collect();
        order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap().then(a.cmp(&b)));
        let mut weights: Vec<(Vec<i64>, f64)> = Vec::with_capacity(k + 1);
        let w0 = 1.0 - order.first().map_or(0.0, |&i| frac[i]);
        weights.push((base.clone(), w0));
        let mut vertex = base.clone();
        for (idx, &coord) in order.iter().enumerate() {
            vertex[coord] += 1;
            let next_frac = order.get(idx + 1).map_or(0.0, |&i| frac[i]);
            let w = frac[coord] - next_frac;
            if w > 1e-14 {
                weights.push((vertex.clone(), w));
            }
        }
        // Map cumulative-coordinate vertices back to grid numerators.
        let mut out = Vec::with_capacity(weights.len());
        for (v, w) in weights {
            if w <= 1e-14 {
                continue;
            }
            let mut numer = vec![0u32; k];
            for kk in 0..k {
                let next = if kk + 1 < k { v[kk + 1] } else { 0 };
                let diff = v[kk] - next;
                if diff < 0 {
                    return Err(Error::Solver(
                        "belief interpolation produced an invalid vertex".into(),
                    ));
                }
                numer[kk] = diff as u32;
            }
            let idx = self.node_index(&numer).ok_or_else(|| {
                Error::Solver("belief interpolation left the grid".into())
            })?;
            out.push((idx, w));
        }
        Ok(out)
    }

    /// Evaluate a grid function at an arbitrary belief.
    pub fn interpolate_value(&self, values: &ValueVector, p: &BeliefPoint) -> Result<f64> {
        Ok(self
            .interpolate(p)?
            .iter()
            .map(|&(idx, w)| w * values.entries()[idx])
            .sum())
    }
}

fn enumerate_compositions(
    remaining: u32,
    pos: usize,
    composition: &mut Vec<u32>,
    emit: &mut impl FnMut(&[u32]),
) {
    let k = composition.len();
    if pos == k - 1 {
        composition[pos] = remaining;
        emit(composition);
        return;
    }
    for take in 0..=remaining {
        composition[pos] = take;
        enumerate_compositions(remaining - take, pos + 1, composition, emit);
    }
}

/// One-stage operator on grid functions: per node, the matrix-game value
/// of expected stage payoff plus the signal-weighted interpolated
/// continuation at the Bayes posteriors.
pub fn belief_shapley_operator(spec: &HiddenGameSpec, grid: &BeliefGrid) -> Result<OperatorHandle> {
    if grid.num_states != spec.num_states {
        return Err(Error::InvalidInput(
            "grid and game disagree on the number of states".into(),
        ));
    }
    // Posteriors and weights do not depend on f; precompute per (node, i, j).
    struct Branch {
        stage_payoff: f64,
        continuation: Vec<(usize, f64)>, // (node, weight * signal probability)
    }
    let mut table: Vec<Vec<Vec<Branch>>> = Vec::with_capacity(grid.num_nodes());
    for node in grid.nodes() {
        let mut per_i = Vec::with_capacity(spec.actions_p1);
        for i in 0..spec.actions_p1 {
            let mut per_j = Vec::with_capacity(spec.actions_p2);
            for j in 0..spec.actions_p2 {
                let stage_payoff: f64 = (0..spec.num_states)
                    .map(|k| node.probs()[k] * spec.payoff(k, i, j))
                    .sum();
                let mut continuation = Vec::new();
                for a in 0..spec.num_signals {
                    let (posterior, prob) = belief_update(spec, node, i, j, a)?;
                    if let Some(posterior) = posterior {
                        for (idx, w) in grid.interpolate(&posterior)? {
                            continuation.push((idx, prob * w));
                        }
                    }
                }
                per_j.push(Branch {
                    stage_payoff,
                    continuation,
                });
            }
            per_i.push(per_j);
        }
        table.push(per_i);
    }
    let dim = grid.num_nodes();
    let bound = spec.payoff_bound();
    let (m, n) = (spec.actions_p1, spec.actions_p2);
    Ok(OperatorHandle::new(dim, bound, bound, move |f| {
        let out: Result<Vec<f64>> = table
            .iter()
            .enumerate()
            .map(|(node_idx, per_i)| {
                let aux: Vec<Vec<f64>> = (0..m)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let b = &per_i[i][j];
                                b.stage_payoff
                                    + b.continuation
                                        .iter()
                                        .map(|&(idx, w)| w * f.entries()[idx])
                                        .sum::<f64>()
                            })
                            .collect()
                    })
                    .collect();
                let game = MatrixGame::new(aux)?;
                solve_matrix_game(&game, DEFAULT_GAME_TOL)
                    .map(|sol| sol.value)
                    .map_err(|e| Error::SolverAtState {
                        state: node_idx,
                        source: Box::new(e),
                    })
            })
            .collect();
        Ok(ValueVector::from(out?))
    }))
}

/// Both value families on the grid.
pub fn hidden_values(
    spec: &HiddenGameSpec,
    grid: &BeliefGrid,
    n: u64,
    lambda: f64,
    tol: f64,
) -> Result<(ValueVector, IterationReport)> {
    let op = belief_shapley_operator(spec, grid)?;
    let v_n = n_stage_value(&op, n)?;
    let report = discounted_value(&op, lambda, tol)?;
    Ok((v_n, report))
}

/// Maximum observed slope `|f(p) - f(q)| / ||p - q||_1` over adjacent grid
/// nodes (one unit of mass moved between two coordinates).
pub fn lipschitz_check(grid: &BeliefGrid, values: &ValueVector) -> Result<f64> {
    if values.dim() != grid.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: grid.num_nodes(),
            got: values.dim(),
        });
    }
    let k = grid.num_states;
    let step = 2.0 / grid.resolution as f64; // l1 distance between neighbors
    let mut max_slope = 0.0f64;
    for (idx, node) in grid.nodes().iter().enumerate() {
        let numer: Vec<u32> = node
            .probs()
            .iter()
            .map(|&p| (p * grid.resolution as f64).round() as u32)
            .collect();
        for from in 0..k {
            if numer[from] == 0 {
                continue;
            }
            for to in 0..k {
                if to == from {
                    continue;
                }
                let mut neighbor = numer.clone();
                neighbor[from] -= 1;
                neighbor[to] += 1;
                if let Some(other) = grid.node_index(&neighbor) {
                    let slope =
                        (values.entries()[idx] - values.entries()[other]).abs() / step;
                    max_slope = max_slope.max(slope);
                }
            }
        }
    }
    Ok(max_slope)
}
