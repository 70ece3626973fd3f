//! Nonexpansive operators, their iterates, and the two value families
//! `v_n = Psi^n(0) / n` and the discounted fixed point
//! `v_lambda = lambda * Psi((1 - lambda) / lambda * v_lambda)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::value::ValueVector;

type ApplyFn = dyn Fn(&ValueVector) -> Result<ValueVector> + Send + Sync;

/// An evaluatable nonexpansive map together with its declared constants.
///
/// `assumption_constant` is the declared `C` in the discount-shift bound
/// `||l*Psi(f/l) - l'*Psi(f/l')|| <= C*|l - l'|`; `payoff_bound` bounds
/// `||Psi(0)||` and therefore every `v_n` and `v_lambda`.
#[derive(Clone)]
pub struct OperatorHandle {
    apply: Arc<ApplyFn>,
    dim: usize,
    assumption_constant: f64,
    payoff_bound: f64,
}

impl OperatorHandle {
    pub fn new<F>(dim: usize, assumption_constant: f64, payoff_bound: f64, apply: F) -> Self
    where
        F: Fn(&ValueVector) -> Result<ValueVector> + Send + Sync + 'static,
    {
        Self {
            apply: Arc::new(apply),
            dim,
            assumption_constant,
            payoff_bound,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, 0.0, 0.0, |f| Ok(f.clone()))
    }

    /// `f -> f + c*1`, the constant-payoff operator.
    pub fn constant_shift(dim: usize, c: f64) -> Self {
        Self::new(dim, c.abs(), c.abs(), move |f| Ok(f.shift(c)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn assumption_constant(&self) -> f64 {
        self.assumption_constant
    }

    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }

    pub fn apply(&self, f: &ValueVector) -> Result<ValueVector> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: f.dim(),
            });
        }
        let out = (self.apply)(f)?;
        debug_assert_eq!(out.dim(), self.dim);
        Ok(out)
    }
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim", &self.dim)
            .field("assumption_constant", &self.assumption_constant)
            .field("payoff_bound", &self.payoff_bound)
            .finish()
    }
}

/// Outcome of a certified fixed-point computation.
#[derive(Debug, Clone)]
pub struct IterationReport {
    pub lambda: f64,
    pub iterations_used: u64,
    /// A-posteriori sup-norm error bound on `value`.
    pub residual: f64,
    pub value: ValueVector,
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidDiscount(lambda));
    }
    Ok(())
}

/// `Psi^n(f)`; `Psi^0(f) = f`.
pub fn apply_iterates(op: &OperatorHandle, f: &ValueVector, n: u64) -> Result<ValueVector> {
    let mut cur = f.clone();
    for _ in 0..n {
        cur = op.apply(&cur)?;
    }
    Ok(cur)
}

/// `v_n = Psi^n(0) / n`, accumulated in unnormalized form.
pub fn n_stage_value(op: &OperatorHandle, n: u64) -> Result<ValueVector> {
    assert!(n >= 1, "n-stage value requires n >= 1");
    let iterate = apply_iterates(op, &ValueVector::zeros(op.dim()), n)?;
    Ok(iterate.scale(1.0 / n as f64))
}

/// One step of the discounted recursion: `f -> lambda * Psi((1-lambda)/lambda * f)`.
///
/// This map is a `(1 - lambda)`-contraction in sup-norm.
pub fn discounted_map(op: &OperatorHandle, lambda: f64, f: &ValueVector) -> Result<ValueVector> {
    check_lambda(lambda)?;
    let inner = f.scale((1.0 - lambda) / lambda);
    Ok(op.apply(&inner)?.scale(lambda))
}

/// `Psi^t_lambda(f)`: `t` nested applications of [`discounted_map`].
pub fn psi_lambda_t(
    op: &OperatorHandle,
    lambda: f64,
    t: u64,
    f: &ValueVector,
) -> Result<ValueVector> {
    check_lambda(lambda)?;
    let mut cur = f.clone();
    for _ in 0..t {
        cur = discounted_map(op, lambda, &cur)?;
    }
    Ok(cur)
}

/// Fixed point of [`discounted_map`], certified by the a-posteriori
/// contraction bound `((1-lambda)/lambda) * ||f_{k+1} - f_k|| <= tol`.
pub fn discounted_value(op: &OperatorHandle, lambda: f64, tol: f64) -> Result<IterationReport> {
    discounted_value_capped(op, lambda, tol, DEFAULT_ITERATION_CAP)
}

pub fn discounted_value_capped(
    op: &OperatorHandle,
    lambda: f64,
    tol: f64,
    cap: u64,
) -> Result<IterationReport> {
    check_lambda(lambda)?;
    assert!(tol > 0.0, "tolerance must be positive");
    let mut cur = ValueVector::zeros(op.dim());
    let factor = (1.0 - lambda) / lambda;
    let mut iterations = 0u64;
    loop {
        let next = discounted_map(op, lambda, &cur)?;
        iterations += 1;
        let step = next.sup_distance(&cur);
        let residual = factor * step;
        if residual <= tol {
            return Ok(IterationReport {
                lambda,
                iterations_used: iterations,
                residual,
                value: next,
            });
        }
        if iterations >= cap {
            return Err(Error::Nonconvergence {
                tol,
                iterations,
                residual,
                last: next,
            });
        }
        cur = next;
    }
}

/// Per-`n` sup-norm gap between `v_n` and `v_{1/n}`.
#[derive(Debug, Clone)]
pub struct GapRow {
    pub n: u64,
    pub gap: f64,
    pub v_n: ValueVector,
    pub v_lambda: ValueVector,
}

/// Tabulates `||v_n - v_{1/n}||` over a schedule of horizons.
pub fn tauberian_gap(op: &OperatorHandle, schedule: &[u64], tol: f64) -> Result<Vec<GapRow>> {
    assert!(!schedule.is_empty(), "schedule must be nonempty");
    assert!(
        schedule.windows(2).all(|w| w[0] < w[1]),
        "schedule must be increasing"
    );
    schedule
        .iter()
        .map(|&n| {
            let v_n = n_stage_value(op, n)?;
            let report = discounted_value(op, 1.0 / n as f64, tol)?;
            let gap = v_n.sup_distance(&report.value);
            Ok(GapRow {
                n,
                gap,
                v_n,
                v_lambda: report.value,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    /// `f -> g + P f` with `P` row-stochastic; nonexpansive and additively
    /// homogeneous, so the whole operator-core theory applies to it.
    fn affine_operator(g: Vec<f64>, p: Vec<Vec<f64>>) -> OperatorHandle {
        let dim = g.len();
        let bound = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        OperatorHandle::new(dim, bound, bound, move |f| {
            let out: Vec<f64> = (0..dim)
                .map(|k| {
                    g[k] + p[k]
                        .iter()
                        .zip(f.entries())
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
                })
                .collect();
            Ok(ValueVector::from(out))
        })
    }

    fn random_affine(seed: u64, dim: usize) -> (Vec<f64>, Vec<Vec<f64>>, OperatorHandle) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p: Vec<Vec<f64>> = (0..dim)
            .map(|_| {
                let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.01..1.0)).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let op = affine_operator(g.clone(), p.clone());
        (g, p, op)
    }

    fn mat_vec(p: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
        p.iter()
            .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn identity_iterates() {
        let op = OperatorHandle::identity(3);
        let f = ValueVector::from(vec![1.0, -2.0, 0.5]);
        let out = apply_iterates(&op, &f, 7).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn constant_shift_telescopes() {
        let op = OperatorHandle::constant_shift(4, 0.3);
        let out = apply_iterates(&op, &ValueVector::zeros(4), 10).unwrap();
        for &x in out.entries() {
            assert_abs_diff_eq!(x, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn iterates_match_matrix_power_oracle() {
        let (g, p, op) = random_affine(7, 3);
        let f: Vec<f64> = vec![0.4, -1.2, 2.0];
        let got = apply_iterates(&op, &ValueVector::from(f.clone()), 4).unwrap();
        // Oracle: g + P g + P^2 g + P^3 g + P^4 f by repeated mat-vec.
        let mut expected = f;
        for _ in 0..4 {
            let pf = mat_vec(&p, &expected);
            expected = g.iter().zip(&pf).map(|(a, b)| a + b).collect();
        }
        for (a, b) in got.entries().iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn n_stage_constant_game() {
        let op = OperatorHandle::constant_shift(2, 0.5);
        let v = n_stage_value(&op, 20).unwrap();
        for &x in v.entries() {
            assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn n_stage_bounded_by_payoff_bound() {
        for seed in 0..10 {
            let (_, _, op) = random_affine(seed, 3);
            for n in [1, 5, 50] {
                let v = n_stage_value(&op, n).unwrap();
                assert!(v.sup_norm() <= op.payoff_bound() + 1e-9);
            }
        }
    }

    /// 2-state single-player deterministic chain: the n-stage value must
    /// match the best n-step path found by exhaustive enumeration.
    #[test]
    fn n_stage_matches_policy_tree_oracle() {
        // State payoffs and allowed moves: 0 -> {0,1}, 1 -> {0,1}.
        let g = [0.2, 1.0];
        let succ: [Vec<usize>; 2] = [vec![0, 1], vec![0, 1]];
        let succ_op = succ.clone();
        let op = OperatorHandle::new(2, 1.0, 1.0, move |f| {
            Ok(ValueVector::from(
                (0..2)
                    .map(|k| {
                        g[k]
                            + succ_op[k]
                                .iter()
                                .map(|&k2| f.entries()[k2])
                                .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect::<Vec<_>>(),
            ))
        });
        let n = 6;
        let v = n_stage_value(&op, n).unwrap();
        // Oracle: enumerate all length-n paths.
        fn best(g: &[f64; 2], succ: &[Vec<usize>; 2], k: usize, steps: u64) -> f64 {
            if steps == 0 {
                return 0.0;
            }
            g[k] + succ[k]
                .iter()
                .map(|&k2| best(g, succ, k2, steps - 1))
                .fold(f64::NEG_INFINITY, f64::max)
        }
        for k in 0..2 {
            assert_abs_diff_eq!(
                v.entries()[k],
                best(&g, &succ, k, n) / n as f64,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn discounted_map_lambda_one_kills_continuation() {
        let (_, _, op) = random_affine(11, 3);
        let f = ValueVector::from(vec![5.0, -3.0, 9.0]);
        let got = discounted_map(&op, 1.0, &f).unwrap();
        let psi0 = op.apply(&ValueVector::zeros(3)).unwrap();
        assert!(got.sup_distance(&psi0) < 1e-12);
    }

    #[test]
    fn discounted_map_constant_fixed_point() {
        let c = 0.7;
        let op = OperatorHandle::constant_shift(3, c);
        for lambda in [1.0, 0.5, 0.01] {
            let f = ValueVector::constant(3, c);
            let got = discounted_map(&op, lambda, &f).unwrap();
            assert!(got.sup_distance(&f) < 1e-12);
        }
    }

    #[test]
    fn discounted_map_matches_affine_expansion() {
        let (g, p, op) = random_affine(13, 3);
        let lambda = 0.5;
        let f = vec![0.3, -0.6, 1.1];
        let got = discounted_map(&op, lambda, &ValueVector::from(f.clone())).unwrap();
        let pf = mat_vec(&p, &f);
        for k in 0..3 {
            assert_abs_diff_eq!(
                got.entries()[k],
                lambda * g[k] + (1.0 - lambda) * pf[k],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn discounted_map_rejects_bad_lambda() {
        let op = OperatorHandle::identity(1);
        let f = ValueVector::zeros(1);
        assert!(discounted_map(&op, 0.0, &f).is_err());
        assert!(discounted_map(&op, 1.5, &f).is_err());
        assert!(discounted_map(&op, -0.1, &f).is_err());
    }

    #[test]
    fn discounted_value_constant_game() {
        let op = OperatorHandle::constant_shift(2, 0.25);
        let report = discounted_value(&op, 0.1, 1e-10).unwrap();
        for &x in report.value.entries() {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-10);
        }
        assert!(report.residual <= 1e-10);
    }

    #[test]
    fn discounted_value_lambda_one_single_step() {
        let (_, _, op) = random_affine(17, 3);
        let report = discounted_value(&op, 1.0, 1e-12).unwrap();
        assert_eq!(report.iterations_used, 1);
        let psi0 = op.apply(&ValueVector::zeros(3)).unwrap();
        assert!(report.value.sup_distance(&psi0) < 1e-12);
    }

    #[test]
    fn discounted_value_cap_reports_nonconvergence() {
        let (_, _, op) = random_affine(19, 3);
        match discounted_value_capped(&op, 0.01, 1e-12, 5) {
            Err(Error::Nonconvergence { iterations, .. }) => assert_eq!(iterations, 5),
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn psi_lambda_t_base_cases() {
        let (_, _, op) = random_affine(23, 3);
        let f = ValueVector::from(vec![0.2, 0.4, -0.9]);
        let t0 = psi_lambda_t(&op, 0.3, 0, &f).unwrap();
        assert_eq!(t0, f);
        let t1 = psi_lambda_t(&op, 0.3, 1, &f).unwrap();
        let dm = discounted_map(&op, 0.3, &f).unwrap();
        assert!(t1.sup_distance(&dm) < 1e-15);
    }

    #[test]
    fn psi_lambda_t_matches_nested_expansion() {
        let (_, _, op) = random_affine(29, 3);
        let f = ValueVector::from(vec![1.0, -0.5, 0.25]);
        let lambda = 0.4;
        let got = psi_lambda_t(&op, lambda, 3, &f).unwrap();
        let step1 = discounted_map(&op, lambda, &f).unwrap();
        let step2 = discounted_map(&op, lambda, &step1).unwrap();
        let step3 = discounted_map(&op, lambda, &step2).unwrap();
        assert!(got.sup_distance(&step3) < 1e-15);
    }

    #[test]
    fn fixed_point_satisfies_psi1() {
        let (_, _, op) = random_affine(31, 4);
        let tol = 1e-10;
        let report = discounted_value(&op, 0.2, tol).unwrap();
        let again = psi_lambda_t(&op, 0.2, 1, &report.value).unwrap();
        assert!(report.value.sup_distance(&again) <= 2.0 * tol);
    }

    #[test]
    fn tauberian_gap_constant_operator() {
        let op = OperatorHandle::constant_shift(2, 0.4);
        let rows = tauberian_gap(&op, &[10, 20, 40], 1e-10).unwrap();
        for row in rows {
            assert!(row.gap <= 2e-10, "gap {} at n {}", row.gap, row.n);
        }
    }

    proptest! {
        #[test]
        fn contraction_of_discounted_map(seed in 0u64..200, lambda in 0.05f64..1.0) {
            let (_, _, op) = random_affine(seed, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let f = ValueVector::from((0..3).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
            let g = ValueVector::from((0..3).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
            let df = discounted_map(&op, lambda, &f).unwrap();
            let dg = discounted_map(&op, lambda, &g).unwrap();
            prop_assert!(df.sup_distance(&dg) <= (1.0 - lambda) * f.sup_distance(&g) + 1e-12);
        }

        #[test]
        fn nonexpansiveness_of_affine(seed in 0u64..200) {
            let (_, _, op) = random_affine(seed, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1234);
            let f = ValueVector::from((0..4).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
            let g = ValueVector::from((0..4).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
            let pf = op.apply(&f).unwrap();
            let pg = op.apply(&g).unwrap();
            prop_assert!(pf.sup_distance(&pg) <= f.sup_distance(&g) + 1e-12);
        }
    }
}
