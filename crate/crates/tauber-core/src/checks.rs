//! Randomized numerical checkers for the operator machinery: the discount
//! shift bound, the iterate inequalities, and the basic operator laws
//! (nonexpansiveness, monotonicity, additive homogeneity).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::operator::{apply_iterates, discounted_value, psi_lambda_t, OperatorHandle};
use crate::value::ValueVector;

pub const DEFAULT_SLACK: f64 = 1e-9;

/// Result of checking the two iterate inequalities at one `(f, g, lambda, n, t)`.
///
/// (i): `||Psi^t_l(f) - Psi^t_l(g)|| <= (1-l)^t ||f - g||`.
/// (ii): `||Psi^t_{1/n}(f) - Psi^t((n-t) f)/n|| <= (C + ||f||) [t/n - 1 + (1 - 1/n)^t]`.
#[derive(Debug, Clone, Copy)]
pub struct Lemma1Report {
    pub contraction_holds: bool,
    pub contraction_slack: f64,
    pub iterate_bound_holds: bool,
    pub iterate_bound_slack: f64,
}

pub fn check_lemma1(
    op: &OperatorHandle,
    f: &ValueVector,
    g: &ValueVector,
    lambda: f64,
    n: u64,
    t: u64,
    slack: f64,
) -> Result<Lemma1Report> {
    assert!(t >= 1 && t <= n, "need 1 <= t <= n");
    // (i)
    let lhs_i = psi_lambda_t(op, lambda, t, f)?.sup_distance(&psi_lambda_t(op, lambda, t, g)?);
    let rhs_i = (1.0 - lambda).powi(t as i32) * f.sup_distance(g);
    // (ii)
    let nf = n as f64;
    let left = psi_lambda_t(op, 1.0 / nf, t, f)?;
    let right = apply_iterates(op, &f.scale(nf - t as f64), t)?.scale(1.0 / nf);
    let lhs_ii = left.sup_distance(&right);
    let rhs_ii = (op.assumption_constant() + f.sup_norm())
        * (t as f64 / nf - 1.0 + (1.0 - 1.0 / nf).powi(t as i32));
    Ok(Lemma1Report {
        contraction_holds: rhs_i - lhs_i >= -slack,
        contraction_slack: rhs_i - lhs_i,
        iterate_bound_holds: rhs_ii - lhs_ii >= -slack,
        iterate_bound_slack: rhs_ii - lhs_ii,
    })
}

/// Estimate of the discount-shift constant from random sampling.
#[derive(Debug, Clone, Copy)]
pub struct Assumption1Report {
    pub max_ratio: f64,
    pub declared_constant: f64,
    pub passes: bool,
}

/// Samples `(lambda, lambda', f)` and reports the worst observed ratio
/// `||l*Psi(f/l) - l'*Psi(f/l')|| / |l - l'|` against the declared constant.
pub fn check_assumption1(
    op: &OperatorHandle,
    samples: u64,
    rng_seed: u64,
    slack: f64,
) -> Result<Assumption1Report> {
    assert!(samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let scale = op.payoff_bound() * 10.0;
    let mut max_ratio = 0.0f64;
    for _ in 0..samples {
        let l1: f64 = rng.gen_range(0.001..=1.0);
        let l2: f64 = rng.gen_range(0.001..=1.0);
        if (l1 - l2).abs() < 1e-12 {
            continue;
        }
        let f = random_vector(&mut rng, op.dim(), scale);
        let a = op.apply(&f.scale(1.0 / l1))?.scale(l1);
        let b = op.apply(&f.scale(1.0 / l2))?.scale(l2);
        let ratio = a.sup_distance(&b) / (l1 - l2).abs();
        max_ratio = max_ratio.max(ratio);
    }
    Ok(Assumption1Report {
        max_ratio,
        declared_constant: op.assumption_constant(),
        passes: max_ratio <= op.assumption_constant() + slack,
    })
}

/// Sampled operator-law violations; zero everywhere for a well-behaved operator.
#[derive(Debug, Clone, Copy, Default)]
pub struct OperatorLawReport {
    pub worst_expansion: f64,
    pub worst_monotonicity: f64,
    pub worst_homogeneity: f64,
}

impl OperatorLawReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.worst_expansion <= slack
            && self.worst_monotonicity <= slack
            && self.worst_homogeneity <= slack
    }
}

/// Randomized check of nonexpansiveness, monotonicity and additive
/// homogeneity on sampled pairs.
pub fn check_operator_laws(
    op: &OperatorHandle,
    samples: u64,
    rng_seed: u64,
) -> Result<OperatorLawReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let scale = op.payoff_bound() * 10.0;
    let mut report = OperatorLawReport::default();
    for _ in 0..samples {
        let f = random_vector(&mut rng, op.dim(), scale);
        let g = random_vector(&mut rng, op.dim(), scale);
        let pf = op.apply(&f)?;
        let pg = op.apply(&g)?;
        report.worst_expansion = report
            .worst_expansion
            .max(pf.sup_distance(&pg) - f.sup_distance(&g));
        // Monotonicity: compare against the entrywise max of f and g.
        let h = ValueVector::from(
            f.entries()
                .iter()
                .zip(g.entries())
                .map(|(a, b)| a.max(*b))
                .collect::<Vec<_>>(),
        );
        let ph = op.apply(&h)?;
        let mono_violation = pf
            .entries()
            .iter()
            .zip(ph.entries())
            .fold(0.0f64, |m, (a, b)| m.max(a - b));
        report.worst_monotonicity = report.worst_monotonicity.max(mono_violation);
        let c: f64 = rng.gen_range(-3.0..3.0);
        let shifted = op.apply(&f.shift(c))?;
        report.worst_homogeneity = report
            .worst_homogeneity
            .max(shifted.sup_distance(&pf.shift(c)));
    }
    Ok(report)
}

/// Samples `(lambda, lambda')` pairs and checks the Lipschitz-in-discount
/// bound `||v_l - v_l'|| <= A |l - l'| / l'` with `A = C + sup ||v_l||`.
pub fn check_discount_lipschitz(
    op: &OperatorHandle,
    samples: u64,
    rng_seed: u64,
    tol: f64,
    slack: f64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let a_const = op.assumption_constant() + op.payoff_bound();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let l1: f64 = rng.gen_range(0.05..=1.0);
        let l2: f64 = rng.gen_range(0.05..=1.0);
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        let v_lo = discounted_value(op, lo, tol)?.value;
        let v_hi = discounted_value(op, hi, tol)?.value;
        let bound = a_const * (hi - lo) / lo + 2.0 * tol + slack;
        worst = worst.max(v_lo.sup_distance(&v_hi) - bound);
    }
    Ok(worst)
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> ValueVector {
    if scale <= 0.0 {
        return ValueVector::zeros(dim);
    }
    ValueVector::from(
        (0..dim)
            .map(|_| rng.gen_range(-scale..=scale))
            .collect::<Vec<_>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma1_zero_distance() {
        let op = OperatorHandle::constant_shift(3, 0.5);
        let f = ValueVector::from(vec![1.0, 2.0, 3.0]);
        let report = check_lemma1(&op, &f, &f, 0.5, 1, 1, DEFAULT_SLACK).unwrap();
        assert!(report.contraction_holds);
        assert!(report.iterate_bound_holds);
    }

    /// For `Psi = f + c*1`, inequality (ii) reduces to a closed form:
    /// the left side is |c| * [1 - t/n - (1 - (1-1/n)^t)]... both sides are
    /// explicit, so check against the formula rather than the generic path.
    #[test]
    fn lemma1_constant_shift_closed_form() {
        let c = 0.8;
        let op = OperatorHandle::constant_shift(2, c);
        let f = ValueVector::zeros(2);
        for (n, t) in [(5u64, 2u64), (10, 7), (30, 30)] {
            let report = check_lemma1(&op, &f, &f, 1.0 / n as f64, n, t, DEFAULT_SLACK).unwrap();
            assert!(report.iterate_bound_holds, "failed at n={n} t={t}");
            // Closed form of the left side: Psi^t_{1/n}(0) has entries
            // c * (1 - (1-1/n)^t), while Psi^t((n-t)*0)/n = c*t/n.
            let nf = n as f64;
            let lhs = (c * (1.0 - (1.0 - 1.0 / nf).powi(t as i32)) - c * t as f64 / nf).abs();
            let rhs = (c.abs() + 0.0) * (t as f64 / nf - 1.0 + (1.0 - 1.0 / nf).powi(t as i32));
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn assumption1_identity_ratio_zero() {
        let op = OperatorHandle::identity(3);
        let report = check_assumption1(&op, 50, 42, DEFAULT_SLACK).unwrap();
        assert_eq!(report.max_ratio, 0.0);
        assert!(report.passes);
    }

    #[test]
    fn assumption1_constant_shift_bounded_by_c() {
        let c = 1.7;
        let op = OperatorHandle::constant_shift(3, c);
        let report = check_assumption1(&op, 200, 7, DEFAULT_SLACK).unwrap();
        assert!(report.max_ratio <= c + 1e-9);
        assert!(report.passes);
    }

    #[test]
    fn operator_laws_pass_for_constant_shift() {
        let op = OperatorHandle::constant_shift(4, 0.9);
        let report = check_operator_laws(&op, 100, 3).unwrap();
        assert!(report.passes(DEFAULT_SLACK));
    }

    #[test]
    fn operator_laws_catch_expansion() {
        // Declared nonexpansive but actually doubles its input.
        let op = OperatorHandle::new(2, 1.0, 1.0, |f| Ok(f.scale(2.0)));
        let report = check_operator_laws(&op, 100, 5).unwrap();
        assert!(!report.passes(DEFAULT_SLACK));
        assert!(report.worst_expansion > 0.1);
    }
}
