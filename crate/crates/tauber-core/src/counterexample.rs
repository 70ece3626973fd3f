//! Closed-form evaluation of the one-shot reductions behind the
//! distinct-limits example: the kernel function `f_lambda`, the payoff
//! `g_lambda`, the restricted-action one-shot games, and the oscillation
//! and limit reports.

use crate::error::{Error, Result};

/// Parameters of the construction: the period `r >= 2`, the extra search
/// margin beyond the predicted argmax location, and the quitting payoff
/// `x in (1/2, 1)` of the composed game.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleParams {
    pub r: u64,
    pub window_slack: u64,
    pub x: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            r: 2,
            window_slack: 4,
            x: 0.6,
        }
    }
}

impl CounterexampleParams {
    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(Error::InvalidInput(format!("r = {} must be >= 2", self.r)));
        }
        if self.window_slack < 1 {
            return Err(Error::InvalidInput("window_slack must be >= 1".into()));
        }
        if !(self.x > 0.5 && self.x < 1.0) {
            return Err(Error::InvalidInput(format!(
                "x = {} must lie in (1/2, 1)",
                self.x
            )));
        }
        Ok(())
    }
}

/// The arithmetic progressions the players maximize over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSetKind {
    /// `r * N`
    MultiplesOfR,
    /// `2r * N`
    EvenMultiplesOfR,
    /// `r * (2N + 1)`
    OddMultiplesOfR,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidDiscount(lambda));
    }
    Ok(())
}

/// `f_lambda(n) = (1 - 2^-n)(1 - lambda^2) / (1 + 2^(n+1) lambda (1-lambda)^-n - lambda)`.
///
/// The middle denominator term is handled in the log domain so the value
/// underflows gracefully to 0 for large `n` instead of overflowing.
pub fn f_lambda(n: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let nf = n as f64;
    let numerator = (1.0 - 0.5f64.powf(nf)) * (1.0 - lambda * lambda);
    if numerator == 0.0 {
        return Ok(0.0);
    }
    // ln of 2^(n+1) * lambda * (1-lambda)^(-n)
    let log_term = (nf + 1.0) * std::f64::consts::LN_2 + lambda.ln() - nf * (-lambda).ln_1p();
    let value = if log_term < 700.0 {
        numerator / (1.0 - lambda + log_term.exp())
    } else {
        // Denominator is dominated by the exponential term.
        numerator * (-log_term).exp()
    };
    debug_assert!((0.0..1.0).contains(&value), "f_lambda out of range: {value}");
    Ok(value)
}

/// `g_lambda(a, b) = (1 - f_lambda(b)) / (1 - f_lambda(a) f_lambda(b))`.
pub fn g_lambda(a: u64, b: u64, lambda: f64) -> Result<f64> {
    let fa = f_lambda(a, lambda)?;
    let fb = f_lambda(b, lambda)?;
    Ok((1.0 - fb) / (1.0 - fa * fb))
}

/// Predicted location of the maximizer of `f_lambda`: `-ln(sqrt(2 lambda)) / ln 2`.
pub fn predicted_argmax(lambda: f64) -> f64 {
    -(2.0 * lambda).sqrt().ln() / std::f64::consts::LN_2
}

/// Search window: twice the predicted location plus slack periods.
pub fn search_window(lambda: f64, params: &CounterexampleParams) -> u64 {
    let predicted = predicted_argmax(lambda).max(0.0);
    (2.0 * predicted).ceil() as u64 + params.window_slack * params.r
}

/// Exhaustive maximization of `f_lambda` over an arithmetic progression
/// truncated to the search window; ties break to the smallest action.
pub fn argmax_f(
    lambda: f64,
    kind: ActionSetKind,
    params: &CounterexampleParams,
) -> Result<(u64, f64)> {
    check_lambda(lambda)?;
    params.validate()?;
    let r = params.r;
    let limit = search_window(lambda, params);
    let (start, step) = match kind {
        ActionSetKind::MultiplesOfR => (0, r),
        ActionSetKind::EvenMultiplesOfR => (0, 2 * r),
        ActionSetKind::OddMultiplesOfR => (r, 2 * r),
    };
    let mut best_action = start;
    let mut best_value = f_lambda(start, lambda)?;
    let mut last_action = start;
    let mut action = start + step;
    while action <= limit {
        let value = f_lambda(action, lambda)?;
        if value > best_value {
            best_value = value;
            best_action = action;
        }
        last_action = action;
        action += step;
    }
    // A maximizer on the window edge means the window may have clipped the
    // true optimum (except in the degenerate all-zero case, where the tie
    // break already chose the smallest action).
    if best_action == last_action && best_action != start {
        return Err(Error::WindowBoundary {
            lambda,
            action: best_action,
        });
    }
    Ok((best_action, best_value))
}

/// Value of the one-shot game with actions `rN` vs `2rN`: both players play
/// their dominant maximizer of `f_lambda`.
pub fn value_g(lambda: f64, params: &CounterexampleParams) -> Result<f64> {
    let (a, _) = argmax_f(lambda, ActionSetKind::MultiplesOfR, params)?;
    let (b, _) = argmax_f(lambda, ActionSetKind::EvenMultiplesOfR, params)?;
    g_lambda(a, b, lambda)
}

/// Value of the symmetrized game (both players on `rN`):
/// `1 / (1 + max_{rN} f_lambda)`.
pub fn value_g_sym(lambda: f64, params: &CounterexampleParams) -> Result<f64> {
    let (_, fmax) = argmax_f(lambda, ActionSetKind::MultiplesOfR, params)?;
    Ok(1.0 / (1.0 + fmax))
}

/// `lambda/2 + (1-lambda) * g_lambda(a*, b*)` with Player 2 on `2rN`.
pub fn value_g1(lambda: f64, params: &CounterexampleParams) -> Result<f64> {
    Ok(lambda / 2.0 + (1.0 - lambda) * value_g(lambda, params)?)
}

/// Same as [`value_g1`] but Player 2 maximizes over `r(2N+1)`.
pub fn value_g2(lambda: f64, params: &CounterexampleParams) -> Result<f64> {
    let (a, _) = argmax_f(lambda, ActionSetKind::MultiplesOfR, params)?;
    let (b, _) = argmax_f(lambda, ActionSetKind::OddMultiplesOfR, params)?;
    Ok(lambda / 2.0 + (1.0 - lambda) * g_lambda(a, b, lambda)?)
}

/// `lambda(2-lambda)/2 + (1-lambda)^2 / (1 + max_{rN} f_lambda)`.
pub fn value_g3(lambda: f64, params: &CounterexampleParams) -> Result<f64> {
    let sym = value_g_sym(lambda, params)?;
    Ok(lambda * (2.0 - lambda) / 2.0 + (1.0 - lambda) * (1.0 - lambda) * sym)
}

/// Player 2 controls the top state (stage payoff 1/2) and chooses between
/// continuing into the symmetrized subgame or quitting for `x` forever.
pub fn value_g4(lambda: f64, params: &CounterexampleParams) -> Result<f64> {
    params.validate()?;
    let g3 = value_g3(lambda, params)?;
    Ok(lambda / 2.0 + (1.0 - lambda) * g3.min(params.x))
}

/// `2^(4rm + 2r + 1)`: the horizon subsequence attached to the first
/// restricted game. Documented for report labeling only.
pub fn horizon_subsequence_even(r: u64, m: u64) -> Option<u128> {
    let exp = 4 * r * m + 2 * r + 1;
    (exp < 128).then(|| 1u128 << exp)
}

/// `2^(4rm + 1)`: the horizon subsequence attached to the second
/// restricted game.
pub fn horizon_subsequence_odd(r: u64, m: u64) -> Option<u128> {
    let exp = 4 * r * m + 1;
    (exp < 128).then(|| 1u128 << exp)
}

/// The discount aligning the predicted maximizer with integer `target`:
/// inverting `predicted_argmax` gives `lambda = 2^(-2 target - 1)`.
pub fn aligned_lambda(target: u64) -> f64 {
    2.0f64.powi(-(2 * target as i32) - 1)
}

/// One evaluated point of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub lambda: f64,
    pub value: f64,
}

/// Liminf/limsup estimates of `value_g` along aligned subsequences.
#[derive(Debug, Clone)]
pub struct LimitReport {
    pub grid_points: Vec<SweepPoint>,
    /// Aligned with even multiples of `r` (no advantage for Player 1).
    pub even_aligned: Vec<SweepPoint>,
    /// Aligned with odd multiples of `r` (Player 1 advantage).
    pub odd_aligned: Vec<SweepPoint>,
    pub liminf_estimate: f64,
    pub limsup_estimate: f64,
}

impl LimitReport {
    pub fn gap(&self) -> f64 {
        self.limsup_estimate - self.liminf_estimate
    }
}

/// Evaluates `value_g` on the provided grid plus on the aligned
/// subsequences, and estimates the two cluster values.
pub fn oscillation_scan(params: &CounterexampleParams, lambda_grid: &[f64]) -> Result<LimitReport> {
    params.validate()?;
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    if lambda_grid.windows(2).any(|w| w[0] <= w[1]) && lambda_grid.len() > 1 {
        return Err(Error::InvalidInput("lambda grid must be sorted decreasing".into()));
    }
    let grid_points: Vec<SweepPoint> = lambda_grid
        .iter()
        .map(|&lambda| {
            Ok(SweepPoint {
                lambda,
                value: value_g(lambda, params)?,
            })
        })
        .collect::<Result<_>>()?;
    let r = params.r;
    let lambda_min = *lambda_grid.last().unwrap();
    let mut even_aligned = Vec::new();
    let mut odd_aligned = Vec::new();
    // Even targets 2r, 4r, ...; odd targets r, 3r, 5r, ...
    for j in 1..=16u64 {
        let target = 2 * r * j;
        let lambda = aligned_lambda(target);
        if lambda >= lambda_min.min(1e-6) && lambda > 0.0 {
            even_aligned.push(SweepPoint {
                lambda,
                value: value_g(lambda, params)?,
            });
        }
        let target = r * (2 * j - 1);
        let lambda = aligned_lambda(target);
        if lambda >= lambda_min.min(1e-6) && lambda > 0.0 {
            odd_aligned.push(SweepPoint {
                lambda,
                value: value_g(lambda, params)?,
            });
        }
    }
    if even_aligned.is_empty() || odd_aligned.is_empty() {
        return Err(Error::InvalidInput(
            "lambda grid too shallow to reach an aligned subsequence".into(),
        ));
    }
    let tail = |points: &[SweepPoint]| {
        let start = points.len().saturating_sub(4);
        points[start..].to_vec()
    };
    let liminf_estimate = tail(&even_aligned)
        .iter()
        .map(|p| p.value)
        .fold(f64::INFINITY, f64::min);
    let limsup_estimate = tail(&odd_aligned)
        .iter()
        .map(|p| p.value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitReport {
        grid_points,
        even_aligned,
        odd_aligned,
        liminf_estimate: liminf_estimate.min(limsup_estimate),
        limsup_estimate: limsup_estimate.max(liminf_estimate),
    })
}

/// Juxtaposition of the computed discounted limit of the composed game
/// against the documented (not computed) long-horizon limit `x`.
#[derive(Debug, Clone)]
pub struct DistinctLimitsSummary {
    pub sweep: Vec<SweepPoint>,
    /// `value_g4` at the smallest grid discount.
    pub discounted_limit_estimate: f64,
    /// The long-horizon limit; asserted by the construction, not computed here.
    pub n_stage_limit_documented: f64,
}

pub fn distinct_limits_report(
    params: &CounterexampleParams,
    lambda_grid: &[f64],
) -> Result<DistinctLimitsSummary> {
    params.validate()?;
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    let sweep: Vec<SweepPoint> = lambda_grid
        .iter()
        .map(|&lambda| {
            Ok(SweepPoint {
                lambda,
                value: value_g4(lambda, params)?,
            })
        })
        .collect::<Result<_>>()?;
    let discounted_limit_estimate = sweep.last().unwrap().value;
    Ok(DistinctLimitsSummary {
        sweep,
        discounted_limit_estimate,
        n_stage_limit_documented: params.x,
    })
}
