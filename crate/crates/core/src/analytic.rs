//! Closed-form efficiency engine: expected click scores, sample-mean
//! variances, and normal-approximation error probabilities for A/B testing
//! and interleaving.
//!
//! The model decomposes a click into assignment, examination, and relevance.
//! Per-impression click indicators are Bernoulli, so the mean score over `n`
//! impressions has expectation `p` and variance `p(1-p)/n`, and the error
//! probability of an evaluation is the mass of a normal distribution at or
//! below zero: `phi(-delta / sqrt(var_sum))`, with `delta` the difference of
//! the two expected scores and `var_sum` the sum of the two sample-mean
//! variances.
//!
//! Examination is modeled by `f(x) = 1 / (alpha * x + 1)` over the expected
//! relevance `x`: every user examines an item below only irrelevant ones
//! (`f(0) = 1`), and the propensity to keep reading decays with relevance at
//! a rate set by `alpha`. Under A/B testing each ranking is examined at its
//! own relevance level; an interleaved ranking mixes both inputs, so both
//! teams are examined at the level of the *better* input.

use alloc::vec::Vec;
use core::fmt;

/// The two evaluation methods under comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvaluationMethod {
    AbTesting,
    Interleaving,
}

impl EvaluationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EvaluationMethod::AbTesting => "ab_testing",
            EvaluationMethod::Interleaving => "interleaving",
        }
    }
}

impl fmt::Display for EvaluationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Domain violations of the analytic operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticError {
    RelevanceOutOfRange(f64),
    AlphaOutOfRange(f64),
    ProbabilityOutOfRange(f64),
    ZeroImpressions,
    InvalidGridStep(f64),
    NegativeVariance(f64),
    /// Zero variance together with zero mean difference: no distribution
    /// to integrate and no sign to decide by.
    UndefinedErrorProbability,
}

impl fmt::Display for AnalyticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticError::RelevanceOutOfRange(x) => {
                write!(f, "expected relevance {x} outside [0, 1]")
            }
            AnalyticError::AlphaOutOfRange(a) => {
                write!(f, "leave propensity alpha {a} must be finite and >= 0")
            }
            AnalyticError::ProbabilityOutOfRange(p) => {
                write!(f, "probability {p} outside [0, 1]")
            }
            AnalyticError::ZeroImpressions => write!(f, "impression count must be >= 1"),
            AnalyticError::InvalidGridStep(s) => {
                write!(f, "grid step {s} does not divide [0, 1] evenly")
            }
            AnalyticError::NegativeVariance(v) => write!(f, "variance sum {v} is negative"),
            AnalyticError::UndefinedErrorProbability => {
                write!(f, "error probability undefined for zero variance and zero difference")
            }
        }
    }
}

impl core::error::Error for AnalyticError {}

fn check_relevance(x: f64) -> Result<f64, AnalyticError> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(AnalyticError::RelevanceOutOfRange(x));
    }
    Ok(x)
}

fn check_alpha(alpha: f64) -> Result<f64, AnalyticError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(AnalyticError::AlphaOutOfRange(alpha));
    }
    Ok(alpha)
}

/// One point of the closed-form model: expected relevances of the two
/// rankings, leave propensity, and impression count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticScenario {
    pub er_a: f64,
    pub er_b: f64,
    pub alpha: f64,
    pub n: u64,
}

impl AnalyticScenario {
    pub fn new(er_a: f64, er_b: f64, alpha: f64, n: u64) -> Result<Self, AnalyticError> {
        check_relevance(er_a)?;
        check_relevance(er_b)?;
        check_alpha(alpha)?;
        if n == 0 {
            return Err(AnalyticError::ZeroImpressions);
        }
        Ok(AnalyticScenario { er_a, er_b, alpha, n })
    }
}

/// Expected per-impression scores of both rankings under one method, and
/// the summed variance of their sample means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodStats {
    pub p_a: f64,
    pub p_b: f64,
    pub var_sum: f64,
}

impl MethodStats {
    /// Difference of the expected sample means.
    pub fn delta(&self) -> f64 {
        self.p_a - self.p_b
    }
}

/// Closed-form error probabilities of both methods at one scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorPoint {
    pub scenario: AnalyticScenario,
    pub ab: MethodStats,
    pub interleaved: MethodStats,
    pub p_err_ab: f64,
    pub p_err_interleaved: f64,
    /// `p_err_ab - p_err_interleaved`.
    pub diff: f64,
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[inline]
fn exam(x: f64, alpha: f64) -> f64 {
    1.0 / (alpha * x + 1.0)
}

/// Examination probability `f(x) = 1 / (alpha * x + 1)` at relevance level
/// `x`: equal to 1 at `x = 0` and strictly decreasing in `x` for
/// `alpha > 0`.
pub fn examination_fn(x: f64, alpha: f64) -> Result<f64, AnalyticError> {
    check_relevance(x)?;
    check_alpha(alpha)?;
    Ok(exam(x, alpha))
}

/// Expected per-impression score of a ranking under A/B testing: the 1/2
/// show probability times the examined-and-relevant mass at the ranking's
/// own relevance level.
pub fn expected_click_ab(er_self: f64, alpha: f64) -> Result<f64, AnalyticError> {
    check_relevance(er_self)?;
    check_alpha(alpha)?;
    Ok(0.5 * exam(er_self, alpha) * er_self)
}

/// Expected per-impression score of a ranking under interleaving: the 1/2
/// team probability times the examined-and-relevant mass, where examination
/// is driven by the better input's relevance level.
pub fn expected_click_interleaved(
    er_self: f64,
    er_other: f64,
    alpha: f64,
) -> Result<f64, AnalyticError> {
    check_relevance(er_self)?;
    check_relevance(er_other)?;
    check_alpha(alpha)?;
    Ok(0.5 * exam(er_self.max(er_other), alpha) * er_self)
}

/// Variance of the mean of `n` Bernoulli(`p`) impressions: `p(1-p)/n`.
pub fn sample_mean_variance(p: f64, n: u64) -> Result<f64, AnalyticError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(AnalyticError::ProbabilityOutOfRange(p));
    }
    if n == 0 {
        return Err(AnalyticError::ZeroImpressions);
    }
    Ok(p * (1.0 - p) / n as f64)
}

/// Probability that the sample-mean difference comes out at or below zero,
/// under the normal approximation: `phi(-delta / sqrt(var_sum))`.
///
/// With zero variance the outcome is deterministic: 0 when `delta > 0`,
/// 1 when `delta < 0`, and undefined when `delta` is also zero.
pub fn error_probability(delta: f64, var_sum: f64) -> Result<f64, AnalyticError> {
    if var_sum.is_nan() || var_sum < 0.0 {
        return Err(AnalyticError::NegativeVariance(var_sum));
    }
    if var_sum == 0.0 {
        return if delta > 0.0 {
            Ok(0.0)
        } else if delta < 0.0 {
            Ok(1.0)
        } else {
            Err(AnalyticError::UndefinedErrorProbability)
        };
    }
    Ok(normal_cdf(-delta / libm::sqrt(var_sum)))
}

/// Method statistics under a caller-supplied examination function mapping
/// expected relevance in `[0, 1]` to a probability.
pub fn method_stats_with(
    examination: impl Fn(f64) -> f64,
    er_a: f64,
    er_b: f64,
    n: u64,
    method: EvaluationMethod,
) -> MethodStats {
    let (p_a, p_b) = match method {
        EvaluationMethod::AbTesting => {
            (0.5 * examination(er_a) * er_a, 0.5 * examination(er_b) * er_b)
        }
        EvaluationMethod::Interleaving => {
            let shared = examination(er_a.max(er_b));
            (0.5 * shared * er_a, 0.5 * shared * er_b)
        }
    };
    let var_sum = (p_a * (1.0 - p_a) + p_b * (1.0 - p_b)) / n as f64;
    MethodStats { p_a, p_b, var_sum }
}

/// Method statistics of a scenario under the shipped examination function.
pub fn method_stats(scenario: &AnalyticScenario, method: EvaluationMethod) -> MethodStats {
    method_stats_with(|x| exam(x, scenario.alpha), scenario.er_a, scenario.er_b, scenario.n, method)
}

/// Evaluates both methods' error probabilities at one scenario.
///
/// The fully degenerate point (both expected scores zero, hence zero
/// variance and zero difference) is mapped to 1/2 by symmetry.
pub fn evaluate_scenario(scenario: &AnalyticScenario) -> ErrorPoint {
    let ab = method_stats(scenario, EvaluationMethod::AbTesting);
    let interleaved = method_stats(scenario, EvaluationMethod::Interleaving);
    let p_err_ab = error_probability(ab.delta(), ab.var_sum).unwrap_or(0.5);
    let p_err_interleaved =
        error_probability(interleaved.delta(), interleaved.var_sum).unwrap_or(0.5);
    ErrorPoint {
        scenario: *scenario,
        ab,
        interleaved,
        p_err_ab,
        p_err_interleaved,
        diff: p_err_ab - p_err_interleaved,
    }
}

/// Evaluates the full `(er_a, er_b)` grid for every `alpha`, in row-major
/// order (`alpha` outermost, then `er_a`, then `er_b`).
///
/// `grid_step` must divide `[0, 1]` evenly; grid values are computed as
/// `i / k` so the diagonal pairs are bit-identical.
pub fn sweep_grid(
    alphas: &[f64],
    grid_step: f64,
    n: u64,
) -> Result<Vec<ErrorPoint>, AnalyticError> {
    for &alpha in alphas {
        check_alpha(alpha)?;
    }
    if n == 0 {
        return Err(AnalyticError::ZeroImpressions);
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(AnalyticError::InvalidGridStep(grid_step));
    }
    let k = libm::round(1.0 / grid_step);
    if libm::fabs(k * grid_step - 1.0) > 1e-9 {
        return Err(AnalyticError::InvalidGridStep(grid_step));
    }
    let k = k as u64;
    let level = |i: u64| i as f64 / k as f64;

    let mut points = Vec::with_capacity(alphas.len() * ((k + 1) * (k + 1)) as usize);
    for &alpha in alphas {
        for ia in 0..=k {
            for ib in 0..=k {
                let scenario = AnalyticScenario { er_a: level(ia), er_b: level(ib), alpha, n };
                points.push(evaluate_scenario(&scenario));
            }
        }
    }
    Ok(points)
}

/// Side-by-side deltas and variance sums of the two methods, as computed by
/// the theorem checkers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyComparison {
    pub delta_ab: f64,
    pub delta_interleaved: f64,
    pub var_sum_ab: f64,
    pub var_sum_interleaved: f64,
}

/// Outcome of the relevance-aware check; at `alpha = 0` examination is
/// constant and the strict inequalities collapse to equalities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelevanceAwareOutcome {
    pub comparison: EfficiencyComparison,
    pub at_constant_boundary: bool,
}

/// Failures of the executable theorem checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TheoremError {
    Domain(AnalyticError),
    /// Constant examination must make both methods identical.
    EqualityViolated(EfficiencyComparison),
    /// Relevance-aware examination must strictly favor interleaving.
    StrictInequalityViolated(EfficiencyComparison),
    PreconditionViolated(&'static str),
}

impl fmt::Display for TheoremError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoremError::Domain(e) => write!(f, "domain error: {e}"),
            TheoremError::EqualityViolated(c) => write!(
                f,
                "constant-examination equality violated: delta {} vs {}, var sum {} vs {}",
                c.delta_ab, c.delta_interleaved, c.var_sum_ab, c.var_sum_interleaved
            ),
            TheoremError::StrictInequalityViolated(c) => write!(
                f,
                "relevance-aware strict inequality violated: delta {} vs {}, var sum {} vs {}",
                c.delta_ab, c.delta_interleaved, c.var_sum_ab, c.var_sum_interleaved
            ),
            TheoremError::PreconditionViolated(what) => write!(f, "precondition violated: {what}"),
        }
    }
}

impl core::error::Error for TheoremError {}

impl From<AnalyticError> for TheoremError {
    fn from(e: AnalyticError) -> Self {
        TheoremError::Domain(e)
    }
}

const EQUALITY_TOLERANCE: f64 = 1e-12;

fn comparison_with(
    examination: impl Fn(f64) -> f64 + Copy,
    er_a: f64,
    er_b: f64,
    n: u64,
) -> EfficiencyComparison {
    let ab = method_stats_with(examination, er_a, er_b, n, EvaluationMethod::AbTesting);
    let il = method_stats_with(examination, er_a, er_b, n, EvaluationMethod::Interleaving);
    EfficiencyComparison {
        delta_ab: ab.delta(),
        delta_interleaved: il.delta(),
        var_sum_ab: ab.var_sum,
        var_sum_interleaved: il.var_sum,
    }
}

/// Checks that a constant examination probability `c` makes interleaving
/// and A/B testing equally efficient: equal mean differences and equal
/// variance sums, within 1e-12.
pub fn check_constant_case(
    c: f64,
    er_a: f64,
    er_b: f64,
    n: u64,
) -> Result<EfficiencyComparison, TheoremError> {
    if !(c > 0.0 && c <= 1.0) || c.is_nan() {
        return Err(AnalyticError::ProbabilityOutOfRange(c).into());
    }
    check_relevance(er_a)?;
    check_relevance(er_b)?;
    if n == 0 {
        return Err(AnalyticError::ZeroImpressions.into());
    }
    let cmp = comparison_with(|_| c, er_a, er_b, n);
    let deltas_equal = libm::fabs(cmp.delta_ab - cmp.delta_interleaved) <= EQUALITY_TOLERANCE;
    let vars_equal = libm::fabs(cmp.var_sum_ab - cmp.var_sum_interleaved) <= EQUALITY_TOLERANCE;
    if deltas_equal && vars_equal {
        Ok(cmp)
    } else {
        Err(TheoremError::EqualityViolated(cmp))
    }
}

/// Checks that relevance-aware examination strictly favors interleaving
/// when ranking A is strictly better: larger mean difference and smaller
/// variance sum. At `alpha = 0` the check reports the constant boundary
/// (equalities) instead of failing.
pub fn check_relevance_aware_case(
    scenario: &AnalyticScenario,
) -> Result<RelevanceAwareOutcome, TheoremError> {
    AnalyticScenario::new(scenario.er_a, scenario.er_b, scenario.alpha, scenario.n)?;
    if scenario.er_a <= scenario.er_b {
        return Err(TheoremError::PreconditionViolated("requires er_a > er_b"));
    }
    let cmp = comparison_with(
        |x| exam(x, scenario.alpha),
        scenario.er_a,
        scenario.er_b,
        scenario.n,
    );
    if scenario.alpha == 0.0 {
        let deltas_equal = libm::fabs(cmp.delta_ab - cmp.delta_interleaved) <= EQUALITY_TOLERANCE;
        let vars_equal = libm::fabs(cmp.var_sum_ab - cmp.var_sum_interleaved) <= EQUALITY_TOLERANCE;
        return if deltas_equal && vars_equal {
            Ok(RelevanceAwareOutcome { comparison: cmp, at_constant_boundary: true })
        } else {
            Err(TheoremError::EqualityViolated(cmp))
        };
    }
    if cmp.delta_interleaved > cmp.delta_ab && cmp.var_sum_ab > cmp.var_sum_interleaved {
        Ok(RelevanceAwareOutcome { comparison: cmp, at_constant_boundary: false })
    } else {
        Err(TheoremError::StrictInequalityViolated(cmp))
    }
}
