//! Limit detection from geometric probe sequences.
//!
//! Every "does this go to infinity?" question in the crate (upper limit of a
//! growth rate, omega limits, divergence of a rate-density integral) is
//! answered by sampling a monotone quantity at geometrically spaced
//! arguments and looking at how the increments behave.

use serde::Serialize;

/// Verdict on a non-decreasing probe sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Trend {
    /// Increments do not shrink: the sequence is unbounded.
    Diverging,
    /// Increments vanish or shrink geometrically.
    Converging { limit: f64, uncertainty: f64 },
    Undecided,
}

/// Thresholds for [`classify_increments`].
#[derive(Debug, Clone, Copy)]
pub struct TrendRule {
    /// An increment at or below this counts as zero.
    pub flat_tol: f64,
    /// Tail ratios at or below this indicate geometric convergence.
    pub converge_ratio: f64,
    /// Tail ratios at or above this indicate divergence.
    pub diverge_ratio: f64,
    /// Number of trailing ratios inspected.
    pub tail: usize,
}

impl Default for TrendRule {
    fn default() -> Self {
        TrendRule { flat_tol: 1e-12, converge_ratio: 0.8, diverge_ratio: 0.99, tail: 6 }
    }
}

/// Classifies a non-decreasing sequence sampled at geometrically growing
/// arguments.
pub fn classify_increments(values: &[f64], rule: &TrendRule) -> Trend {
    if values.iter().any(|v| v.is_infinite() && *v > 0.0) {
        return Trend::Diverging;
    }
    if values.len() < 4 || values.iter().any(|v| !v.is_finite()) {
        return Trend::Undecided;
    }
    let inc: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let last = *values.last().unwrap();
    let d_last = *inc.last().unwrap();
    if d_last <= rule.flat_tol * last.abs().max(1.0) {
        return Trend::Converging { limit: last, uncertainty: d_last };
    }
    let k = rule.tail.min(inc.len() - 1);
    let ratios: Vec<f64> = inc[inc.len() - k - 1..]
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY })
        .collect();
    if ratios.iter().all(|&r| r >= rule.diverge_ratio) {
        return Trend::Diverging;
    }
    if ratios.iter().all(|&r| r <= rule.converge_ratio) {
        let q = ratios.iter().cloned().fold(0.0, f64::max);
        let rest = d_last * q / (1.0 - q);
        return Trend::Converging { limit: last + rest, uncertainty: rest };
    }
    Trend::Undecided
}

/// Geometric probe points `start * 2^k` up to `horizon`.
pub fn geometric_points(start: f64, horizon: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = start;
    while x <= horizon {
        out.push(x);
        x *= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64) -> Vec<f64> {
        geometric_points(1.0, 1e6).into_iter().map(f).collect()
    }

    #[test]
    fn identity_diverges() {
        assert_eq!(classify_increments(&sample(|s| s), &TrendRule::default()), Trend::Diverging);
    }

    #[test]
    fn logarithm_diverges() {
        assert_eq!(classify_increments(&sample(|s| s.ln_1p()), &TrendRule::default()), Trend::Diverging);
    }

    #[test]
    fn negative_exponential_converges_to_zero() {
        match classify_increments(&sample(|s| -(-s).exp()), &TrendRule::default()) {
            Trend::Converging { limit, .. } => assert!(limit.abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reciprocal_converges_geometrically() {
        match classify_increments(&sample(|s| 1.0 - 1.0 / (1.0 + s)), &TrendRule::default()) {
            Trend::Converging { limit, uncertainty } => {
                assert!((limit - 1.0).abs() <= uncertainty + 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_sequences_are_undecided() {
        assert_eq!(classify_increments(&[0.0, 1.0, 2.0], &TrendRule::default()), Trend::Undecided);
    }
}
