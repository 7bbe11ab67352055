//! Exponential envelopes for `(d, L)` clouds.
//!
//! Growth bounds and dichotomy estimates both ask for a line
//! `L <= c + slope * d` above a cloud of points with `d >= 0`. On a finite
//! cloud any slope works once `c` is large enough, so the intercept is
//! pinned first by the exact values on the diagonal `d = 0`, and the slope
//! is then the steepest chord from that anchor: the first edge of the upper
//! convex envelope of the cloud together with `(0, c)`.

use serde::Serialize;

use crate::probe::{classify_increments, Trend, TrendRule};

/// One sample of a growth cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CloudPoint {
    /// Later time of the pair.
    pub t: f64,
    /// Earlier time of the pair.
    pub s: f64,
    /// Rescaled elapsed time `mu(t) - mu(s)`.
    pub d: f64,
    /// Log of the measured norm.
    pub l: f64,
}

/// Smallest `slope` with `l <= intercept + slope * d` on every point with
/// `d > min_d`. Points with `l = -inf` never bind. Returns `-inf` when no
/// point constrains the slope.
pub fn anchored_slope(points: &[CloudPoint], intercept: f64, min_d: f64) -> f64 {
    points
        .iter()
        .filter(|p| p.d > min_d && p.l > f64::NEG_INFINITY)
        .map(|p| if p.l.is_nan() { f64::INFINITY } else { (p.l - intercept) / p.d })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest value of `l - (intercept + slope * d)`; non-positive when the
/// line bounds the cloud.
pub fn max_excess(points: &[CloudPoint], intercept: f64, slope: f64) -> f64 {
    points.iter().map(|p| p.l - intercept - slope * p.d).fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of re-fitting on shrinking time windows.
#[derive(Debug, Clone, Serialize)]
pub struct WindowTrend {
    /// `(radius, slope)` from the smallest window to the full one.
    pub slopes: Vec<(f64, f64)>,
    pub trend: Trend,
}

/// Re-fits the anchored slope on nested windows `|x - center| <= r` for
/// both times of each pair, halving `r` from the full radius. A slope that
/// keeps growing as the window widens has no finite bound.
pub fn window_trend(points: &[CloudPoint], intercept: f64, min_d: f64, levels: usize) -> WindowTrend {
    let lo = points.iter().map(|p| p.s.min(p.t)).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.s.max(p.t)).fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let full = 0.5 * (hi - lo);
    let mut slopes = Vec::new();
    for j in (0..levels).rev() {
        let r = full / 2f64.powi(j as i32);
        let inside: Vec<CloudPoint> = points
            .iter()
            .copied()
            .filter(|p| (p.s - center).abs() <= r && (p.t - center).abs() <= r)
            .collect();
        if inside.iter().filter(|p| p.d > min_d).count() < 3 {
            continue;
        }
        let a = anchored_slope(&inside, intercept, min_d);
        if a.is_finite() {
            slopes.push((r, a));
        }
    }
    let values: Vec<f64> = slopes.iter().map(|x| x.1).collect();
    let trend = if values.len() < 2 {
        Trend::Undecided
    } else {
        let rule = TrendRule { flat_tol: 1e-9, ..TrendRule::default() };
        // Slopes are non-decreasing in the radius; use the running maximum
        // so rounding noise cannot read as a decrease.
        let mut run = Vec::with_capacity(values.len());
        let mut m = f64::NEG_INFINITY;
        for v in values {
            m = m.max(v);
            run.push(m);
        }
        if run.len() < 4 {
            let spread = run[run.len() - 1] - run[0];
            if spread <= 1e-9 * run[0].abs().max(1.0) {
                Trend::Converging { limit: run[run.len() - 1], uncertainty: spread }
            } else {
                Trend::Undecided
            }
        } else {
            classify_increments(&run, &rule)
        }
    };
    WindowTrend { slopes, trend }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(f: impl Fn(f64, f64) -> (f64, f64)) -> Vec<CloudPoint> {
        let mut out = Vec::new();
        for i in 0..=40 {
            for j in 0..=i {
                let t = -5.0 + 0.25 * i as f64;
                let s = -5.0 + 0.25 * j as f64;
                let (d, l) = f(t, s);
                out.push(CloudPoint { t, s, d, l });
            }
        }
        out
    }

    #[test]
    fn exact_line() {
        let c = cloud(|t, s| (t - s, 0.3 + 2.0 * (t - s)));
        assert!((anchored_slope(&c, 0.3, 0.0) - 2.0).abs() < 1e-12);
        assert!(max_excess(&c, 0.3, 2.0) < 1e-12);
        assert!(matches!(window_trend(&c, 0.3, 0.0, 6).trend, Trend::Converging { .. }));
    }

    #[test]
    fn cubic_cloud_diverges() {
        let c = cloud(|t, s| (t - s, t.powi(3) - s.powi(3)));
        let w = window_trend(&c, 0.0, 0.0, 6);
        assert_eq!(w.trend, Trend::Diverging, "{:?}", w.slopes);
    }

    #[test]
    fn minus_infinity_never_binds() {
        let p = [CloudPoint { t: 1.0, s: 0.0, d: 1.0, l: f64::NEG_INFINITY }];
        assert_eq!(anchored_slope(&p, 0.0, 0.0), f64::NEG_INFINITY);
    }
}
