//! Real semiflows on the line.
//!
//! A real semiflow is a continuous `phi: [0, inf) x R -> R` with
//! `phi_0 = id`, `phi_t o phi_tau = phi_{t + tau}` and `phi_t(s) <= s`.
//! Non-degenerate semiflows are exactly those generated by a growth rate,
//! `phi_t(s) = mu^{-1}(mu(s) - t)`, and the generator can be read back from
//! hitting times: `mu(s) = t(s, 0)` for `s >= 0` and `-t(0, s)` otherwise.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth_rate::{Ell, GrowthRate};
use crate::probe::{classify_increments, geometric_points, Trend, TrendRule};
use crate::roots::{brent, expand_bracket, RootOptions};

pub type FlowFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SemiflowKind {
    Generated(GrowthRate),
    ClosedForm { name: String, map: FlowFn },
}

/// Extended real number used for limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum Limit {
    MinusInfinity,
    Finite(f64),
    PlusInfinity,
}

impl Limit {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Limit::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::MinusInfinity => write!(f, "-inf"),
            Limit::Finite(v) => write!(f, "{v}"),
            Limit::PlusInfinity => write!(f, "+inf"),
        }
    }
}

#[derive(Clone)]
pub struct RealSemiflow {
    kind: SemiflowKind,
    window: (f64, f64),
    margin: f64,
}

impl fmt::Debug for RealSemiflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealSemiflow").field("name", &self.name()).field("window", &self.window).finish()
    }
}

/// Settings for omega-limit probes.
#[derive(Debug, Clone, Copy)]
pub struct OmegaConfig {
    /// Largest time probed.
    pub horizon: f64,
    /// Values below this are taken as `-inf`.
    pub floor: f64,
    /// A doubling of `t` that moves `phi_t(s)` by less than this means the
    /// orbit has settled.
    pub tol: f64,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig { horizon: 1e6, floor: -1e6, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaReport {
    pub s: f64,
    pub value: Limit,
    pub horizon: f64,
    /// Size of the last doubling increment (0 when the floor was crossed).
    pub last_increment: f64,
}

/// Maximal residuals of the semiflow axioms over a sample.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub identity: f64,
    pub cocycle: f64,
    /// Largest excess `phi_t(s) - s` (0 when the inequality holds).
    pub inequality: f64,
    /// Largest increase of `t -> phi_t(s)`.
    pub monotone_t: f64,
    /// Largest decrease of `s -> phi_t(s)`.
    pub monotone_s: f64,
    /// Samples with `t > 0` where `phi_t(s) == s`.
    pub stationary: usize,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.identity.max(self.cocycle).max(self.inequality).max(self.monotone_t).max(self.monotone_s)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Classification {
    NonDegenerate,
    /// Some sampled orbit has a finite limit. `fixed_points` are the sampled
    /// `s` with `phi_t(s) = s` for every probed `t`.
    Degenerate { fixed_points: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub verdict: Classification,
    pub omegas: Vec<OmegaReport>,
}

#[derive(Debug, Clone, Copy)]
pub struct RecoverConfig {
    pub nodes: usize,
    /// Relative step of the central difference giving node slopes.
    pub slope_step: f64,
    /// Classify the semiflow on the nodes before recovering.
    pub check: bool,
    pub omega: OmegaConfig,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig { nodes: 401, slope_step: 1e-6, check: true, omega: OmegaConfig::default() }
    }
}

const HITTING_EXPANSIONS: usize = 61;

impl RealSemiflow {
    /// `phi_t(s) = mu^{-1}(mu(s) - t)`.
    pub fn generated(mu: GrowthRate) -> Self {
        RealSemiflow { kind: SemiflowKind::Generated(mu), window: (f64::NEG_INFINITY, f64::INFINITY), margin: 0.0 }
    }

    pub fn closed_form(name: impl Into<String>, map: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        RealSemiflow {
            kind: SemiflowKind::ClosedForm { name: name.into(), map: Arc::new(map) },
            window: (f64::NEG_INFINITY, f64::INFINITY),
            margin: 0.0,
        }
    }

    /// Right translation `phi_t(s) = s - t`.
    pub fn translation() -> Self {
        Self::generated(GrowthRate::identity())
    }

    /// Restricts trusted evaluation to `[lo - margin, hi + margin]`.
    pub fn with_window(mut self, lo: f64, hi: f64, margin: f64) -> Self {
        self.window = (lo, hi);
        self.margin = margin;
        self
    }

    pub fn kind(&self) -> &SemiflowKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            SemiflowKind::Generated(mu) => format!("generated({})", mu.name()),
            SemiflowKind::ClosedForm { name, .. } => name.clone(),
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn growth_rate(&self) -> Option<&GrowthRate> {
        match &self.kind {
            SemiflowKind::Generated(mu) => Some(mu),
            SemiflowKind::ClosedForm { .. } => None,
        }
    }

    /// `phi_t(s)`, with the domain-window check.
    pub fn apply(&self, t: f64, s: f64) -> Result<f64> {
        let (lo, hi) = self.window;
        if s < lo - self.margin || s > hi + self.margin {
            return Err(Error::DomainExceeded { s, lo, hi });
        }
        self.eval(t, s)
    }

    /// `phi_t(s)` without the window check; used along orbits, which leave
    /// any window.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(s);
        }
        match &self.kind {
            SemiflowKind::Generated(mu) => mu.invert(mu.eval(s) - t),
            SemiflowKind::ClosedForm { map, .. } => Ok(map(t, s)),
        }
    }

    fn probe_times(horizon: f64) -> Vec<f64> {
        geometric_points(1.0, horizon)
    }

    /// `omega(s) = lim_{t -> inf} phi_t(s)`, probed at `t = 1, 2, 4, ...`.
    pub fn omega(&self, s: f64, cfg: &OmegaConfig) -> Result<OmegaReport> {
        if !(cfg.horizon > 0.0) {
            return Err(Error::InvalidInput(format!("omega horizon must be positive, got {}", cfg.horizon)));
        }
        let times = Self::probe_times(cfg.horizon.max(1.0));
        let mut neg = Vec::with_capacity(times.len());
        for &t in &times {
            let v = self.eval(t, s)?;
            if v.is_nan() {
                return Err(Error::Inconclusive(format!("phi_{t}({s}) is NaN")));
            }
            if v < cfg.floor {
                return Ok(OmegaReport { s, value: Limit::MinusInfinity, horizon: t, last_increment: 0.0 });
            }
            neg.push(-v);
        }
        let rule = TrendRule { flat_tol: cfg.tol, ..TrendRule::default() };
        let last_increment = match neg.len() {
            0 | 1 => 0.0,
            n => (neg[n - 1] - neg[n - 2]).abs(),
        };
        let value = match classify_increments(&neg, &rule) {
            Trend::Diverging => Limit::MinusInfinity,
            Trend::Converging { limit, .. } => Limit::Finite(-limit),
            Trend::Undecided => {
                return Err(Error::Inconclusive(format!(
                    "orbit of {s} neither settles nor diverges up to t = {}",
                    cfg.horizon
                )))
            }
        };
        Ok(OmegaReport { s, value, horizon: *times.last().unwrap(), last_increment })
    }

    /// `lim_{s -> inf} omega(s)`, probed at `s = 1, 2, 4, ...` up to
    /// `s_horizon`. `PlusInfinity` is the degenerate-case hypothesis of the
    /// semigroup construction.
    pub fn omega_upper_limit(&self, s_horizon: f64, cfg: &OmegaConfig) -> Result<Limit> {
        let pts = geometric_points(1.0, s_horizon);
        let mut vals = Vec::with_capacity(pts.len());
        for &s in &pts {
            match self.omega(s, cfg)?.value {
                Limit::Finite(v) => vals.push(v),
                // Orbits from large s escape: omega is -inf there.
                _ => return Ok(Limit::MinusInfinity),
            }
        }
        match classify_increments(&vals, &TrendRule { flat_tol: cfg.tol, ..TrendRule::default() }) {
            Trend::Diverging => Ok(Limit::PlusInfinity),
            Trend::Converging { limit, .. } => Ok(Limit::Finite(limit)),
            Trend::Undecided => Err(Error::Inconclusive(format!("omega(s) undecided as s -> inf up to {s_horizon}"))),
        }
    }

    /// `lim_{s -> inf} phi_t(s)` at a fixed `t`.
    pub fn orbit_upper_limit(&self, t: f64, s_horizon: f64) -> Result<Limit> {
        let pts = geometric_points(1.0, s_horizon);
        let vals: Vec<f64> = pts.iter().map(|&s| self.eval(t, s)).collect::<Result<_>>()?;
        match classify_increments(&vals, &TrendRule::default()) {
            Trend::Diverging => Ok(Limit::PlusInfinity),
            Trend::Converging { limit, .. } => Ok(Limit::Finite(limit)),
            Trend::Undecided => Err(Error::Inconclusive(format!("phi_{t}(s) undecided as s -> inf"))),
        }
    }

    /// Residuals of the axioms on `(t, tau, s)` triples with `t, tau >= 0`.
    /// Monotonicity in `t` compares `phi_t(s)` with `phi_{t + tau}(s)`; in
    /// `s`, `phi_t(s)` with `phi_t(s + tau)`.
    pub fn check_axioms(&self, triples: &[(f64, f64, f64)]) -> Result<AxiomReport> {
        let rows: Vec<[f64; 6]> = triples
            .par_iter()
            .map(|&(t, tau, s)| -> Result<[f64; 6]> {
                let id = (self.eval(0.0, s)? - s).abs();
                let pt = self.eval(t, s)?;
                let ptt = self.eval(t + tau, s)?;
                let comp = self.eval(t, self.eval(tau, s)?)?;
                let cocycle = (comp - ptt).abs();
                let ineq = (pt - s).max(0.0);
                let mono_t = (ptt - pt).max(0.0);
                let mono_s = (pt - self.eval(t, s + tau)?).max(0.0);
                let stationary = if t > 0.0 && pt == s { 1.0 } else { 0.0 };
                Ok([id, nan_max(cocycle), ineq, mono_t, mono_s, stationary])
            })
            .collect::<Result<_>>()?;
        let mut r = AxiomReport {
            samples: rows.len(),
            identity: 0.0,
            cocycle: 0.0,
            inequality: 0.0,
            monotone_t: 0.0,
            monotone_s: 0.0,
            stationary: 0,
        };
        for row in rows {
            r.identity = r.identity.max(row[0]);
            r.cocycle = r.cocycle.max(row[1]);
            r.inequality = r.inequality.max(row[2]);
            r.monotone_t = r.monotone_t.max(row[3]);
            r.monotone_s = r.monotone_s.max(row[4]);
            r.stationary += row[5] as usize;
        }
        Ok(r)
    }

    /// Sample-based degeneracy test: the semiflow is degenerate when some
    /// grid point has a finite omega limit.
    pub fn classify(&self, grid: &[f64], cfg: &OmegaConfig) -> Result<ClassifyReport> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let omegas: Vec<OmegaReport> = grid.par_iter().map(|&s| self.omega(s, cfg)).collect::<Result<_>>()?;
        if omegas.iter().all(|o| o.value == Limit::MinusInfinity) {
            return Ok(ClassifyReport { verdict: Classification::NonDegenerate, omegas });
        }
        let mut times = vec![1e-3, 1e-2, 0.1];
        times.extend(Self::probe_times(cfg.horizon.max(1.0)));
        let mut fixed_points = Vec::new();
        for &s in grid {
            let mut fixed = true;
            for &t in &times {
                if (self.eval(t, s)? - s).abs() > cfg.tol {
                    fixed = false;
                    break;
                }
            }
            if fixed {
                fixed_points.push(s);
            }
        }
        Ok(ClassifyReport { verdict: Classification::Degenerate { fixed_points }, omegas })
    }

    /// Hitting time `t(s, target)`: the `t` with `phi_t(s) = target`, for
    /// `target <= s`.
    pub fn hitting_time(&self, s: f64, target: f64) -> Result<f64> {
        if target > s {
            return Err(Error::InvalidInput(format!("hitting time from {s} up to {target} is undefined")));
        }
        if target == s {
            return Ok(0.0);
        }
        let h = |t: f64| match self.eval(t, s) {
            Ok(v) => v - target,
            Err(_) => f64::NAN,
        };
        let (lo, flo, hi, fhi) = expand_bracket(&h, 0.0, s - target, 1.0, 1.0, HITTING_EXPANSIONS)
            .ok_or(Error::HittingTimeUnbounded { from: s, to: target })?;
        let opts = RootOptions { xtol: 1e-14, ftol: 0.0, max_iter: 400 };
        brent(h, lo, hi, flo, fhi, &opts)
    }

    /// The growth rate read off hitting times, `t(s, 0)` for `s >= 0` and
    /// `-t(0, s)` for `s < 0`.
    pub fn recovered_value(&self, s: f64) -> Result<f64> {
        if s >= 0.0 {
            self.hitting_time(s, 0.0)
        } else {
            Ok(-self.hitting_time(0.0, s)?)
        }
    }

    /// Tabulates the generating growth rate on a uniform grid over
    /// `window`. Node slopes come from central differences of hitting times
    /// and the table is interpolated with monotone cubics.
    pub fn recover_mu(&self, window: (f64, f64), cfg: &RecoverConfig) -> Result<GrowthRate> {
        let (lo, hi) = window;
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return Err(Error::InvalidInput(format!("recovery window [{lo}, {hi}] must contain 0")));
        }
        if cfg.nodes < 2 {
            return Err(Error::InvalidInput("recovery needs at least two nodes".into()));
        }
        let n = cfg.nodes;
        let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        if cfg.check {
            let report = self.classify(&xs, &cfg.omega)?;
            if let Classification::Degenerate { .. } = report.verdict {
                let s = report.omegas.iter().find(|o| o.value != Limit::MinusInfinity).map(|o| o.s).unwrap_or(lo);
                return Err(Error::NotNonDegenerate(format!("orbit of {s} has a finite limit")));
            }
        }
        let rows: Vec<(f64, f64)> = xs
            .par_iter()
            .map(|&s| -> Result<(f64, f64)> {
                let y = self.recovered_value(s)?;
                let d = cfg.slope_step * s.abs().max(1.0);
                let slope = (self.recovered_value(s + d)? - self.recovered_value(s - d)?) / (2.0 * d);
                Ok((y, slope))
            })
            .collect::<Result<_>>()?;
        let ys: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let ds: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let mu = GrowthRate::from_table_with_slopes(&format!("recovered({})", self.name()), xs, ys, ds)?;
        Ok(mu.with_ell(Ell::Infinite))
    }
}

fn nan_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// The degenerate semiflow `phi_t(s) = s e^t` for `s < 0` and `s` for
/// `s >= 0`; every `s >= 0` is a fixed point.
pub fn exponential_contraction() -> RealSemiflow {
    RealSemiflow::closed_form("exp_contraction", |t: f64, s: f64| if s < 0.0 { s * t.exp() } else { s })
}

/// Degenerate semiflow whose orbits above 0 all fall to 0 with
/// `phi_t(s) = s / (1 + t s / kappa)`. Points `s <= 0` are fixed, so
/// `omega` is bounded above, and `lim_{s -> inf} phi_t(s) = kappa / t`.
pub fn blow_down(kappa: f64) -> RealSemiflow {
    RealSemiflow::closed_form(format!("blow_down({kappa})"), move |t: f64, s: f64| {
        if s > 0.0 {
            s / (1.0 + t * s / kappa)
        } else {
            s
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn polylog() -> RealSemiflow {
        RealSemiflow::generated(GrowthRate::polynomial_log())
    }

    #[test]
    fn translation_shifts() {
        assert_eq!(RealSemiflow::translation().apply(3.0, 5.0).unwrap(), 2.0);
    }

    #[test]
    fn zero_time_is_identity() {
        for phi in [RealSemiflow::translation(), polylog(), exponential_contraction()] {
            assert_eq!(phi.apply(0.0, 1.7).unwrap(), 1.7);
        }
    }

    #[test]
    fn polylog_hits_zero() {
        let v = polylog().apply(2f64.ln(), 1.0).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn window_is_enforced() {
        let phi = RealSemiflow::translation().with_window(-1.0, 1.0, 0.5);
        assert!(phi.apply(1.0, 1.4).is_ok());
        assert!(matches!(phi.apply(1.0, 1.6), Err(Error::DomainExceeded { .. })));
        assert!(matches!(phi.apply(-1.0, 0.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn omega_of_degenerate_example() {
        let phi = exponential_contraction();
        let cfg = OmegaConfig::default();
        assert_eq!(phi.omega(-1.0, &cfg).unwrap().value, Limit::MinusInfinity);
        assert_eq!(phi.omega(2.0, &cfg).unwrap().value, Limit::Finite(2.0));
    }

    #[test]
    fn omega_of_translation_and_bounded_rate() {
        let cfg = OmegaConfig::default();
        assert_eq!(RealSemiflow::translation().omega(0.0, &cfg).unwrap().value, Limit::MinusInfinity);
        // phi_t(0) = -ln(1 + t) under mu = -e^{-s}.
        let phi = RealSemiflow::generated(GrowthRate::neg_exp());
        assert!((phi.eval(3.0, 0.0).unwrap() + 4f64.ln()).abs() < 1e-14);
        assert_eq!(phi.omega(0.0, &cfg).unwrap().value, Limit::MinusInfinity);
    }

    #[test]
    fn omega_upper_limits() {
        let cfg = OmegaConfig::default();
        assert_eq!(exponential_contraction().omega_upper_limit(1e6, &cfg).unwrap(), Limit::PlusInfinity);
        match blow_down(0.01).omega_upper_limit(1e6, &cfg).unwrap() {
            Limit::Finite(v) => assert!(v.abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        assert_eq!(polylog().omega_upper_limit(1e6, &cfg).unwrap(), Limit::MinusInfinity);
        assert_eq!(polylog().orbit_upper_limit(1.0, 1e6).unwrap(), Limit::PlusInfinity);
    }

    #[test]
    fn omega_identities_on_degenerate_examples() {
        let cfg = OmegaConfig::default();
        for phi in [exponential_contraction(), blow_down(0.5)] {
            for &s in &[0.0, 0.3, 1.0, 2.5, 7.0] {
                let w = phi.omega(s, &cfg).unwrap().value.finite().unwrap();
                let ww = phi.omega(w, &cfg).unwrap().value.finite().unwrap();
                assert!((ww - w).abs() < 1e-6);
                for &t in &[0.1, 1.0, 5.0] {
                    let wt = phi.omega(phi.eval(t, s).unwrap(), &cfg).unwrap().value.finite().unwrap();
                    assert!((wt - w).abs() < 1e-6);
                    assert!((phi.eval(t, w).unwrap() - w).abs() < 1e-6);
                    assert!(w <= phi.eval(t, s).unwrap() + 1e-6 && phi.eval(t, s).unwrap() <= s);
                }
            }
        }
    }

    #[test]
    fn axioms_hold_for_generated() {
        let triples: Vec<(f64, f64, f64)> =
            (0..200).map(|k| (0.05 * (k % 7) as f64, 0.3 * (k % 5) as f64, -10.0 + 0.1 * k as f64)).collect();
        for mu in [GrowthRate::identity(), GrowthRate::polynomial_log(), GrowthRate::odd_power(1)] {
            let r = RealSemiflow::generated(mu).check_axioms(&triples).unwrap();
            assert!(r.passes(1e-8), "{r:?}");
        }
    }

    #[test]
    fn axioms_detect_non_semiflows() {
        let triples = vec![(1.0, 1.0, 0.0), (0.5, 2.0, 3.0)];
        let r = RealSemiflow::closed_form("quadratic", |t, s| s - t * t).check_axioms(&triples).unwrap();
        assert!(r.cocycle >= 2.0 - 1e-12);
        let r = RealSemiflow::closed_form("forward", |t, s| s + t).check_axioms(&triples).unwrap();
        assert!(r.inequality > 0.0);
    }

    #[test]
    fn classification() {
        let grid: Vec<f64> = (-20..=20).map(|k| 0.5 * k as f64).collect();
        let cfg = OmegaConfig::default();
        assert_eq!(RealSemiflow::translation().classify(&grid, &cfg).unwrap().verdict, Classification::NonDegenerate);
        assert_eq!(polylog().classify(&grid, &cfg).unwrap().verdict, Classification::NonDegenerate);
        let expected: Vec<f64> = grid.iter().copied().filter(|&s| s >= 0.0).collect();
        match exponential_contraction().classify(&grid, &cfg).unwrap().verdict {
            Classification::Degenerate { fixed_points } => assert_eq!(fixed_points, expected),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hitting_times() {
        let phi = polylog();
        let t = phi.hitting_time(1.0, 0.0).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-14);
        assert!(matches!(exponential_contraction().hitting_time(1.0, 0.5), Err(Error::HittingTimeUnbounded { .. })));
    }

    #[test]
    fn recover_translation() {
        let mu = RealSemiflow::translation().recover_mu((-10.0, 10.0), &RecoverConfig::default()).unwrap();
        for k in 0..=1000 {
            let s = -10.0 + 0.02 * k as f64;
            assert!((mu.eval(s) - s).abs() < 1e-8);
        }
    }

    #[test]
    fn recover_refuses_degenerate() {
        let err = exponential_contraction().recover_mu((-1.0, 1.0), &RecoverConfig { nodes: 11, ..Default::default() });
        assert!(matches!(err, Err(Error::NotNonDegenerate(_))));
    }

    proptest! {
        #[test]
        fn hitting_time_additivity(a in -8.0f64..8.0, b in -8.0f64..8.0, c in -8.0f64..8.0) {
            let mut v = [a, b, c];
            v.sort_by(|x, y| y.total_cmp(x));
            let [s, tau, eta] = v;
            for phi in [polylog(), RealSemiflow::generated(GrowthRate::odd_power(1))] {
                let lhs = phi.hitting_time(s, tau).unwrap() + phi.hitting_time(tau, eta).unwrap();
                let rhs = phi.hitting_time(s, eta).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
            }
        }

        #[test]
        fn strict_decrease_for_non_degenerate(t in 1e-3f64..20.0, s in -10.0f64..10.0, ds in 1e-3f64..1.0) {
            let phi = polylog();
            let v = phi.eval(t, s).unwrap();
            prop_assert!(v < s);
            prop_assert!(phi.eval(t + ds, s).unwrap() < v);
            prop_assert!(phi.eval(t, s + ds).unwrap() > v);
        }
    }
}
