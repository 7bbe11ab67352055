//! Growth rates: continuous, strictly increasing `mu: R -> (-inf, ell)` with
//! `mu(-inf) = -inf`.
//!
//! A growth rate is the time-rescaling coordinate behind every
//! non-degenerate real semiflow, `phi_t(s) = mu^{-1}(mu(s) - t)`. Rates come
//! from the built-in catalog, from a tabulated `(s, mu(s))` file, or from a
//! non-negative rate density `rho` via `mu(t) = int_0^t rho`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::HermiteTable;
use crate::probe::{classify_increments, geometric_points, Trend, TrendRule};
use crate::quadrature::{integrate, QuadOptions};
use crate::roots::{solve_increasing, RootOptions};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Upper limit `ell = lim_{s -> +inf} mu(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Ell {
    Finite(f64),
    Infinite,
}

impl Ell {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Ell::Infinite)
    }
}

impl fmt::Display for Ell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ell::Finite(v) => write!(f, "{v}"),
            Ell::Infinite => write!(f, "+inf"),
        }
    }
}

/// Result of probing the upper limit.
#[derive(Debug, Clone, Serialize)]
pub struct EllEstimate {
    pub ell: Ell,
    pub uncertainty: f64,
    /// `(s, mu(s))` pairs that were probed.
    pub probes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeConfig {
    pub start: f64,
    pub horizon: f64,
    pub rule: TrendRule,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { start: 1.0, horizon: 1e6, rule: TrendRule::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Target accuracy `|mu(s) - r|`.
    pub tol: f64,
    pub max_expansions: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions { tol: 1e-10, max_expansions: 64 }
    }
}

/// A growth rate together with its optional derivative and inverse.
#[derive(Clone)]
pub struct GrowthRate {
    name: String,
    eval: ScalarFn,
    derivative: Option<ScalarFn>,
    inverse: Option<ScalarFn>,
    ell: Option<Ell>,
    window: (f64, f64),
    kinks: Vec<f64>,
    inversion: InversionOptions,
    table: Option<Arc<HermiteTable>>,
}

impl fmt::Debug for GrowthRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthRate")
            .field("name", &self.name)
            .field("ell", &self.ell)
            .field("window", &self.window)
            .field("kinks", &self.kinks)
            .field("closed_inverse", &self.inverse.is_some())
            .field("tabulated", &self.table.is_some())
            .finish()
    }
}

impl GrowthRate {
    /// A growth rate from a closed-form evaluation. Everything else is
    /// optional and can be attached with the `with_*` builders.
    pub fn new(name: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GrowthRate {
            name: name.into(),
            eval: Arc::new(eval),
            derivative: None,
            inverse: None,
            ell: None,
            window: (-10.0, 10.0),
            kinks: Vec::new(),
            inversion: InversionOptions::default(),
            table: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn with_inverse(mut self, inv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn with_ell(mut self, ell: Ell) -> Self {
        self.ell = Some(ell);
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn with_inversion(mut self, opts: InversionOptions) -> Self {
        self.inversion = opts;
        self
    }

    /// `mu(s) = s`; generates the right translation semiflow.
    pub fn identity() -> Self {
        GrowthRate::new("identity", |s| s)
            .with_derivative(|_| 1.0)
            .with_inverse(|r| r)
            .with_ell(Ell::Infinite)
    }

    /// `mu(s) = sign(s) ln(1 + |s|)`, the polynomial rate.
    pub fn polynomial_log() -> Self {
        GrowthRate::new("polynomial_log", |s: f64| s.signum() * s.abs().ln_1p())
            .with_derivative(|s: f64| 1.0 / (1.0 + s.abs()))
            .with_inverse(|r: f64| r.signum() * r.abs().exp_m1())
            .with_ell(Ell::Infinite)
            .with_kinks(vec![0.0])
    }

    /// `mu(s) = -e^{-s}`, bounded above with `ell = 0`.
    pub fn neg_exp() -> Self {
        GrowthRate::new("neg_exp", |s: f64| -(-s).exp())
            .with_derivative(|s: f64| (-s).exp())
            .with_inverse(|r: f64| -(-r).ln())
            .with_ell(Ell::Finite(0.0))
    }

    /// `mu(s) = s^(2n+1)`.
    pub fn odd_power(n: u32) -> Self {
        let p = 2 * n + 1;
        let inv_p = 1.0 / p as f64;
        GrowthRate::new(format!("odd_power({n})"), move |s: f64| s.powi(p as i32))
            .with_derivative(move |s: f64| p as f64 * s.powi(p as i32 - 1))
            .with_inverse(move |r: f64| if p == 3 { r.cbrt() } else { r.signum() * r.abs().powf(inv_p) })
            .with_ell(Ell::Infinite)
    }

    /// Monotone cubic interpolation of a strictly increasing table, extended
    /// linearly beyond the first and last rows.
    pub fn from_table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let table = HermiteTable::pchip(xs, ys)?;
        Ok(Self::tabulated("table", table))
    }

    /// Table with caller-supplied node slopes.
    pub fn from_table_with_slopes(name: &str, xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        let table = HermiteTable::with_slopes(xs, ys, ds)?;
        Ok(Self::tabulated(name, table))
    }

    fn tabulated(name: &str, table: HermiteTable) -> Self {
        let table = Arc::new(table);
        let (lo, hi) = table.span();
        let t1 = table.clone();
        let t2 = table.clone();
        let mut g = GrowthRate::new(name, move |s| t1.eval(s))
            .with_derivative(move |s| t2.derivative(s))
            .with_ell(Ell::Infinite)
            .with_window(lo, hi);
        g.table = Some(table);
        g
    }

    /// Reads a two-column comma-separated `(s, mu(s))` table. A non-numeric
    /// first row is treated as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let (xs, ys) = read_two_columns(path.as_ref())?;
        let mut g = Self::from_table(xs, ys)?;
        g.name = format!("table:{}", path.as_ref().display());
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    /// `mu'(s)`. Falls back to a central difference when no derivative was
    /// supplied.
    pub fn derivative(&self, s: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(s),
            None => {
                let h = 1e-6 * s.abs().max(1.0);
                (self.eval(s + h) - self.eval(s - h)) / (2.0 * h)
            }
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn ell(&self) -> Option<Ell> {
        self.ell
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn table(&self) -> Option<&HermiteTable> {
        self.table.as_deref()
    }

    pub fn inversion_options(&self) -> InversionOptions {
        self.inversion
    }

    /// `mu^{-1}(r)`, for `r < ell`.
    pub fn invert(&self, r: f64) -> Result<f64> {
        if let Some(Ell::Finite(l)) = self.ell {
            if r >= l {
                return Err(Error::RangeExceeded { r, ell: l });
            }
        }
        if let Some(inv) = &self.inverse {
            return Ok(inv(r));
        }
        let opts = RootOptions { xtol: 0.0, ftol: self.inversion.tol, max_iter: 400 };
        let center = 0.5 * (self.window.0 + self.window.1);
        let center = if center.is_finite() { center } else { 0.0 };
        solve_increasing(|s| self.eval(s), r, center, 1.0, self.inversion.max_expansions, &opts)
    }

    /// Probes `mu` at geometrically growing arguments to decide whether it is
    /// bounded above.
    pub fn classify_ell(&self, cfg: &ProbeConfig) -> Result<EllEstimate> {
        let pts = geometric_points(cfg.start, cfg.horizon);
        if pts.len() < 4 {
            return Err(Error::Inconclusive(format!(
                "probe horizon {} too small to decide the upper limit",
                cfg.horizon
            )));
        }
        let probes: Vec<(f64, f64)> = pts.iter().map(|&s| (s, self.eval(s))).collect();
        let values: Vec<f64> = probes.iter().map(|p| p.1).collect();
        match classify_increments(&values, &cfg.rule) {
            Trend::Diverging => Ok(EllEstimate { ell: Ell::Infinite, uncertainty: 0.0, probes }),
            Trend::Converging { limit, uncertainty } => {
                Ok(EllEstimate { ell: Ell::Finite(limit), uncertainty, probes })
            }
            Trend::Undecided => Err(Error::Inconclusive(format!(
                "growth rate {} neither plateaus nor diverges up to s = {}",
                self.name, cfg.horizon
            ))),
        }
    }

    /// Returns a copy with `ell` filled from [`classify_ell`](Self::classify_ell)
    /// unless it was already declared.
    pub fn resolve_ell(mut self, cfg: &ProbeConfig) -> Result<Self> {
        if self.ell.is_none() {
            self.ell = Some(self.classify_ell(cfg)?.ell);
        }
        Ok(self)
    }

    /// Sample-based validation: strict increase on a uniform grid over the
    /// validation window and divergence to `-inf` on the left.
    pub fn validate(&self, samples: usize, cfg: &ProbeConfig) -> Result<()> {
        let (lo, hi) = self.window;
        let n = samples.max(2);
        let mut prev = self.eval(lo);
        for k in 1..n {
            let s = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = self.eval(s);
            if !(v > prev) {
                return Err(Error::InvalidInput(format!("{} is not strictly increasing near s = {s}", self.name)));
            }
            prev = v;
        }
        let left: Vec<f64> = geometric_points(cfg.start, cfg.horizon).iter().map(|&s| -self.eval(-s)).collect();
        match classify_increments(&left, &cfg.rule) {
            Trend::Diverging => Ok(()),
            Trend::Converging { limit, .. } => Err(Error::InvalidInput(format!(
                "{} is bounded below (approaches {}) as s -> -inf",
                self.name, -limit
            ))),
            Trend::Undecided => Err(Error::Inconclusive(format!("lower limit of {} undecided", self.name))),
        }
    }

    /// Short serializable description.
    pub fn summary(&self) -> GrowthRateSummary {
        GrowthRateSummary {
            name: self.name.clone(),
            ell: self.ell,
            window: self.window,
            closed_inverse: self.inverse.is_some(),
            tabulated_nodes: self.table.as_ref().map(|t| t.nodes().len()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRateSummary {
    pub name: String,
    pub ell: Option<Ell>,
    pub window: (f64, f64),
    pub closed_inverse: bool,
    pub tabulated_nodes: Option<usize>,
}

/// Settings for [`from_rate_density`].
#[derive(Debug, Clone, Copy)]
pub struct DensityConfig {
    /// Tabulation window; must contain 0.
    pub window: (f64, f64),
    /// Simpson cell width.
    pub step: f64,
    pub probe: ProbeConfig,
    pub quad: QuadOptions,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            window: (-20.0, 20.0),
            step: 0.01,
            probe: ProbeConfig::default(),
            quad: QuadOptions { abs_tol: 1e-11, rel_tol: 1e-13, max_subdivisions: 20_000 },
        }
    }
}

/// Non-fatal findings while building a growth rate from a density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DensityWarning {
    /// `rho` vanished on every sample of `[from, to]`.
    DegenerateDensity { from: f64, to: f64 },
    UpperDivergenceInconclusive,
    /// `int_0^inf rho` appears finite; `ell` is recorded as finite.
    UpperIntegralConverges { limit: f64 },
    LowerDivergenceInconclusive,
    /// `int_-inf^0 rho` appears finite, so `mu(-inf) > -inf`.
    LowerIntegralConverges { limit: f64 },
}

/// Builds `mu(t) = int_0^t rho` by cumulative Simpson quadrature on a uniform
/// grid, interpolated with monotone cubics whose node slopes are `rho`.
/// Outside the window the integral is continued by adaptive quadrature.
pub fn from_rate_density(
    rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
    cfg: &DensityConfig,
) -> Result<(GrowthRate, Vec<DensityWarning>)> {
    let (lo, hi) = cfg.window;
    if !(lo <= 0.0 && hi >= 0.0 && lo < hi) || !(cfg.step > 0.0) {
        return Err(Error::InvalidInput(format!("density window [{lo}, {hi}] must contain 0")));
    }
    let rho: ScalarFn = Arc::new(rho);
    let mut warnings = Vec::new();

    let n_right = (hi / cfg.step).ceil() as usize;
    let n_left = (-lo / cfg.step).ceil() as usize;
    let h_right = if n_right > 0 { hi / n_right as f64 } else { 0.0 };
    let h_left = if n_left > 0 { -lo / n_left as f64 } else { 0.0 };

    let mut xs = Vec::with_capacity(n_left + n_right + 1);
    let mut ys = Vec::with_capacity(n_left + n_right + 1);
    let mut ds = Vec::with_capacity(n_left + n_right + 1);

    let mut zero_run: Option<(f64, f64)> = None;
    let flush = |run: &mut Option<(f64, f64)>, warnings: &mut Vec<DensityWarning>| {
        if let Some((from, to)) = run.take() {
            warnings.push(DensityWarning::DegenerateDensity { from, to });
        }
    };

    // Left side, built outward from 0 then reversed.
    let mut left = Vec::with_capacity(n_left);
    let mut acc = 0.0;
    for k in 0..n_left {
        let b = -(k as f64) * h_left;
        let a = -((k + 1) as f64) * h_left;
        let (fa, fm, fb) = (rho(a), rho(0.5 * (a + b)), rho(b));
        for (x, v) in [(a, fa), (0.5 * (a + b), fm), (b, fb)] {
            if v < 0.0 || v.is_nan() {
                return Err(Error::NegativeDensity { at: x, value: v });
            }
        }
        acc -= h_left / 6.0 * (fa + 4.0 * fm + fb);
        left.push((a, acc, fa));
    }
    left.reverse();
    for &(x, y, d) in &left {
        xs.push(x);
        ys.push(y);
        ds.push(d);
    }
    xs.push(0.0);
    ys.push(0.0);
    ds.push(rho(0.0));
    acc = 0.0;
    for k in 0..n_right {
        let a = k as f64 * h_right;
        let b = (k + 1) as f64 * h_right;
        let (fa, fm, fb) = (rho(a), rho(0.5 * (a + b)), rho(b));
        for (x, v) in [(a, fa), (0.5 * (a + b), fm), (b, fb)] {
            if v < 0.0 || v.is_nan() {
                return Err(Error::NegativeDensity { at: x, value: v });
            }
        }
        acc += h_right / 6.0 * (fa + 4.0 * fm + fb);
        xs.push(b);
        ys.push(acc);
        ds.push(fb);
    }

    // Density of {rho > 0}, checked cell by cell on the grid.
    for i in 0..xs.len() - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let dead = rho(a) == 0.0 && rho(0.5 * (a + b)) == 0.0 && rho(b) == 0.0;
        if dead {
            zero_run = match zero_run {
                Some((from, _)) => Some((from, b)),
                None => Some((a, b)),
            };
        } else {
            flush(&mut zero_run, &mut warnings);
        }
    }
    flush(&mut zero_run, &mut warnings);

    let table = Arc::new(HermiteTable::with_slopes(xs, ys, ds)?);
    let (t_lo, t_hi) = table.span();
    let (y_lo, y_hi) = (table.eval(t_lo), table.eval(t_hi));

    // Divergence of int_0^{+-inf} rho, probed on dyadic shells.
    let shells = |sign: f64| -> Vec<f64> {
        let pts = geometric_points(cfg.probe.start, cfg.probe.horizon);
        let mut out = Vec::with_capacity(pts.len() + 1);
        let mut total = integrate(|x| rho(sign * x), 0.0, pts[0], &[], &cfg.quad).map(|r| r.0).unwrap_or(f64::NAN);
        out.push(total);
        for w in pts.windows(2) {
            let piece = integrate(|x| rho(sign * x), w[0], w[1], &[], &cfg.quad).map(|r| r.0).unwrap_or(f64::NAN);
            total += piece;
            out.push(total);
        }
        out
    };
    let ell = match classify_increments(&shells(1.0), &cfg.probe.rule) {
        Trend::Diverging => Ell::Infinite,
        Trend::Converging { limit, .. } => {
            warnings.push(DensityWarning::UpperIntegralConverges { limit });
            Ell::Finite(limit)
        }
        Trend::Undecided => {
            warnings.push(DensityWarning::UpperDivergenceInconclusive);
            Ell::Infinite
        }
    };
    match classify_increments(&shells(-1.0), &cfg.probe.rule) {
        Trend::Diverging => {}
        Trend::Converging { limit, .. } => warnings.push(DensityWarning::LowerIntegralConverges { limit: -limit }),
        Trend::Undecided => warnings.push(DensityWarning::LowerDivergenceInconclusive),
    }

    let quad = cfg.quad;
    let t_eval = table.clone();
    let rho_eval = rho.clone();
    let eval = move |s: f64| {
        if s < t_lo {
            y_lo - integrate(|x| rho_eval(x), s, t_lo, &[], &quad).map(|r| r.0).unwrap_or(f64::NAN)
        } else if s > t_hi {
            y_hi + integrate(|x| rho_eval(x), t_hi, s, &[], &quad).map(|r| r.0).unwrap_or(f64::NAN)
        } else {
            t_eval.eval(s)
        }
    };
    let rho_d = rho.clone();
    let mut g = GrowthRate::new("from_density", eval)
        .with_derivative(move |s| rho_d(s))
        .with_ell(ell)
        .with_window(t_lo, t_hi)
        .with_kinks(vec![0.0]);
    g.table = Some(table);
    Ok((g, warnings))
}

fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidInput(format!("{}: row {} has fewer than two columns", path.display(), i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(Error::InvalidInput(format!("{}: row {} is not numeric", path.display(), i + 1)));
            }
        }
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn invert_identity() {
        assert_eq!(GrowthRate::identity().invert(1.0).unwrap(), 1.0);
    }

    #[test]
    fn invert_polynomial_log() {
        let s = GrowthRate::polynomial_log().invert(2f64.ln()).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invert_neg_exp_out_of_range() {
        let err = GrowthRate::neg_exp().invert(0.5).unwrap_err();
        assert!(matches!(err, Error::RangeExceeded { .. }));
    }

    #[test]
    fn numerical_inversion_without_closed_form() {
        let g = GrowthRate::new("cubic+s", |s: f64| s.powi(3) + s);
        for &r in &[-1e4, -2.0, 0.0, 0.3, 10.0, 1e6] {
            let s = g.invert(r).unwrap();
            assert!((g.eval(s) - r).abs() <= 1e-10 * r.abs().max(1.0), "r = {r}");
        }
    }

    #[test]
    fn bounded_rate_without_declared_ell_fails_to_bracket() {
        let g = GrowthRate::new("bounded", |s: f64| s.atan());
        assert!(matches!(g.invert(2.0).unwrap_err(), Error::BracketFailure { .. }));
    }

    #[test]
    fn classify_catalog() {
        let cfg = ProbeConfig::default();
        assert_eq!(GrowthRate::identity().classify_ell(&cfg).unwrap().ell, Ell::Infinite);
        assert_eq!(GrowthRate::polynomial_log().classify_ell(&cfg).unwrap().ell, Ell::Infinite);
        match GrowthRate::neg_exp().classify_ell(&cfg).unwrap().ell {
            Ell::Finite(v) => assert!(v.abs() < 1e-9),
            Ell::Infinite => panic!("neg_exp is bounded"),
        }
    }

    #[test]
    fn classify_needs_room() {
        let cfg = ProbeConfig { horizon: 4.0, ..Default::default() };
        assert!(matches!(GrowthRate::identity().classify_ell(&cfg), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn resolve_keeps_declared_limit() {
        let g = GrowthRate::new("atan", |s: f64| s.atan()).resolve_ell(&ProbeConfig::default()).unwrap();
        match g.ell().unwrap() {
            Ell::Finite(v) => assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-5),
            Ell::Infinite => panic!(),
        }
    }

    #[test]
    fn validate_catches_bounded_below() {
        let g = GrowthRate::new("exp", |s: f64| s.exp());
        assert!(g.validate(100, &ProbeConfig::default()).is_err());
        assert!(GrowthRate::polynomial_log().validate(100, &ProbeConfig::default()).is_ok());
    }

    #[test]
    fn density_constant_is_identity() {
        let (g, w) = from_rate_density(|_| 1.0, &DensityConfig::default()).unwrap();
        assert!(w.is_empty(), "{w:?}");
        assert_eq!(g.ell(), Some(Ell::Infinite));
        for k in -100..=100 {
            let s = k as f64 * 0.237;
            assert!((g.eval(s) - s).abs() < 1e-11, "s = {s}");
        }
        assert!((g.eval(60.0) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn density_reciprocal_matches_polynomial_log() {
        let (g, _) = from_rate_density(|t: f64| 1.0 / (1.0 + t.abs()), &DensityConfig::default()).unwrap();
        assert!((g.eval(1.0) - 2f64.ln()).abs() < 1e-10);
        assert!((g.eval(-3.3) + 4.3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn density_quadratic_gives_cube() {
        let (g, _) = from_rate_density(|t: f64| 3.0 * t * t, &DensityConfig::default()).unwrap();
        assert!((g.eval(2.0) - 8.0).abs() < 1e-10);
    }

    #[test]
    fn density_negative_is_rejected() {
        let err = from_rate_density(|t: f64| t, &DensityConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NegativeDensity { .. }));
    }

    #[test]
    fn density_with_dead_zone_warns() {
        let rho = |t: f64| if (2.0..=3.0).contains(&t) { 0.0 } else { 1.0 };
        let (_, w) = from_rate_density(rho, &DensityConfig::default()).unwrap();
        assert!(w.iter().any(|w| matches!(w, DensityWarning::DegenerateDensity { .. })));
    }

    #[test]
    fn density_integrable_on_right_gives_finite_ell() {
        let rho = |t: f64| if t > 0.0 { (-t).exp() } else { 1.0 };
        let (g, w) = from_rate_density(rho, &DensityConfig::default()).unwrap();
        assert!(w.iter().any(|w| matches!(w, DensityWarning::UpperIntegralConverges { .. })));
        match g.ell().unwrap() {
            Ell::Finite(v) => assert!((v - 1.0).abs() < 1e-6),
            Ell::Infinite => panic!(),
        }
    }

    #[test]
    fn csv_table_with_header() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "s,mu").unwrap();
        for k in -5..=5 {
            writeln!(f, "{},{}", k, 2 * k).unwrap();
        }
        let g = GrowthRate::from_csv(f.path()).unwrap();
        assert!((g.eval(1.5) - 3.0).abs() < 1e-12);
        assert!((g.invert(3.0).unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn csv_table_must_increase() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "0,0\n1,2\n2,1").unwrap();
        assert!(GrowthRate::from_csv(f.path()).is_err());
    }
}
