//! Evolution families `U(t, s)`, `t >= s`, on `R^n`.
//!
//! Families are given in closed form, propagated from a coefficient matrix
//! `A(t)` (the solution operator of `x' = A(t) x`), or obtained from another
//! family by rescaling time with a growth rate,
//! `V(t, s) = U(mu^{-1}(t), mu^{-1}(s))`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{anchored_slope, max_excess, window_trend, CloudPoint, WindowTrend};
use crate::growth_rate::GrowthRate;
use crate::linalg::{spectral_norm, Matrix};
use crate::ode::{propagate, OdeConfig};
use crate::probe::Trend;

pub type MatrixFn = Arc<dyn Fn(f64, f64) -> Matrix + Send + Sync>;
pub type CoefficientFn = Arc<dyn Fn(f64) -> Matrix + Send + Sync>;

/// Memo of propagated panels `[k w, (k + 1) w]`.
#[derive(Default)]
struct PanelCache {
    panels: RwLock<HashMap<i64, Arc<Matrix>>>,
}

#[derive(Clone)]
enum Kind {
    ClosedForm(MatrixFn),
    Ode { coefficient: CoefficientFn, config: OdeConfig, panel: f64, cache: Arc<PanelCache> },
    Rescaled { base: Arc<EvolutionFamily>, mu: GrowthRate },
}

#[derive(Clone)]
pub struct EvolutionFamily {
    name: String,
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for EvolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionFamily").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleReport {
    pub samples: usize,
    pub max_residual: f64,
    /// Triple `(t, tau, t0)` attaining the maximum.
    pub worst: Option<(f64, f64, f64)>,
}

/// `||U(s, tau)|| <= K e^{alpha (mu(s) - mu(tau))}` on the fitted pairs.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthBound {
    pub k: f64,
    pub alpha: f64,
    pub rate: String,
    pub pairs: usize,
    /// Largest `ln ||U|| - ln K - alpha d`; non-positive up to rounding.
    pub max_excess: f64,
    pub windows: WindowTrend,
    pub cloud: Vec<CloudPoint>,
}

impl GrowthBound {
    /// `K e^{alpha d}`.
    pub fn envelope(&self, d: f64) -> f64 {
        self.k * (self.alpha * d).exp()
    }

    /// Largest `||U(t, s)|| / (K e^{alpha (mu(t) - mu(s))}) - 1` over
    /// `pairs`, clamped below at 0.
    pub fn check(&self, family: &EvolutionFamily, mu: &GrowthRate, pairs: &[(f64, f64)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &(t, s) in pairs {
            let n = spectral_norm(&family.transition(t, s)?);
            let bound = self.envelope(mu.eval(t) - mu.eval(s));
            worst = worst.max(n / bound - 1.0);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthViolation {
    pub rate: String,
    pub pairs: usize,
    /// Anchored slope per window radius; it grows without bound.
    pub windows: WindowTrend,
    pub cloud: Vec<CloudPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub enum GrowthFit {
    Bounded(GrowthBound),
    Unbounded(GrowthViolation),
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    /// Largest `||U(t', s') - U(t, s)|| / max(|t' - t|, |s' - s|)` between
    /// neighbouring grid pairs.
    pub modulus: f64,
    pub largest_jump: f64,
}

impl EvolutionFamily {
    pub fn closed_form(
        name: impl Into<String>,
        dim: usize,
        map: impl Fn(f64, f64) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        EvolutionFamily { name: name.into(), dim, kind: Kind::ClosedForm(Arc::new(map)) }
    }

    /// Solution operator of `x' = A(t) x`, propagated on panels of width 1.
    pub fn ode(
        name: impl Into<String>,
        dim: usize,
        coefficient: impl Fn(f64) -> Matrix + Send + Sync + 'static,
        config: OdeConfig,
    ) -> Self {
        Self::ode_with_panel(name, dim, coefficient, config, 1.0)
    }

    pub fn ode_with_panel(
        name: impl Into<String>,
        dim: usize,
        coefficient: impl Fn(f64) -> Matrix + Send + Sync + 'static,
        config: OdeConfig,
        panel: f64,
    ) -> Self {
        EvolutionFamily {
            name: name.into(),
            dim,
            kind: Kind::Ode { coefficient: Arc::new(coefficient), config, panel, cache: Arc::default() },
        }
    }

    /// `V(t, s) = U(mu^{-1}(t), mu^{-1}(s))`.
    pub fn rescaled(&self, mu: &GrowthRate) -> Self {
        EvolutionFamily {
            name: format!("{}@{}", self.name, mu.name()),
            dim: self.dim,
            kind: Kind::Rescaled { base: Arc::new(self.clone()), mu: mu.clone() },
        }
    }

    /// `U(t, s) = Id`.
    pub fn identity(dim: usize) -> Self {
        Self::closed_form("identity", dim, move |_, _| Matrix::identity(dim, dim))
    }

    /// `U(t, s) = ((1 + |s|) / (1 + |t|)) Id`.
    pub fn polynomial_decay(dim: usize) -> Self {
        Self::closed_form("polynomial_decay", dim, move |t: f64, s: f64| {
            Matrix::identity(dim, dim) * ((1.0 + s.abs()) / (1.0 + t.abs()))
        })
    }

    /// `U(t, s) = diag(e^{mu(s) - mu(t)}, e^{mu(t) - mu(s)})`.
    pub fn diagonal_dichotomy(mu: &GrowthRate) -> Self {
        let mu = mu.clone();
        Self::closed_form(format!("diagonal({})", mu.name()), 2, move |t, s| {
            let d = mu.eval(t) - mu.eval(s);
            Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(-d).exp(), d.exp()]))
        })
    }

    /// `U(t, s) = e^{mu(s) - mu(t)} P + e^{mu(t) - mu(s)} (Id - P)` for a
    /// constant projection `P`.
    pub fn projected_dichotomy(mu: &GrowthRate, p: Matrix) -> Self {
        let mu = mu.clone();
        let n = p.nrows();
        let q = Matrix::identity(n, n) - &p;
        Self::closed_form(format!("projected({})", mu.name()), n, move |t, s| {
            let d = mu.eval(t) - mu.eval(s);
            &p * (-d).exp() + &q * d.exp()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_ode(&self) -> bool {
        matches!(self.kind, Kind::Ode { .. })
    }

    /// Number of cached panels (ODE families only).
    pub fn cached_panels(&self) -> usize {
        match &self.kind {
            Kind::Ode { cache, .. } => cache.panels.read().map(|m| m.len()).unwrap_or(0),
            _ => 0,
        }
    }

    /// The matrix of `U(t, s)`, `t >= s`.
    pub fn transition(&self, t: f64, s: f64) -> Result<Matrix> {
        if t < s || t.is_nan() || s.is_nan() {
            return Err(Error::TimeOrderViolation { t, s });
        }
        if t == s {
            return Ok(Matrix::identity(self.dim, self.dim));
        }
        match &self.kind {
            Kind::ClosedForm(f) => Ok(f(t, s)),
            Kind::Ode { coefficient, config, panel, cache } => {
                self.propagate_panels(coefficient, config, *panel, cache, t, s)
            }
            Kind::Rescaled { base, mu } => base.transition(mu.invert(t)?, mu.invert(s)?),
        }
    }

    /// Splits `[s, t]` at multiples of the panel width. Interior panels are
    /// memoized; the decomposition does not depend on the cache state, so
    /// cached and uncached evaluations agree bit for bit.
    fn propagate_panels(
        &self,
        a: &CoefficientFn,
        cfg: &OdeConfig,
        w: f64,
        cache: &PanelCache,
        t: f64,
        s: f64,
    ) -> Result<Matrix> {
        let id = Matrix::identity(self.dim, self.dim);
        let f = |x: f64| a(x);
        let ka = (s / w).ceil() as i64;
        let kb = (t / w).floor() as i64;
        if ka > kb {
            return propagate(&f, s, t, id, cfg);
        }
        let mut m = propagate(&f, s, ka as f64 * w, id.clone(), cfg)?;
        for k in ka..kb {
            let p = self.panel(a, cfg, w, cache, k)?;
            m = p.as_ref() * m;
        }
        let tail = propagate(&f, kb as f64 * w, t, id, cfg)?;
        Ok(tail * m)
    }

    fn panel(&self, a: &CoefficientFn, cfg: &OdeConfig, w: f64, cache: &PanelCache, k: i64) -> Result<Arc<Matrix>> {
        if let Some(p) = cache.panels.read().ok().and_then(|m| m.get(&k).cloned()) {
            return Ok(p);
        }
        let f = |x: f64| a(x);
        let p = Arc::new(propagate(&f, k as f64 * w, (k + 1) as f64 * w, Matrix::identity(self.dim, self.dim), cfg)?);
        if let Ok(mut m) = cache.panels.write() {
            m.entry(k).or_insert_with(|| p.clone());
        }
        Ok(p)
    }

    /// `max ||U(t, tau) U(tau, t0) - U(t, t0)||` over ordered triples.
    pub fn check_cocycle(&self, triples: &[(f64, f64, f64)]) -> Result<CocycleReport> {
        let res: Vec<f64> = triples
            .par_iter()
            .map(|&(t, tau, t0)| -> Result<f64> {
                let lhs = self.transition(t, tau)? * self.transition(tau, t0)?;
                let rhs = self.transition(t, t0)?;
                Ok(spectral_norm(&(lhs - rhs)))
            })
            .collect::<Result<_>>()?;
        let mut report = CocycleReport { samples: res.len(), max_residual: 0.0, worst: None };
        for (r, &tr) in res.iter().zip(triples) {
            if report.worst.is_none() || *r > report.max_residual || r.is_nan() {
                report.max_residual = if r.is_nan() { f64::INFINITY } else { *r };
                report.worst = Some(tr);
            }
        }
        Ok(report)
    }

    /// `(d, ln ||U(t, s)||)` for each ordered pair.
    pub fn growth_cloud(&self, mu: &GrowthRate, pairs: &[(f64, f64)]) -> Result<Vec<CloudPoint>> {
        pairs
            .par_iter()
            .map(|&(t, s)| {
                let n = spectral_norm(&self.transition(t, s)?);
                Ok(CloudPoint { t, s, d: mu.eval(t) - mu.eval(s), l: n.ln() })
            })
            .collect()
    }

    /// Fits `||U(t, s)|| <= K e^{alpha (mu(t) - mu(s))}` over ordered pairs.
    ///
    /// `K` is pinned by the diagonal, where `U(s, s) = Id` forces `K >= 1`;
    /// `alpha` is then the smallest slope that works for every pair. If the
    /// slope keeps growing on nested windows the family has no bound of this
    /// form and a violation is returned instead.
    pub fn fit_growth_bound(&self, mu: &GrowthRate, pairs: &[(f64, f64)]) -> Result<GrowthFit> {
        if pairs.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let cloud = self.growth_cloud(mu, pairs)?;
        let ln_k = 0.0;
        let windows = window_trend(&cloud, ln_k, 0.0, 6);
        if windows.trend == Trend::Diverging {
            return Ok(GrowthFit::Unbounded(GrowthViolation {
                rate: mu.name().to_string(),
                pairs: pairs.len(),
                windows,
                cloud,
            }));
        }
        let alpha = anchored_slope(&cloud, ln_k, 0.0).max(0.0);
        let excess = max_excess(&cloud, ln_k, alpha);
        Ok(GrowthFit::Bounded(GrowthBound {
            k: ln_k.exp(),
            alpha,
            rate: mu.name().to_string(),
            pairs: pairs.len(),
            max_excess: excess,
            windows,
            cloud,
        }))
    }

    /// Grid-Lipschitz proxy for strong continuity on the half-plane
    /// `t >= s`: differences between horizontally and vertically adjacent
    /// nodes of `grid x grid`.
    pub fn continuity_modulus(&self, grid: &[f64]) -> Result<ContinuityReport> {
        let mut modulus: f64 = 0.0;
        let mut jump: f64 = 0.0;
        for (i, &t) in grid.iter().enumerate() {
            for j in 0..=i {
                let s = grid[j];
                let u = self.transition(t, s)?;
                if i + 1 < grid.len() {
                    let du = spectral_norm(&(self.transition(grid[i + 1], s)? - &u));
                    jump = jump.max(du);
                    modulus = modulus.max(du / (grid[i + 1] - t));
                }
                if j < i {
                    let du = spectral_norm(&(self.transition(t, grid[j + 1])? - &u));
                    jump = jump.max(du);
                    modulus = modulus.max(du / (grid[j + 1] - s));
                }
            }
        }
        Ok(ContinuityReport { modulus, largest_jump: jump })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag(a: f64, b: f64) -> Matrix {
        Matrix::from_diagonal(&DVector::from_vec(vec![a, b]))
    }

    fn ode_diag(tol: f64) -> EvolutionFamily {
        EvolutionFamily::ode("diag", 2, |_| diag(-1.0, 1.0), OdeConfig::with_tol(tol))
    }

    fn pairs(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let s = lo + (hi - lo) * j as f64 / (n - 1) as f64;
                out.push((t, s));
            }
        }
        out
    }

    #[test]
    fn identity_on_diagonal() {
        let u = ode_diag(1e-9);
        assert_eq!(u.transition(0.3, 0.3).unwrap(), Matrix::identity(2, 2));
        assert!(matches!(u.transition(0.0, 1.0), Err(Error::TimeOrderViolation { .. })));
    }

    #[test]
    fn polynomial_decay_value() {
        let u = EvolutionFamily::polynomial_decay(2).transition(1.0, 0.0).unwrap();
        assert!((u - Matrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn ode_matches_exponential() {
        let u = ode_diag(1e-9).transition(1.0, 0.0).unwrap();
        assert!((u - diag((-1f64).exp(), 1f64.exp())).norm() < 1e-8);
        // Across several panels, including fractional ends.
        let u = ode_diag(1e-9).transition(2.7, -1.4).unwrap();
        let d = 4.1f64;
        assert!(((u[(1, 1)] - d.exp()) / d.exp()).abs() < 1e-8);
        assert!(((u[(0, 0)] - (-d).exp()) / (-d).exp()).abs() < 1e-8);
    }

    #[test]
    fn cache_does_not_change_values() {
        let cached = ode_diag(1e-9);
        let warm = cached.transition(4.2, -3.3).unwrap();
        assert!(cached.cached_panels() > 0);
        let again = cached.transition(4.2, -3.3).unwrap();
        let fresh = ode_diag(1e-9).transition(4.2, -3.3).unwrap();
        assert_eq!(warm, again);
        assert_eq!(warm, fresh);
    }

    #[test]
    fn corrupted_family_fails_cocycle() {
        let u = EvolutionFamily::closed_form("offset", 1, |t, s| Matrix::from_element(1, 1, (t - s).exp() + 0.1));
        let r = u.check_cocycle(&[(1.0, 0.5, 0.0), (2.0, 1.0, -1.0)]).unwrap();
        assert!(r.max_residual > 0.05);
    }

    #[test]
    fn exact_families_pass_cocycle() {
        let mu = GrowthRate::polynomial_log();
        let triples: Vec<(f64, f64, f64)> = (0..50)
            .map(|k| {
                let a = -5.0 + 0.2 * k as f64;
                (a + 1.3, a + 0.4, a)
            })
            .collect();
        for u in [EvolutionFamily::polynomial_decay(3), EvolutionFamily::diagonal_dichotomy(&mu)] {
            assert!(u.check_cocycle(&triples).unwrap().max_residual <= 1e-12);
        }
    }

    #[test]
    fn growth_bound_of_diagonal_family() {
        let mu = GrowthRate::polynomial_log();
        match EvolutionFamily::diagonal_dichotomy(&mu).fit_growth_bound(&mu, &pairs(-8.0, 8.0, 30)).unwrap() {
            GrowthFit::Bounded(b) => {
                assert!(b.alpha >= 1.0 - 1e-12 && b.alpha <= 1.0 + 1e-6, "{}", b.alpha);
                assert_eq!(b.k, 1.0);
            }
            GrowthFit::Unbounded(v) => panic!("{:?}", v.windows),
        }
    }

    #[test]
    fn rescaled_family() {
        let mu = GrowthRate::polynomial_log();
        let v = EvolutionFamily::diagonal_dichotomy(&mu).rescaled(&mu);
        let m = v.transition(2.0, 0.5).unwrap();
        assert!((m - diag((-1.5f64).exp(), 1.5f64.exp())).norm() < 1e-12);
    }

    #[test]
    fn continuity_proxy_of_smooth_family() {
        let grid: Vec<f64> = (0..=20).map(|k| -1.0 + 0.1 * k as f64).collect();
        let r = EvolutionFamily::polynomial_decay(1).continuity_modulus(&grid).unwrap();
        assert!(r.modulus <= 2.0 + 1e-9 && r.largest_jump <= 0.2 + 1e-9, "{r:?}");
    }
}
