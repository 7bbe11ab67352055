//! The evolution semigroup `T_t u(s) = U(s, phi_t(s)) u(phi_t(s))` on grid
//! functions, its classical counterpart `S_t v(r) = V(r, r - t) v(r - t)`
//! for the rescaled family, the rescaling `F u = u o mu^{-1}` that
//! conjugates them, and difference-quotient probes of the generator.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution_family::{EvolutionFamily, GrowthBound};
use crate::growth_rate::{Ell, GrowthRate, ProbeConfig};
use crate::grid_function::GridFunction;
use crate::linalg::Vector;
use crate::semiflow::{Classification, Limit, OmegaConfig, RealSemiflow};

/// Which hypothesis of the semigroup construction was verified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Hypothesis {
    /// Generated by a growth rate with `ell = +inf`.
    UnboundedRate,
    /// Non-degenerate closed form with `phi_t(s) -> +inf` as `s -> +inf`.
    EscapingOrbits,
    /// Degenerate with `omega(s) -> +inf` as `s -> +inf`.
    UnboundedOmega,
    /// Built with [`SemigroupContext::new_unchecked`].
    Unchecked,
}

#[derive(Debug, Clone)]
pub struct HypothesisConfig {
    /// Points at which degeneracy is probed.
    pub grid: Vec<f64>,
    pub omega: OmegaConfig,
    /// Largest `s` used for limits as `s -> +inf`.
    pub s_horizon: f64,
    pub ell_probe: ProbeConfig,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig {
            grid: GridFunction::uniform_nodes(-10.0, 10.0, 41),
            omega: OmegaConfig::default(),
            s_horizon: 1e6,
            ell_probe: ProbeConfig::default(),
        }
    }
}

/// An evolution family paired with a semiflow.
#[derive(Clone, Debug)]
pub struct SemigroupContext {
    family: EvolutionFamily,
    flow: RealSemiflow,
    bound: Option<GrowthBound>,
    hypothesis: Hypothesis,
}

/// Residuals `||T_{t_n} u - u||` along `t_n -> 0`.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityTrace {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ContinuityTrace {
    /// The last residual is below `tol` and no residual grows by more than
    /// `tol` from one time to the next.
    pub fn settles(&self, tol: f64) -> bool {
        let Some(&last) = self.residuals.last() else { return true };
        last <= tol && self.residuals.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

/// Difference quotients `(T_h u - u) / h` over a decreasing sequence of `h`.
#[derive(Debug, Clone)]
pub struct GeneratorSweep {
    pub steps: Vec<f64>,
    pub probes: Vec<GridFunction>,
    /// Richardson combination of each consecutive pair of probes, assuming
    /// first-order error.
    pub extrapolated: Vec<GridFunction>,
    /// `log(|D_{k-1} - D_k| / |D_k - D_{k+1}|) / log(h_{k-1} / h_k)` per
    /// consecutive triple, measured in the sup norm over the chosen nodes.
    pub observed_orders: Vec<f64>,
}

impl GeneratorSweep {
    /// Richardson value from the smallest pair of steps.
    pub fn best(&self) -> &GridFunction {
        self.extrapolated.last().unwrap_or_else(|| self.probes.last().expect("sweep has at least one step"))
    }
}

impl SemigroupContext {
    /// Checks the hypotheses under which `T_t` is a strongly continuous
    /// semigroup and refuses the pair otherwise.
    pub fn new(family: EvolutionFamily, flow: RealSemiflow, cfg: &HypothesisConfig) -> Result<Self> {
        let hypothesis = check_hypothesis(&flow, cfg)?;
        Ok(SemigroupContext { family, flow, bound: None, hypothesis })
    }

    /// No hypothesis check; for exploring pairs outside the theory.
    pub fn new_unchecked(family: EvolutionFamily, flow: RealSemiflow) -> Self {
        SemigroupContext { family, flow, bound: None, hypothesis: Hypothesis::Unchecked }
    }

    pub fn with_bound(mut self, bound: GrowthBound) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn family(&self) -> &EvolutionFamily {
        &self.family
    }

    pub fn flow(&self) -> &RealSemiflow {
        &self.flow
    }

    pub fn bound(&self) -> Option<&GrowthBound> {
        self.bound.as_ref()
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.hypothesis
    }

    fn rate(&self) -> Result<&GrowthRate> {
        self.flow
            .growth_rate()
            .ok_or_else(|| Error::InvalidInput(format!("semiflow {} is not generated by a growth rate", self.flow.name())))
    }

    /// `(T_t u)(s) = U(s, phi_t(s)) u(phi_t(s))` at every node of `u`.
    pub fn apply_t(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return u.with_values(&u.values());
        }
        let (lo, hi) = u.span();
        let values: Vec<Vector> = u
            .nodes()
            .par_iter()
            .map(|&s| -> Result<Vector> {
                let x = self.flow.eval(t, s)?;
                if !(x >= lo && x <= hi) {
                    return Ok(Vector::zeros(u.dim()));
                }
                Ok(self.family.transition(s, x)? * u.eval(x))
            })
            .collect::<Result<_>>()?;
        u.with_values(&values)
    }

    /// `||T_t T_tau u - T_{t + tau} u||` over the nodes.
    pub fn check_semigroup_law(&self, t: f64, tau: f64, u: &GridFunction) -> Result<f64> {
        let lhs = self.apply_t(t, &self.apply_t(tau, u)?)?;
        let rhs = self.apply_t(t + tau, u)?;
        Ok(lhs.sup_distance(&rhs))
    }

    pub fn check_strong_continuity(&self, u: &GridFunction, times: &[f64]) -> Result<ContinuityTrace> {
        let residuals = times
            .iter()
            .map(|&t| Ok(self.apply_t(t, u)?.sup_distance(u)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(ContinuityTrace { times: times.to_vec(), residuals })
    }

    /// `V(t, s) = U(mu^{-1}(t), mu^{-1}(s))`.
    pub fn rescaled_family(&self) -> Result<EvolutionFamily> {
        Ok(self.family.rescaled(self.rate()?))
    }

    /// `T_t u - F^{-1} S_t F u`, measured over the nodes of `u`.
    pub fn check_similarity(&self, t: f64, u: &GridFunction) -> Result<f64> {
        let mu = self.rate()?;
        let v = rescale_f(u, mu)?;
        let sv = apply_classical(&self.rescaled_family()?, t, &v)?;
        let back = rescale_finv(&sv, mu)?;
        let tu = self.apply_t(t, u)?;
        Ok(tu.sup_distance(&back))
    }

    /// `(T_h u - u) / h`.
    pub fn apply_generator_fd(&self, u: &GridFunction, h: f64) -> Result<GridFunction> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("difference step must be positive, got {h}")));
        }
        let th = self.apply_t(h, u)?;
        let values: Vec<Vector> = (0..u.len()).map(|i| (th.value(i) - u.value(i)) / h).collect();
        u.with_values(&values)
    }

    /// Difference quotients for each step in `steps` (decreasing), with
    /// Richardson extrapolation between consecutive steps. Observed orders
    /// are measured on the node indices in `measure` (all nodes if empty).
    pub fn generator_sweep(&self, u: &GridFunction, steps: &[f64], measure: &[usize]) -> Result<GeneratorSweep> {
        if steps.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let probes: Vec<GridFunction> = steps.iter().map(|&h| self.apply_generator_fd(u, h)).collect::<Result<_>>()?;
        let idx: Vec<usize> = if measure.is_empty() { (0..u.len()).collect() } else { measure.to_vec() };
        let mut extrapolated = Vec::new();
        for k in 1..probes.len() {
            let q = steps[k - 1] / steps[k];
            let vals: Vec<Vector> =
                (0..u.len()).map(|i| (probes[k].value(i) * q - probes[k - 1].value(i)) / (q - 1.0)).collect();
            extrapolated.push(u.with_values(&vals)?);
        }
        let dist = |a: &GridFunction, b: &GridFunction| -> f64 {
            idx.iter().map(|&i| (a.value(i) - b.value(i)).norm()).fold(0.0, f64::max)
        };
        let mut observed_orders = Vec::new();
        for k in 1..probes.len().saturating_sub(1) {
            let e1 = dist(&probes[k - 1], &probes[k]);
            let e2 = dist(&probes[k], &probes[k + 1]);
            observed_orders.push((e1 / e2).ln() / (steps[k - 1] / steps[k]).ln());
        }
        Ok(GeneratorSweep { steps: steps.to_vec(), probes, extrapolated, observed_orders })
    }
}

fn check_hypothesis(flow: &RealSemiflow, cfg: &HypothesisConfig) -> Result<Hypothesis> {
    if let Some(mu) = flow.growth_rate() {
        let ell = match mu.ell() {
            Some(e) => e,
            None => mu.classify_ell(&cfg.ell_probe)?.ell,
        };
        return match ell {
            Ell::Infinite => Ok(Hypothesis::UnboundedRate),
            Ell::Finite(l) => Err(Error::HypothesisViolated(format!(
                "growth rate {} is bounded above by {l}; the semigroup needs ell = +inf",
                mu.name()
            ))),
        };
    }
    match flow.classify(&cfg.grid, &cfg.omega)?.verdict {
        Classification::NonDegenerate => match flow.orbit_upper_limit(1.0, cfg.s_horizon)? {
            Limit::PlusInfinity => Ok(Hypothesis::EscapingOrbits),
            other => Err(Error::HypothesisViolated(format!("phi_1(s) tends to {other} as s -> inf"))),
        },
        Classification::Degenerate { .. } => match flow.omega_upper_limit(cfg.s_horizon, &cfg.omega)? {
            Limit::PlusInfinity => Ok(Hypothesis::UnboundedOmega),
            other => Err(Error::HypothesisViolated(format!(
                "degenerate semiflow with omega(s) -> {other} as s -> inf"
            ))),
        },
    }
}

/// `F u = u o mu^{-1}`: node `s_i` moves to `mu(s_i)`, values unchanged.
pub fn rescale_f(u: &GridFunction, mu: &GrowthRate) -> Result<GridFunction> {
    let nodes: Vec<f64> = u.nodes().iter().map(|&s| mu.eval(s)).collect();
    let profile = u.profile().map(|p| {
        let p = p.clone();
        let mu = mu.clone();
        let dim = u.dim();
        std::sync::Arc::new(move |r: f64| match mu.invert(r) {
            Ok(s) => p(s),
            Err(_) => Vector::from_element(dim, f64::NAN),
        }) as crate::grid_function::VectorFn
    });
    let kinks: Vec<f64> = u.kinks().iter().map(|&k| mu.eval(k)).collect();
    Ok(u.renode(nodes, profile)?.with_kinks(kinks))
}

/// `F^{-1} v = v o mu`. Nodes return to their recorded pre-images when `v`
/// came from [`rescale_f`].
pub fn rescale_finv(v: &GridFunction, mu: &GrowthRate) -> Result<GridFunction> {
    let nodes: Vec<f64> = match v.preimage() {
        Some(pre) if pre.len() == v.len() => pre.to_vec(),
        _ => v.nodes().iter().map(|&r| mu.invert(r)).collect::<Result<_>>()?,
    };
    let profile = v.profile().map(|p| {
        let p = p.clone();
        let mu = mu.clone();
        std::sync::Arc::new(move |s: f64| p(mu.eval(s))) as crate::grid_function::VectorFn
    });
    let kinks: Vec<f64> = v.kinks().iter().map(|&k| mu.invert(k)).collect::<Result<_>>()?;
    Ok(v.renode(nodes, profile)?.with_kinks(kinks))
}

/// The classical evolution semigroup `S_t v(r) = V(r, r - t) v(r - t)`.
pub fn apply_classical(v_family: &EvolutionFamily, t: f64, v: &GridFunction) -> Result<GridFunction> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return v.with_values(&v.values());
    }
    let (lo, hi) = v.span();
    let values: Vec<Vector> = v
        .nodes()
        .par_iter()
        .map(|&r| -> Result<Vector> {
            let x = r - t;
            if !(x >= lo && x <= hi) {
                return Ok(Vector::zeros(v.dim()));
            }
            Ok(v_family.transition(r, x)? * v.eval(x))
        })
        .collect::<Result<_>>()?;
    v.with_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_function::bump;
    use nalgebra::DVector;

    fn translation_ctx() -> SemigroupContext {
        SemigroupContext::new(EvolutionFamily::identity(1), RealSemiflow::translation(), &HypothesisConfig::default())
            .unwrap()
    }

    fn bump_fn(h: f64) -> GridFunction {
        let n = (8.0 / h).round() as usize + 1;
        let b = bump(0.0, 2.0);
        GridFunction::sample(GridFunction::uniform_nodes(-4.0, 4.0, n), 1, move |x| DVector::from_element(1, b(x))).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let u = bump_fn(0.1);
        assert_eq!(translation_ctx().apply_t(0.0, &u).unwrap().values(), u.values());
    }

    #[test]
    fn translation_shifts_samples() {
        let u = bump_fn(0.1);
        let tu = translation_ctx().apply_t(0.5, &u).unwrap();
        let b = bump(0.0, 2.0);
        for (i, &s) in u.nodes().iter().enumerate() {
            assert!((tu.value(i)[0] - b(s - 0.5)).abs() < 1e-12 || s - 0.5 < -4.0);
        }
    }

    #[test]
    fn node_aligned_translation_law_is_exact() {
        let u = bump_fn(0.125);
        let r = translation_ctx().check_semigroup_law(0.25, 0.5, &u).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn refuses_bounded_rate_and_bounded_omega() {
        let cfg = HypothesisConfig::default();
        let err = SemigroupContext::new(EvolutionFamily::identity(1), RealSemiflow::generated(GrowthRate::neg_exp()), &cfg);
        assert!(matches!(err, Err(Error::HypothesisViolated(_))));
        let err = SemigroupContext::new(EvolutionFamily::identity(1), crate::semiflow::blow_down(0.01), &cfg);
        assert!(matches!(err, Err(Error::HypothesisViolated(_))));
        let ok = SemigroupContext::new(EvolutionFamily::identity(1), crate::semiflow::exponential_contraction(), &cfg);
        assert_eq!(ok.unwrap().hypothesis(), Hypothesis::UnboundedOmega);
    }

    #[test]
    fn rescaling_round_trip_is_exact() {
        let mu = GrowthRate::polynomial_log();
        let u = bump_fn(0.1);
        let v = rescale_f(&u, &mu).unwrap();
        assert_eq!(v.sup_norm(), u.sup_norm());
        let w = rescale_finv(&v, &mu).unwrap();
        assert_eq!(w.nodes(), u.nodes());
        assert_eq!(w.values(), u.values());
    }

    #[test]
    fn translation_generator_is_minus_derivative() {
        let u = bump_fn(0.05);
        let g = translation_ctx().apply_generator_fd(&u, 1e-3).unwrap();
        let x = u.nodes()[100];
        let i = 100;
        // u = (1 - x^2/4)^3, u' = -3 x / 2 (1 - x^2/4)^2.
        let du = -1.5 * x * (1.0 - x * x / 4.0).powi(2);
        // The probe interpolates linearly, so compare with the node secant.
        let secant = (u.value(i)[0] - u.value(i - 1)[0]) / 0.05;
        assert!((g.value(i)[0] + secant).abs() < 1e-9);
        assert!((secant - du).abs() < 0.05);
    }
}
