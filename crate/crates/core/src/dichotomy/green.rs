//! The Green function of a dichotomy and the inverse of the generator.
//!
//! With `Gamma(t, s) = U(t, s) P(s)` for `t > s` and `-U_Q(t, s) Q(s)` for
//! `t < s`, the inverse generator is
//!
//! ```text
//! (G^{-1} f)(t) = -∫ mu'(xi) Gamma(t, xi) f(xi) dxi
//! ```
//!
//! so `u = G^{-1} f` satisfies `G u = f`. Equivalently `u` solves the
//! integral equation `u(t) = U(t, s) u(s) + ∫_s^t mu'(xi) U(t, xi) g(xi) dxi`
//! with forcing `g = -f`.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{backward_on_kernel, DichotomyCertificate, ProjectionField, DEFAULT_FLOOR};
use crate::error::{Error, Result};
use crate::evolution_family::EvolutionFamily;
use crate::grid_function::GridFunction;
use crate::growth_rate::GrowthRate;
use crate::linalg::{Matrix, Vector};
use crate::quadrature::{integrate_vec, QuadOptions};

#[derive(Debug, Clone)]
pub struct GreenFunction {
    family: EvolutionFamily,
    projection: ProjectionField,
    floor: f64,
}

impl GreenFunction {
    pub fn new(family: EvolutionFamily, projection: ProjectionField) -> Result<Self> {
        if family.dim() != projection.dim() {
            return Err(Error::InvalidInput(format!(
                "family has dimension {} but projection {}",
                family.dim(),
                projection.dim()
            )));
        }
        Ok(GreenFunction { family, projection, floor: DEFAULT_FLOOR })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn family(&self) -> &EvolutionFamily {
        &self.family
    }

    pub fn projection(&self) -> &ProjectionField {
        &self.projection
    }

    /// `Gamma(t, s)`; undefined on the diagonal.
    pub fn green(&self, t: f64, s: f64) -> Result<Matrix> {
        if t > s {
            Ok(self.family.transition(t, s)? * self.projection.at(s))
        } else if t < s {
            Ok(-backward_on_kernel(&self.family, &self.projection, s, t, self.floor)?)
        } else {
            Err(Error::Undefined(t))
        }
    }
}

/// Quadrature breakpoints for an integrand built from `f` and `mu`.
fn breakpoints(f: &GridFunction, mu: &GrowthRate, extra: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = extra.to_vec();
    b.extend_from_slice(f.kinks());
    b.extend_from_slice(mu.kinks());
    if !f.has_profile() {
        b.extend_from_slice(f.nodes());
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫_a^b mu'(xi) k(xi) f(xi) dxi` with a fallible matrix kernel.
fn weighted_integral(
    kernel: impl Fn(f64) -> Result<Matrix>,
    mu: &GrowthRate,
    f: &GridFunction,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Vector> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let n = f.dim();
    let integrand = |xi: f64| -> Vector {
        let fx = f.eval(xi);
        if fx.iter().all(|&v| v == 0.0) {
            return Vector::zeros(n);
        }
        match kernel(xi) {
            Ok(k) => k * fx * mu.derivative(xi),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Vector::from_element(n, f64::NAN)
            }
        }
    };
    let r = integrate_vec(integrand, a, b, n, breaks, opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

fn solve_at(green: &GreenFunction, mu: &GrowthRate, f: &GridFunction, t: f64, opts: &QuadOptions) -> Result<Vector> {
    let (lo, hi) = f.span();
    let breaks = breakpoints(f, mu, &[t]);
    let v = weighted_integral(|xi| green.green(t, xi), mu, f, lo, hi, &breaks, opts)?;
    Ok(-v)
}

/// `u = G^{-1} f` sampled at `nodes`. The result carries the solver as its
/// profile, so off-node evaluations are exact up to quadrature.
pub fn solve_green(
    green: &GreenFunction,
    mu: &GrowthRate,
    cert: &DichotomyCertificate,
    f: &GridFunction,
    nodes: Vec<f64>,
    opts: &QuadOptions,
) -> Result<GridFunction> {
    if !mu.has_derivative() && mu.table().is_none() {
        return Err(Error::InvalidInput(format!("growth rate {} has no derivative", mu.name())));
    }
    if cert.projection != green.projection().name() {
        return Err(Error::InvalidInput(format!(
            "certificate is for projection {} but the Green function uses {}",
            cert.projection,
            green.projection().name()
        )));
    }
    if f.dim() != green.family().dim() {
        return Err(Error::InvalidInput("forcing dimension does not match the family".into()));
    }
    let values: Vec<Vector> = nodes.par_iter().map(|&t| solve_at(green, mu, f, t, opts)).collect::<Result<_>>()?;
    let g = Arc::new(green.clone());
    let m = mu.clone();
    let forcing = f.clone();
    let q = *opts;
    let n = f.dim();
    let profile = move |t: f64| solve_at(&g, &m, &forcing, t, &q).unwrap_or_else(|_| Vector::from_element(n, f64::NAN));
    let mut kinks: Vec<f64> = f.kinks().to_vec();
    kinks.extend_from_slice(mu.kinks());
    Ok(GridFunction::from_values(nodes, &values)?.attach_profile(Arc::new(profile)).with_kinks(kinks))
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralEquationReport {
    pub checked: usize,
    /// Pairs with an endpoint outside the node span of `u`.
    pub skipped: usize,
    pub max_residual: f64,
    pub worst: Option<(f64, f64)>,
}

impl IntegralEquationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.checked > 0 && self.max_residual <= tol
    }
}

/// Largest `||u(t) - U(t, s) u(s) - ∫_s^t mu'(xi) U(t, xi) g(xi) dxi||` over
/// pairs inside the node span of `u`. A zero residual means `G u = -g`.
pub fn verify_integral_equation(
    family: &EvolutionFamily,
    mu: &GrowthRate,
    u: &GridFunction,
    g: &GridFunction,
    pairs: &[(f64, f64)],
    opts: &QuadOptions,
) -> Result<IntegralEquationReport> {
    if let Some(&(t, s)) = pairs.iter().find(|(t, s)| t < s) {
        return Err(Error::TimeOrderViolation { t, s });
    }
    let (lo, hi) = u.span();
    let inside: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(t, s)| s >= lo && t <= hi).collect();
    let skipped = pairs.len() - inside.len();
    let breaks = breakpoints(g, mu, &[]);
    let (glo, ghi) = g.span();
    let residuals: Vec<(f64, (f64, f64))> = inside
        .par_iter()
        .map(|&(t, s)| -> Result<(f64, (f64, f64))> {
            let a = s.max(glo);
            let b = t.min(ghi);
            let forcing = if a < b {
                weighted_integral(|xi| family.transition(t, xi), mu, g, a, b, &breaks, opts)?
            } else {
                Vector::zeros(g.dim())
            };
            let r = u.eval(t) - family.transition(t, s)? * u.eval(s) - forcing;
            Ok((r.norm(), (t, s)))
        })
        .collect::<Result<_>>()?;
    let mut report = IntegralEquationReport { checked: inside.len(), skipped, max_residual: 0.0, worst: None };
    for (r, pair) in residuals {
        if !(r <= report.max_residual) {
            report.max_residual = r;
            report.worst = Some(pair);
        }
    }
    Ok(report)
}
