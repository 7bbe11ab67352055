//! `mu`-exponential dichotomies.
//!
//! A family `U` has a `mu`-exponential dichotomy with projections `P(t)`
//! when `P(t) U(t, s) = U(t, s) P(s)`, `U(t, s)` maps `ker P(s)` onto
//! `ker P(t)` invertibly, and for `t >= s`
//!
//! ```text
//! ||U(t, s) P(s)||     <= N e^{-nu (mu(t) - mu(s))}
//! ||U_Q(s, t) Q(t)||   <= N e^{-nu (mu(t) - mu(s))}
//! ```
//!
//! where `Q = Id - P` and `U_Q(s, t)` is the inverse of the restriction.

pub mod green;
pub mod heuristic;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution_family::EvolutionFamily;
use crate::fit::{anchored_slope, max_excess, CloudPoint};
use crate::growth_rate::GrowthRate;
use crate::linalg::{projection_rank, range_basis, smallest_singular_value, spectral_norm, Matrix};

pub use green::{solve_green, verify_integral_equation, GreenFunction, IntegralEquationReport};
pub use heuristic::{infer_projection_heuristic, HeuristicOptions, ProjectionCandidate};

/// Singular values below this count as zero when taking ranges.
pub const DEFAULT_FLOOR: f64 = 1e-10;

#[derive(Clone)]
enum FieldKind {
    Constant { p: Matrix, q_basis: Matrix },
    ClosedForm(Arc<dyn Fn(f64) -> Matrix + Send + Sync>),
    Tabulated { times: Vec<f64>, mats: Vec<Matrix> },
}

/// A projection-valued map `t -> P(t)`.
#[derive(Clone)]
pub struct ProjectionField {
    name: String,
    dim: usize,
    kind: FieldKind,
}

impl fmt::Debug for ProjectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProjectionField").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub samples: usize,
    pub rank: usize,
    /// `max ||P(t)^2 - P(t)||`.
    pub idempotency: f64,
    pub max_norm: f64,
    /// The declared uniform bound, if any, and whether it holds.
    pub declared_bound: Option<f64>,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub pairs: usize,
    /// `max ||P(t) U(t, s) - U(t, s) P(s)||`.
    pub max_commutation: f64,
    /// Same, divided by `max(1, ||U(t, s)||)`.
    pub max_relative_commutation: f64,
    /// Smallest singular value of `U(t, s)` restricted to `ker P(s)`
    /// (`+inf` when the kernel is trivial).
    pub min_restricted_sigma: f64,
    pub invertible: bool,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub floor: f64,
    /// Largest admissible relative commutation residual.
    pub compatibility_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { floor: DEFAULT_FLOOR, compatibility_tol: 1e-8 }
    }
}

/// Constants `(N, nu)` witnessing the dichotomy on a grid of pairs.
#[derive(Debug, Clone, Serialize)]
pub struct DichotomyCertificate {
    pub projection: String,
    pub rate: String,
    pub rank: usize,
    pub n: f64,
    pub nu: f64,
    pub pairs: usize,
    /// Largest `L - ln N + nu d` for each inequality; non-positive up to
    /// rounding.
    pub max_slack_p: f64,
    pub max_slack_q: f64,
    pub compatibility: CompatibilityReport,
    pub p_cloud: Vec<CloudPoint>,
    pub q_cloud: Vec<CloudPoint>,
}

impl DichotomyCertificate {
    /// `N e^{-nu |d|}`.
    pub fn decay(&self, d: f64) -> f64 {
        self.n * (-self.nu * d.abs()).exp()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyViolation {
    pub reason: String,
    /// Fitted decay rate; not positive, or the family is not compatible.
    pub nu: f64,
    pub n: f64,
    /// Pairs `(t, s)` whose measured norms grow, for either inequality.
    pub offending_pairs: Vec<(f64, f64)>,
    pub compatibility: CompatibilityReport,
    pub p_cloud: Vec<CloudPoint>,
    pub q_cloud: Vec<CloudPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub enum DichotomyOutcome {
    Certified(DichotomyCertificate),
    Violated(DichotomyViolation),
}

impl DichotomyOutcome {
    pub fn certificate(&self) -> Option<&DichotomyCertificate> {
        match self {
            DichotomyOutcome::Certified(c) => Some(c),
            DichotomyOutcome::Violated(_) => None,
        }
    }
}

impl ProjectionField {
    pub fn constant(name: impl Into<String>, p: Matrix) -> Self {
        let n = p.nrows();
        let q_basis = range_basis(&(Matrix::identity(n, n) - &p), DEFAULT_FLOOR);
        ProjectionField { name: name.into(), dim: n, kind: FieldKind::Constant { p, q_basis } }
    }

    pub fn closed_form(name: impl Into<String>, dim: usize, f: impl Fn(f64) -> Matrix + Send + Sync + 'static) -> Self {
        ProjectionField { name: name.into(), dim, kind: FieldKind::ClosedForm(Arc::new(f)) }
    }

    /// Piecewise-constant field: `P(t)` is the matrix at the nearest node.
    pub fn tabulated(name: impl Into<String>, times: Vec<f64>, mats: Vec<Matrix>) -> Result<Self> {
        if times.is_empty() || times.len() != mats.len() {
            return Err(Error::InvalidInput("tabulated projection needs one matrix per node".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("projection nodes must increase strictly".into()));
        }
        let dim = mats[0].nrows();
        Ok(ProjectionField { name: name.into(), dim, kind: FieldKind::Tabulated { times, mats } })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: f64) -> Matrix {
        match &self.kind {
            FieldKind::Constant { p, .. } => p.clone(),
            FieldKind::ClosedForm(f) => f(t),
            FieldKind::Tabulated { times, mats } => {
                let i = times.partition_point(|&x| x < t);
                let j = if i == 0 {
                    0
                } else if i == times.len() || t - times[i - 1] <= times[i] - t {
                    i - 1
                } else {
                    i
                };
                mats[j].clone()
            }
        }
    }

    pub fn complement(&self, t: f64) -> Matrix {
        Matrix::identity(self.dim, self.dim) - self.at(t)
    }

    /// Orthonormal basis of `ker P(t) = range Q(t)`.
    pub fn kernel_basis(&self, t: f64, floor: f64) -> Matrix {
        match &self.kind {
            FieldKind::Constant { q_basis, .. } => q_basis.clone(),
            _ => range_basis(&self.complement(t), floor),
        }
    }

    /// `t -> P(mu^{-1}(t))`, the field seen by the rescaled family.
    pub fn rescaled(&self, mu: &GrowthRate) -> Self {
        match &self.kind {
            FieldKind::Constant { p, .. } => ProjectionField::constant(format!("{}@{}", self.name, mu.name()), p.clone()),
            _ => {
                let me = self.clone();
                let mu = mu.clone();
                let dim = self.dim;
                ProjectionField::closed_form(format!("{}@{}", self.name, mu.name()), dim, move |t| match mu.invert(t) {
                    Ok(s) => me.at(s),
                    Err(_) => Matrix::from_element(dim, dim, f64::NAN),
                })
            }
        }
    }

    /// Idempotency, constant rank and (optionally) a declared norm bound at
    /// the given times.
    pub fn check(&self, times: &[f64], declared_bound: Option<f64>) -> Result<ProjectionReport> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut rank = None;
        let mut idem: f64 = 0.0;
        let mut max_norm: f64 = 0.0;
        for &t in times {
            let p = self.at(t);
            idem = idem.max(spectral_norm(&(&p * &p - &p)));
            max_norm = max_norm.max(spectral_norm(&p));
            let r = projection_rank(&p);
            match rank {
                None => rank = Some(r),
                Some(expected) if expected != r => return Err(Error::RankMismatch { expected, found: r, at: t }),
                _ => {}
            }
        }
        let within_bound = declared_bound.map(|b| max_norm <= b).unwrap_or(true);
        Ok(ProjectionReport {
            samples: times.len(),
            rank: rank.unwrap_or(0),
            idempotency: idem,
            max_norm,
            declared_bound,
            within_bound,
        })
    }

    /// `max ||P(t_{i+1}) - P(t_i)||` over consecutive times.
    pub fn variation(&self, times: &[f64]) -> f64 {
        times.windows(2).map(|w| spectral_norm(&(self.at(w[1]) - self.at(w[0])))).fold(0.0, f64::max)
    }
}

/// Matrix of `U(t, s)` restricted to `ker P(s) -> ker P(t)` in orthonormal
/// kernel coordinates.
fn restricted_block(u: &Matrix, bt: &Matrix, bs: &Matrix) -> Matrix {
    bt.transpose() * u * bs
}

/// `U_Q(s, t) Q(t)` for `t >= s`: maps `X` at time `t` back to `ker P(s)`.
/// Computed by solving with the restricted block rather than inverting it.
pub fn backward_on_kernel(
    family: &EvolutionFamily,
    p: &ProjectionField,
    t: f64,
    s: f64,
    floor: f64,
) -> Result<Matrix> {
    let n = family.dim();
    let bs = p.kernel_basis(s, floor);
    let k = bs.ncols();
    if k == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let bt = p.kernel_basis(t, floor);
    if bt.ncols() != k {
        return Err(Error::RankMismatch { expected: k, found: bt.ncols(), at: t });
    }
    let u = family.transition(t, s)?;
    let r = restricted_block(&u, &bt, &bs);
    let sigma = smallest_singular_value(&r);
    if !(sigma >= floor) {
        return Err(Error::SingularRestriction { t, s, sigma });
    }
    let rhs = bt.transpose() * p.complement(t);
    let x = r
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularRestriction { t, s, sigma })?;
    Ok(bs * x)
}

/// Commutation residual and invertibility on `ker P` over ordered pairs.
pub fn check_compatibility(
    family: &EvolutionFamily,
    p: &ProjectionField,
    pairs: &[(f64, f64)],
    floor: f64,
) -> Result<CompatibilityReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut times: Vec<f64> = pairs.iter().flat_map(|&(t, s)| [t, s]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let rank = p.check(&times, None)?.rank;
    let rows: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(t, s)| -> Result<(f64, f64, f64)> {
            let u = family.transition(t, s)?;
            let c = spectral_norm(&(p.at(t) * &u - &u * p.at(s)));
            let rel = c / spectral_norm(&u).max(1.0);
            let bs = p.kernel_basis(s, floor);
            let sigma = if bs.ncols() == 0 {
                f64::INFINITY
            } else {
                smallest_singular_value(&restricted_block(&u, &p.kernel_basis(t, floor), &bs))
            };
            Ok((c, rel, sigma))
        })
        .collect::<Result<_>>()?;
    let mut r = CompatibilityReport {
        pairs: pairs.len(),
        max_commutation: 0.0,
        max_relative_commutation: 0.0,
        min_restricted_sigma: f64::INFINITY,
        invertible: true,
        rank,
    };
    for (c, rel, sigma) in rows {
        r.max_commutation = r.max_commutation.max(c);
        r.max_relative_commutation = r.max_relative_commutation.max(rel);
        r.min_restricted_sigma = r.min_restricted_sigma.min(sigma);
    }
    r.invertible = r.min_restricted_sigma >= floor;
    Ok(r)
}

/// Fits the dichotomy constants over ordered pairs `t >= s`.
///
/// `N` is pinned by the diagonal, where the inequalities read
/// `||P(s)|| <= N` and `||Q(s)|| <= N`; `nu` is then the largest rate that
/// works for every pair. The fit fails when `nu` is not positive.
pub fn certify_dichotomy(
    family: &EvolutionFamily,
    mu: &GrowthRate,
    p: &ProjectionField,
    pairs: &[(f64, f64)],
    opts: &CertifyOptions,
) -> Result<DichotomyOutcome> {
    if pairs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&(t, s)) = pairs.iter().find(|(t, s)| t < s) {
        return Err(Error::TimeOrderViolation { t, s });
    }
    let compatibility = check_compatibility(family, p, pairs, opts.floor)?;
    let mut times: Vec<f64> = pairs.iter().flat_map(|&(t, s)| [t, s]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let ln_n = times
        .iter()
        .map(|&x| spectral_norm(&p.at(x)).max(spectral_norm(&p.complement(x))).ln())
        .fold(0.0, f64::max);

    if compatibility.max_relative_commutation > opts.compatibility_tol || !compatibility.invertible {
        let reason = if compatibility.invertible {
            format!("P does not commute with U (relative residual {:e})", compatibility.max_relative_commutation)
        } else {
            format!("U is not invertible on ker P (sigma {:e})", compatibility.min_restricted_sigma)
        };
        return Ok(DichotomyOutcome::Violated(DichotomyViolation {
            reason,
            nu: f64::NAN,
            n: ln_n.exp(),
            offending_pairs: Vec::new(),
            compatibility,
            p_cloud: Vec::new(),
            q_cloud: Vec::new(),
        }));
    }

    let rows: Vec<(CloudPoint, CloudPoint)> = pairs
        .par_iter()
        .map(|&(t, s)| -> Result<(CloudPoint, CloudPoint)> {
            let d = mu.eval(t) - mu.eval(s);
            let lp = spectral_norm(&(family.transition(t, s)? * p.at(s))).ln();
            let lq = spectral_norm(&backward_on_kernel(family, p, t, s, opts.floor)?).ln();
            Ok((CloudPoint { t, s, d, l: lp }, CloudPoint { t, s, d, l: lq }))
        })
        .collect::<Result<_>>()?;
    let (p_cloud, q_cloud): (Vec<CloudPoint>, Vec<CloudPoint>) = rows.into_iter().unzip();

    // Decay rates are slopes of the negated clouds.
    let slope = anchored_slope(&p_cloud, ln_n, 0.0).max(anchored_slope(&q_cloud, ln_n, 0.0));
    let nu = -slope;
    if !(nu > 0.0) {
        let offending_pairs = p_cloud
            .iter()
            .chain(q_cloud.iter())
            .filter(|c| c.d > 0.0 && c.l >= ln_n)
            .map(|c| (c.t, c.s))
            .collect();
        return Ok(DichotomyOutcome::Violated(DichotomyViolation {
            reason: format!("no positive decay rate: best nu = {nu}"),
            nu,
            n: ln_n.exp(),
            offending_pairs,
            compatibility,
            p_cloud,
            q_cloud,
        }));
    }
    let nu = if nu.is_finite() { nu } else { f64::MAX };
    Ok(DichotomyOutcome::Certified(DichotomyCertificate {
        projection: p.name().to_string(),
        rate: mu.name().to_string(),
        rank: compatibility.rank,
        n: ln_n.exp(),
        nu,
        pairs: pairs.len(),
        max_slack_p: max_excess(&p_cloud, ln_n, -nu),
        max_slack_q: max_excess(&q_cloud, ln_n, -nu),
        compatibility,
        p_cloud,
        q_cloud,
    }))
}
