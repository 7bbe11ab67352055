//! Scenario files: TOML documents naming the objects to build and the
//! pipelines to run on them. See `docs/scenario-schema.md`.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use evosemi::dichotomy::{infer_projection_heuristic, HeuristicOptions, ProjectionField};
use evosemi::linalg::{Matrix, Vector};
use evosemi::ode::OdeConfig;
use evosemi::semiflow::{blow_down, exponential_contraction};
use evosemi::{Ell, EvolutionFamily, GridFunction, GrowthRate, RealSemiflow};
use serde::Deserialize;
use thiserror::Error;

use crate::expr::{Env, Expr, Unary, Var};

#[derive(Debug, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

pub const PIPELINES: [&str; 9] = [
    "classify-semiflow",
    "recover-mu",
    "check-family",
    "fit-growth-bound",
    "check-semigroup",
    "check-similarity",
    "certify-dichotomy",
    "solve-green",
    "verify-integral-equation",
];

pub const DEFAULT_TOLERANCES: [(&str, f64); 10] = [
    ("axioms", 1e-8),
    ("recover", 1e-6),
    ("cocycle", 1e-6),
    ("growth", 1e-9),
    ("semigroup", 1e-3),
    ("continuity", 1e-2),
    ("similarity", 1e-10),
    ("certificate", 1e-9),
    ("generator", 1e-3),
    ("integral", 1e-6),
];

/// Absolute tolerance handed to the adaptive quadrature; not a pass/fail
/// threshold.
pub const QUADRATURE_KEY: &str = "quadrature";
const DEFAULT_QUADRATURE: f64 = 1e-12;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    pipelines: Option<Vec<String>>,
    seed: Option<u64>,
    output: Option<String>,
    rate: Option<RawRate>,
    semiflow: Option<RawSemiflow>,
    family: Option<RawFamily>,
    projection: Option<RawProjection>,
    #[serde(default)]
    functions: BTreeMap<String, RawFunction>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    grid: Option<RawGrid>,
    recover: Option<RawRecover>,
    semigroup: Option<RawSemigroup>,
    green: Option<RawGreen>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawRate {
    Identity {},
    PolynomialLog {},
    NegExp {},
    OddPower {
        n: u32,
    },
    Expression {
        expr: String,
        derivative: Option<String>,
        inverse: Option<String>,
        /// `"infinite"` or a number.
        ell: Option<toml::Value>,
        #[serde(default)]
        kinks: Vec<f64>,
    },
    Table {
        path: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawSemiflow {
    Generated {},
    Translation {},
    ClosedForm { expr: String, name: Option<String> },
    ExpContraction {},
    BlowDown { kappa: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawFamily {
    Identity { dim: usize },
    PolynomialDecay { dim: usize },
    Diagonal {},
    Projected { matrix: Vec<Vec<f64>> },
    ClosedForm { entries: Vec<Vec<String>> },
    Ode { coefficient: Vec<Vec<String>>, rtol: Option<f64>, panel: Option<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawProjection {
    Constant { matrix: Vec<Vec<f64>> },
    ClosedForm { entries: Vec<Vec<String>> },
    Heuristic { window: [f64; 2], steps: Option<usize>, gap: Option<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawFunction {
    Expression {
        components: Vec<String>,
        support: [f64; 2],
        nodes: usize,
        #[serde(default)]
        kinks: Vec<f64>,
        /// Keep the expression for off-node evaluation (default true).
        profile: Option<bool>,
    },
    Table {
        path: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    lo: f64,
    hi: f64,
    nodes: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecover {
    window: [f64; 2],
    nodes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSemigroup {
    function: String,
    t: Option<f64>,
    tau: Option<f64>,
    continuity_times: Option<Vec<f64>>,
    similarity_times: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGreen {
    forcing: String,
    output: RawGrid,
    pairs: Option<usize>,
    pair_window: Option<[f64; 2]>,
    steps: Option<Vec<f64>>,
}

/// Pair grid `lo..hi` with `nodes` points per axis.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        GridFunction::uniform_nodes(self.lo, self.hi, self.nodes)
    }

    /// Ordered pairs `t >= s` from the grid points.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let x = self.points();
        let mut out = Vec::new();
        for i in 0..x.len() {
            for j in 0..=i {
                out.push((x[i], x[j]));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SemigroupSpec {
    pub function: String,
    pub t: f64,
    pub tau: f64,
    pub continuity_times: Vec<f64>,
    pub similarity_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GreenSpec {
    pub forcing: String,
    pub output: Grid,
    pub pairs: usize,
    pub pair_window: (f64, f64),
    pub steps: Vec<f64>,
}

/// A resolved scenario.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub pipelines: Vec<String>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub rate: Option<GrowthRate>,
    pub semiflow: Option<RealSemiflow>,
    pub family: Option<EvolutionFamily>,
    pub projection: Option<ProjectionField>,
    pub projection_heuristic: bool,
    pub functions: BTreeMap<String, GridFunction>,
    pub tolerances: BTreeMap<String, f64>,
    pub grid: Grid,
    pub recover: (f64, f64, usize),
    pub semigroup: Option<SemigroupSpec>,
    pub green: Option<GreenSpec>,
}

impl Scenario {
    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn function(&self, name: &str) -> &GridFunction {
        &self.functions[name]
    }
}

pub fn load(path: &Path, overrides: &[(String, f64)], seed: Option<u64>) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let default_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.strip_suffix(".toml").unwrap_or(n).to_string())
        .unwrap_or_else(|| "scenario".into());
    parse(&text, base, &default_name, overrides, seed)
}

pub fn parse(
    text: &str,
    base: &Path,
    default_name: &str,
    overrides: &[(String, f64)],
    seed: Option<u64>,
) -> Result<Scenario, ConfigError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let at = e.span().map(|s| line_of(text, s.start)).map(|l| format!(" (line {l})")).unwrap_or_default();
        ConfigError::new("scenario", format!("{msg}{at}"))
    })?;
    resolve(raw, base, default_name, overrides, seed)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].lines().count().max(1)
}

fn parse_expr(src: &str, path: &str, functions: &HashMap<String, Unary>) -> Result<Expr, ConfigError> {
    Expr::parse_with(src, functions).map_err(|e| ConfigError::new(path, format!("{e} in '{src}'")))
}

fn matrix_from_rows(rows: &[Vec<f64>], path: &str) -> Result<Matrix, ConfigError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(ConfigError::new(path, "expected a non-empty square matrix"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn expr_matrix(
    rows: &[Vec<String>],
    path: &str,
    functions: &HashMap<String, Unary>,
    allowed: &[Var],
) -> Result<Vec<Vec<Expr>>, ConfigError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(ConfigError::new(path, "expected a non-empty square matrix of expressions"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, src)| {
                    let at = format!("{path}[{i}][{j}]");
                    let e = parse_expr(src, &at, functions)?;
                    if let Some(v) = e.variables().iter().find(|v| !allowed.contains(v)) {
                        return Err(ConfigError::new(at, format!("variable {v} is not available here in '{src}'")));
                    }
                    Ok(e)
                })
                .collect()
        })
        .collect()
}

fn eval_matrix(m: &[Vec<Expr>], env: &Env) -> Matrix {
    let n = m.len();
    Matrix::from_fn(n, n, |i, j| m[i][j].eval(env))
}

fn build_rate(raw: RawRate, base: &Path) -> Result<GrowthRate, ConfigError> {
    Ok(match raw {
        RawRate::Identity {} => GrowthRate::identity(),
        RawRate::PolynomialLog {} => GrowthRate::polynomial_log(),
        RawRate::NegExp {} => GrowthRate::neg_exp(),
        RawRate::OddPower { n } => GrowthRate::odd_power(n),
        RawRate::Expression { expr, derivative, inverse, ell, kinks } => {
            let none = HashMap::new();
            let e = parse_expr(&expr, "rate.expr", &none)?;
            let name = expr.clone();
            let mut mu = GrowthRate::new(name, move |s| e.eval(&Env { t: s, s, xi: s }));
            if let Some(d) = derivative {
                let d = parse_expr(&d, "rate.derivative", &none)?;
                mu = mu.with_derivative(move |s| d.eval(&Env { t: s, s, xi: s }));
            }
            if let Some(inv) = inverse {
                let inv = parse_expr(&inv, "rate.inverse", &none)?;
                mu = mu.with_inverse(move |r| inv.eval(&Env { t: r, s: r, xi: r }));
            }
            match ell {
                None => {}
                Some(toml::Value::String(s)) if s == "infinite" => mu = mu.with_ell(Ell::Infinite),
                Some(toml::Value::Float(v)) => mu = mu.with_ell(Ell::Finite(v)),
                Some(toml::Value::Integer(v)) => mu = mu.with_ell(Ell::Finite(v as f64)),
                Some(other) => return Err(ConfigError::new("rate.ell", format!("expected \"infinite\" or a number, got {other}"))),
            }
            mu.with_kinks(kinks)
        }
        RawRate::Table { path } => {
            GrowthRate::from_csv(base.join(&path)).map_err(|e| ConfigError::new("rate.path", e.to_string()))?
        }
    })
}

fn rate_functions(rate: Option<&GrowthRate>) -> HashMap<String, Unary> {
    let mut f: HashMap<String, Unary> = HashMap::new();
    if let Some(mu) = rate {
        let m = mu.clone();
        f.insert("mu".into(), Arc::new(move |x| m.eval(x)));
        let m = mu.clone();
        f.insert("dmu".into(), Arc::new(move |x| m.derivative(x)));
        let m = mu.clone();
        f.insert("mu_inv".into(), Arc::new(move |x| m.invert(x).unwrap_or(f64::NAN)));
    }
    f
}

fn build_function(name: &str, raw: RawFunction, base: &Path) -> Result<GridFunction, ConfigError> {
    let path = format!("functions.{name}");
    match raw {
        RawFunction::Expression { components, support, nodes, kinks, profile } => {
            if components.is_empty() {
                return Err(ConfigError::new(format!("{path}.components"), "needs at least one component"));
            }
            if !(support[0] < support[1]) || nodes < 2 {
                return Err(ConfigError::new(format!("{path}.support"), "needs lo < hi and at least two nodes"));
            }
            let none = HashMap::new();
            let exprs: Vec<Expr> = components
                .iter()
                .enumerate()
                .map(|(i, c)| parse_expr(c, &format!("{path}.components[{i}]"), &none))
                .collect::<Result<_, _>>()?;
            let dim = exprs.len();
            let f = move |x: f64| Vector::from_iterator(dim, exprs.iter().map(|e| e.eval(&Env { t: x, s: x, xi: x })));
            let xs = GridFunction::uniform_nodes(support[0], support[1], nodes);
            let g = if profile.unwrap_or(true) {
                GridFunction::with_profile(xs, dim, f)
            } else {
                GridFunction::sample(xs, dim, f)
            };
            Ok(g.map_err(|e| ConfigError::new(&path, e.to_string()))?.with_kinks(kinks))
        }
        RawFunction::Table { path: file } => {
            GridFunction::read_csv(base.join(&file)).map_err(|e| ConfigError::new(format!("{path}.path"), e.to_string()))
        }
    }
}

fn resolve(
    raw: RawScenario,
    base: &Path,
    default_name: &str,
    overrides: &[(String, f64)],
    seed: Option<u64>,
) -> Result<Scenario, ConfigError> {
    let name = raw.name.unwrap_or_else(|| default_name.to_string());

    let mut tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    tolerances.insert(QUADRATURE_KEY.into(), DEFAULT_QUADRATURE);
    let given = raw.tolerances.iter().map(|(k, v)| (format!("tolerances.{k}"), k.clone(), *v));
    let cli = overrides.iter().map(|(k, v)| (format!("--tol {k}"), k.clone(), *v));
    for (path, key, value) in given.chain(cli) {
        if !tolerances.contains_key(&key) {
            return Err(ConfigError::new(path, format!("unknown tolerance '{key}'")));
        }
        if !(value > 0.0) {
            return Err(ConfigError::new(path, "tolerances must be positive"));
        }
        tolerances.insert(key, value);
    }

    let rate = raw.rate.map(|r| build_rate(r, base)).transpose()?;
    let functions_env = rate_functions(rate.as_ref());

    let semiflow = match raw.semiflow {
        None => None,
        Some(RawSemiflow::Generated {}) => Some(RealSemiflow::generated(
            rate.clone().ok_or_else(|| ConfigError::new("semiflow.kind", "a generated semiflow needs [rate]"))?,
        )),
        Some(RawSemiflow::Translation {}) => Some(RealSemiflow::translation()),
        Some(RawSemiflow::ExpContraction {}) => Some(exponential_contraction()),
        Some(RawSemiflow::BlowDown { kappa }) => {
            if !(kappa > 0.0) {
                return Err(ConfigError::new("semiflow.kappa", "must be positive"));
            }
            Some(blow_down(kappa))
        }
        Some(RawSemiflow::ClosedForm { expr, name }) => {
            let e = parse_expr(&expr, "semiflow.expr", &functions_env)?;
            Some(RealSemiflow::closed_form(name.unwrap_or_else(|| expr.clone()), move |t, s| {
                e.eval(&Env { t, s, xi: s })
            }))
        }
    };

    let family = match raw.family {
        None => None,
        Some(RawFamily::Identity { dim }) => Some(EvolutionFamily::identity(dim)),
        Some(RawFamily::PolynomialDecay { dim }) => Some(EvolutionFamily::polynomial_decay(dim)),
        Some(RawFamily::Diagonal {}) => Some(EvolutionFamily::diagonal_dichotomy(
            rate.as_ref().ok_or_else(|| ConfigError::new("family.kind", "the diagonal family needs [rate]"))?,
        )),
        Some(RawFamily::Projected { matrix }) => {
            let p = matrix_from_rows(&matrix, "family.matrix")?;
            Some(EvolutionFamily::projected_dichotomy(
                rate.as_ref().ok_or_else(|| ConfigError::new("family.kind", "the projected family needs [rate]"))?,
                p,
            ))
        }
        Some(RawFamily::ClosedForm { entries }) => {
            let m = expr_matrix(&entries, "family.entries", &functions_env, &[Var::T, Var::S])?;
            let dim = m.len();
            Some(EvolutionFamily::closed_form("closed-form", dim, move |t, s| eval_matrix(&m, &Env { t, s, xi: s })))
        }
        Some(RawFamily::Ode { coefficient, rtol, panel }) => {
            let m = expr_matrix(&coefficient, "family.coefficient", &functions_env, &[Var::T])?;
            let dim = m.len();
            let cfg = rtol.map(OdeConfig::with_tol).unwrap_or_default();
            let panel = panel.unwrap_or(1.0);
            if !(panel > 0.0) {
                return Err(ConfigError::new("family.panel", "must be positive"));
            }
            Some(EvolutionFamily::ode_with_panel(
                "ode",
                dim,
                move |t| eval_matrix(&m, &Env { t, s: t, xi: t }),
                cfg,
                panel,
            ))
        }
    };

    let mut projection_heuristic = false;
    let projection = match raw.projection {
        None => None,
        Some(RawProjection::Constant { matrix }) => {
            Some(ProjectionField::constant("constant", matrix_from_rows(&matrix, "projection.matrix")?))
        }
        Some(RawProjection::ClosedForm { entries }) => {
            let m = expr_matrix(&entries, "projection.entries", &functions_env, &[Var::T])?;
            let dim = m.len();
            Some(ProjectionField::closed_form("closed-form", dim, move |t| eval_matrix(&m, &Env { t, s: t, xi: t })))
        }
        Some(RawProjection::Heuristic { window, steps, gap }) => {
            let family = family.as_ref().ok_or_else(|| ConfigError::new("projection.kind", "the heuristic needs [family]"))?;
            let mu = rate.as_ref().ok_or_else(|| ConfigError::new("projection.kind", "the heuristic needs [rate]"))?;
            let mut opts = HeuristicOptions::default();
            opts.steps = steps.unwrap_or(opts.steps);
            opts.gap = gap.unwrap_or(opts.gap);
            projection_heuristic = true;
            let c = infer_projection_heuristic(family, mu, (window[0], window[1]), &opts)
                .map_err(|e| ConfigError::new("projection", format!("heuristic failed: {e}")))?;
            Some(c.field)
        }
    };
    if let (Some(f), Some(p)) = (&family, &projection) {
        if f.dim() != p.dim() {
            return Err(ConfigError::new("projection", format!("dimension {} does not match the family ({})", p.dim(), f.dim())));
        }
    }

    let mut functions = BTreeMap::new();
    for (k, v) in raw.functions {
        let g = build_function(&k, v, base)?;
        functions.insert(k, g);
    }

    let grid = match raw.grid {
        Some(g) => {
            if !(g.lo < g.hi) || g.nodes < 2 {
                return Err(ConfigError::new("grid", "needs lo < hi and at least two nodes"));
            }
            Grid { lo: g.lo, hi: g.hi, nodes: g.nodes }
        }
        None => Grid { lo: -8.0, hi: 8.0, nodes: 30 },
    };
    let recover = match raw.recover {
        Some(r) => (r.window[0], r.window[1], r.nodes.unwrap_or(401)),
        None => (grid.lo.min(0.0), grid.hi.max(0.0), 401),
    };

    let semigroup = match raw.semigroup {
        None => None,
        Some(s) => {
            if !functions.contains_key(&s.function) {
                return Err(ConfigError::new("semigroup.function", format!("undeclared function '{}'", s.function)));
            }
            Some(SemigroupSpec {
                function: s.function,
                t: s.t.unwrap_or(0.3),
                tau: s.tau.unwrap_or(0.45),
                continuity_times: s.continuity_times.unwrap_or_else(|| vec![0.1, 0.01, 0.001]),
                similarity_times: s.similarity_times.unwrap_or_else(|| vec![0.1, 1.0, 3.0]),
            })
        }
    };

    let green = match raw.green {
        None => None,
        Some(g) => {
            if !functions.contains_key(&g.forcing) {
                return Err(ConfigError::new("green.forcing", format!("undeclared function '{}'", g.forcing)));
            }
            if !(g.output.lo < g.output.hi) || g.output.nodes < 2 {
                return Err(ConfigError::new("green.output", "needs lo < hi and at least two nodes"));
            }
            let w = g.pair_window.unwrap_or([g.output.lo, g.output.hi]);
            Some(GreenSpec {
                forcing: g.forcing,
                output: Grid { lo: g.output.lo, hi: g.output.hi, nodes: g.output.nodes },
                pairs: g.pairs.unwrap_or(50),
                pair_window: (w[0], w[1]),
                steps: g.steps.unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4, 1e-5]),
            })
        }
    };

    let pipelines = match raw.pipelines {
        Some(list) => {
            for (i, p) in list.iter().enumerate() {
                if !PIPELINES.contains(&p.as_str()) {
                    return Err(ConfigError::new(format!("pipelines[{i}]"), format!("unknown pipeline '{p}'")));
                }
            }
            // Always run in the fixed order.
            PIPELINES.iter().filter(|p| list.iter().any(|q| q == *p)).map(|p| p.to_string()).collect()
        }
        None => PIPELINES
            .iter()
            .filter(|p| applicable(p, semiflow.is_some(), family.is_some(), rate.is_some(), projection.is_some(), semigroup.is_some(), green.is_some()))
            .map(|p| p.to_string())
            .collect(),
    };

    let scenario = Scenario {
        name,
        pipelines,
        seed: seed.or(raw.seed).unwrap_or(0),
        output: raw.output.map(|o| base.join(o)),
        rate,
        semiflow,
        family,
        projection,
        projection_heuristic,
        functions,
        tolerances,
        grid,
        recover,
        semigroup,
        green,
    };
    for p in &scenario.pipelines {
        requirements(&scenario, p)?;
    }
    Ok(scenario)
}

fn applicable(p: &str, flow: bool, family: bool, rate: bool, proj: bool, semigroup: bool, green: bool) -> bool {
    match p {
        "classify-semiflow" | "recover-mu" => flow,
        "check-family" => family,
        "fit-growth-bound" => family && rate,
        "check-semigroup" | "check-similarity" => family && flow && semigroup,
        "certify-dichotomy" => family && rate && proj,
        "solve-green" | "verify-integral-equation" => family && rate && proj && green,
        _ => false,
    }
}

/// Fails with the missing section when a listed pipeline cannot run.
fn requirements(s: &Scenario, pipeline: &str) -> Result<(), ConfigError> {
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(ConfigError::new(what, format!("required by pipeline '{pipeline}'")))
        }
    };
    match pipeline {
        "classify-semiflow" | "recover-mu" => need(s.semiflow.is_some(), "semiflow"),
        "check-family" => need(s.family.is_some(), "family"),
        "fit-growth-bound" => {
            need(s.family.is_some(), "family")?;
            need(s.rate.is_some(), "rate")
        }
        "check-semigroup" | "check-similarity" => {
            need(s.family.is_some(), "family")?;
            need(s.semiflow.is_some(), "semiflow")?;
            need(s.semigroup.is_some(), "semigroup")?;
            if pipeline == "check-similarity" {
                need(s.semiflow.as_ref().is_some_and(|f| f.growth_rate().is_some()), "semiflow.kind")?;
            }
            let f = s.function(&s.semigroup.as_ref().unwrap().function);
            need(f.dim() == s.family.as_ref().unwrap().dim(), "semigroup.function")
        }
        _ => {
            need(s.family.is_some(), "family")?;
            need(s.rate.is_some(), "rate")?;
            need(s.projection.is_some(), "projection")?;
            if pipeline != "certify-dichotomy" {
                need(s.green.is_some(), "green")?;
                let f = s.function(&s.green.as_ref().unwrap().forcing);
                need(f.dim() == s.family.as_ref().unwrap().dim(), "green.forcing")?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<Scenario, ConfigError> {
        parse(text, Path::new("."), "test", &[], None)
    }

    #[test]
    fn minimal_scenario_defaults() {
        let s = load_str("[semiflow]\nkind = \"translation\"\n").unwrap();
        assert_eq!(s.name, "test");
        assert_eq!(s.pipelines, vec!["classify-semiflow", "recover-mu"]);
        assert_eq!(s.tol("axioms"), 1e-8);
    }

    #[test]
    fn undeclared_forcing_names_the_field() {
        let text = r#"
[rate]
kind = "polynomial-log"
[family]
kind = "diagonal"
[projection]
kind = "constant"
matrix = [[1.0, 0.0], [0.0, 0.0]]
[green]
forcing = "missing"
output = { lo = -1.0, hi = 1.0, nodes = 5 }
"#;
        let e = load_str(text).unwrap_err();
        assert_eq!(e.path, "green.forcing");
        assert!(e.message.contains("missing"));
    }

    #[test]
    fn rejects_unknown_keys_and_tolerances() {
        let e = load_str("[semiflow]\nkind = \"translation\"\ncolour = 3\n").unwrap_err();
        assert_eq!(e.path, "scenario");
        let e = load_str("[tolerances]\nbogus = 1.0\n").unwrap_err();
        assert_eq!(e.path, "tolerances.bogus");
        let e = parse("", Path::new("."), "x", &[("axioms".into(), -1.0)], None).unwrap_err();
        assert_eq!(e.path, "--tol axioms");
    }

    #[test]
    fn bad_expression_reports_entry() {
        let text = "[family]\nkind = \"closed-form\"\nentries = [[\"exp(s - t\"]]\n";
        let e = load_str(text).unwrap_err();
        assert_eq!(e.path, "family.entries[0][0]");
        let text = "[family]\nkind = \"ode\"\ncoefficient = [[\"-1 + s\"]]\n";
        let e = load_str(text).unwrap_err();
        assert_eq!(e.path, "family.coefficient[0][0]");
    }

    #[test]
    fn listed_pipeline_needs_its_sections() {
        let e = load_str("pipelines = [\"certify-dichotomy\"]\n[family]\nkind = \"identity\"\ndim = 1\n").unwrap_err();
        assert_eq!(e.path, "rate");
        let e = load_str("pipelines = [\"warp-drive\"]\n").unwrap_err();
        assert_eq!(e.path, "pipelines[0]");
    }

    #[test]
    fn expression_rate_and_family_use_mu() {
        let text = r#"
[rate]
kind = "expression"
expr = "s^3"
derivative = "3*s^2"
inverse = "piecewise(s, s^(1/3), -(-s)^(1/3))"
ell = "infinite"
[family]
kind = "closed-form"
entries = [["exp(mu(s) - mu(t))"]]
"#;
        let s = load_str(text).unwrap();
        let mu = s.rate.as_ref().unwrap();
        assert_eq!(mu.eval(2.0), 8.0);
        assert!((mu.invert(-8.0).unwrap() + 2.0).abs() < 1e-12);
        let u = s.family.as_ref().unwrap().transition(1.0, 0.0).unwrap();
        assert!((u[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
    }
}
