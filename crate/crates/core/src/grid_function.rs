//! Sampled functions `u: R -> R^n` that vanish outside a finite node span.
//!
//! Between nodes a grid function is piecewise linear unless it carries a
//! *profile*, an exact evaluator the samples were taken from; then off-node
//! evaluations use the profile. Outside `[s_1, s_m]` it is zero.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::Vector;

pub type VectorFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

#[derive(Clone)]
pub struct GridFunction {
    nodes: Arc<Vec<f64>>,
    /// Row-major `m x n`.
    values: Vec<f64>,
    dim: usize,
    sup_norm: f64,
    profile: Option<VectorFn>,
    /// Points where the function or its derivative jumps; used as
    /// quadrature breakpoints.
    kinks: Vec<f64>,
    /// Nodes this function was rescaled from, kept so the inverse rescaling
    /// is exact.
    preimage: Option<Arc<Vec<f64>>>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("nodes", &self.nodes.len())
            .field("span", &self.span())
            .field("dim", &self.dim)
            .field("sup_norm", &self.sup_norm)
            .field("profile", &self.profile.is_some())
            .finish()
    }
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, w) in nodes.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("nodes not strictly increasing at index {}", i + 1)));
        }
    }
    Ok(())
}

impl GridFunction {
    /// From per-node values.
    pub fn from_values(nodes: Vec<f64>, values: &[Vector]) -> Result<Self> {
        check_nodes(&nodes)?;
        if values.len() != nodes.len() {
            return Err(Error::InvalidInput(format!("{} nodes but {} values", nodes.len(), values.len())));
        }
        let dim = values[0].len();
        let mut flat = Vec::with_capacity(dim * nodes.len());
        for v in values {
            if v.len() != dim {
                return Err(Error::InvalidInput("values have differing dimensions".into()));
            }
            flat.extend(v.iter());
        }
        Ok(Self::from_flat(Arc::new(nodes), flat, dim))
    }

    fn from_flat(nodes: Arc<Vec<f64>>, values: Vec<f64>, dim: usize) -> Self {
        let sup_norm = values.chunks(dim.max(1)).map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        GridFunction { nodes, values, dim, sup_norm, profile: None, kinks: Vec::new(), preimage: None }
    }

    /// Samples `f` at the nodes; off-node values are interpolated linearly.
    pub fn sample(nodes: Vec<f64>, dim: usize, f: impl Fn(f64) -> Vector) -> Result<Self> {
        check_nodes(&nodes)?;
        let mut flat = Vec::with_capacity(dim * nodes.len());
        for &x in &nodes {
            let v = f(x);
            if v.len() != dim {
                return Err(Error::InvalidInput(format!("function returned dimension {} instead of {dim}", v.len())));
            }
            flat.extend(v.iter());
        }
        Ok(Self::from_flat(Arc::new(nodes), flat, dim))
    }

    /// Samples `f` at the nodes and keeps `f` for off-node evaluation inside
    /// the node span.
    pub fn with_profile(nodes: Vec<f64>, dim: usize, f: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Result<Self> {
        let f: VectorFn = Arc::new(f);
        let g = f.clone();
        let mut out = Self::sample(nodes, dim, move |x| g(x))?;
        out.profile = Some(f);
        Ok(out)
    }

    /// Keeps the stored node values and uses `f` off-node.
    pub(crate) fn attach_profile(mut self, f: VectorFn) -> Self {
        self.profile = Some(f);
        self
    }

    pub fn zeros(nodes: Vec<f64>, dim: usize) -> Result<Self> {
        check_nodes(&nodes)?;
        let m = nodes.len();
        Ok(Self::from_flat(Arc::new(nodes), vec![0.0; m * dim], dim))
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    /// Uniform nodes `lo, lo + h, ..., hi` (the last step absorbs rounding).
    pub fn uniform_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let n = count.max(2);
        (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn has_profile(&self) -> bool {
        self.profile.is_some()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Stored value at node `i`.
    pub fn value(&self, i: usize) -> Vector {
        DVector::from_column_slice(&self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn values(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// `u(x)`: the stored value at a node, the profile or linear
    /// interpolation inside the span, zero outside.
    pub fn eval(&self, x: f64) -> Vector {
        let (lo, hi) = self.span();
        if !(x >= lo && x <= hi) {
            return Vector::zeros(self.dim);
        }
        let i = self.nodes.partition_point(|&v| v < x);
        if i < self.len() && self.nodes[i] == x {
            return self.value(i);
        }
        if let Some(p) = &self.profile {
            return p(x);
        }
        let (a, b) = (self.nodes[i - 1], self.nodes[i]);
        let w = (x - a) / (b - a);
        let va = &self.values[(i - 1) * self.dim..i * self.dim];
        let vb = &self.values[i * self.dim..(i + 1) * self.dim];
        DVector::from_iterator(self.dim, va.iter().zip(vb).map(|(p, q)| p + w * (q - p)))
    }

    /// Same nodes, new per-node values; the profile is dropped.
    pub fn with_values(&self, values: &[Vector]) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::InvalidInput("value count does not match node count".into()));
        }
        let dim = values.first().map(|v| v.len()).unwrap_or(self.dim);
        let mut flat = Vec::with_capacity(dim * values.len());
        for v in values {
            flat.extend(v.iter());
        }
        Ok(Self::from_flat(self.nodes.clone(), flat, dim))
    }

    /// Moves the samples to new nodes (one per old node), remembering the
    /// old ones.
    pub(crate) fn renode(&self, nodes: Vec<f64>, profile: Option<VectorFn>) -> Result<Self> {
        check_nodes(&nodes)?;
        let mut out = Self::from_flat(Arc::new(nodes), self.values.clone(), self.dim);
        out.profile = profile;
        out.preimage = Some(self.nodes.clone());
        Ok(out)
    }

    pub(crate) fn preimage(&self) -> Option<&[f64]> {
        self.preimage.as_deref().map(|v| v.as_slice())
    }

    pub(crate) fn profile(&self) -> Option<&VectorFn> {
        self.profile.as_ref()
    }

    /// `max_i |u(s_i) - v(s_i)|` over this function's nodes, with `v`
    /// evaluated by [`eval`](Self::eval).
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        let mut d: f64 = 0.0;
        for (i, &x) in self.nodes.iter().enumerate() {
            let diff = self.value(i) - other.eval(x);
            d = d.max(diff.norm());
        }
        d
    }

    /// Comma-separated table: a header `s,u1,...,un` then one row per node.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_table(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn write_table<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut header = String::from("s");
        for k in 1..=self.dim {
            header.push_str(&format!(",u{k}"));
        }
        writeln!(w, "{header}")?;
        for (i, x) in self.nodes.iter().enumerate() {
            let mut line = format!("{x:e}");
            for v in &self.values[i * self.dim..(i + 1) * self.dim] {
                line.push_str(&format!(",{v:e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv). A header
    /// line is optional.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) if row.len() >= 2 => {
                    nodes.push(row[0]);
                    values.push(DVector::from_column_slice(&row[1..]));
                }
                Ok(_) => {
                    return Err(Error::InvalidInput(format!("{}: row {} needs a node and a value", path.display(), i + 1)))
                }
                Err(_) if i == 0 => continue,
                Err(_) => return Err(Error::InvalidInput(format!("{}: row {} is not numeric", path.display(), i + 1))),
            }
        }
        Self::from_values(nodes, &values)
    }
}

/// Trapezoid `max(0, 1 - |x - c| / r)` scaled to `height`.
pub fn hat(c: f64, r: f64, height: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |x: f64| height * (1.0 - (x - c).abs() / r).max(0.0)
}

/// `C^2` bump `(1 - ((x - c) / r)^2)^3` on `|x - c| < r`.
pub fn bump(c: f64, r: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |x: f64| {
        let y = (x - c) / r;
        if y.abs() < 1.0 {
            (1.0 - y * y).powi(3)
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_fn() -> GridFunction {
        let nodes = GridFunction::uniform_nodes(-1.0, 1.0, 21);
        GridFunction::sample(nodes, 2, |x| DVector::from_vec(vec![x, x * x])).unwrap()
    }

    #[test]
    fn nodes_are_exact_and_outside_is_zero() {
        let u = sample_fn();
        for (i, &x) in u.nodes().iter().enumerate() {
            assert_eq!(u.eval(x), u.value(i));
        }
        assert_eq!(u.eval(1.5), Vector::zeros(2));
        assert_eq!(u.eval(-1.0 - 1e-12), Vector::zeros(2));
    }

    #[test]
    fn linear_between_nodes() {
        let u = sample_fn();
        let v = u.eval(0.05);
        assert!((v[0] - 0.05).abs() < 1e-15);
        assert!((v[1] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn profile_is_used_off_node() {
        let nodes = GridFunction::uniform_nodes(-1.0, 1.0, 5);
        let u = GridFunction::with_profile(nodes, 1, |x| DVector::from_element(1, x * x)).unwrap();
        assert_eq!(u.eval(0.3)[0], 0.09);
        assert_eq!(u.eval(2.0)[0], 0.0);
    }

    #[test]
    fn sup_norm_is_max_node_norm() {
        let u = sample_fn();
        assert!((u.sup_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(GridFunction::zeros(vec![0.0, 0.0], 1).is_err());
        assert!(matches!(GridFunction::zeros(vec![], 1), Err(Error::EmptyGrid)));
    }

    #[test]
    fn csv_round_trip() {
        let u = sample_fn();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        u.write_csv(&path).unwrap();
        let v = GridFunction::read_csv(&path).unwrap();
        assert_eq!(v.nodes(), u.nodes());
        assert_eq!(v.values(), u.values());
    }

    #[test]
    fn hat_and_bump() {
        let h = hat(0.5, 0.5, 2.0);
        assert_eq!(h(0.5), 2.0);
        assert_eq!(h(0.25), 1.0);
        assert_eq!(h(1.2), 0.0);
        let b = bump(0.0, 1.0);
        assert_eq!(b(0.0), 1.0);
        assert_eq!(b(1.0), 0.0);
    }
}
