//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Operator norm induced by the Euclidean norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    m.singular_values().max()
}

pub fn smallest_singular_value(m: &Matrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.singular_values().min()
}

/// Orthonormal basis (as columns) of the range of `m`, keeping singular
/// directions with singular value above `floor`.
pub fn range_basis(m: &Matrix, floor: f64) -> Matrix {
    let n = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > floor).collect();
    let mut b = Matrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        b.set_column(j, &u.column(i));
    }
    b
}

/// Rank of a projection, read off its trace.
pub fn projection_rank(p: &Matrix) -> usize {
    p.trace().round().max(0.0) as usize
}

/// Thin QR with positive diagonal in R.
pub fn qr_positive(m: &Matrix) -> (Matrix, Matrix) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)] < 0.0 {
            for j in 0..r.ncols() {
                r[(i, j)] = -r[(i, j)];
            }
            for k in 0..q.nrows() {
                q[(k, i)] = -q[(k, i)];
            }
        }
    }
    (q, r)
}
