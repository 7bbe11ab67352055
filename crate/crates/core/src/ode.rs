//! Dormand–Prince 5(4) for the matrix equation `Phi' = A(t) Phi`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step before giving up.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { rtol: 1e-9, atol: 1e-12, h_min: 1e-12, max_steps: 1_000_000 }
    }
}

impl OdeConfig {
    pub fn with_tol(tol: f64) -> Self {
        OdeConfig { rtol: tol, atol: tol * 1e-3, ..Default::default() }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights equal the last row of A (first same as last).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Propagates `y0` from `t0` to `t1 >= t0` under `y' = a(t) y`.
pub fn propagate<F: Fn(f64) -> Matrix>(a: &F, t0: f64, t1: f64, y0: Matrix, cfg: &OdeConfig) -> Result<Matrix> {
    if t1 < t0 {
        return Err(Error::TimeOrderViolation { t: t1, s: t0 });
    }
    if t1 == t0 {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = a(t) * &y;
    let mut h = initial_step(&k1, &y, span, cfg);
    let mut steps = 0;
    let mut k: Vec<Matrix> = Vec::with_capacity(7);
    while t < t1 {
        if steps >= cfg.max_steps {
            return Err(Error::IntegratorFailure { t, reason: format!("step budget {} exhausted", cfg.max_steps) });
        }
        steps += 1;
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        k.clear();
        k.push(k1.clone());
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    yi += kj * (h * A[i][j]);
                }
            }
            let ti = if i == 6 { t + h } else { t + C[i] * h };
            k.push(a(ti) * &yi);
        }
        let mut y_new = y.clone();
        for j in 0..6 {
            if A[6][j] != 0.0 {
                y_new += &k[j] * (h * A[6][j]);
            }
        }
        let mut err = Matrix::zeros(y.nrows(), y.ncols());
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err += kj * (h * E[j]);
            }
        }
        let mut acc = 0.0;
        for ((e, y0), y1) in err.iter().zip(y.iter()).zip(y_new.iter()) {
            let sc = cfg.atol + cfg.rtol * y0.abs().max(y1.abs());
            acc += (e / sc) * (e / sc);
        }
        let en = (acc / err.len() as f64).sqrt();
        if !en.is_finite() {
            return Err(Error::IntegratorFailure { t, reason: "non-finite state".into() });
        }
        if en <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k[6].clone();
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            if h < cfg.h_min * t.abs().max(1.0) {
                return Err(Error::IntegratorFailure { t, reason: format!("step size collapsed to {h:e}") });
            }
        }
    }
    Ok(y)
}

fn initial_step(f0: &Matrix, y0: &Matrix, span: f64, cfg: &OdeConfig) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (y, f) in y0.iter().zip(f0.iter()) {
        let sc = cfg.atol + cfg.rtol * y.abs();
        d0 += (y / sc).powi(2);
        d1 += (f / sc).powi(2);
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * (d0 / d1).sqrt() };
    h.min(span).max(1e-10 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_exponential() {
        let a = |_t: f64| Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0]));
        let y = propagate(&a, 0.0, 1.0, Matrix::identity(2, 2), &OdeConfig::default()).unwrap();
        assert!((y[(0, 0)] - (-1f64).exp()).abs() < 1e-9);
        assert!((y[(1, 1)] - 1f64.exp()).abs() < 1e-8);
        assert!(y[(0, 1)].abs() < 1e-15 && y[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn rotation_is_periodic() {
        let a = |_t: f64| Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let y = propagate(&a, 0.0, 2.0 * std::f64::consts::PI, Matrix::identity(2, 2), &OdeConfig::default()).unwrap();
        assert!((y - Matrix::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn time_dependent_scalar() {
        // y' = 2t y, y(0) = 1 -> y = e^{t^2}.
        let a = |t: f64| Matrix::from_element(1, 1, 2.0 * t);
        let y = propagate(&a, 0.0, 2.0, Matrix::identity(1, 1), &OdeConfig::default()).unwrap();
        assert!((y[(0, 0)] / 4f64.exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_backward_time() {
        let a = |_t: f64| Matrix::identity(1, 1);
        assert!(propagate(&a, 1.0, 0.0, Matrix::identity(1, 1), &OdeConfig::default()).is_err());
    }
}
