//! Monotone piecewise-cubic Hermite tables.
//!
//! Slopes are either estimated from the data (Fritsch–Carlson / PCHIP) or
//! supplied by the caller; in both cases they pass through the
//! Fritsch–Carlson limiter so a strictly increasing table yields a strictly
//! increasing interpolant. Outside the node span the table continues
//! linearly with the end slope.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HermiteTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl HermiteTable {
    /// Shape-preserving interpolant with slopes estimated from the data.
    pub fn pchip(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_increasing(&xs, &ys, true)?;
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = secants[0];
            ds[1] = secants[0];
        } else {
            for i in 1..n - 1 {
                let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                let (m0, m1) = (secants[i - 1], secants[i]);
                ds[i] = if m0 * m1 <= 0.0 {
                    0.0
                } else {
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    (w1 + w2) / (w1 / m0 + w2 / m1)
                };
            }
            ds[0] = end_slope(xs[1] - xs[0], xs[2] - xs[1], secants[0], secants[1]);
            ds[n - 1] = end_slope(xs[n - 1] - xs[n - 2], xs[n - 2] - xs[n - 3], secants[n - 2], secants[n - 3]);
        }
        Ok(HermiteTable { xs, ys, ds })
    }

    /// Interpolant through `(xs, ys)` with the given node slopes, limited to
    /// keep monotonicity.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, mut ds: Vec<f64>) -> Result<Self> {
        check_increasing(&xs, &ys, false)?;
        if ds.len() != xs.len() {
            return Err(Error::InvalidInput("slope count does not match node count".into()));
        }
        for d in ds.iter_mut() {
            if !d.is_finite() || *d < 0.0 {
                *d = 0.0;
            }
        }
        for i in 0..xs.len() - 1 {
            let m = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            if m == 0.0 {
                ds[i] = 0.0;
                ds[i + 1] = 0.0;
                continue;
            }
            let a = ds[i] / m;
            let b = ds[i + 1] / m;
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                ds[i] = tau * a * m;
                ds[i + 1] = tau * b * m;
            }
        }
        Ok(HermiteTable { xs, ys, ds })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ds
    }

    pub fn span(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn tail_slope(&self, left: bool) -> f64 {
        let n = self.xs.len();
        let (d, secant) = if left {
            (self.ds[0], (self.ys[1] - self.ys[0]) / (self.xs[1] - self.xs[0]))
        } else {
            (self.ds[n - 1], (self.ys[n - 1] - self.ys[n - 2]) / (self.xs[n - 1] - self.xs[n - 2]))
        };
        if d > 0.0 {
            d
        } else {
            secant
        }
    }

    fn locate(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] + self.tail_slope(true) * (x - self.xs[0]);
        }
        if x > self.xs[n - 1] {
            return self.ys[n - 1] + self.tail_slope(false) * (x - self.xs[n - 1]);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.tail_slope(true);
        }
        if x > self.xs[n - 1] {
            return self.tail_slope(false);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[i] + d10 * self.ds[i] + d01 * self.ys[i + 1] + d11 * self.ds[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Abscissae must increase strictly; values strictly when `strict`,
/// otherwise only weakly.
fn check_increasing(xs: &[f64], ys: &[f64], strict: bool) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput("table columns differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("a table needs at least two rows".into()));
    }
    for i in 0..xs.len() - 1 {
        if !(xs[i] < xs[i + 1]) {
            return Err(Error::InvalidInput(format!("abscissae not strictly increasing at row {}", i + 1)));
        }
        let ok = if strict { ys[i] < ys[i + 1] } else { ys[i] <= ys[i + 1] };
        if !ok {
            return Err(Error::InvalidInput(format!("values not strictly increasing at row {}", i + 1)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x + x).collect();
        let t = HermiteTable::pchip(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(t.eval(*x), *y);
        }
    }

    #[test]
    fn exact_slopes_reproduce_cubic() {
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let ds: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let t = HermiteTable::with_slopes(xs, ys, ds).unwrap();
        for k in 0..400 {
            let x = -10.0 + k as f64 * 0.0499;
            assert!((t.eval(x) - x.powi(3)).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn monotone_on_steep_data() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.001, 0.002, 10.0, 10.001];
        let t = HermiteTable::pchip(xs, ys).unwrap();
        let mut prev = t.eval(-0.5);
        for k in 1..=500 {
            let v = t.eval(-0.5 + k as f64 * 0.01);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn linear_extension() {
        let t = HermiteTable::pchip(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert!((t.eval(-5.0) + 5.0).abs() < 1e-14);
        assert!((t.eval(7.0) - 7.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(HermiteTable::pchip(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]).is_err());
        assert!(HermiteTable::pchip(vec![0.0, 0.0, 2.0], vec![0.0, 1.0, 2.0]).is_err());
    }
}
