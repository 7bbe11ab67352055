//! Bracketed scalar root finding.
//!
//! [`brent`] is the bisection / secant / inverse-quadratic hybrid used for
//! every inversion in the crate. [`expand_bracket`] grows a one-sided search
//! geometrically until a sign change is seen.

use crate::error::{Error, Result};

/// Termination settings for [`brent`].
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on the root location.
    pub xtol: f64,
    /// Stop as soon as `|f(x)| <= ftol`.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { xtol: 1e-14, ftol: 1e-10, max_iter: 200 }
    }
}

/// Finds a root of `f` in `[a, b]`, given `f(a)` and `f(b)` of opposite sign
/// (or one of them zero).
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, fa: f64, fb: f64, opts: &RootOptions) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::InvalidInput(format!(
            "no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}"
        )));
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * opts.xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 || fb.abs() <= opts.ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::InvalidInput(format!("function is NaN at {b}")));
        }
    }
    Ok(b)
}

/// Solves `g(x) = target` for a non-decreasing `g`, starting from `x0` and
/// doubling the step until the target is bracketed.
pub fn solve_increasing<G: Fn(f64) -> f64>(
    g: G,
    target: f64,
    x0: f64,
    step0: f64,
    max_expansions: usize,
    opts: &RootOptions,
) -> Result<f64> {
    let h = |x: f64| g(x) - target;
    let f0 = h(x0);
    if f0.is_nan() {
        return Err(Error::BracketFailure { target, expansions: 0 });
    }
    if f0 == 0.0 {
        return Ok(x0);
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let (lo, flo, hi, fhi) = expand_bracket(&h, x0, f0, dir, step0, max_expansions)
        .ok_or(Error::BracketFailure { target, expansions: max_expansions })?;
    brent(h, lo, hi, flo, fhi, opts)
}

/// Walks from `x0` in direction `dir` with doubling steps until `h` changes
/// sign. Returns the bracket ordered `(lo, h(lo), hi, h(hi))`.
pub fn expand_bracket<H: Fn(f64) -> f64>(
    h: &H,
    x0: f64,
    f0: f64,
    dir: f64,
    step0: f64,
    max_expansions: usize,
) -> Option<(f64, f64, f64, f64)> {
    let mut prev = x0;
    let mut fprev = f0;
    let mut step = step0;
    for _ in 0..max_expansions {
        let x = prev + dir * step;
        let fx = h(x);
        if fx.is_nan() {
            return None;
        }
        if fx == 0.0 || fx.signum() != fprev.signum() {
            return if dir > 0.0 { Some((prev, fprev, x, fx)) } else { Some((x, fx, prev, fprev)) };
        }
        prev = x;
        fprev = fx;
        step *= 2.0;
    }
    None
}
