//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.
//!
//! The interval is first split at caller supplied breakpoints (kinks and
//! jumps of the integrand), then the panel with the largest error estimate
//! is bisected until the global estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of panel bisections.
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-8, rel_tol: 1e-12, max_subdivisions: 20_000 }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub value: DVector<f64>,
    pub error: f64,
    pub evaluations: usize,
}

/// One Gauss–Kronrod 15 point panel: (kronrod value, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> DVector<f64>>(f: &F, a: f64, b: f64, dim: usize) -> (DVector<f64>, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = &fc * WGK[7];
    let mut gauss = &fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod.axpy(wk, &sum, 1.0);
        if j % 2 == 1 {
            gauss.axpy(WG[j / 2], &sum, 1.0);
        }
    }
    debug_assert_eq!(kronrod.len(), dim);
    let err = ((&kronrod - &gauss) * half).norm();
    (kronrod * half, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: DVector<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f: R -> R^dim` over `[a, b]`, splitting first at the
/// breakpoints that fall strictly inside the interval.
pub fn integrate_vec<F>(f: F, a: f64, b: f64, dim: usize, breakpoints: &[f64], opts: &QuadOptions) -> Result<Integral>
where
    F: Fn(f64) -> DVector<f64>,
{
    if a == b {
        return Ok(Integral { value: DVector::zeros(dim), error: 0.0, evaluations: 0 });
    }
    if a > b {
        let mut r = integrate_vec(f, b, a, dim, breakpoints, opts)?;
        r.value = -r.value;
        return Ok(r);
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    let mut total = DVector::zeros(dim);
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1], dim);
        evaluations += 15;
        total += &value;
        total_err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }

    let mut subdivisions = 0;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= target {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= opts.max_subdivisions || mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureBudgetExceeded { a, b, error: total_err });
        }
        subdivisions += 1;
        let (v1, e1) = gk15(&f, worst.a, mid, dim);
        let (v2, e2) = gk15(&f, mid, worst.b, dim);
        evaluations += 30;
        total += &v1 + &v2 - &worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running updates.
    let mut value = DVector::zeros(dim);
    let mut error = 0.0;
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    for p in &panels {
        value += &p.value;
        error += p.error;
    }
    Ok(Integral { value, error, evaluations })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64], opts: &QuadOptions) -> Result<(f64, f64)> {
    let r = integrate_vec(|x| DVector::from_element(1, f(x)), a, b, 1, breakpoints, opts)?;
    Ok((r.value[0], r.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &[], &QuadOptions::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn kink_at_breakpoint_converges_fast() {
        let f = |x: f64| (x - 0.3).abs();
        let opts = QuadOptions { abs_tol: 1e-14, ..Default::default() };
        let (v, _) = integrate(f, 0.0, 1.0, &[0.3], &opts).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn jump_without_breakpoint_still_converges() {
        let f = |x: f64| if x < 0.37 { 1.0 } else { 2.0 };
        let opts = QuadOptions { abs_tol: 1e-9, ..Default::default() };
        let (v, _) = integrate(f, 0.0, 1.0, &[], &opts).unwrap();
        assert!((v - (0.37 + 2.0 * 0.63)).abs() < 1e-8);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let (v, _) = integrate(|x| x.exp(), 1.0, 0.0, &[], &QuadOptions::default()).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn vector_integrand() {
        let r = integrate_vec(
            |x| DVector::from_vec(vec![x.sin(), x.cos()]),
            0.0,
            std::f64::consts::PI,
            2,
            &[],
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value[0] - 2.0).abs() < 1e-13);
        assert!(r.value[1].abs() < 1e-13);
    }

    #[test]
    fn budget_is_reported() {
        let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 0.0, max_subdivisions: 3 };
        let err = integrate(|x| (1.0 / x).sin(), 1e-3, 1.0, &[], &opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureBudgetExceeded { .. }));
    }
}
