//! Guessing a projection field from growth behaviour over a finite window.
//!
//! An orthonormal frame is pushed forward by `U` from the left end of the
//! window and re-orthonormalised after every step; the leading columns
//! settle on the directions that grow fastest. Pushing a second frame back
//! from the right end under `U^T` gives the orthogonal complement of the
//! decaying directions. Both passes measure growth against `mu`, so the
//! exponents are `mu`-rescaled. The result is a guess, to be confirmed by
//! [`certify_dichotomy`](super::certify_dichotomy).

use serde::Serialize;

use super::ProjectionField;
use crate::error::{Error, Result};
use crate::evolution_family::EvolutionFamily;
use crate::growth_rate::GrowthRate;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy)]
pub struct HeuristicOptions {
    /// Number of re-orthonormalisation steps across the window.
    pub steps: usize,
    /// Exponents must stay at least `gap / 2` away from zero.
    pub gap: f64,
    /// Fraction of the window dropped at each end when tabulating, where
    /// the frames have not settled yet.
    pub margin: f64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        HeuristicOptions { steps: 400, gap: 0.1, margin: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionCandidate {
    #[serde(skip)]
    pub field: ProjectionField,
    pub heuristic: bool,
    pub rank: usize,
    /// Forward `mu`-rescaled exponents, largest first.
    pub exponents: Vec<f64>,
    pub reference_time: f64,
    pub reference: Vec<Vec<f64>>,
    /// In `[0, 1)`; `1 - e^{-delta L}` with `delta` the gap between the
    /// exponents on either side of zero and `L` the shortest rescaled time a
    /// tabulated node had to settle.
    pub confidence: f64,
}

/// Gram-Schmidt with one re-orthogonalisation pass. Unlike Householder QR
/// it leaves coordinate-aligned frames untouched.
fn gram_schmidt(m: &Matrix) -> (Matrix, Vec<f64>) {
    let mut q = m.clone();
    let mut norms = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let c = q.column(i).dot(&q.column(j));
                if c != 0.0 {
                    let qi = q.column(i).into_owned();
                    q.column_mut(j).axpy(-c, &qi, 1.0);
                }
            }
        }
        let r = q.column(j).norm();
        q.column_mut(j).unscale_mut(r);
        norms.push(r);
    }
    (q, norms)
}

struct Pass {
    frames: Vec<Matrix>,
    exponents: Vec<f64>,
}

fn propagate_frames(
    steps: &[Matrix],
    start: Matrix,
    horizon: f64,
) -> Pass {
    let mut q = start;
    let mut logs = vec![0.0; q.ncols()];
    let mut frames = Vec::with_capacity(steps.len() + 1);
    frames.push(q.clone());
    for m in steps {
        let (qn, r) = gram_schmidt(&(m * &q));
        for (l, r) in logs.iter_mut().zip(r) {
            *l += r.ln();
        }
        q = qn;
        frames.push(q.clone());
    }
    Pass { frames, exponents: logs.iter().map(|l| l / horizon).collect() }
}

/// Runs a pass from the identity frame and, if the exponents come out
/// unsorted, once more from the identity with its columns reordered. A
/// coordinate-aligned invariant splitting is then reproduced exactly.
fn sorted_pass(steps: &[Matrix], n: usize, horizon: f64) -> Pass {
    let first = propagate_frames(steps, Matrix::identity(n, n), horizon);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| first.exponents[j].total_cmp(&first.exponents[i]));
    if order.iter().enumerate().all(|(k, &i)| k == i) {
        return first;
    }
    let mut start = Matrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        start[(i, k)] = 1.0;
    }
    propagate_frames(steps, start, horizon)
}

fn count_signs(exponents: &[f64], gap: f64) -> Result<(usize, usize)> {
    let up = exponents.iter().filter(|&&l| l > 0.5 * gap).count();
    let down = exponents.iter().filter(|&&l| l < -0.5 * gap).count();
    if up + down != exponents.len() {
        return Err(Error::Inconclusive(format!("exponents {exponents:?} are not separated from zero by {}", 0.5 * gap)));
    }
    Ok((up, down))
}

/// Projection onto the span of `stable` along the span of `unstable`.
fn oblique_projection(stable: Matrix, unstable: Matrix) -> Result<Matrix> {
    let n = stable.nrows();
    let k = stable.ncols();
    if k == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    if k == n {
        return Ok(Matrix::identity(n, n));
    }
    let mut b = Matrix::zeros(n, n);
    b.columns_mut(0, k).copy_from(&stable);
    b.columns_mut(k, n - k).copy_from(&unstable);
    let inv = b
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Inconclusive("stable and unstable directions are not complementary".into()))?;
    let mut d = Matrix::zeros(n, n);
    for i in 0..k {
        d[(i, i)] = 1.0;
    }
    Ok(&b * d * inv)
}

pub fn infer_projection_heuristic(
    family: &EvolutionFamily,
    mu: &GrowthRate,
    window: (f64, f64),
    opts: &HeuristicOptions,
) -> Result<ProjectionCandidate> {
    let (a, b) = window;
    if !(a < b) || opts.steps < 2 {
        return Err(Error::InvalidInput(format!("bad heuristic window [{a}, {b}]")));
    }
    let n = family.dim();
    let m = opts.steps;
    let times: Vec<f64> = (0..=m).map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 }).collect();
    let horizon = mu.eval(b) - mu.eval(a);
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput("growth rate does not increase across the window".into()));
    }
    let forward: Vec<Matrix> = times.windows(2).map(|w| family.transition(w[1], w[0])).collect::<Result<_>>()?;
    let backward: Vec<Matrix> = forward.iter().rev().map(|u| u.transpose()).collect();

    let fwd = sorted_pass(&forward, n, horizon);
    let bwd = sorted_pass(&backward, n, horizon);
    let (up, down) = count_signs(&fwd.exponents, opts.gap)?;
    let (adj_up, _) = count_signs(&bwd.exponents, opts.gap)?;
    if adj_up != up {
        return Err(Error::Inconclusive(format!(
            "forward pass finds {up} growing directions, adjoint pass finds {adj_up}"
        )));
    }
    let spectral_gap = if up == 0 {
        -fwd.exponents[0]
    } else if down == 0 {
        fwd.exponents[n - 1]
    } else {
        fwd.exponents[up - 1] - fwd.exponents[up]
    };

    let skip = ((opts.margin.clamp(0.0, 0.49)) * m as f64).round() as usize;
    let mut tab_times = Vec::new();
    let mut tab = Vec::new();
    let mut settle = f64::INFINITY;
    for (k, &t) in times.iter().enumerate().take(m + 1 - skip).skip(skip) {
        let unstable = fwd.frames[k].columns(0, up).into_owned();
        let w = &bwd.frames[m - k];
        let stable = w.columns(up, n - up).into_owned();
        tab_times.push(t);
        tab.push(oblique_projection(stable, unstable)?);
        let mt = mu.eval(t);
        settle = settle.min((mt - mu.eval(a)).min(mu.eval(b) - mt));
    }
    let mid = tab.len() / 2;
    let reference_time = tab_times[mid];
    let reference: Vec<Vec<f64>> = tab[mid].row_iter().map(|r| r.iter().copied().collect()).collect();
    let field = ProjectionField::tabulated(format!("heuristic:{}", family.name()), tab_times, tab)?;
    Ok(ProjectionCandidate {
        field,
        heuristic: true,
        rank: down,
        exponents: fwd.exponents,
        reference_time,
        reference,
        confidence: 1.0 - (-spectral_gap.max(0.0) * settle.max(0.0)).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag(a: f64, b: f64) -> Matrix {
        Matrix::from_diagonal(&DVector::from_vec(vec![a, b]))
    }

    #[test]
    fn diagonal_family_is_exact() {
        let mu = GrowthRate::polynomial_log();
        let u = EvolutionFamily::diagonal_dichotomy(&mu);
        let c = infer_projection_heuristic(&u, &mu, (-8.0, 8.0), &HeuristicOptions::default()).unwrap();
        assert!(c.heuristic);
        assert_eq!(c.rank, 1);
        for t in [-3.0, 0.0, 2.5] {
            assert_eq!(c.field.at(t), diag(1.0, 0.0));
        }
        assert!((c.exponents[0] - 1.0).abs() < 1e-9 && (c.exponents[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_is_inconclusive() {
        let mu = GrowthRate::identity();
        let u = EvolutionFamily::identity(2);
        let r = infer_projection_heuristic(&u, &mu, (-5.0, 5.0), &HeuristicOptions::default());
        assert!(matches!(r, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn rotated_family() {
        let mu = GrowthRate::identity();
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let p = &rot * diag(1.0, 0.0) * rot.transpose();
        let u = EvolutionFamily::projected_dichotomy(&mu, p.clone());
        let cand = infer_projection_heuristic(&u, &mu, (-10.0, 10.0), &HeuristicOptions::default()).unwrap();
        let err = (cand.field.at(cand.reference_time) - &p).norm();
        assert!(err < 1e-6, "{err}");
        assert!(cand.confidence > 0.99);
    }
}
