use approx::assert_relative_eq;
use evosemi::evolution_family::GrowthFit;
use evosemi::linalg::{spectral_norm, Matrix};
use evosemi::ode::OdeConfig;
use evosemi::{EvolutionFamily, GrowthRate};
use proptest::prelude::*;

fn coefficient(t: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[-0.5, t.sin(), -t.cos(), 0.3 * t.cos()])
}

/// Classical fixed-step RK4 for `Phi' = A(t) Phi`.
fn rk4(a: impl Fn(f64) -> Matrix, s: f64, t: f64, steps: usize) -> Matrix {
    let h = (t - s) / steps as f64;
    let mut y = Matrix::identity(2, 2);
    let mut x = s;
    for _ in 0..steps {
        let k1 = a(x) * &y;
        let k2 = a(x + h / 2.0) * (&y + &k1 * (h / 2.0));
        let k3 = a(x + h / 2.0) * (&y + &k2 * (h / 2.0));
        let k4 = a(x + h) * (&y + &k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        x += h;
    }
    y
}

#[test]
fn ode_family_matches_rk4() {
    let family = EvolutionFamily::ode("periodic", 2, coefficient, OdeConfig::with_tol(1e-12));
    for &(t, s) in &[(1.0, 0.0), (3.7, -1.2), (-0.5, -4.0), (2.0, 2.0)] {
        let u = family.transition(t, s).unwrap();
        let v = rk4(coefficient, s, t, 4000);
        assert!((u - v).norm() < 1e-9, "({t}, {s})");
    }
}

#[test]
fn transitions_only_run_forward() {
    let family = EvolutionFamily::ode("periodic", 2, coefficient, OdeConfig::with_tol(1e-12));
    assert!(family.transition(-1.0, 2.5).is_err());
    assert_eq!(family.transition(0.7, 0.7).unwrap(), Matrix::identity(2, 2));
}

#[test]
fn bounded_coefficient_gives_growth_at_most_its_norm() {
    // ||U(t, s)|| <= e^{rho (t - s)} with rho = sup ||A(t)||.
    let rho = (0..2000)
        .map(|i| spectral_norm(&coefficient(i as f64 * 0.01 - 10.0)))
        .fold(0.0, f64::max);
    let family = EvolutionFamily::ode("periodic", 2, coefficient, OdeConfig::with_tol(1e-11));
    let xs: Vec<f64> = (0..15).map(|i| -4.0 + i as f64 * 8.0 / 14.0).collect();
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&t| xs.iter().filter(move |&&s| s <= t).map(move |&s| (t, s))).collect();
    match family.fit_growth_bound(&GrowthRate::identity(), &pairs).unwrap() {
        GrowthFit::Bounded(b) => {
            assert_relative_eq!(b.k, 1.0, epsilon = 1e-8);
            assert!(b.alpha <= rho + 1e-8, "alpha {} > rho {rho}", b.alpha);
            assert!(b.max_excess <= 1e-9);
        }
        GrowthFit::Unbounded(v) => panic!("unexpected divergence: {:?}", v.windows.slopes),
    }
}

#[test]
fn cubic_rate_is_not_bounded_by_the_identity_rate() {
    let cubic = GrowthRate::odd_power(1);
    let m = cubic.clone();
    let family = EvolutionFamily::closed_form("cubic", 1, move |t, s| Matrix::from_element(1, 1, (m.eval(t) - m.eval(s)).exp()));
    let xs: Vec<f64> = (0..25).map(|i| -3.0 + i as f64 * 0.25).collect();
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&t| xs.iter().filter(move |&&s| s <= t).map(move |&s| (t, s))).collect();
    assert!(matches!(family.fit_growth_bound(&GrowthRate::identity(), &pairs).unwrap(), GrowthFit::Unbounded(_)));
    match family.fit_growth_bound(&cubic, &pairs).unwrap() {
        GrowthFit::Bounded(b) => assert_relative_eq!(b.alpha, 1.0, epsilon = 1e-9),
        GrowthFit::Unbounded(_) => panic!("the cubic rate bounds its own family"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_form_cocycle_is_exact(t in -5.0..5.0f64, a in 0.0..3.0f64, b in 0.0..3.0f64) {
        let mu = GrowthRate::polynomial_log();
        let family = EvolutionFamily::diagonal_dichotomy(&mu);
        let (tau, t0) = (t - a, t - a - b);
        let r = family.check_cocycle(&[(t, tau, t0)]).unwrap();
        prop_assert!(r.max_residual <= 1e-12 * (1.0 + (mu.eval(t) - mu.eval(t0)).exp()));
    }

    #[test]
    fn ode_cocycle_tracks_tolerance(t in -3.0..3.0f64, a in 0.0..2.0f64, b in 0.0..2.0f64) {
        // The residual scales with the integrator tolerance.
        let coarse = EvolutionFamily::ode("c", 2, coefficient, OdeConfig::with_tol(1e-6));
        let fine = EvolutionFamily::ode("f", 2, coefficient, OdeConfig::with_tol(1e-11));
        let triple = [(t, t - a, t - a - b)];
        let rc = coarse.check_cocycle(&triple).unwrap().max_residual;
        let rf = fine.check_cocycle(&triple).unwrap().max_residual;
        prop_assert!(rc <= 1e-4, "coarse {rc}");
        prop_assert!(rf <= 1e-8, "fine {rf}");
    }

    #[test]
    fn rescaling_composes_with_the_rate(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (t, s) = (a.max(b), a.min(b));
        let mu = GrowthRate::polynomial_log();
        let family = EvolutionFamily::diagonal_dichotomy(&mu);
        let v = family.rescaled(&mu);
        // V(t, s) = diag(e^{s - t}, e^{t - s}).
        let m = v.transition(t, s).unwrap();
        prop_assert!((m[(0, 0)] - (s - t).exp()).abs() <= 1e-12 * m[(0, 0)].max(1.0));
        prop_assert!((m[(1, 1)] - (t - s).exp()).abs() <= 1e-12 * m[(1, 1)].max(1.0));
    }
}
