use evosemi::dichotomy::{certify_dichotomy, solve_green, CertifyOptions, DichotomyCertificate, DichotomyOutcome};
use evosemi::linalg::{spectral_norm, Matrix, Vector};
use evosemi::quadrature::QuadOptions;
use evosemi::{EvolutionFamily, GreenFunction, GridFunction, GrowthRate, ProjectionField};
use proptest::prelude::*;

fn grid_pairs(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    xs.iter().flat_map(|&t| xs.iter().filter(move |&&s| s <= t).map(move |&s| (t, s))).collect()
}

fn rotated_projection() -> Matrix {
    let (c, s) = (0.6f64, 0.8f64);
    let v = Vector::from_vec(vec![c, s]);
    &v * v.transpose()
}

fn certify(family: &EvolutionFamily, mu: &GrowthRate, p: &ProjectionField, pairs: &[(f64, f64)]) -> DichotomyCertificate {
    match certify_dichotomy(family, mu, p, pairs, &CertifyOptions::default()).unwrap() {
        DichotomyOutcome::Certified(c) => c,
        DichotomyOutcome::Violated(v) => panic!("{}", v.reason),
    }
}

#[test]
fn certification_is_invariant_under_rescaling() {
    // (U, mu, P) and (V, id, P o mu^{-1}) carry the same constants.
    let mu = GrowthRate::polynomial_log();
    let family = EvolutionFamily::projected_dichotomy(&mu, rotated_projection());
    let p = ProjectionField::constant("rotated", rotated_projection());
    let pairs = grid_pairs(-6.0, 6.0, 25);
    let direct = certify(&family, &mu, &p, &pairs);

    let rescaled_pairs: Vec<(f64, f64)> = pairs.iter().map(|&(t, s)| (mu.eval(t), mu.eval(s))).collect();
    let v = family.rescaled(&mu);
    let q = p.rescaled(&mu);
    let classical = certify(&v, &GrowthRate::identity(), &q, &rescaled_pairs);
    assert!((direct.n - classical.n).abs() <= 1e-9 * direct.n);
    assert!((direct.nu - classical.nu).abs() <= 1e-9);
    assert!((direct.nu - 1.0).abs() <= 1e-9);
}

#[test]
fn green_function_decays_at_the_certified_rate() {
    let mu = GrowthRate::polynomial_log();
    let family = EvolutionFamily::projected_dichotomy(&mu, rotated_projection());
    let p = ProjectionField::constant("rotated", rotated_projection());
    let cert = certify(&family, &mu, &p, &grid_pairs(-8.0, 8.0, 30));
    let g = GreenFunction::new(family, p).unwrap();
    for &t in &[-5.0, -1.3, 0.0, 2.2, 6.0] {
        for &s in &[-6.5, -2.0, 0.4, 1.1, 7.0] {
            let norm = spectral_norm(&g.green(t, s).unwrap());
            let bound = cert.decay(mu.eval(t) - mu.eval(s));
            assert!(norm <= bound * (1.0 + 1e-9), "G({t}, {s}) = {norm} > {bound}");
        }
    }
    assert!(g.green(1.0, 1.0).is_err());
}

#[test]
fn solution_norm_is_bounded_by_the_certificate() {
    // ||G^{-1} f|| <= (2 N / nu) ||f||, since the mu'-weighted integral of
    // e^{-nu |mu(t) - mu(xi)|} is at most 2 / nu.
    let mu = GrowthRate::polynomial_log();
    let family = EvolutionFamily::projected_dichotomy(&mu, rotated_projection());
    let p = ProjectionField::constant("rotated", rotated_projection());
    let cert = certify(&family, &mu, &p, &grid_pairs(-8.0, 8.0, 30));
    let g = GreenFunction::new(family, p).unwrap();
    let nodes = GridFunction::uniform_nodes(-4.0, 4.0, 401);
    let f = GridFunction::with_profile(nodes.clone(), 2, |x: f64| {
        let h = (1.0 - x.abs()).max(0.0);
        Vector::from_vec(vec![h, -0.5 * h])
    })
    .unwrap()
    .with_kinks(vec![-1.0, 0.0, 1.0]);
    let u = solve_green(&g, &mu, &cert, &f, GridFunction::uniform_nodes(-3.0, 3.0, 61), &QuadOptions::default()).unwrap();
    let bound = 2.0 * cert.n / cert.nu * f.sup_norm();
    assert!(u.sup_norm() > 0.0);
    assert!(u.sup_norm() <= bound, "{} > {bound}", u.sup_norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slower_decay_is_never_certified_faster(rate in 0.2..3.0f64) {
        // U = diag(e^{-r d}, e^{r d}) is certified with nu = r.
        let mu = GrowthRate::identity();
        let family = EvolutionFamily::closed_form("scaled", 2, move |t, s| {
            Matrix::from_diagonal(&Vector::from_vec(vec![(-rate * (t - s)).exp(), (rate * (t - s)).exp()]))
        });
        let p = ProjectionField::constant("first", Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.0])));
        let cert = certify(&family, &mu, &p, &grid_pairs(-3.0, 3.0, 13));
        prop_assert!((cert.nu - rate).abs() <= 1e-9 * rate.max(1.0));
        prop_assert!((cert.n - 1.0).abs() <= 1e-12);
    }
}
