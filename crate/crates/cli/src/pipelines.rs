//! The verification pipelines, run in a fixed order over one scenario.

use evosemi::dichotomy::{
    certify_dichotomy, solve_green, verify_integral_equation, CertifyOptions, DichotomyCertificate, DichotomyOutcome,
    GreenFunction,
};
use evosemi::evo_semigroup::HypothesisConfig;
use evosemi::evolution_family::GrowthFit;
use evosemi::quadrature::QuadOptions;
use evosemi::semiflow::{Classification, OmegaConfig, RecoverConfig};
use evosemi::{Error, GridFunction, Limit, RealSemiflow, SemigroupContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{Check, PipelineReport, Table};
use crate::scenario::{Scenario, QUADRATURE_KEY};

const AXIOM_SAMPLES: usize = 2000;
const COCYCLE_SAMPLES: usize = 200;

/// Results carried from one pipeline to the next.
#[derive(Default)]
struct State {
    certificate: Option<DichotomyCertificate>,
    solution: Option<GridFunction>,
}

pub fn run_all(s: &Scenario) -> Vec<PipelineReport> {
    let mut state = State::default();
    s.pipelines
        .iter()
        .map(|p| {
            let mut r = PipelineReport::new(&s.name, p);
            if let Err(e) = run_one(s, p, &mut state, &mut r) {
                r.fail(e.to_string());
            }
            r
        })
        .collect()
}

fn run_one(s: &Scenario, pipeline: &str, state: &mut State, r: &mut PipelineReport) -> Result<(), Error> {
    // Each pipeline draws from its own stream so that selecting a subset
    // does not change the samples.
    let offset = crate::scenario::PIPELINES.iter().position(|p| *p == pipeline).unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_mul(31).wrapping_add(offset));
    match pipeline {
        "classify-semiflow" => classify_semiflow(s, &mut rng, r),
        "recover-mu" => recover_mu(s, r),
        "check-family" => check_family(s, &mut rng, r),
        "fit-growth-bound" => fit_growth_bound(s, r),
        "check-semigroup" => check_semigroup(s, r),
        "check-similarity" => check_similarity(s, r),
        "certify-dichotomy" => certify(s, state, r),
        "solve-green" => solve(s, state, r),
        "verify-integral-equation" => verify(s, state, &mut rng, r),
        other => Err(Error::InvalidInput(format!("unknown pipeline {other}"))),
    }
}

fn limit_value(l: Limit) -> f64 {
    match l {
        Limit::MinusInfinity => f64::NEG_INFINITY,
        Limit::Finite(v) => v,
        Limit::PlusInfinity => f64::INFINITY,
    }
}

fn flow(s: &Scenario) -> &RealSemiflow {
    s.semiflow.as_ref().expect("checked at load time")
}

fn classify_semiflow(s: &Scenario, rng: &mut ChaCha8Rng, r: &mut PipelineReport) -> Result<(), Error> {
    let flow = flow(s);
    let report = flow.classify(&s.grid.points(), &OmegaConfig::default())?;
    let mut omegas = Table::new("omega", &["s", "omega"]);
    for o in &report.omegas {
        omegas.push(vec![o.s, limit_value(o.value)]);
    }
    r.table(omegas);
    match &report.verdict {
        Classification::NonDegenerate => r.detail("classification", "non-degenerate"),
        Classification::Degenerate { fixed_points } => {
            r.detail("classification", "degenerate");
            r.detail("fixed_points", fixed_points);
        }
    }
    let span = (s.grid.lo, s.grid.hi);
    let triples: Vec<(f64, f64, f64)> = (0..AXIOM_SAMPLES)
        .map(|_| (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(span.0..span.1)))
        .collect();
    let axioms = flow.check_axioms(&triples)?;
    r.detail("axioms", &axioms);
    r.check(Check::at_most("axioms", axioms.max_residual(), s.tol("axioms")));
    Ok(())
}

fn recover_mu(s: &Scenario, r: &mut PipelineReport) -> Result<(), Error> {
    let flow = flow(s);
    let (lo, hi, nodes) = s.recover;
    let cfg = RecoverConfig { nodes, ..RecoverConfig::default() };
    let hat = match flow.recover_mu((lo, hi), &cfg) {
        Ok(m) => m,
        Err(Error::NotNonDegenerate(why)) => {
            r.skip(format!("degenerate semiflow has no growth rate: {why}"));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let xs = GridFunction::uniform_nodes(lo, hi, 10 * nodes);
    let mut table = Table::new("recovered", &["s", "mu_hat", "mu"]);
    if let Some(mu) = flow.growth_rate() {
        let mut err: f64 = 0.0;
        for &x in &xs {
            let (a, b) = (hat.eval(x), mu.eval(x));
            err = err.max((a - b).abs());
            table.push(vec![x, a, b]);
        }
        r.check(Check::at_most("sup_error", err, s.tol("recover")));
    } else {
        // No reference rate: the recovered rate must regenerate the flow.
        let mut err: f64 = 0.0;
        for &x in &xs {
            table.push(vec![x, hat.eval(x), f64::NAN]);
            for t in [0.5, 1.0] {
                let y = flow.eval(t, x)?;
                if y >= lo && y <= hi {
                    err = err.max((hat.eval(y) - (hat.eval(x) - t)).abs());
                }
            }
        }
        r.check(Check::at_most("regeneration_error", err, s.tol("recover")));
    }
    r.table(table);
    Ok(())
}

fn check_family(s: &Scenario, rng: &mut ChaCha8Rng, r: &mut PipelineReport) -> Result<(), Error> {
    let family = s.family.as_ref().expect("checked at load time");
    let triples: Vec<(f64, f64, f64)> = (0..COCYCLE_SAMPLES)
        .map(|_| {
            let mut v = [
                rng.random_range(s.grid.lo..s.grid.hi),
                rng.random_range(s.grid.lo..s.grid.hi),
                rng.random_range(s.grid.lo..s.grid.hi),
            ];
            v.sort_by(|a, b| b.total_cmp(a));
            (v[0], v[1], v[2])
        })
        .collect();
    let cocycle = family.check_cocycle(&triples)?;
    let continuity = family.continuity_modulus(&s.grid.points())?;
    r.detail("family", family.name());
    r.detail("worst_triple", cocycle.worst);
    r.detail("continuity", &continuity);
    r.check(Check::at_most("cocycle", cocycle.max_residual, s.tol("cocycle")));
    Ok(())
}

fn fit_growth_bound(s: &Scenario, r: &mut PipelineReport) -> Result<(), Error> {
    let family = s.family.as_ref().expect("checked at load time");
    let mu = s.rate.as_ref().expect("checked at load time");
    let fit = family.fit_growth_bound(mu, &s.grid.pairs())?;
    let (cloud, windows) = match &fit {
        GrowthFit::Bounded(b) => (&b.cloud, &b.windows),
        GrowthFit::Unbounded(v) => (&v.cloud, &v.windows),
    };
    let mut t = Table::new("cloud", &["t", "s", "d", "L"]);
    for p in cloud {
        t.push(vec![p.t, p.s, p.d, p.l]);
    }
    r.table(t);
    let mut w = Table::new("windows", &["radius", "slope"]);
    for &(radius, slope) in &windows.slopes {
        w.push(vec![radius, slope]);
    }
    r.table(w);
    match fit {
        GrowthFit::Bounded(b) => {
            r.detail("K", b.k);
            r.detail("alpha", b.alpha);
            r.detail("pairs", b.pairs);
            r.check(Check::at_most("max_excess", b.max_excess, s.tol("growth")));
        }
        GrowthFit::Unbounded(v) => {
            r.detail("pairs", v.pairs);
            r.fail(format!("no bound K e^(alpha d) under rate {}: slope grows with the window", v.rate));
        }
    }
    Ok(())
}

fn context(s: &Scenario) -> Result<SemigroupContext, Error> {
    SemigroupContext::new(
        s.family.clone().expect("checked at load time"),
        flow(s).clone(),
        &HypothesisConfig::default(),
    )
}

fn check_semigroup(s: &Scenario, r: &mut PipelineReport) -> Result<(), Error> {
    let spec = s.semigroup.as_ref().expect("checked at load time");
    let ctx = context(s)?;
    r.detail("hypothesis", format!("{:?}", ctx.hypothesis()));
    let u = s.function(&spec.function);
    let law = ctx.check_semigroup_law(spec.t, spec.tau, u)?;
    r.detail("t", spec.t);
    r.detail("tau", spec.tau);
    r.check(Check::at_most("semigroup_law", law, s.tol("semigroup")));
    let trace = ctx.check_strong_continuity(u, &spec.continuity_times)?;
    let mut t = Table::new("continuity", &["t", "residual"]);
    for (&x, &y) in trace.times.iter().zip(&trace.residuals) {
        t.push(vec![x, y]);
    }
    r.table(t);
    let last = trace.residuals.last().copied().unwrap_or(0.0);
    r.check(Check::at_most("continuity", last, s.tol("continuity")));
    if !trace.settles(s.tol("continuity")) {
        r.fail("continuity residuals do not decrease towards t = 0");
    }
    Ok(())
}

fn check_similarity(s: &Scenario, r: &mut PipelineReport) -> Result<(), Error> {
    let spec = s.semigroup.as_ref().expect("checked at load time");
    let ctx = context(s)?;
    let u = s.function(&spec.function);
    let mut t = Table::new("similarity", &["t", "residual"]);
    let mut worst: f64 = 0.0;
    for &time in &spec.similarity_times {
        let res = ctx.check_similarity(time, u)?;
        worst = worst.max(res);
        t.push(vec![time, res]);
    }
    r.table(t);
    r.check(Check::at_most("similarity", worst, s.tol("similarity")));
    Ok(())
}

fn ensure_certificate(s: &Scenario, state: &mut State, r: &mut PipelineReport) -> Result<Option<DichotomyCertificate>, Error> {
    if state.certificate.is_none() {
        let family = s.family.as_ref().expect("checked at load time");
        let mu = s.rate.as_ref().expect("checked at load time");
        let p = s.projection.as_ref().expect("checked at load time");
        if let DichotomyOutcome::Certified(c) =
            certify_dichotomy(family, mu, p, &s.grid.pairs(), &CertifyOptions::default())?
        {
            state.certificate = Some(c);
        } else {
            r.fail("the family is not certified for this projection");
        }
    }
    Ok(state.certificate.clone())
}

fn certify(s: &Scenario, state: &mut State, r: &mut PipelineReport) -> Result<(), Error> {
    let family = s.family.as_ref().expect("checked at load time");
    let mu = s.rate.as_ref().expect("checked at load time");
    let p = s.projection.as_ref().expect("checked at load time");
    r.detail("projection_heuristic", s.projection_heuristic);
    let outcome = certify_dichotomy(family, mu, p, &s.grid.pairs(), &CertifyOptions::default())?;
    let (pc, qc) = match &outcome {
        DichotomyOutcome::Certified(c) => (&c.p_cloud, &c.q_cloud),
        DichotomyOutcome::Violated(v) => (&v.p_cloud, &v.q_cloud),
    };
    for (name, cloud) in [("p_cloud", pc), ("q_cloud", qc)] {
        let mut t = Table::new(name, &["t", "s", "d", "L"]);
        for c in cloud {
            t.push(vec![c.t, c.s, c.d, c.l]);
        }
        r.table(t);
    }
    match outcome {
        DichotomyOutcome::Certified(c) => {
            r.detail("N", c.n);
            r.detail("nu", c.nu);
            r.detail("rank", c.rank);
            r.detail("pairs", c.pairs);
            r.detail("compatibility", &c.compatibility);
            r.check(Check::at_most("slack_p", c.max_slack_p, s.tol("certificate")));
            r.check(Check::at_most("slack_q", c.max_slack_q, s.tol("certificate")));
            state.certificate = Some(c);
        }
        DichotomyOutcome::Violated(v) => {
            r.detail("nu", v.nu);
            r.detail("N", v.n);
            r.detail("offending_pairs", v.offending_pairs.len());
            r.detail("compatibility", &v.compatibility);
            r.fail(v.reason);
        }
    }
    Ok(())
}

fn quad(s: &Scenario) -> QuadOptions {
    QuadOptions { abs_tol: s.tol(QUADRATURE_KEY), ..QuadOptions::default() }
}

fn green(s: &Scenario) -> Result<GreenFunction, Error> {
    GreenFunction::new(s.family.clone().expect("checked at load time"), s.projection.clone().expect("checked at load time"))
}

fn ensure_solution(s: &Scenario, state: &mut State, r: &mut PipelineReport) -> Result<Option<GridFunction>, Error> {
    if state.solution.is_none() {
        let Some(cert) = ensure_certificate(s, state, r)? else { return Ok(None) };
        let spec = s.green.as_ref().expect("checked at load time");
        let mu = s.rate.as_ref().expect("checked at load time");
        let f = s.function(&spec.forcing);
        state.solution = Some(solve_green(&green(s)?, mu, &cert, f, spec.output.points(), &quad(s))?);
    }
    Ok(state.solution.clone())
}

fn solve(s: &Scenario, state: &mut State, r: &mut PipelineReport) -> Result<(), Error> {
    let Some(u) = ensure_solution(s, state, r)? else { return Ok(()) };
    let spec = s.green.as_ref().expect("checked at load time");
    let mu = s.rate.as_ref().expect("checked at load time");
    let f = s.function(&spec.forcing);
    let dim = u.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("u{i}")));
    let mut t = Table { name: "solution".into(), header, rows: Vec::new() };
    for (i, &x) in u.nodes().iter().enumerate() {
        let mut row = vec![x];
        row.extend(u.value(i).iter());
        t.push(row);
    }
    r.table(t);

    // G u = f, probed through the semigroup generated by the rate.
    let ctx = SemigroupContext::new(
        s.family.clone().expect("checked at load time"),
        RealSemiflow::generated(mu.clone()),
        &HypothesisConfig::default(),
    )?;
    let m = u.len();
    let interior: Vec<usize> = (m / 20..m - m / 20).collect();
    let sweep = ctx.generator_sweep(&u, &spec.steps, &interior)?;
    let err_to_f = |g: &GridFunction| interior.iter().map(|&i| (g.value(i) - f.eval(u.nodes()[i])).norm()).fold(0.0, f64::max);
    let mut t = Table::new("generator_sweep", &["h", "probe_error", "extrapolated_error"]);
    for (k, (&h, probe)) in sweep.steps.iter().zip(&sweep.probes).enumerate() {
        let ex = if k == 0 { f64::NAN } else { err_to_f(&sweep.extrapolated[k - 1]) };
        t.push(vec![h, err_to_f(probe), ex]);
    }
    r.table(t);
    r.detail("observed_orders", &sweep.observed_orders);
    r.detail("nodes", m);
    r.check(Check::at_most("generator", err_to_f(sweep.best()), s.tol("generator")));
    Ok(())
}

fn verify(s: &Scenario, state: &mut State, rng: &mut ChaCha8Rng, r: &mut PipelineReport) -> Result<(), Error> {
    let Some(u) = ensure_solution(s, state, r)? else { return Ok(()) };
    let spec = s.green.as_ref().expect("checked at load time");
    let mu = s.rate.as_ref().expect("checked at load time");
    let f = s.function(&spec.forcing).clone();
    // u = G^{-1} f solves the integral equation with forcing -f.
    let g = f.clone();
    let neg = GridFunction::with_profile(f.nodes().to_vec(), f.dim(), move |x| -g.eval(x))?.with_kinks(f.kinks().to_vec());
    let (lo, hi) = spec.pair_window;
    let pairs: Vec<(f64, f64)> = (0..spec.pairs)
        .map(|_| {
            let a = rng.random_range(lo..hi);
            let b = rng.random_range(lo..hi);
            (a.max(b), a.min(b))
        })
        .collect();
    let report = verify_integral_equation(s.family.as_ref().expect("checked at load time"), mu, &u, &neg, &pairs, &quad(s))?;
    r.detail("checked", report.checked);
    r.detail("skipped_pairs", report.skipped);
    r.detail("worst_pair", report.worst);
    if report.checked == 0 {
        r.fail("no pair lies inside the solution's node span");
    }
    r.check(Check::at_most("integral_equation", report.max_residual, s.tol("integral")));
    Ok(())
}
