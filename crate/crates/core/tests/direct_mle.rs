mod common;

use censored_em::direct::{fit_direct, rayleigh_mle_closed_form, stationarity, GRADIENT_TOL};
use censored_em::{
    fit, observed_loglik, Algorithm, CensoredSample, Error, Family, FitConfig, ParameterSet, Unit,
};

use common::{balakrishnan, SampleGen};

fn direct(family: Family) -> FitConfig {
    FitConfig::new(Algorithm::Direct, family)
}

/// Maximizes a unimodal function of one variable on [lo, hi].
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-11 * (1.0 + lo.abs()) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

fn laplace_profile(sample: &CensoredSample, mu: f64, scale: f64) -> f64 {
    let ll = |log_sigma: f64| {
        let p = ParameterSet::laplace(mu, log_sigma.exp()).unwrap();
        observed_loglik(sample, &p).unwrap()
    };
    golden_max(ll, scale.ln() - 8.0, scale.ln() + 8.0).1
}

/// Scans the location over every data point, the midpoints between them and
/// a regular grid, maximizing the scale at each.
fn laplace_scan(sample: &CensoredSample) -> f64 {
    let mut ws: Vec<f64> = sample.units().iter().map(|u| u.w).collect();
    ws.sort_by(f64::total_cmp);
    let (lo, hi) = (ws[0], ws[ws.len() - 1]);
    let scale = (hi - lo).max(1e-3);
    let mut candidates = ws.clone();
    candidates.extend(ws.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.extend((0..=400).map(|i| lo - scale + 3.0 * scale * i as f64 / 400.0));
    candidates
        .into_iter()
        .map(|mu| laplace_profile(sample, mu, scale))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn laplace_direct_beats_kink_scan() {
    let mut gen = SampleGen::new(515);
    for case in 0..50 {
        let truth =
            ParameterSet::laplace(gen.range_f64(-20.0, 20.0), gen.range_f64(0.3, 5.0)).unwrap();
        let n = gen.range_usize(5, 60);
        let frac = gen.range_f64(0.0, 0.6);
        let sample = gen.censored_sample(&truth, n, frac, 2);
        let report = fit_direct(&sample, &direct(Family::Laplace)).unwrap();
        let scan = laplace_scan(&sample);
        assert!(
            report.loglik >= scan - 1e-7 * scan.abs().max(1.0),
            "case {case}: direct {} < scan {scan}",
            report.loglik
        );
        assert!(report.gradient_norm <= GRADIENT_TOL, "case {case}");
    }
}

#[test]
fn laplace_example_location_and_scale() {
    let report = fit_direct(&balakrishnan(), &direct(Family::Laplace)).unwrap();
    let v = report.argmax.values();
    assert!((v[0] - 49.76609).abs() < 1e-5, "{v:?}");
    assert!((v[1] - 4.68761).abs() < 1e-5, "{v:?}");
}

#[test]
fn rayleigh_direct_matches_closed_form_and_grid() {
    let mut gen = SampleGen::new(616);
    for _ in 0..30 {
        let truth = ParameterSet::rayleigh(gen.range_f64(0.5, 20.0)).unwrap();
        let n = gen.range_usize(3, 100);
        let frac = gen.range_f64(0.0, 0.7);
        let sample = gen.censored_sample(&truth, n, frac, 1);
        let closed = rayleigh_mle_closed_form(&sample).unwrap().values()[0];
        let report = fit_direct(&sample, &direct(Family::Rayleigh)).unwrap();
        let d = report.argmax.values()[0];
        assert!((d - closed).abs() <= 1e-6 * closed, "{d} vs {closed}");
        let ll_closed = observed_loglik(&sample, &ParameterSet::rayleigh(closed).unwrap()).unwrap();
        for i in 1..200 {
            let beta = closed * (0.5 + i as f64 / 200.0);
            let ll = observed_loglik(&sample, &ParameterSet::rayleigh(beta).unwrap()).unwrap();
            assert!(ll <= ll_closed + 1e-12);
        }
    }
}

#[test]
fn normal_direct_agrees_with_em() {
    let mut gen = SampleGen::new(717);
    for case in 0..30 {
        let truth = ParameterSet::normal(gen.range_f64(-5.0, 5.0), gen.range_f64(0.2, 4.0).powi(2))
            .unwrap();
        let n = gen.range_usize(8, 120);
        let frac = gen.range_f64(0.0, 0.6);
        let sample = gen.censored_sample(&truth, n, frac, 3);
        let em = fit(
            &sample,
            &FitConfig::new(Algorithm::Em, Family::Normal)
                .with_tol(1e-12)
                .with_max_iter(100_000),
        )
        .unwrap()
        .final_params
        .reported();
        let report = fit_direct(&sample, &direct(Family::Normal)).unwrap();
        let d = report.argmax.reported();
        assert!(
            (em[0] - d[0]).abs() < 1e-5 * (1.0 + em[1])
                && (em[1] - d[1]).abs() < 1e-5 * (1.0 + em[1]),
            "case {case}: EM {em:?} direct {d:?}"
        );
        assert!(stationarity(&sample, &report.argmax) <= GRADIENT_TOL);
    }
}

#[test]
fn iteration_cap_reports_best_point() {
    let mut gen = SampleGen::new(818);
    let sample = gen.censored_sample(&ParameterSet::normal(3.0, 1.0).unwrap(), 40, 0.3, 2);
    let cfg = direct(Family::Normal).with_max_iter(3);
    match fit_direct(&sample, &cfg) {
        Err(Error::NonConvergence { best, loglik }) => {
            assert_eq!(best.family(), Family::Normal);
            assert!(loglik.is_finite());
            assert!((observed_loglik(&sample, &best).unwrap() - loglik).abs() < 1e-12);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn all_censored_is_refused() {
    let sample = CensoredSample::new(vec![Unit::censored(1.0), Unit::censored(2.0)]);
    for family in Family::ALL {
        assert!(matches!(
            fit_direct(&sample, &direct(family)),
            Err(Error::NoUncensored)
        ));
    }
}

#[test]
fn start_of_the_wrong_family_is_rejected() {
    let cfg = direct(Family::Laplace).with_start(ParameterSet::rayleigh(1.0).unwrap());
    assert!(matches!(
        fit_direct(&balakrishnan(), &cfg),
        Err(Error::FamilyMismatch { .. })
    ));
}
