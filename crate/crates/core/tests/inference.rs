use ssm_mirfs::exec::Serial;
use ssm_mirfs::inference::{fisher_information_mc, fit_mle, observed_information, FitOptions};
use ssm_mirfs::models::{FiniteHmm, LinGaussSpec};
use ssm_mirfs::{make_trapezoid_grid, rng, simulate, IntervalMap, StateGrid};

#[test]
fn iid_observed_information_matches_sample_formula() {
    let m = FiniteHmm::iid_gaussian(0.0);
    let v = 1.5;
    let th = m.params(0.0, v).unwrap();
    let g = StateGrid::finite(1).unwrap();
    let obs = simulate(&m, &th, 9_999, &mut rng::seeded(1))
        .unwrap()
        .observations;
    let info = observed_information(&m, &th, &g, &obs).unwrap();
    let n = obs.len() as f64;
    let ss: f64 = (0..obs.len()).map(|t| obs.row(t)[0].powi(2)).sum();
    let want = ss / v.powi(3) - n / (2.0 * v * v);
    assert!(
        (info[1][1] / want - 1.0).abs() < 1e-4,
        "{} vs {want}",
        info[1][1]
    );
    assert!((want / n * 2.0 * v * v - 1.0).abs() < 0.1);
}

#[test]
fn iid_fisher_information_by_monte_carlo() {
    let m = FiniteHmm::iid_gaussian(0.0);
    let v = 0.7;
    let th = m.params(0.0, v).unwrap();
    let g = StateGrid::finite(1).unwrap();
    let est = fisher_information_mc(&m, &th, &g, 40, 2000, 3, &Serial).unwrap();
    let want = 1.0 / (2.0 * v * v);
    assert!(
        (est.outer_product[1][1] / want - 1.0).abs() < 0.03,
        "{:?}",
        est.outer_product
    );
    assert!(
        (est.hessian[1][1] / want - 1.0).abs() < 0.03,
        "{:?}",
        est.hessian
    );
    assert!(!est.low_sample);
    let small = fisher_information_mc(&m, &th, &g, 2, 100, 3, &Serial).unwrap();
    assert!(small.low_sample);
}

fn lingauss_grid(spec: &LinGaussSpec) -> StateGrid {
    let sd = spec.stationary_variance().sqrt();
    make_trapezoid_grid(-8.0 * sd, 8.0 * sd, 64).unwrap()
}

#[test]
fn interval_maps_give_the_same_estimate() {
    let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
    let th = spec.params().unwrap();
    let g = lingauss_grid(&spec);
    let obs = simulate(&spec.model(), &th, 500, &mut rng::seeded(4))
        .unwrap()
        .observations;
    let start = LinGaussSpec::new(0.5, 0.7, 1.4).params().unwrap();
    let fit = |map| {
        let opts = FitOptions {
            interval_map: map,
            tol_grad: 1e-9,
            ..FitOptions::default()
        };
        fit_mle(&spec.model(), &start, &g, &obs, &opts).unwrap()
    };
    let (a, b) = (fit(IntervalMap::Tanh), fit(IntervalMap::Algebraic));
    assert!(a.converged && b.converged);
    for (x, y) in a.theta_hat.values().iter().zip(b.theta_hat.values()) {
        assert!(
            (x - y).abs() < 1e-5,
            "{:?} vs {:?}",
            a.theta_hat,
            b.theta_hat
        );
    }
}

#[test]
fn iteration_cap_reports_non_convergence_with_trace() {
    let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
    let th = spec.params().unwrap();
    let g = lingauss_grid(&spec);
    let obs = simulate(&spec.model(), &th, 300, &mut rng::seeded(5))
        .unwrap()
        .observations;
    let start = LinGaussSpec::new(0.2, 2.0, 0.3).params().unwrap();
    let res = fit_mle(
        &spec.model(),
        &start,
        &g,
        &obs,
        &FitOptions {
            max_iter: 1,
            ..FitOptions::default()
        },
    )
    .unwrap();
    assert!(!res.converged);
    assert_eq!(res.trace.len(), 2);
}

#[test]
fn unknown_free_parameter_is_rejected() {
    let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
    let th = spec.params().unwrap();
    let g = lingauss_grid(&spec);
    let obs = simulate(&spec.model(), &th, 50, &mut rng::seeded(5))
        .unwrap()
        .observations;
    let opts = FitOptions {
        free: Some(vec!["gamma".into()]),
        ..FitOptions::default()
    };
    assert!(fit_mle(&spec.model(), &th, &g, &obs, &opts).is_err());
}

#[test]
fn converged_fit_satisfies_first_order_condition() {
    let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
    let th = spec.params().unwrap();
    let g = lingauss_grid(&spec);
    let obs = simulate(&spec.model(), &th, 400, &mut rng::seeded(8))
        .unwrap()
        .observations;
    let opts = FitOptions::default();
    let res = fit_mle(&spec.model(), &th, &g, &obs, &opts).unwrap();
    assert!(res.converged);
    let norm = res.score_at_hat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(norm < opts.tol_grad * res.loglik.abs());
    assert_eq!(res.free, vec!["alpha", "sigma_eta2", "sigma_eps2"]);
    assert_eq!(res.std_errors.len(), 3);
}

#[test]
fn estimates_land_within_four_standard_errors() {
    let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
    let th = spec.params().unwrap();
    let g = lingauss_grid(&spec);
    let reps = 200;
    let mut hits = 0;
    for r in 0..reps {
        let obs = simulate(&spec.model(), &th, 2000, &mut rng::replication_rng(77, r))
            .unwrap()
            .observations;
        let Ok(fit) = fit_mle(&spec.model(), &th, &g, &obs, &FitOptions::default()) else {
            continue;
        };
        let inside = fit
            .theta_hat
            .values()
            .iter()
            .zip(th.values())
            .zip(&fit.std_errors)
            .all(|((a, b), se)| (a - b).abs() <= 4.0 * se);
        hits += (fit.converged && inside) as usize;
    }
    assert!(hits as f64 >= 0.95 * reps as f64, "{hits} of {reps}");
}
