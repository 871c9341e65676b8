use super::*;
use crate::entropy::{qib_gradient_fd, qib_objective, trace_log, trace_log_derivative_exact, QibStates};
use crate::instances::{random_one_qubit_instance, random_two_qubit_instance};
use crate::random::{random_density, random_density_with_spectrum, random_spectrum_in, random_unitary};
use crate::sampling::TraceMode;

fn central<F: Fn(&QibInstance<f64>) -> f64>(inst: &QibInstance<f64>, k: usize, h: f64, f: F) -> f64 {
    let mut p = inst.params().to_vec();
    p[k] += h;
    let up = f(&inst.with_parameters(&p).unwrap());
    p[k] -= 2.0 * h;
    let dn = f(&inst.with_parameters(&p).unwrap());
    (up - dn) / (2.0 * h)
}

fn cross_term(s: &QibStates<f64>) -> (&DensityMatrix<f64>, &DensityMatrix<f64>) {
    (&s.rho_rxt, &s.product_rxt)
}

#[test]
fn series_cross_entropy_tracks_exact_value() {
    let mut rng = stream_rng(1, 0);
    let plan = ApproximationPlan::plan(1e-3, 0.1, 1.0).unwrap();
    for _ in 0..5 {
        let spec = random_spectrum_in(4, 0.1, 0.9, &mut rng);
        let sigma = random_density_with_spectrum(&spec, &mut rng);
        let rho = random_density(4, 2, &mut rng);
        let approx = cross_entropy_series(&rho, &sigma, &plan, &EstimatorConfig::default()).unwrap();
        let exact = trace_log(&rho, &sigma).unwrap();
        assert!((approx - exact).abs() < 1e-3, "{approx} vs {exact}");
    }
}

#[test]
fn quadratures_agree_and_match_references() {
    let inst = random_one_qubit_instance(3, 0.5, 0.1).unwrap();
    let plan = plan_for_instance(&inst, 1e-3, 1.0).unwrap();
    let s = inst.states().unwrap();
    let (rho, sigma) = cross_term(&s);
    for k in 0..3 {
        let d = inst.state_derivatives(&s, k).unwrap();
        let run = |q: Quadrature| {
            let cfg = EstimatorConfig { quadrature: q, ..Default::default() };
            cross_entropy_derivative_series(rho, d.d_rxt.matrix(), sigma, d.d_product_rxt.matrix(), &plan, &cfg, 0)
                .unwrap()
                .value
        };
        let gl = run(Quadrature::GaussLegendre);
        let an = run(Quadrature::Analytic);
        assert!((gl - an).abs() < 1e-9, "GL {gl} vs analytic {an}");
        let exact = trace_log_derivative_exact(rho, d.d_rxt.matrix(), sigma, d.d_product_rxt.matrix()).unwrap();
        assert!((gl - exact).abs() < 1e-3, "series {gl} vs exact {exact}");
        let fd = central(&inst, k, 1e-5, |i| {
            let s = i.states().unwrap();
            let (r, g) = cross_term(&s);
            cross_entropy_series(r, g, &plan, &EstimatorConfig::default()).unwrap()
        });
        assert!((gl - fd).abs() < 1e-6, "series {gl} vs FD of series {fd}");
    }
}

#[test]
fn monte_carlo_spread_within_bound() {
    let inst = random_one_qubit_instance(5, 0.5, 0.1).unwrap();
    let plan = ApproximationPlan::plan(5e-2, 0.1, 1.0).unwrap();
    let s = inst.states().unwrap();
    let d = inst.state_derivatives(&s, 0).unwrap();
    let (rho, sigma) = cross_term(&s);
    let samples = 64;
    let values: Vec<f64> = (0..200)
        .map(|seed| {
            let cfg = EstimatorConfig { quadrature: Quadrature::MonteCarlo { samples }, seed, ..Default::default() };
            cross_entropy_derivative_series(rho, d.d_rxt.matrix(), sigma, d.d_product_rxt.matrix(), &plan, &cfg, 0)
                .unwrap()
                .value
        })
        .collect();
    let (mean, sd) = mean_and_sd(&values);
    let bound = plan.duhamel_stddev_bound(d.d_product_rxt.operator_norm(), samples);
    assert!(sd.unwrap() <= bound, "sd {} bound {bound}", sd.unwrap());
    let cfg = EstimatorConfig::default();
    let exact = cross_entropy_derivative_series(rho, d.d_rxt.matrix(), sigma, d.d_product_rxt.matrix(), &plan, &cfg, 0)
        .unwrap()
        .value;
    assert!((mean - exact).abs() < 4.0 * bound / (200f64).sqrt());
}

#[test]
fn monte_carlo_is_deterministic_per_seed() {
    let inst = random_one_qubit_instance(8, 0.3, 0.1).unwrap();
    let plan = plan_for_instance(&inst, 1e-2, 1.0).unwrap();
    let cfg = EstimatorConfig { quadrature: Quadrature::MonteCarlo { samples: 16 }, boost_repeats: 5, seed: 42, ..Default::default() };
    let a = qib_gradient_series(&inst, &plan, &cfg).unwrap();
    let b = qib_gradient_series(&inst, &plan, &cfg).unwrap();
    assert_eq!(a.values, b.values);
    let c = qib_gradient_series(&inst, &plan, &EstimatorConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn sampled_traces_cover_exact_value() {
    let inst = random_one_qubit_instance(11, 0.5, 0.1).unwrap();
    let plan = ApproximationPlan::plan(0.2, 0.1, 1.0).unwrap();
    let s = inst.states().unwrap();
    let d = inst.state_derivatives(&s, 1).unwrap();
    let (rho, sigma) = cross_term(&s);
    let exact = cross_entropy_derivative_series(
        rho, d.d_rxt.matrix(), sigma, d.d_product_rxt.matrix(), &plan, &EstimatorConfig::default(), 0,
    )
    .unwrap()
    .value;
    for mode in [TraceMode::ShotSampled, TraceMode::AeModel] {
        let mut hits = 0;
        let trials = 10;
        for seed in 0..trials {
            let cfg = EstimatorConfig {
                quadrature: Quadrature::MonteCarlo { samples: 8 },
                trace_mode: mode,
                trace_error: 0.1,
                trace_delta: 0.1,
                boost_repeats: 3,
                seed,
                ..Default::default()
            };
            let est = cross_entropy_derivative_series(
                rho, d.d_rxt.matrix(), sigma, d.d_product_rxt.matrix(), &plan, &cfg, 0,
            )
            .unwrap();
            assert!(est.stddev_bound > 0.0);
            if (est.value - exact).abs() <= 2.0 * est.stddev_bound {
                hits += 1;
            }
        }
        assert!(hits >= 9, "{mode}: {hits}/{trials}");
    }
}

#[test]
fn analytic_quadrature_rejects_sampled_traces() {
    let inst = random_one_qubit_instance(2, 0.5, 0.1).unwrap();
    let plan = plan_for_instance(&inst, 1e-2, 1.0).unwrap();
    let cfg = EstimatorConfig { quadrature: Quadrature::Analytic, trace_mode: TraceMode::ShotSampled, ..Default::default() };
    assert!(matches!(qib_gradient_series(&inst, &plan, &cfg), Err(QibError::Validation(_))));
}

#[test]
fn strict_window_rejects_small_eigenvalues() {
    let inst = random_one_qubit_instance(2, 0.5, 0.1).unwrap();
    let plan = ApproximationPlan::plan(1e-2, 0.4, 1.0).unwrap();
    let err = qib_gradient_series(&inst, &plan, &EstimatorConfig::default()).unwrap_err();
    assert!(matches!(err, QibError::WindowViolation { .. }));
    let relaxed = EstimatorConfig { window: WindowPolicy::Relaxed, ..Default::default() };
    assert!(qib_gradient_series(&inst, &plan, &relaxed).is_ok());
}

#[test]
fn series_gradient_matches_finite_differences() {
    for (seed, beta) in [(0, 0.0), (1, 0.5), (2, 1.0)] {
        let inst = random_one_qubit_instance(seed, beta, 0.1).unwrap();
        let plan = plan_for_instance(&inst, 1e-3, 1.0).unwrap();
        let g = qib_gradient_series(&inst, &plan, &EstimatorConfig::default()).unwrap();
        let fd = qib_gradient_fd(&inst, 1e-4, true).unwrap();
        for (a, b) in g.values.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-3, "beta {beta}: {a} vs {b}");
        }
        let obj = qib_objective_series(&inst, &plan, &EstimatorConfig::default()).unwrap();
        assert!((obj - qib_objective(&inst).unwrap()).abs() < 2e-3);
    }
}

#[test]
fn renyi_gradient_matches_finite_differences() {
    for (seed, beta) in [(0, 0.0), (1, 0.3), (2, 1.0)] {
        let inst = random_two_qubit_instance(seed, beta).unwrap();
        let g = renyi2_bound_gradient(&inst, InverseMode::Exact).unwrap();
        for k in 0..inst.params().len() {
            let fd = central(&inst, k, 1e-5, |i| renyi2_upper_bound(i).unwrap());
            assert!((g.values[k] - fd).abs() < 1e-6, "{} vs {fd}", g.values[k]);
        }
    }
}

#[test]
fn chebyshev_gradient_within_budget() {
    let inst = random_one_qubit_instance(4, 0.7, 0.1).unwrap();
    let exact = renyi2_bound_gradient(&inst, InverseMode::Exact).unwrap();
    for eps in [1e-2, 1e-3] {
        let approx = renyi2_bound_gradient(&inst, InverseMode::Chebyshev { epsilon: eps }).unwrap();
        assert!(approx.out_of_window.is_empty());
        for k in 0..exact.values.len() {
            let err = (approx.values[k] - exact.values[k]).abs();
            assert!(err <= approx.error_budgets[k], "err {err} budget {}", approx.error_budgets[k]);
        }
    }
}

#[test]
fn bounds_sandwich_objective() {
    for seed in 0..20 {
        for beta in [0.0, 0.3, 0.7, 1.0] {
            let inst = random_two_qubit_instance(seed, beta).unwrap();
            let b = qib_bounds(&inst).unwrap();
            assert!(b.lower <= b.objective + 1e-10 && b.objective <= b.upper + 1e-10, "{b:?}");
        }
    }
}

#[test]
fn divergence_chain() {
    let mut rng = stream_rng(9, 0);
    for _ in 0..50 {
        let rho = random_density(3, 3, &mut rng);
        let sigma = random_density(3, 3, &mut rng);
        let hs = 0.5 * (rho.matrix() - sigma.matrix()).norm_squared();
        let d1 = crate::entropy::relative_entropy(&rho, &sigma).unwrap();
        let d2 = renyi2_divergence(&rho, &sigma).unwrap();
        assert!(hs <= d1 + 1e-10 && d1 <= d2 + 1e-10, "{hs} {d1} {d2}");
    }
}

#[test]
fn measured_renyi_basic_values() {
    let mut rng = stream_rng(12, 0);
    let rho = random_density(3, 3, &mut rng);
    let m = measured_renyi2(&rho, &rho, MeasuredForm::Variational, &LyapunovMethod::Exact).unwrap();
    assert!(m.abs() < 1e-12);

    let p = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
    let q = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
    let m = measured_renyi2(&p, &q, MeasuredForm::Variational, &LyapunovMethod::Exact).unwrap();
    assert!((m - 1.25f64.ln()).abs() < 1e-12);
}

#[test]
fn measured_renyi_monotone_and_below_sandwiched() {
    let mut rng = stream_rng(13, 0);
    for _ in 0..20 {
        let rho = random_density(4, 4, &mut rng);
        let sigma = random_density(4, 4, &mut rng);
        let m = measured_renyi2(&rho, &sigma, MeasuredForm::Variational, &LyapunovMethod::Exact).unwrap();
        let d2 = renyi2_divergence(&rho, &sigma).unwrap();
        assert!(m <= d2 + 1e-10, "{m} > {d2}");
        let rho_a = rho.partial_trace(&[2, 2], &[true, false]).unwrap();
        let sigma_a = sigma.partial_trace(&[2, 2], &[true, false]).unwrap();
        let ma = measured_renyi2(&rho_a, &sigma_a, MeasuredForm::Variational, &LyapunovMethod::Exact).unwrap();
        assert!(ma <= m + 1e-10, "{ma} > {m}");
    }
}

#[test]
fn pipeline_matches_exact_inverse() {
    let mut rng = stream_rng(14, 0);
    let spec = random_spectrum_in(3, 0.2, 0.6, &mut rng);
    let sigma = random_density_with_spectrum(&spec, &mut rng);
    let rho = random_density(3, 2, &mut rng);
    let plan = LyapunovPlan::for_states(1e-3, rho.matrix(), 1.0, &sigma).unwrap();
    let exact = lyapunov_inverse(rho.matrix(), &sigma, &LyapunovMethod::Exact).unwrap();
    assert!(exact.residual < 1e-12);
    let approx = lyapunov_inverse(rho.matrix(), &sigma, &LyapunovMethod::Pipeline(plan)).unwrap();
    let err = HermitianOperator::from_hermitian_part(&(approx.omega - exact.omega)).operator_norm();
    assert!(err <= plan.omega_error_bound(), "{err} > {}", plan.omega_error_bound());
}

#[test]
fn measured_derivative_matches_finite_differences() {
    let mut rng = stream_rng(15, 0);
    let u = random_unitary(3, &mut rng);
    let h = crate::random::random_hermitian(3, &mut rng);
    let spec = random_spectrum_in(3, 0.2, 0.6, &mut rng);
    let sigma0 = random_density_with_spectrum(&spec, &mut rng);
    let rho0 = random_density(3, 3, &mut rng);
    // rho(a) = e^{-iaH} rho0 e^{iaH}, sigma(a) = (1-a) sigma0 + a U rho0 U^dag.
    let path = |a: f64| {
        let v = crate::linalg::unitary_exp(&h, a);
        let rho = DensityMatrix::new(&v * rho0.matrix() * v.adjoint()).unwrap();
        let target = &u * rho0.matrix() * u.adjoint();
        let sigma = DensityMatrix::new(sigma0.matrix() * Complex64::new(1.0 - a, 0.0) + target * Complex64::new(a, 0.0)).unwrap();
        (rho, sigma)
    };
    let (rho, sigma) = path(0.0);
    let i = Complex64::new(0.0, 1.0);
    let d_rho = (h.matrix() * rho.matrix() - rho.matrix() * h.matrix()) * (-i);
    let d_sigma = &u * rho0.matrix() * u.adjoint() - sigma0.matrix();
    for form in [MeasuredForm::Variational, MeasuredForm::ClosedForm] {
        let f = |a: f64| {
            let (r, s) = path(a);
            measured_renyi2(&r, &s, form, &LyapunovMethod::Exact).unwrap()
        };
        let fd = (f(1e-5) - f(-1e-5)) / 2e-5;
        let exact = measured_renyi2_derivative(&rho, &d_rho, &sigma, &d_sigma, form, &LyapunovMethod::Exact).unwrap();
        assert!((exact - fd).abs() < 1e-7, "{form:?}: {exact} vs {fd}");
        let dn = HermitianOperator::from_hermitian_part(&d_sigma).operator_norm();
        let plan = LyapunovPlan::for_states(1e-4, rho.matrix(), dn, &sigma).unwrap();
        let piped = measured_renyi2_derivative(&rho, &d_rho, &sigma, &d_sigma, form, &LyapunovMethod::Pipeline(plan)).unwrap();
        assert!((piped - exact).abs() < 1e-2, "{form:?}: pipeline {piped} vs {exact}");
    }
}

#[test]
fn measured_requires_positive_definite_reference() {
    let rho = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
    let sigma = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
    let err = measured_renyi2(&rho, &sigma, MeasuredForm::Variational, &LyapunovMethod::Exact).unwrap_err();
    assert!(matches!(err, QibError::Singular(_)));
}
