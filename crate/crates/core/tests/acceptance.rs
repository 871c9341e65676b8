//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use qiblab::entropy::{qib_gradient_fd, relative_entropy};
use qiblab::estimators::{
    cross_entropy_derivative_series, lyapunov_inverse, measured_renyi2, plan_for_instance, qib_bounds,
    qib_gradient_series, renyi2_bound_gradient, renyi2_divergence, renyi2_upper_bound, stream_rng, EstimatorConfig,
    InverseMode, LyapunovMethod, LyapunovPlan, MeasuredForm, Quadrature,
};
use qiblab::instances::{random_one_qubit_instance, random_two_qubit_instance, toy_initial_params, toy_instance};
use qiblab::linalg::{apply_matrix_function, CMatrix};
use qiblab::random::{random_density, random_density_with_spectrum, random_hermitian, random_spectrum_in, random_unitary};
use qiblab::sampling::{
    boosted_amplitude_estimate, swap_test_circuit_probability, swap_test_probability, AeConfig, SwapTestSpec,
};
use qiblab::series::{
    approx_log_operator, chebyshev_inverse, taylor_log_coeffs, taylor_log_eval, taylor_log_min_order,
    ApproximationPlan, ChebyshevInversePlan,
};
use qiblab::trainer::{train, GradientSource, TrainConfig};
use qiblab::{DensityMatrix, HermitianOperator, QibInstance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_time(o: Outcome, start: Instant, limit: Duration) -> Outcome {
    let t = start.elapsed();
    Outcome {
        pass: o.pass && t < limit,
        detail: format!("{}; {:.2}s (limit {}s)", o.detail, t.as_secs_f64(), limit.as_secs()),
    }
}

fn op_norm(m: &CMatrix<f64>) -> f64 {
    HermitianOperator::new(m.clone()).expect("hermitian difference").operator_norm()
}

fn series_log_accuracy() -> Outcome {
    let start = Instant::now();
    let eps = 1e-3;
    let plan = ApproximationPlan::plan(eps, 0.1, 1.0).expect("plan");
    let mut rng = stream_rng(101, 0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        // Every other matrix has a one-dimensional kernel.
        let spec = if i % 2 == 0 {
            random_spectrum_in(4, 0.1, 0.9, &mut rng)
        } else {
            let mut s = random_spectrum_in(3, 0.1, 0.9, &mut rng);
            s.push(0.0);
            s
        };
        let sigma = random_density_with_spectrum(&spec, &mut rng).as_hermitian();
        let approx = approx_log_operator(&sigma, &plan).expect("window");
        let exact = apply_matrix_function(&sigma, f64::ln, 1e-10).expect("log");
        worst = worst.max(op_norm(&(approx.matrix() - exact.matrix())));
    }
    within_time(
        outcome(worst <= eps, format!("K={} L={} M={}, max error {worst:.2e}", plan.k, plan.l, plan.m)),
        start,
        Duration::from_secs(10),
    )
}

fn taylor_truncation() -> Outcome {
    let k = taylor_log_min_order(2.0, 1e-3).expect("order");
    let coeffs = taylor_log_coeffs(12);
    let n = 20_001;
    let worst = (0..n)
        .map(|i| {
            let x = 0.5 + 0.5 * i as f64 / (n - 1) as f64;
            (taylor_log_eval(&coeffs, x - 1.0) - x.ln()).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-3 && k == 12, format!("planner order {k}, sup error at K=12 {worst:.2e}"))
}

fn central<F: Fn(&QibInstance) -> f64>(inst: &QibInstance, k: usize, h: f64, f: F) -> f64 {
    let mut p = inst.params().to_vec();
    p[k] += h;
    let up = f(&inst.with_parameters(&p).unwrap());
    p[k] -= 2.0 * h;
    let dn = f(&inst.with_parameters(&p).unwrap());
    (up - dn) / (2.0 * h)
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut series_worst: f64 = 0.0;
    let mut renyi_worst: f64 = 0.0;
    let mut cases = 0;
    for seed in 0..10 {
        for beta in [0.0, 0.5, 1.0] {
            let inst = random_one_qubit_instance(seed, beta, 0.1).expect("instance");
            let plan = plan_for_instance(&inst, 1e-3, 1.0).expect("plan");
            let cfg = EstimatorConfig { quadrature: Quadrature::GaussLegendre, ..Default::default() };
            let series = qib_gradient_series(&inst, &plan, &cfg).expect("series gradient");
            let fd = qib_gradient_fd(&inst, 1e-4, true).expect("fd");
            let renyi = renyi2_bound_gradient(&inst, InverseMode::Exact).expect("renyi gradient");
            for k in 0..inst.params().len() {
                series_worst = series_worst.max((series.values[k] - fd[k]).abs());
                let rfd = central(&inst, k, 1e-5, |i| renyi2_upper_bound(i).unwrap());
                renyi_worst = renyi_worst.max((renyi.values[k] - rfd).abs());
            }
            cases += 1;
        }
    }
    within_time(
        outcome(
            series_worst <= 1e-3 && renyi_worst <= 1e-4,
            format!("{cases} cases, series-FD {series_worst:.2e}, Renyi-FD {renyi_worst:.2e}"),
        ),
        start,
        Duration::from_secs(60),
    )
}

fn sampling_envelopes() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    let mut rng = stream_rng(303, 0);
    for (d, samples) in [(2usize, 256usize), (4, 64), (8, 16)] {
        let spec = random_spectrum_in(d, 0.1, 0.1 + 2.0 / d as f64, &mut rng);
        let sigma = random_density_with_spectrum(&spec, &mut rng);
        let rho = random_density(d, d, &mut rng);
        let d_rho = random_hermitian(d, &mut rng);
        let d_sigma = random_hermitian(d, &mut rng);
        let dn = d_sigma.operator_norm();
        let plan = ApproximationPlan::plan(1e-2, spec.iter().copied().fold(1.0, f64::min), dn).expect("plan");
        let values: Vec<f64> = (0..200)
            .map(|r| {
                let cfg = EstimatorConfig { quadrature: Quadrature::MonteCarlo { samples }, seed: r, ..Default::default() };
                cross_entropy_derivative_series(&rho, d_rho.matrix(), &sigma, d_sigma.matrix(), &plan, &cfg, 0)
                    .unwrap()
                    .value
            })
            .collect();
        let mean = values.iter().sum::<f64>() / 200.0;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
        let bound = plan.duhamel_stddev_bound(dn, samples);
        pass &= sd > 0.0 && sd <= bound;
        details.push(format!("d={d} n={samples}: sd {sd:.2e} <= {bound:.2e}"));
    }
    let mut rng = stream_rng(404, 0);
    let trials = 10_000;
    for repeats in [12usize, 24, 48] {
        let cfg = AeConfig { queries: 200, k: 3.0, repeats };
        let mut failures = 0;
        for _ in 0..trials {
            let p: f64 = rng.random();
            let est = boosted_amplitude_estimate(p, &cfg, &mut rng);
            if (est - p).abs() > cfg.error_bound(p) {
                failures += 1;
            }
        }
        let rate = failures as f64 / trials as f64;
        let bound = cfg.failure_bound();
        let allowed = bound + 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
        pass &= rate <= allowed;
        details.push(format!("AE n={repeats}: failure {rate:.4} <= {allowed:.4}"));
    }
    within_time(outcome(pass, details.join(", ")), start, Duration::from_secs(300))
}

fn bound_sandwich() -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    for seed in 0..500 {
        for beta in [0.0, 0.3, 0.7, 1.0] {
            let inst = random_two_qubit_instance(seed, beta).expect("instance");
            let b = qib_bounds(&inst).expect("bounds");
            if !(b.lower <= b.objective + 1e-12 && b.objective <= b.upper + 1e-12) {
                violations += 1;
            }
            checked += 1;
        }
    }
    let mut chain_violations = 0;
    let mut rng = stream_rng(505, 0);
    for i in 0..500 {
        let d = 2 + i % 3;
        let rho = random_density(d, 1 + i % d, &mut rng);
        let sigma = random_density(d, d, &mut rng);
        let diff = HermitianOperator::new(rho.matrix() - sigma.matrix()).unwrap();
        let hs = 0.5 * diff.matrix().norm_squared();
        let tn = 0.5 * diff.trace_norm().powi(2);
        let d1 = relative_entropy(&rho, &sigma).unwrap();
        let d2 = renyi2_divergence(&rho, &sigma).unwrap();
        if !(d2 + 1e-12 >= d1 && d1 + 1e-12 >= tn && tn + 1e-12 >= hs) {
            chain_violations += 1;
        }
    }
    outcome(
        violations == 0 && chain_violations == 0,
        format!("{violations}/{checked} sandwich violations, {chain_violations}/500 chain violations"),
    )
}

fn trace_of_product(states: &[DensityMatrix], unitaries: &[CMatrix<f64>]) -> Complex64 {
    let d = states[0].dim();
    let mut m = CMatrix::<f64>::identity(d, d);
    for (u, r) in unitaries.iter().zip(states) {
        m = m * u * r.matrix();
    }
    m.trace()
}

fn swap_and_chebyshev() -> Outcome {
    let mut rng = stream_rng(606, 0);
    let mut dev: f64 = 0.0;
    for registers in [2usize, 3] {
        for _ in 0..10 {
            let states: Vec<DensityMatrix> = (0..registers).map(|_| random_density(2, 2, &mut rng)).collect();
            let unitaries: Vec<CMatrix<f64>> = (0..registers).map(|_| random_unitary(2, &mut rng)).collect();
            let t = trace_of_product(&states, &unitaries);
            let spec = SwapTestSpec::new(states, unitaries).unwrap();
            let circuit_re = swap_test_circuit_probability(&spec, false).unwrap();
            let circuit_im = swap_test_circuit_probability(&spec, true).unwrap();
            dev = dev.max((circuit_re - (1.0 + t.re) / 2.0).abs());
            dev = dev.max((circuit_im - (1.0 + t.im) / 2.0).abs());
            dev = dev.max((swap_test_probability(&spec, false) - circuit_re).abs());
        }
    }
    let mut cheb_ok = true;
    let mut cheb = Vec::new();
    for kappa in [4.0, 10.0] {
        for eps in [1e-2, 1e-3] {
            let plan = ChebyshevInversePlan::new(kappa, eps).unwrap();
            let n = 20_001;
            let worst = (0..n)
                .map(|i| {
                    let x = 1.0 / kappa + (1.0 - 1.0 / kappa) * i as f64 / (n - 1) as f64;
                    (plan.eval(x) - 1.0 / x).abs()
                })
                .fold(0.0, f64::max);
            let u = random_unitary(4, &mut rng);
            let diag = CMatrix::<f64>::from_fn(4, 4, |i, j| {
                Complex64::new(if i == j { 1.0 / kappa + (1.0 - 1.0 / kappa) * j as f64 / 3.0 } else { 0.0 }, 0.0)
            });
            let sigma = HermitianOperator::new(&u * diag * u.adjoint()).unwrap();
            let inv = apply_matrix_function(&sigma, |x| 1.0 / x, 0.0).unwrap();
            let approx = chebyshev_inverse(&sigma, &plan);
            let mat = op_norm(&(approx.operator.matrix() - inv.matrix()));
            cheb_ok &= worst <= 2.0 * eps && mat <= 2.0 * eps && approx.out_of_window.is_empty();
            cheb.push(format!("k={kappa},e={eps}: {:.1e}", worst.max(mat) / eps));
        }
    }
    outcome(
        dev < 1e-10 && cheb_ok,
        format!("swap-test deviation {dev:.1e}; Chebyshev error/eps {}", cheb.join(" ")),
    )
}

fn measured_renyi() -> Outcome {
    let mut rng = stream_rng(707, 0);
    let exact = LyapunovMethod::Exact;
    let form = MeasuredForm::Variational;
    let (mut self_worst, mut classical_worst): (f64, f64) = (0.0, 0.0);
    let (mut dpi_viol, mut d2_viol) = (0, 0);
    for i in 0..200 {
        let rho = random_density(4, 4, &mut rng);
        let sigma = random_density(4, 4, &mut rng);
        self_worst = self_worst.max(measured_renyi2(&rho, &rho, form, &exact).unwrap().abs());

        let p = random_spectrum_in(3, 0.01, 1.0, &mut rng);
        let q = random_spectrum_in(3, 0.01, 1.0, &mut rng);
        let u = random_unitary(3, &mut rng);
        let rot = |v: &[f64]| {
            let m = DensityMatrix::from_diagonal(v).unwrap();
            DensityMatrix::new(&u * m.matrix() * u.adjoint()).unwrap()
        };
        let classical = p.iter().zip(&q).map(|(a, b)| a * a / b).sum::<f64>().ln();
        let m = measured_renyi2(&rot(&p), &rot(&q), form, &exact).unwrap();
        classical_worst = classical_worst.max((m - classical).abs());

        let full = measured_renyi2(&rho, &sigma, form, &exact).unwrap();
        let keep = if i % 2 == 0 { [true, false] } else { [false, true] };
        let ra = rho.partial_trace(&[2, 2], &keep).unwrap();
        let sa = sigma.partial_trace(&[2, 2], &keep).unwrap();
        if measured_renyi2(&ra, &sa, form, &exact).unwrap() > full + 1e-8 {
            dpi_viol += 1;
        }
        if full > renyi2_divergence(&rho, &sigma).unwrap() + 1e-8 {
            d2_viol += 1;
        }
    }
    let mut pipe_ok = true;
    let mut pipe = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let spec = random_spectrum_in(3, 0.15, 0.6, &mut rng);
        let sigma = random_density_with_spectrum(&spec, &mut rng);
        let rho = random_density(3, 3, &mut rng);
        let plan = LyapunovPlan::for_states(eps, rho.matrix(), 1.0, &sigma).unwrap();
        let e = lyapunov_inverse(rho.matrix(), &sigma, &exact).unwrap();
        let a = lyapunov_inverse(rho.matrix(), &sigma, &LyapunovMethod::Pipeline(plan)).unwrap();
        let err = op_norm(&(&a.omega - &e.omega));
        let budget = plan.omega_error_bound();
        let sn = sigma.eigen().values.last().copied().unwrap();
        pipe_ok &= err <= budget && a.residual <= 2.0 * sn * budget;
        pipe.push(format!("eps={eps}: {err:.1e}<={budget:.1e}"));
    }
    outcome(
        self_worst <= 1e-8 && classical_worst <= 1e-6 && dpi_viol == 0 && d2_viol == 0 && pipe_ok,
        format!(
            "D(rho||rho) {self_worst:.1e}, classical gap {classical_worst:.1e}, DPI violations {dpi_viol}, \
             above-D2 {d2_viol}, pipeline {}",
            pipe.join(" ")
        ),
    )
}

fn training() -> Outcome {
    let start = Instant::now();
    let mut monotone = true;
    let mut improved = 0;
    let mut worst_gap: f64 = 0.0;
    for seed in 0..20 {
        let inst = toy_instance(0.1, &toy_initial_params(seed)).expect("toy");
        let fd = train(&inst, &TrainConfig { max_steps: 100, ..Default::default() }).expect("fd training");
        monotone &= fd.records.windows(2).all(|w| w[1].loss <= w[0].loss);
        if fd.last().i_xy > fd.first().i_xy {
            improved += 1;
        }
        let series = train(&inst, &TrainConfig { max_steps: 100, gradient: GradientSource::Series, ..Default::default() })
            .expect("series training");
        worst_gap = worst_gap.max((series.last().loss - fd.last().loss).abs());
    }
    within_time(
        outcome(
            monotone && improved >= 18 && worst_gap <= 1e-2,
            format!("monotone {monotone}, I(X~;Y) increased in {improved}/20, series-FD final loss gap {worst_gap:.1e}"),
        ),
        start,
        Duration::from_secs(300),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("series logarithm accuracy", series_log_accuracy),
        ("Taylor truncation bound", taylor_truncation),
        ("gradient correctness", gradient_correctness),
        ("sampling envelopes", sampling_envelopes),
        ("bound sandwich", bound_sandwich),
        ("swap test and Chebyshev inverse", swap_and_chebyshev),
        ("measured Renyi-2", measured_renyi),
        ("training", training),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("{} criterion {}: {name} ({})", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
