use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use qiblab::config::{load_channel, load_ensemble};
use qiblab::entropy::{qib_gradient_fd, QibInstance};
use qiblab::estimators::{
    instance_window, measured_renyi2, qib_bounds, qib_gradient_series, renyi2_bound_gradient, renyi2_upper_bound,
    stream_rng, EstimatorConfig, InverseMode, LyapunovMethod, MeasuredForm, QibBounds, Quadrature, WindowPolicy,
};
use qiblab::linalg::apply_matrix_function;
use qiblab::random::{random_density, random_density_with_spectrum, random_spectrum_in, random_unitary};
use qiblab::sampling::{
    estimate_trace_product, swap_test_circuit_probability, swap_test_probability, SwapTestSpec, TraceMode,
};
use qiblab::series::{approx_log_operator, plan_orders, ApproximationPlan, PlanOrders};
use qiblab::trainer::{self, BetaSchedule, GradientSource, ObjectiveKind, PlanChoice, TrainConfig};
use qiblab::{QibError, Result};

use crate::{prepare_out, EstimatorArgs, InstanceArgs};

/// Parses a kebab-case enum name through its serde representation.
pub fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureArg {
    /// Gauss-Legendre for exact traces, Monte Carlo otherwise.
    Auto,
    Gl,
    Analytic,
    Mc,
}

impl std::str::FromStr for QuadratureArg {
    type Err = QibError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "gl" => Ok(Self::Gl),
            "analytic" => Ok(Self::Analytic),
            "mc" => Ok(Self::Mc),
            other => Err(QibError::Validation(format!("unknown quadrature {other:?}"))),
        }
    }
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        let quadrature = match self.quadrature {
            QuadratureArg::Auto if self.mode == TraceMode::ExactTrace => Quadrature::GaussLegendre,
            QuadratureArg::Auto | QuadratureArg::Mc => Quadrature::MonteCarlo { samples: self.samples },
            QuadratureArg::Gl => Quadrature::GaussLegendre,
            QuadratureArg::Analytic => Quadrature::Analytic,
        };
        EstimatorConfig {
            quadrature,
            boost_repeats: self.repeats,
            trace_mode: self.mode,
            trace_error: self.trace_error,
            trace_delta: self.trace_delta,
            seed: self.seed,
            window: if self.relaxed { WindowPolicy::Relaxed } else { WindowPolicy::Strict },
        }
    }
}

fn load_instance(args: &InstanceArgs) -> Result<QibInstance<f64>> {
    let ens = load_ensemble(&args.ensemble)?;
    let ch = load_channel(&args.channel)?;
    QibInstance::from_ensemble(&ens, ch, args.beta)
}

/// Prints the report and, with an output directory, also stores it as `name`.
fn emit<T: Serialize>(report: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if let Some(dir) = prepare_out(out)? {
        std::fs::write(dir.join(name), format!("{text}\n"))?;
    }
    // A closed reader (e.g. `| head`) is not an error.
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_csv(out: Option<&Path>, name: &str, header: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let Some(dir) = prepare_out(out)? else {
        return Ok(());
    };
    let mut f = BufWriter::new(File::create(dir.join(name))?);
    writeln!(f, "{header}")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluateReport {
    beta: f64,
    params: Vec<f64>,
    loss: f64,
    i_rx: f64,
    i_xy: f64,
    bounds: QibBounds,
    lambda_min: f64,
    deriv_norm: f64,
    /// Measured Rényi-2 divergences of the two mutual-information pairs
    /// (absent when the reference is singular).
    measured_renyi2_rx: Option<f64>,
    measured_renyi2_xy: Option<f64>,
}

fn measured_or_none(rho: &qiblab::DensityMatrix, sigma: &qiblab::DensityMatrix) -> Result<Option<f64>> {
    match measured_renyi2(rho, sigma, MeasuredForm::Variational, &LyapunovMethod::Exact) {
        Ok(v) => Ok(Some(v)),
        Err(QibError::Singular(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn evaluate(args: &InstanceArgs, out: Option<&Path>) -> Result<()> {
    let inst = load_instance(args)?;
    let s = inst.states()?;
    let (i_rx, i_xy) = inst.information_from(&s)?;
    let (lambda_min, deriv_norm) = instance_window(&inst)?;
    let report = EvaluateReport {
        beta: inst.beta(),
        params: inst.params().to_vec(),
        loss: inst.beta() * i_rx - (1.0 - inst.beta()) * i_xy,
        i_rx,
        i_xy,
        bounds: qib_bounds(&inst)?,
        lambda_min,
        deriv_norm,
        measured_renyi2_rx: measured_or_none(&s.rho_rxt, &s.product_rxt)?,
        measured_renyi2_xy: measured_or_none(&s.rho_xty, &s.product_xty)?,
    };
    emit(&report, out, "evaluate.json")
}

#[derive(Serialize)]
struct ParamsReport {
    eps: f64,
    lambda_min: f64,
    deriv_norm: f64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "M")]
    m: usize,
    /// Uniform Duhamel samples.
    n: f64,
}

pub fn params(eps: f64, lambda_min: f64, deriv_norm: f64, out: Option<&Path>) -> Result<()> {
    let PlanOrders { k, l, m, n } = plan_orders(eps, lambda_min, deriv_norm)?;
    emit(&ParamsReport { eps, lambda_min, deriv_norm, k, l, m, n }, out, "params.json")
}

pub struct GradOptions {
    pub eps: f64,
    pub lambda_min: Option<f64>,
    pub deriv_norm: Option<f64>,
    pub cheb_eps: f64,
}

#[derive(Serialize)]
struct GradRow {
    param: usize,
    fd: f64,
    series: f64,
    series_stddev_bound: f64,
    series_abs_diff: f64,
    renyi2: f64,
    renyi2_fd: f64,
    renyi2_chebyshev: Option<f64>,
    chebyshev_budget: Option<f64>,
}

#[derive(Serialize)]
struct GradReport {
    beta: f64,
    plan: ApproximationPlan,
    estimator: EstimatorConfig,
    rows: Vec<GradRow>,
    max_series_abs_diff: f64,
}

fn central<F: Fn(&QibInstance<f64>) -> Result<f64>>(inst: &QibInstance<f64>, k: usize, h: f64, f: F) -> Result<f64> {
    let mut p = inst.params().to_vec();
    p[k] += h;
    let up = f(&inst.with_parameters(&p)?)?;
    p[k] -= 2.0 * h;
    let dn = f(&inst.with_parameters(&p)?)?;
    Ok((up - dn) / (2.0 * h))
}

pub fn grad(args: &InstanceArgs, est: &EstimatorArgs, opts: GradOptions, out: Option<&Path>) -> Result<()> {
    let inst = load_instance(args)?;
    let (lam, dn) = instance_window(&inst)?;
    let plan = ApproximationPlan::plan(
        opts.eps,
        opts.lambda_min.unwrap_or(lam.min(0.5)),
        opts.deriv_norm.unwrap_or(dn),
    )?;
    let cfg = est.config();
    let series = qib_gradient_series(&inst, &plan, &cfg)?;
    let fd = qib_gradient_fd(&inst, 1e-4, true)?;
    let renyi = renyi2_bound_gradient(&inst, InverseMode::Exact)?;
    let cheb = if inst.beta() > 0.0 {
        Some(renyi2_bound_gradient(&inst, InverseMode::Chebyshev { epsilon: opts.cheb_eps })?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for k in 0..inst.params().len() {
        rows.push(GradRow {
            param: k,
            fd: fd[k],
            series: series.values[k],
            series_stddev_bound: series.stddev_bounds[k],
            series_abs_diff: (series.values[k] - fd[k]).abs(),
            renyi2: renyi.values[k],
            renyi2_fd: central(&inst, k, 1e-5, renyi2_upper_bound)?,
            renyi2_chebyshev: cheb.as_ref().map(|c| c.values[k]),
            chebyshev_budget: cheb.as_ref().map(|c| c.error_budgets[k]),
        });
    }
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.param.to_string(),
                r.fd.to_string(),
                r.series.to_string(),
                r.series_stddev_bound.to_string(),
                r.series_abs_diff.to_string(),
                r.renyi2.to_string(),
                r.renyi2_fd.to_string(),
                opt(r.renyi2_chebyshev),
                opt(r.chebyshev_budget),
            ]
        })
        .collect();
    write_csv(
        out,
        "grad.csv",
        "# qiblab-grad v1",
        &[
            "param", "fd", "series", "series_stddev_bound", "series_abs_diff", "renyi2", "renyi2_fd",
            "renyi2_chebyshev", "chebyshev_budget",
        ],
        &csv_rows,
    )?;
    let max_series_abs_diff = rows.iter().map(|r| r.series_abs_diff).fold(0.0, f64::max);
    emit(
        &GradReport { beta: inst.beta(), plan, estimator: cfg, rows, max_series_abs_diff },
        out,
        "grad.json",
    )
}

pub struct ApproxOptions {
    pub eps: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub deriv_norm: f64,
    pub count: usize,
    pub dim: usize,
    pub grid: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct ApproxReport {
    plan: ApproximationPlan,
    max_scalar_error: f64,
    matrix_errors: Vec<f64>,
    max_matrix_error: f64,
    within_target: bool,
}

pub fn approx_check(o: ApproxOptions, out: Option<&Path>) -> Result<()> {
    if o.grid < 2 || o.dim < 1 || !(o.lambda_min < o.lambda_max && o.lambda_max <= 1.0) {
        return Err(QibError::Validation(
            "need grid >= 2, dim >= 1 and lambda_min < lambda_max <= 1".into(),
        ));
    }
    let n = o.dim as f64;
    if o.count > 0 && !(n * o.lambda_min < 1.0 && n * o.lambda_max > 1.0) {
        return Err(QibError::Validation(format!(
            "no normalized spectrum of size {} fits inside [{}, {}]",
            o.dim, o.lambda_min, o.lambda_max
        )));
    }
    let plan = ApproximationPlan::plan(o.eps, o.lambda_min, o.deriv_norm)?;
    let mut rows = Vec::with_capacity(o.grid);
    let mut max_scalar_error: f64 = 0.0;
    for i in 0..o.grid {
        let x = o.lambda_min + (1.0 - o.lambda_min) * i as f64 / (o.grid - 1) as f64;
        let (a, e) = (plan.log(x), x.ln());
        max_scalar_error = max_scalar_error.max((a - e).abs());
        rows.push(vec![x.to_string(), a.to_string(), e.to_string(), (a - e).abs().to_string()]);
    }
    write_csv(out, "approx_check.csv", "# qiblab-approx-check v1", &["x", "series", "exact", "abs_error"], &rows)?;
    let mut rng = stream_rng(o.seed, 0);
    let mut matrix_errors = Vec::with_capacity(o.count);
    for _ in 0..o.count {
        let spec = random_spectrum_in(o.dim, o.lambda_min, o.lambda_max, &mut rng);
        let sigma = random_density_with_spectrum(&spec, &mut rng).as_hermitian();
        let approx = approx_log_operator(&sigma, &plan)?;
        let exact = apply_matrix_function(&sigma, f64::ln, 1e-10)?;
        let diff = qiblab::HermitianOperator::new(approx.matrix() - exact.matrix())?;
        matrix_errors.push(diff.operator_norm());
    }
    let max_matrix_error = matrix_errors.iter().copied().fold(0.0, f64::max);
    let within_target = max_matrix_error <= o.eps && max_scalar_error <= o.eps;
    emit(
        &ApproxReport { plan, max_scalar_error, matrix_errors, max_matrix_error, within_target },
        out,
        "approx_check.json",
    )
}

pub struct SwapOptions {
    pub registers: usize,
    pub dim: usize,
    pub trials: usize,
    pub mode: TraceMode,
    pub trace_error: f64,
    pub trace_delta: f64,
    pub seed: u64,
}

#[derive(Serialize)]
struct SwapReport {
    mode: TraceMode,
    registers: usize,
    dim: usize,
    trials: usize,
    trace_error: f64,
    trace_delta: f64,
    coverage: f64,
    required_coverage: f64,
    max_abs_error: f64,
    /// Largest gap between the simulated circuit and the closed form, real and imaginary variants.
    circuit_max_deviation: Option<f64>,
}

pub fn swap_bench(o: SwapOptions, out: Option<&Path>) -> Result<()> {
    if o.registers < 1 || o.dim < 1 || o.trials < 1 {
        return Err(QibError::Validation("registers, dim and trials must be positive".into()));
    }
    let brute_force = (o.dim as f64).powi(o.registers as i32) * 2.0 <= 1024.0;
    let mut rng = stream_rng(o.seed, 0);
    let mut covered = 0usize;
    let mut max_abs_error: f64 = 0.0;
    let mut deviation: f64 = 0.0;
    let mut rows = Vec::with_capacity(o.trials);
    for t in 0..o.trials {
        let states = (0..o.registers).map(|_| random_density(o.dim, o.dim, &mut rng)).collect();
        let unitaries = (0..o.registers).map(|_| random_unitary(o.dim, &mut rng)).collect();
        let spec = SwapTestSpec::new(states, unitaries)?;
        let exact = spec.trace_product().re;
        let est = estimate_trace_product(&spec, o.trace_error, o.trace_delta, o.mode, &mut rng)?;
        let err = (est - exact).abs();
        let ok = err <= o.trace_error;
        covered += ok as usize;
        max_abs_error = max_abs_error.max(err);
        if brute_force && t < 20 {
            for imaginary in [false, true] {
                let d = swap_test_circuit_probability(&spec, imaginary)? - swap_test_probability(&spec, imaginary);
                deviation = deviation.max(d.abs());
            }
        }
        rows.push(vec![t.to_string(), exact.to_string(), est.to_string(), err.to_string(), ok.to_string()]);
    }
    write_csv(out, "swap_bench.csv", "# qiblab-swap-bench v1", &["trial", "exact", "estimate", "abs_error", "covered"], &rows)?;
    emit(
        &SwapReport {
            mode: o.mode,
            registers: o.registers,
            dim: o.dim,
            trials: o.trials,
            trace_error: o.trace_error,
            trace_delta: o.trace_delta,
            coverage: covered as f64 / o.trials as f64,
            required_coverage: 1.0 - o.trace_delta,
            max_abs_error,
            circuit_max_deviation: brute_force.then_some(deviation),
        },
        out,
        "swap_bench.json",
    )
}

pub struct TrainOptions {
    pub gradient: GradientSource,
    pub objective: ObjectiveKind,
    pub lr: f64,
    pub max_steps: usize,
    pub tol: f64,
    pub eps: f64,
    pub lambda_min: f64,
    pub beta_schedule: Option<Vec<f64>>,
    pub line_search: bool,
    pub random_init: bool,
    pub record_wall_time: bool,
}

#[derive(Serialize)]
struct TrainSummary {
    termination: trainer::Termination,
    records: usize,
    initial: trainer::InfoPlaneRecord,
    last: trainer::InfoPlaneRecord,
}

pub fn train(args: &InstanceArgs, est: &EstimatorArgs, o: TrainOptions, out: Option<&Path>) -> Result<()> {
    let mut inst = load_instance(args)?;
    if o.random_init {
        let p = qiblab::instances::random_parameters(inst.params().len(), est.seed);
        inst = inst.with_parameters(&p)?;
    }
    let mut estimator = est.config();
    if est.quadrature == QuadratureArg::Auto && est.mode == TraceMode::ExactTrace {
        estimator.quadrature = Quadrature::Analytic;
    }
    if !est.relaxed && o.gradient == GradientSource::Series {
        // A fixed plan cannot cover outputs that become nearly pure while training.
        estimator.window = WindowPolicy::Relaxed;
    }
    let cfg = TrainConfig {
        objective: o.objective,
        gradient: o.gradient,
        learning_rate: o.lr,
        max_steps: o.max_steps,
        tolerance: o.tol,
        beta: o.beta_schedule.map_or(BetaSchedule::Constant, BetaSchedule::List),
        line_search: o.line_search,
        plan: PlanChoice::Window { eps: o.eps, lambda_min: o.lambda_min, deriv_norm: None },
        estimator,
        seed: est.seed,
        record_wall_time: o.record_wall_time,
        ..Default::default()
    };
    let traj = trainer::train(&inst, &cfg)?;
    if let Some(dir) = prepare_out(out)? {
        traj.save_csv(&dir.join("trajectory.csv"))?;
        traj.save_json(&dir.join("trajectory.json"))?;
    }
    let summary = TrainSummary {
        termination: traj.termination,
        records: traj.records.len(),
        initial: traj.first().clone(),
        last: traj.last().clone(),
    };
    emit(&summary, None, "")
}
