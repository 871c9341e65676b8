use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qiblab::{ErrorCategory, QibError};

mod commands;

#[derive(Parser)]
#[command(name = "qiblab", version, about = "Quantum information bottleneck toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Labeled ensemble JSON file.
    #[arg(long)]
    ensemble: PathBuf,
    /// Parameterized channel JSON file.
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    /// Trace evaluation: exact-trace, shot-sampled or ae-model.
    #[arg(long, default_value = "exact-trace")]
    mode: qiblab::sampling::TraceMode,
    /// Duhamel integration: auto, gl, analytic or mc.
    #[arg(long, default_value = "auto")]
    quadrature: commands::QuadratureArg,
    /// Monte Carlo nodes per Duhamel integral.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Independent repetitions combined by the median.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Per-trace accuracy for sampled trace modes.
    #[arg(long, default_value_t = 0.05)]
    trace_error: f64,
    /// Per-trace failure probability for sampled trace modes.
    #[arg(long, default_value_t = 0.05)]
    trace_delta: f64,
    /// Evaluate the series outside its window instead of failing.
    #[arg(long)]
    relaxed: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact objective, Rényi-2 bounds and information-plane point.
    Evaluate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Series orders K, L, M and Duhamel sample count for a target accuracy.
    Params {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1.0)]
        deriv_norm: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient estimators next to the finite-difference oracle.
    Grad {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Window start; defaults to the instance's smallest support eigenvalue.
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        deriv_norm: Option<f64>,
        /// Closeness of the Chebyshev inverse used for the Rényi-2 gradient.
        #[arg(long, default_value_t = 1e-3)]
        cheb_eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Series logarithm against the exact one on a grid and on random states.
    ApproxCheck {
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda_min: f64,
        #[arg(long, default_value_t = 0.9)]
        lambda_max: f64,
        #[arg(long, default_value_t = 1.0)]
        deriv_norm: f64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coverage of sampled swap-test trace estimates.
    SwapBench {
        #[arg(long, default_value_t = 2)]
        registers: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value = "shot-sampled")]
        mode: qiblab::sampling::TraceMode,
        #[arg(long, default_value_t = 0.05)]
        trace_error: f64,
        #[arg(long, default_value_t = 0.05)]
        trace_delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient descent with an information-plane trajectory.
    Train {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        estimator: EstimatorArgs,
        /// fd, series or renyi2.
        #[arg(long, default_value = "fd", value_parser = commands::kebab::<qiblab::trainer::GradientSource>)]
        gradient: qiblab::trainer::GradientSource,
        /// qib-exact, qib-series or renyi2-upper.
        #[arg(long, default_value = "qib-exact", value_parser = commands::kebab::<qiblab::trainer::ObjectiveKind>)]
        objective: qiblab::trainer::ObjectiveKind,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Series plan accuracy.
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Series plan window start.
        #[arg(long, default_value_t = 0.05)]
        lambda_min: f64,
        /// Comma-separated beta per step; the last value is held.
        #[arg(long, value_delimiter = ',')]
        beta_schedule: Option<Vec<f64>>,
        #[arg(long)]
        no_line_search: bool,
        /// Draw initial parameters uniformly from [-pi, pi] using the seed.
        #[arg(long)]
        random_init: bool,
        #[arg(long)]
        record_wall_time: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    category: &'a str,
    message: String,
    exit_code: u8,
}

fn fail(kind: &str, category: ErrorCategory, message: String) -> ExitCode {
    let (name, code) = match category {
        ErrorCategory::Validation => ("validation", 2),
        ErrorCategory::Numeric => ("numeric", 3),
        ErrorCategory::Io => ("io", 4),
    };
    let report = ErrorReport {
        error: ErrorBody { kind, category: name, message, exit_code: code },
    };
    eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
    ExitCode::from(code)
}

fn configure_threads() -> qiblab::Result<()> {
    if let Ok(v) = std::env::var("QIBLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| QibError::Validation(format!("QIBLAB_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(QibError::Validation("QIBLAB_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| QibError::Validation(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> qiblab::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Evaluate { instance, out } => commands::evaluate(&instance, out.as_deref()),
        Command::Params { eps, lambda_min, deriv_norm, out } => commands::params(eps, lambda_min, deriv_norm, out.as_deref()),
        Command::Grad { instance, estimator, eps, lambda_min, deriv_norm, cheb_eps, out } => commands::grad(
            &instance,
            &estimator,
            commands::GradOptions { eps, lambda_min, deriv_norm, cheb_eps },
            out.as_deref(),
        ),
        Command::ApproxCheck { eps, lambda_min, lambda_max, deriv_norm, count, dim, grid, seed, out } => {
            commands::approx_check(
                commands::ApproxOptions { eps, lambda_min, lambda_max, deriv_norm, count, dim, grid, seed },
                out.as_deref(),
            )
        }
        Command::SwapBench { registers, dim, trials, mode, trace_error, trace_delta, seed, out } => commands::swap_bench(
            commands::SwapOptions { registers, dim, trials, mode, trace_error, trace_delta, seed },
            out.as_deref(),
        ),
        Command::Train {
            instance,
            estimator,
            gradient,
            objective,
            lr,
            max_steps,
            tol,
            eps,
            lambda_min,
            beta_schedule,
            no_line_search,
            random_init,
            record_wall_time,
            out,
        } => commands::train(
            &instance,
            &estimator,
            commands::TrainOptions {
                gradient,
                objective,
                lr,
                max_steps,
                tol,
                eps,
                lambda_min,
                beta_schedule,
                line_search: !no_line_search,
                random_init,
                record_wall_time,
            },
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            return fail("usage", ErrorCategory::Validation, msg.trim().to_string());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.category(), e.to_string()),
    }
}

/// Creates the output directory when one is requested.
fn prepare_out(out: Option<&Path>) -> qiblab::Result<Option<&Path>> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    Ok(out)
}
