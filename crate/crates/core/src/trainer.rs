//! Gradient descent on channel parameters with information-plane logging.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::entropy::{qib_gradient_fd, qib_objective, QibInstance};
use crate::error::{QibError, Result};
use crate::estimators::{
    instance_window, qib_gradient_series, qib_objective_series, renyi2_bound_gradient, renyi2_upper_bound,
    EstimatorConfig, InverseMode, Quadrature, WindowPolicy,
};
use crate::series::ApproximationPlan;

/// Function minimized by the line search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    QibExact,
    QibSeries,
    Renyi2Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientSource {
    /// Central differences of the exact objective with one Richardson step.
    Fd,
    Series,
    /// Analytic gradient of the Rényi-2 upper bound.
    Renyi2,
}

/// `beta` per step; a list holds its last value once exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSchedule {
    /// Keep the instance's `beta`.
    Constant,
    List(Vec<f64>),
}

impl BetaSchedule {
    fn at(&self, step: usize, base: f64) -> f64 {
        match self {
            BetaSchedule::Constant => base,
            BetaSchedule::List(v) => v.get(step).or(v.last()).copied().unwrap_or(base),
        }
    }
}

/// How the series plan is chosen. The plan is fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PlanChoice {
    /// Window from the initial instance scaled by `shrink`.
    Auto { eps: f64, shrink: f64 },
    /// Explicit window; `deriv_norm` defaults to the initial instance's.
    Window { eps: f64, lambda_min: f64, deriv_norm: Option<f64> },
    /// Explicit orders.
    Orders { k: usize, l: usize, m: usize, eps: f64, lambda_min: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub objective: ObjectiveKind,
    pub gradient: GradientSource,
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Stop once the gradient norm falls to this value.
    pub tolerance: f64,
    pub beta: BetaSchedule,
    /// Backtracking line search with the Armijo condition.
    pub line_search: bool,
    pub armijo_c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    pub fd_step: f64,
    pub plan: PlanChoice,
    pub estimator: EstimatorConfig,
    pub inverse: InverseMode,
    pub seed: u64,
    /// Record per-step wall time. Off by default so outputs are reproducible.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveKind::QibExact,
            gradient: GradientSource::Fd,
            learning_rate: 0.5,
            max_steps: 100,
            tolerance: 1e-6,
            beta: BetaSchedule::Constant,
            line_search: true,
            armijo_c: 1e-4,
            shrink: 0.5,
            max_backtracks: 40,
            fd_step: 1e-4,
            plan: PlanChoice::Window { eps: 1e-2, lambda_min: 0.05, deriv_norm: None },
            estimator: EstimatorConfig {
                quadrature: Quadrature::Analytic,
                window: WindowPolicy::Relaxed,
                ..Default::default()
            },
            inverse: InverseMode::Exact,
            seed: 0,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(QibError::Validation(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.max_steps < 1 {
            return Err(QibError::Validation("max_steps must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(QibError::Validation("line search needs shrink and c in (0, 1)".into()));
        }
        if !(self.tolerance >= 0.0) || !(self.fd_step > 0.0) {
            return Err(QibError::Validation("tolerance must be >= 0 and fd_step > 0".into()));
        }
        if let BetaSchedule::List(v) = &self.beta {
            if v.is_empty() || v.iter().any(|b| !(0.0..=1.0).contains(b)) {
                return Err(QibError::Validation("beta schedule must be non-empty with values in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoPlaneRecord {
    pub step: usize,
    pub beta: f64,
    pub params: Vec<f64>,
    /// Exact objective at `params`.
    pub loss: f64,
    /// Value of the configured objective (equal to `loss` for the exact one).
    pub objective: f64,
    pub i_rx: f64,
    pub i_xy: f64,
    pub grad_norm: f64,
    /// Step length accepted after this record (zero for the last one).
    pub step_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxSteps,
    /// No step satisfied the Armijo condition.
    LineSearch,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfoPlaneTrajectory {
    pub records: Vec<InfoPlaneRecord>,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<ApproximationPlan>,
}

pub const TRAJECTORY_HEADER: &str = "# qiblab-trajectory v1";

impl InfoPlaneTrajectory {
    pub fn first(&self) -> &InfoPlaneRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &InfoPlaneRecord {
        self.records.last().expect("trajectory is never empty")
    }

    /// CSV with a versioned comment line followed by
    /// `step,beta,alpha_0..,loss,objective,i_rx,i_xy,grad_norm,step_size[,wall_time]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        let n = self.records.first().map_or(0, |r| r.params.len());
        let timed = self.records.iter().any(|r| r.wall_time.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "beta".to_string()];
        header.extend((0..n).map(|k| format!("alpha_{k}")));
        header.extend(["loss", "objective", "i_rx", "i_xy", "grad_norm", "step_size"].map(String::from));
        if timed {
            header.push("wall_time".into());
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.step.to_string(), r.beta.to_string()];
            row.extend(r.params.iter().map(|p| p.to_string()));
            row.extend([r.loss, r.objective, r.i_rx, r.i_xy, r.grad_norm, r.step_size].map(|v| v.to_string()));
            if timed {
                row.push(r.wall_time.map_or(String::new(), |t| t.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

fn step_seed(seed: u64, step: usize) -> u64 {
    seed.wrapping_add((step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn resolve_plan(instance: &QibInstance<f64>, choice: &PlanChoice) -> Result<ApproximationPlan> {
    match *choice {
        PlanChoice::Auto { eps, shrink } => {
            let (lam, dn) = instance_window(instance)?;
            ApproximationPlan::plan(eps, (lam * shrink).min(0.5), dn)
        }
        PlanChoice::Window { eps, lambda_min, deriv_norm } => {
            let dn = match deriv_norm {
                Some(d) => d,
                None => instance_window(instance)?.1,
            };
            ApproximationPlan::plan(eps, lambda_min, dn)
        }
        PlanChoice::Orders { k, l, m, eps, lambda_min } => {
            ApproximationPlan::with_orders(k, l, m, eps, lambda_min, instance_window(instance)?.1)
        }
    }
}

struct Evaluator<'a> {
    config: &'a TrainConfig,
    plan: Option<ApproximationPlan>,
}

impl Evaluator<'_> {
    fn estimator(&self, step: usize) -> EstimatorConfig {
        EstimatorConfig { seed: step_seed(self.config.seed, step), ..self.config.estimator }
    }

    fn plan(&self) -> Result<&ApproximationPlan> {
        self.plan.as_ref().ok_or_else(|| QibError::Validation("series evaluation without a plan".into()))
    }

    fn objective(&self, inst: &QibInstance<f64>, step: usize) -> Result<f64> {
        match self.config.objective {
            ObjectiveKind::QibExact => qib_objective(inst),
            ObjectiveKind::QibSeries => qib_objective_series(inst, self.plan()?, &self.estimator(step)),
            ObjectiveKind::Renyi2Upper => renyi2_upper_bound(inst),
        }
    }

    fn gradient(&self, inst: &QibInstance<f64>, step: usize) -> Result<Vec<f64>> {
        match self.config.gradient {
            GradientSource::Fd => qib_gradient_fd(inst, self.config.fd_step, true),
            GradientSource::Series => Ok(qib_gradient_series(inst, self.plan()?, &self.estimator(step))?.values),
            GradientSource::Renyi2 => Ok(renyi2_bound_gradient(inst, self.config.inverse)?.values),
        }
    }
}

/// Runs gradient descent from the instance's current parameters.
pub fn train(instance: &QibInstance<f64>, config: &TrainConfig) -> Result<InfoPlaneTrajectory> {
    config.validate()?;
    let needs_plan =
        config.gradient == GradientSource::Series || config.objective == ObjectiveKind::QibSeries;
    let plan = if needs_plan {
        Some(resolve_plan(instance, &config.plan).map_err(|e| QibError::AtStep { step: 0, source: Box::new(e) })?)
    } else {
        None
    };
    let eval = Evaluator { config, plan };
    let start = Instant::now();
    let base_beta = instance.beta();
    let mut params = instance.params().to_vec();
    let mut records = Vec::new();

    let termination = 'outer: {
        for step in 0..=config.max_steps {
            let at = |e: QibError| QibError::AtStep { step, source: Box::new(e) };
            let beta = config.beta.at(step, base_beta);
            let inst = instance.with_parameters(&params).and_then(|i| i.with_beta(beta)).map_err(at)?;
            let (i_rx, i_xy) = inst.information().map_err(at)?;
            let loss = beta * i_rx - (1.0 - beta) * i_xy;
            let objective = match config.objective {
                ObjectiveKind::QibExact => loss,
                _ => eval.objective(&inst, step).map_err(at)?,
            };
            let grad = eval.gradient(&inst, step).map_err(at)?;
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            records.push(InfoPlaneRecord {
                step,
                beta,
                params: params.clone(),
                loss,
                objective,
                i_rx,
                i_xy,
                grad_norm: g2.sqrt(),
                step_size: 0.0,
                wall_time: config.record_wall_time.then(|| start.elapsed().as_secs_f64()),
            });
            if g2.sqrt() <= config.tolerance {
                break 'outer Termination::Converged;
            }
            if step == config.max_steps {
                break 'outer Termination::MaxSteps;
            }
            let mut t = config.learning_rate;
            let mut accepted = None;
            for _ in 0..=config.max_backtracks {
                let cand: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - t * g).collect();
                if !config.line_search {
                    accepted = Some(cand);
                    break;
                }
                let ci = inst.with_parameters(&cand).map_err(at)?;
                let fc = eval.objective(&ci, step).map_err(at)?;
                if fc <= objective - config.armijo_c * t * g2 {
                    accepted = Some(cand);
                    break;
                }
                t *= config.shrink;
            }
            match accepted {
                Some(cand) => {
                    records.last_mut().expect("pushed above").step_size = t;
                    params = cand;
                }
                None => break 'outer Termination::LineSearch,
            }
        }
        Termination::MaxSteps
    };
    Ok(InfoPlaneTrajectory { records, termination, plan: eval.plan })
}
