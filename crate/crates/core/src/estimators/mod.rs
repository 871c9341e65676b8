//! Estimators for cross entropies, their parameter derivatives, the
//! information-bottleneck gradient, and Rényi-2 surrogate bounds.

mod measured;
mod renyi;

pub use measured::{
    lyapunov_inverse, measured_renyi2, measured_renyi2_derivative, LyapunovMethod, LyapunovPlan,
    LyapunovSolution, MeasuredForm,
};
pub use renyi::{
    qib_bounds, renyi2_bound_gradient, renyi2_divergence, renyi2_upper_bound, InverseMode, QibBounds,
    RenyiGradient,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::pauli_expand;
use crate::entropy::QibInstance;
use crate::error::{QibError, Result};
use crate::linalg::{CMatrix, DensityMatrix, HermitianOperator, Spectrum};
use crate::quadrature::composite_gauss_legendre;
use crate::sampling::{median_boost, TraceMode, TraceOracle};
use crate::series::ApproximationPlan;

/// Integration rule for the Duhamel integral over `s` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Quadrature {
    /// Composite 32-point Gauss-Legendre with panels sized to the highest frequency.
    GaussLegendre,
    /// Closed-form divided differences of the series (exact traces only).
    Analytic,
    /// Uniform random nodes.
    MonteCarlo { samples: usize },
}

/// Whether eigenvalues outside the plan window are an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowPolicy {
    Strict,
    /// Evaluate the series anyway; accuracy guarantees no longer apply.
    Relaxed,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub quadrature: Quadrature,
    /// Independent repetitions combined by the median (`N_c`).
    pub boost_repeats: usize,
    pub trace_mode: TraceMode,
    /// Per-trace accuracy target for sampled trace modes.
    pub trace_error: f64,
    /// Per-trace failure probability for sampled trace modes.
    pub trace_delta: f64,
    pub seed: u64,
    pub window: WindowPolicy,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::GaussLegendre,
            boost_repeats: 1,
            trace_mode: TraceMode::ExactTrace,
            trace_error: 0.05,
            trace_delta: 0.05,
            seed: 0,
            window: WindowPolicy::Strict,
        }
    }
}

impl EstimatorConfig {
    fn oracle(&self) -> Result<TraceOracle> {
        match self.trace_mode {
            TraceMode::ExactTrace => Ok(TraceOracle::exact()),
            mode => TraceOracle::new(mode, self.trace_error, self.trace_delta),
        }
    }

    fn is_stochastic(&self) -> bool {
        self.trace_mode != TraceMode::ExactTrace || matches!(self.quadrature, Quadrature::MonteCarlo { .. })
    }
}

/// Independent random stream for a (parameter, term, repeat) triple.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A derivative estimate with its claimed spread.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    /// Bound on the standard deviation of one repetition (zero when deterministic).
    pub stddev_bound: f64,
    /// Sample standard deviation across repetitions, when there are several.
    pub empirical_stddev: Option<f64>,
    pub repeats: usize,
}

/// `sigma` and `rho`, `d rho`, `d sigma` expressed in the eigenbasis of `sigma`.
struct Eigenframe {
    spec: Spectrum<f64>,
    support: Vec<bool>,
    rho: CMatrix<f64>,
    d_rho: CMatrix<f64>,
    d_sigma: CMatrix<f64>,
}

impl Eigenframe {
    fn new(rho: &DensityMatrix<f64>, d_rho: &CMatrix<f64>, sigma: &DensityMatrix<f64>, d_sigma: &CMatrix<f64>) -> Result<Self> {
        let d = sigma.dim();
        for (name, m) in [("rho", rho.matrix()), ("d_rho", d_rho), ("d_sigma", d_sigma)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(QibError::dims(name, d, m.nrows()));
            }
        }
        crate::entropy::check_support(rho, sigma)?;
        let spec = sigma.eigen();
        let thr = sigma.support_threshold();
        let support = spec.values.iter().map(|&v| v > thr).collect();
        Ok(Self {
            rho: spec.to_eigenbasis(rho.matrix()),
            d_rho: spec.to_eigenbasis(d_rho),
            d_sigma: spec.to_eigenbasis(d_sigma),
            support,
            spec,
        })
    }

    fn pairs(&self) -> Vec<(f64, f64, Complex64)> {
        let n = self.spec.values.len();
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                if self.support[a] && self.support[b] {
                    let g = self.rho[(b, a)] * self.d_sigma[(a, b)];
                    if g != Complex64::new(0.0, 0.0) {
                        out.push((self.spec.values[a], self.spec.values[b], g));
                    }
                }
            }
        }
        out
    }
}

fn check_window(plan: &ApproximationPlan, cfg: &EstimatorConfig, name: &str, sigma: &DensityMatrix<f64>) -> Result<()> {
    if cfg.window == WindowPolicy::Strict {
        plan.check_window(name, &sigma.eigen().values, sigma.support_threshold())?;
    }
    Ok(())
}

fn mean_and_sd(v: &[f64]) -> (f64, Option<f64>) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, None);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

/// `Tr(rho log_approx sigma)`.
pub fn cross_entropy_series(
    rho: &DensityMatrix<f64>,
    sigma: &DensityMatrix<f64>,
    plan: &ApproximationPlan,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    check_window(plan, cfg, "sigma", sigma)?;
    let zero = CMatrix::<f64>::zeros(sigma.dim(), sigma.dim());
    let frame = Eigenframe::new(rho, &zero, sigma, &zero)?;
    if cfg.trace_mode == TraceMode::ExactTrace {
        return Ok(frame
            .spec
            .values
            .iter()
            .enumerate()
            .filter(|(a, _)| frame.support[*a])
            .map(|(a, &l)| frame.rho[(a, a)].re * plan.log(l))
            .sum());
    }
    let oracle = cfg.oracle()?;
    let mut reps = Vec::with_capacity(cfg.boost_repeats.max(1));
    for r in 0..cfg.boost_repeats.max(1) {
        let mut rng = stream_rng(cfg.seed, r as u64);
        let mut acc = 0.0;
        for (j, c) in plan.series.terms() {
            let theta = PI * j as f64 / 2.0;
            let t: f64 = (0..frame.spec.values.len())
                .map(|a| frame.rho[(a, a)].re * (theta * frame.spec.values[a]).cos())
                .sum();
            acc += c * oracle.measure(t, &mut rng)?;
        }
        reps.push(acc);
    }
    median_boost(&reps)
}

/// Nodes and weights of the deterministic rule for `s`.
fn deterministic_nodes(plan: &ApproximationPlan, frame: &Eigenframe) -> (Vec<f64>, Vec<f64>) {
    let vals: Vec<f64> = frame
        .spec
        .values
        .iter()
        .zip(&frame.support)
        .filter(|(_, &s)| s)
        .map(|(&v, _)| v)
        .collect();
    let spread = match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let max_phase = PI * plan.series.max_freq() as f64 / 2.0 * spread;
    let panels = (max_phase / 16.0).ceil().max(1.0) as usize;
    composite_gauss_legendre(32, panels)
}

/// Exact-trace evaluation of `Re sum_ab G_ab f'(s l_a + (1-s) l_b)` averaged with `weights`.
fn duhamel_exact(pairs: &[(f64, f64, Complex64)], plan: &ApproximationPlan, nodes: &[f64], weights: &[f64]) -> f64 {
    let fp = plan.series.derivative_evaluator();
    let mut acc = 0.0;
    for (&s, &w) in nodes.iter().zip(weights) {
        let mut inner = 0.0;
        for &(la, lb, g) in pairs {
            inner += g.re * fp.eval(s * la + (1.0 - s) * lb);
        }
        acc += w * inner;
    }
    acc
}

fn duhamel_analytic(pairs: &[(f64, f64, Complex64)], plan: &ApproximationPlan) -> f64 {
    let f = &plan.series;
    pairs
        .iter()
        .map(|&(la, lb, g)| {
            let dd = if (la - lb).abs() < 1e-9 {
                f.eval_derivative(0.5 * (la + lb))
            } else {
                (f.eval(la) - f.eval(lb)) / (la - lb)
            };
            g.re * dd
        })
        .sum()
}

/// Pauli terms of an operator, rotated into the eigenframe.
fn rotated_pauli_terms(op: &CMatrix<f64>, spec: &Spectrum<f64>) -> Result<Vec<(f64, CMatrix<f64>)>> {
    let h = HermitianOperator::new(op.clone())?;
    let e = pauli_expand(&h)?;
    Ok(e.unitary_terms()?
        .into_iter()
        .map(|(w, p)| (w, spec.to_eigenbasis(&p)))
        .collect())
}

fn trace_of_product(a: &CMatrix<f64>, b: &CMatrix<f64>) -> Complex64 {
    crate::linalg::trace_product(a, b)
}

/// One repetition of the sampled-trace estimator.
#[allow(clippy::too_many_arguments)]
fn derivative_sampled_once(
    frame: &Eigenframe,
    d_rho_terms: &[(f64, CMatrix<f64>)],
    d_sigma_terms: &[(f64, CMatrix<f64>)],
    plan: &ApproximationPlan,
    nodes: &[f64],
    weights: &[f64],
    oracle: &TraceOracle,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let lam = &frame.spec.values;
    let d = lam.len();
    let dim = d as f64;
    let terms = plan.series.terms();
    let mut first = 0.0;
    for &(j, c) in &terms {
        let theta = PI * j as f64 / 2.0;
        for (w, p) in d_rho_terms {
            // Tr(P e^{i theta sigma}) / d, measured with the maximally mixed state.
            let t: f64 = (0..d).map(|a| (p[(a, a)] * Complex64::from_polar(1.0, theta * lam[a])).re).sum::<f64>() / dim;
            first += c * w * dim * oracle.measure(t, rng)?;
        }
    }
    let mut second = 0.0;
    for (&s, &ws) in nodes.iter().zip(weights) {
        for &(j, c) in &terms {
            if j == 0 {
                continue;
            }
            let theta = PI * j as f64 / 2.0;
            // M = B rho A with A = e^{i s theta sigma}, B = e^{i (1-s) theta sigma}.
            let m = CMatrix::<f64>::from_fn(d, d, |a, b| {
                Complex64::from_polar(1.0, (1.0 - s) * theta * lam[a]) * frame.rho[(a, b)] * Complex64::from_polar(1.0, s * theta * lam[b])
            });
            let mut acc = 0.0;
            for (w, p) in d_sigma_terms {
                let t = trace_of_product(&m, p);
                acc += w * oracle.measure(t.im, rng)?;
            }
            second += ws * (-(PI * j as f64 / 2.0) * c * acc);
        }
    }
    Ok(first + second)
}

/// `d/d alpha Tr(rho log_approx sigma)` from the state derivatives.
pub fn cross_entropy_derivative_series(
    rho: &DensityMatrix<f64>,
    d_rho: &CMatrix<f64>,
    sigma: &DensityMatrix<f64>,
    d_sigma: &CMatrix<f64>,
    plan: &ApproximationPlan,
    cfg: &EstimatorConfig,
    stream: u64,
) -> Result<DerivativeEstimate> {
    check_window(plan, cfg, "sigma", sigma)?;
    let frame = Eigenframe::new(rho, d_rho, sigma, d_sigma)?;
    let ds_norm = HermitianOperator::from_hermitian_part(d_sigma).operator_norm();
    let repeats = if cfg.is_stochastic() { cfg.boost_repeats.max(1) } else { 1 };
    let mc_bound = |n: usize| plan.duhamel_stddev_bound(ds_norm, n);

    if cfg.trace_mode == TraceMode::ExactTrace {
        let first: f64 = (0..frame.spec.values.len())
            .filter(|&a| frame.support[a])
            .map(|a| frame.d_rho[(a, a)].re * plan.log(frame.spec.values[a]))
            .sum();
        let pairs = frame.pairs();
        return match cfg.quadrature {
            Quadrature::Analytic => Ok(DerivativeEstimate {
                value: first + duhamel_analytic(&pairs, plan),
                stddev_bound: 0.0,
                empirical_stddev: None,
                repeats: 1,
            }),
            Quadrature::GaussLegendre => {
                let (x, w) = deterministic_nodes(plan, &frame);
                Ok(DerivativeEstimate {
                    value: first + duhamel_exact(&pairs, plan, &x, &w),
                    stddev_bound: 0.0,
                    empirical_stddev: None,
                    repeats: 1,
                })
            }
            Quadrature::MonteCarlo { samples } => {
                if samples == 0 {
                    return Err(QibError::Validation("Monte Carlo needs at least one sample".into()));
                }
                let w = vec![1.0 / samples as f64; samples];
                let reps: Vec<f64> = (0..repeats)
                    .map(|r| {
                        let mut rng = stream_rng(cfg.seed, (stream << 20) | r as u64);
                        let x: Vec<f64> = (0..samples).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
                        first + duhamel_exact(&pairs, plan, &x, &w)
                    })
                    .collect();
                let (_, sd) = mean_and_sd(&reps);
                Ok(DerivativeEstimate {
                    value: median_boost(&reps)?,
                    stddev_bound: mc_bound(samples),
                    empirical_stddev: sd,
                    repeats,
                })
            }
        };
    }

    let oracle = cfg.oracle()?;
    let d_rho_terms = rotated_pauli_terms(d_rho, &frame.spec)?;
    let d_sigma_terms = rotated_pauli_terms(d_sigma, &frame.spec)?;
    let (samples, quad_bound) = match cfg.quadrature {
        Quadrature::Analytic => {
            return Err(QibError::Validation(
                "analytic quadrature requires exact traces".into(),
            ))
        }
        Quadrature::GaussLegendre => (None, 0.0),
        Quadrature::MonteCarlo { samples } => (Some(samples.max(1)), mc_bound(samples.max(1))),
    };
    let noise = oracle.noise_scale();
    let w1: f64 = d_rho_terms.iter().map(|(w, _)| w.abs()).sum::<f64>() * frame.spec.values.len() as f64;
    let w2: f64 = d_sigma_terms.iter().map(|(w, _)| w.abs()).sum();
    let first_noise = plan.series.one_norm() * w1 * noise;
    let second_noise = plan.series.derivative_one_norm() / 2.0 * w2 * noise / (samples.unwrap_or(1) as f64).sqrt();
    let stddev_bound = (quad_bound.powi(2) + first_noise.powi(2) + second_noise.powi(2)).sqrt();
    let reps = (0..repeats)
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, (stream << 20) | r as u64);
            let (x, w) = match samples {
                Some(n) => (
                    (0..n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect(),
                    vec![1.0 / n as f64; n],
                ),
                None => deterministic_nodes(plan, &frame),
            };
            derivative_sampled_once(&frame, &d_rho_terms, &d_sigma_terms, plan, &x, &w, &oracle, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (_, sd) = mean_and_sd(&reps);
    Ok(DerivativeEstimate {
        value: median_boost(&reps)?,
        stddev_bound,
        empirical_stddev: sd,
        repeats,
    })
}

/// Gradient of the objective with per-component spread.
#[derive(Debug, Clone, Serialize)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    pub stddev_bounds: Vec<f64>,
}

/// Minimum support eigenvalue and largest derivative norm over the reference
/// states the objective needs at the instance's parameters.
pub fn instance_window(instance: &QibInstance<f64>) -> Result<(f64, f64)> {
    let s = instance.states()?;
    let b = instance.beta();
    let mut refs: Vec<&DensityMatrix<f64>> = Vec::new();
    if b > 0.0 {
        refs.push(&s.rho_rxt);
        refs.push(&s.product_rxt);
    }
    if b < 1.0 {
        refs.push(&s.rho_xty);
        refs.push(&s.product_xty);
    }
    let lam = refs
        .iter()
        .map(|r| r.min_support_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let mut dn: f64 = 0.0;
    for k in 0..instance.params().len() {
        let d = instance.state_derivatives(&s, k)?;
        let mut ops = Vec::new();
        if b > 0.0 {
            ops.push(&d.d_rxt);
            ops.push(&d.d_product_rxt);
        }
        if b < 1.0 {
            ops.push(&d.d_xty);
            ops.push(&d.d_product_xty);
        }
        for o in ops {
            dn = dn.max(o.operator_norm());
        }
    }
    Ok((lam, dn.max(1e-3)))
}

/// Plans the series for an instance: the window starts at `shrink` times the
/// smallest support eigenvalue (capped at one half).
pub fn plan_for_instance(instance: &QibInstance<f64>, eps: f64, shrink: f64) -> Result<ApproximationPlan> {
    let (lam, dn) = instance_window(instance)?;
    ApproximationPlan::plan(eps, (lam * shrink).min(0.5), dn)
}

/// `beta I_approx(R;X~) - (1-beta) I_approx(X~;Y)` with approximate logarithms.
pub fn qib_objective_series(instance: &QibInstance<f64>, plan: &ApproximationPlan, cfg: &EstimatorConfig) -> Result<f64> {
    let s = instance.states()?;
    let b = instance.beta();
    let rel = |a: &DensityMatrix<f64>, r: &DensityMatrix<f64>, name: &str| -> Result<f64> {
        check_window(plan, cfg, name, r)?;
        Ok(cross_entropy_series(a, a, plan, cfg)? - cross_entropy_series(a, r, plan, cfg)?)
    };
    let mut v = 0.0;
    if b > 0.0 {
        check_window(plan, cfg, "rho_RX~", &s.rho_rxt)?;
        v += b * rel(&s.rho_rxt, &s.product_rxt, "rho_R (x) rho_X~")?;
    }
    if b < 1.0 {
        check_window(plan, cfg, "rho_X~Y", &s.rho_xty)?;
        v -= (1.0 - b) * rel(&s.rho_xty, &s.product_xty, "rho_X~ (x) rho_Y")?;
    }
    Ok(v)
}

/// Gradient of the objective from series cross-entropy derivatives.
pub fn qib_gradient_series(
    instance: &QibInstance<f64>,
    plan: &ApproximationPlan,
    cfg: &EstimatorConfig,
) -> Result<GradientEstimate> {
    let s = instance.states()?;
    let b = instance.beta();
    if b > 0.0 {
        check_window(plan, cfg, "rho_RX~", &s.rho_rxt)?;
        check_window(plan, cfg, "rho_R (x) rho_X~", &s.product_rxt)?;
    }
    if b < 1.0 {
        check_window(plan, cfg, "rho_X~Y", &s.rho_xty)?;
        check_window(plan, cfg, "rho_X~ (x) rho_Y", &s.product_xty)?;
    }
    let per_param = (0..instance.params().len())
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let d = instance.state_derivatives(&s, k)?;
            let base = (k as u64) << 8;
            let est = |a: &DensityMatrix<f64>, da: &CMatrix<f64>, r: &DensityMatrix<f64>, dr: &CMatrix<f64>, t: u64| {
                cross_entropy_derivative_series(a, da, r, dr, plan, cfg, base | t)
            };
            let mut value = 0.0;
            let mut var = 0.0;
            if b > 0.0 {
                let self_term = est(&s.rho_rxt, d.d_rxt.matrix(), &s.rho_rxt, d.d_rxt.matrix(), 0)?;
                let cross = est(&s.rho_rxt, d.d_rxt.matrix(), &s.product_rxt, d.d_product_rxt.matrix(), 1)?;
                value += b * (self_term.value - cross.value);
                var += b * b * (self_term.stddev_bound.powi(2) + cross.stddev_bound.powi(2));
            }
            if b < 1.0 {
                let self_term = est(&s.rho_xty, d.d_xty.matrix(), &s.rho_xty, d.d_xty.matrix(), 2)?;
                let cross = est(&s.rho_xty, d.d_xty.matrix(), &s.product_xty, d.d_product_xty.matrix(), 3)?;
                value -= (1.0 - b) * (self_term.value - cross.value);
                var += (1.0 - b).powi(2) * (self_term.stddev_bound.powi(2) + cross.stddev_bound.powi(2));
            }
            Ok((value, var.sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientEstimate {
        values: per_param.iter().map(|p| p.0).collect(),
        stddev_bounds: per_param.iter().map(|p| p.1).collect(),
    })
}

#[cfg(test)]
mod tests;
