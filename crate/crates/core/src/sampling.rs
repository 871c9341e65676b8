//! Swap-test and amplitude-estimation simulators, median boosting, and the
//! trace oracle used by the sampled estimator modes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{QibError, Result};
use crate::linalg::{identity, is_unitary, kron, CMatrix, DensityMatrix};

/// States `rho_i` and unitaries `U_i` for the generalized swap test estimating
/// `Re Tr(U_1 rho_1 U_2 rho_2 ... U_n rho_n)`.
#[derive(Debug, Clone)]
pub struct SwapTestSpec {
    states: Vec<DensityMatrix<f64>>,
    unitaries: Vec<CMatrix<f64>>,
}

impl SwapTestSpec {
    pub fn new(states: Vec<DensityMatrix<f64>>, unitaries: Vec<CMatrix<f64>>) -> Result<Self> {
        if states.is_empty() {
            return Err(QibError::Validation("swap test needs at least one state".into()));
        }
        if states.len() != unitaries.len() {
            return Err(QibError::dims("unitaries", states.len(), unitaries.len()));
        }
        let d = states[0].dim();
        for (i, (s, u)) in states.iter().zip(&unitaries).enumerate() {
            if s.dim() != d {
                return Err(QibError::dims(format!("state {i}"), d, s.dim()));
            }
            if u.nrows() != d || u.ncols() != d {
                return Err(QibError::dims(format!("unitary {i}"), d, u.nrows()));
            }
            if !is_unitary(u, 1e-10) {
                return Err(QibError::Validation(format!("operator {i} is not unitary")));
            }
        }
        Ok(Self { states, unitaries })
    }

    /// Plain swap test on a list of states (all unitaries identity).
    pub fn from_states(states: Vec<DensityMatrix<f64>>) -> Result<Self> {
        let d = states.first().map(|s| s.dim()).unwrap_or(1);
        let n = states.len();
        Self::new(states, vec![identity::<f64>(d); n])
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `Tr(U_1 rho_1 ... U_n rho_n)`.
    pub fn trace_product(&self) -> Complex64 {
        let d = self.dim();
        let prod = self
            .states
            .iter()
            .zip(&self.unitaries)
            .fold(identity::<f64>(d), |acc, (s, u)| acc * u * s.matrix());
        prod.trace()
    }
}

/// Probability of ancilla outcome 0: `(1 + Re Tr(prod U_i rho_i)) / 2`, or the
/// imaginary part when the ancilla is prepared with an extra `S^dagger`.
pub fn swap_test_probability(spec: &SwapTestSpec, imaginary: bool) -> f64 {
    let t = spec.trace_product();
    let v = if imaginary { t.im } else { t.re };
    ((1.0 + v) / 2.0).clamp(0.0, 1.0)
}

/// Permutation sending `|j_1, ..., j_n>` to `|j_2, ..., j_n, j_1>`.
fn cyclic_shift(d: usize, n: usize) -> CMatrix<f64> {
    let total = d.pow(n as u32);
    let mut p = CMatrix::<f64>::zeros(total, total);
    for j in 0..total {
        let lead = j / d.pow(n as u32 - 1);
        let rest = j % d.pow(n as u32 - 1);
        let target = rest * d + lead;
        p[(target, j)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// Full state-vector-free simulation of the swap-test circuit: Hadamard (and
/// optionally `S^dagger`) on the ancilla, controlled `U_1 (x) ... (x) U_n`,
/// controlled cyclic shift, Hadamard, measure.
pub fn swap_test_circuit_probability(spec: &SwapTestSpec, imaginary: bool) -> Result<f64> {
    let d = spec.dim();
    let n = spec.len();
    let total = d
        .checked_pow(n as u32)
        .filter(|&t| t <= 1024)
        .ok_or_else(|| QibError::Capacity("swap-test circuit too large to simulate".into()))?;
    let mut joint = identity::<f64>(1);
    let mut u_all = identity::<f64>(1);
    for (s, u) in spec.states.iter().zip(&spec.unitaries) {
        joint = kron(&joint, s.matrix());
        u_all = kron(&u_all, u);
    }
    let w = cyclic_shift(d, n) * u_all;
    let h = 1.0 / 2f64.sqrt();
    let phase = if imaginary { Complex64::new(0.0, -1.0) } else { Complex64::new(1.0, 0.0) };
    let plus = CMatrix::<f64>::from_column_slice(2, 1, &[Complex64::new(h, 0.0), phase * h]);
    let anc = &plus * plus.adjoint();
    let rho = kron(&anc, &joint);
    let mut cw = CMatrix::<f64>::zeros(2 * total, 2 * total);
    cw.view_mut((0, 0), (total, total)).copy_from(&identity::<f64>(total));
    cw.view_mut((total, total), (total, total)).copy_from(&w);
    let had = CMatrix::<f64>::from_row_slice(
        2,
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    );
    let g = kron(&had, &identity::<f64>(total)) * cw;
    let out = &g * rho * g.adjoint();
    Ok((0..total).map(|i| out[(i, i)].re).sum())
}

/// Estimate of `2 p0 - 1` from `shots` ancilla measurements.
pub fn sample_swap_test<R: Rng + ?Sized>(p0: f64, shots: usize, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(QibError::Validation("at least one shot is required".into()));
    }
    let dist = Binomial::new(shots as u64, p0.clamp(0.0, 1.0))
        .map_err(|e| QibError::Domain(e.to_string()))?;
    let zeros = dist.sample(rng) as f64;
    Ok(2.0 * zeros / shots as f64 - 1.0)
}

/// Shots so that a single swap-test estimate is within `eps` with probability
/// at least `1 - delta` (Hoeffding for outcomes in `[-1, 1]`).
pub fn shots_for_accuracy(eps: f64, delta: f64) -> Result<usize> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(QibError::Validation(format!("need eps > 0 and delta in (0,1), got {eps}, {delta}")));
    }
    Ok((2.0 * (2.0 / delta).ln() / (eps * eps)).ceil() as usize)
}

/// Statistical model of one amplitude-estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    /// Number of oracle queries `M`.
    pub queries: usize,
    /// Confidence parameter `k` of the error bound.
    pub k: f64,
    /// Independent repetitions combined by the median.
    pub repeats: usize,
}

impl AeConfig {
    /// `M = ceil(12 pi / eps_t)`, `n = ceil(24 ln(1/delta))`, `k = 3`.
    pub fn for_accuracy(eps_t: f64, delta: f64) -> Result<Self> {
        if !(eps_t > 0.0 && eps_t < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(QibError::Validation(format!(
                "need eps_t and delta in (0,1), got {eps_t}, {delta}"
            )));
        }
        let queries = ((12.0 * PI / eps_t).ceil() as usize).max(10);
        let repeats = ((24.0 * (1.0 / delta).ln()).ceil() as usize).max(1);
        Ok(Self { queries, k: 3.0, repeats })
    }

    /// Probability that one run lands inside [`Self::error_bound`].
    pub fn success_probability(&self) -> f64 {
        1.0 - 1.0 / (2.0 * (self.k - 1.0))
    }

    /// `2 pi k sqrt(p(1-p)) / M + k^2 pi^2 / M^2`.
    pub fn error_bound(&self, p: f64) -> f64 {
        let m = self.queries as f64;
        2.0 * PI * self.k * (p * (1.0 - p)).max(0.0).sqrt() / m + self.k * self.k * PI * PI / (m * m)
    }

    /// Failure probability of the boosted median, `exp(-n/24)`.
    pub fn failure_bound(&self) -> f64 {
        (-(self.repeats as f64) / 24.0).exp()
    }
}

/// One amplitude-estimation outcome: with the success probability a uniform
/// draw inside the error interval around `p`, otherwise uniform on `[0, 1]`.
pub fn amplitude_estimate<R: Rng + ?Sized>(p: f64, cfg: &AeConfig, rng: &mut R) -> f64 {
    if rng.random::<f64>() < cfg.success_probability() {
        let b = cfg.error_bound(p);
        let lo = (p - b).max(0.0);
        let hi = (p + b).min(1.0);
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            p
        }
    } else {
        rng.random::<f64>()
    }
}

/// Median of the estimates (lower median for even counts).
pub fn median_boost(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(QibError::Validation("median of an empty set".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(QibError::Domain("median of NaN".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(v[(v.len() - 1) / 2])
}

/// Boosted amplitude estimate of `p`.
pub fn boosted_amplitude_estimate<R: Rng + ?Sized>(p: f64, cfg: &AeConfig, rng: &mut R) -> f64 {
    let runs: Vec<f64> = (0..cfg.repeats).map(|_| amplitude_estimate(p, cfg, rng)).collect();
    median_boost(&runs).expect("repeats >= 1")
}

/// How traces `Tr(U rho)` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// Exact linear algebra.
    ExactTrace,
    /// Swap-test ancilla measurements with finite shots.
    ShotSampled,
    /// Statistical model of amplitude estimation with median boosting.
    AeModel,
}

impl std::str::FromStr for TraceMode {
    type Err = QibError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-trace" => Ok(TraceMode::ExactTrace),
            "shot-sampled" => Ok(TraceMode::ShotSampled),
            "ae-model" => Ok(TraceMode::AeModel),
            other => Err(QibError::Validation(format!("unknown trace mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for TraceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TraceMode::ExactTrace => "exact-trace",
            TraceMode::ShotSampled => "shot-sampled",
            TraceMode::AeModel => "ae-model",
        })
    }
}

/// Produces noisy estimates of real or imaginary parts of traces with the
/// statistics of the configured measurement procedure.
#[derive(Debug, Clone, Copy)]
pub struct TraceOracle {
    pub mode: TraceMode,
    pub shots: usize,
    pub ae: AeConfig,
}

impl TraceOracle {
    pub fn new(mode: TraceMode, eps_t: f64, delta: f64) -> Result<Self> {
        Ok(Self {
            mode,
            shots: shots_for_accuracy(eps_t, delta)?,
            ae: AeConfig::for_accuracy(eps_t, delta)?,
        })
    }

    pub fn exact() -> Self {
        Self {
            mode: TraceMode::ExactTrace,
            shots: 1,
            ae: AeConfig { queries: 10, k: 3.0, repeats: 1 },
        }
    }

    /// Estimate of a real number `v` in `[-1, 1]` measured as `p0 = (1 + v)/2`.
    pub fn measure<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> Result<f64> {
        let p0 = ((1.0 + v) / 2.0).clamp(0.0, 1.0);
        match self.mode {
            TraceMode::ExactTrace => Ok(v),
            TraceMode::ShotSampled => sample_swap_test(p0, self.shots, rng),
            TraceMode::AeModel => Ok(2.0 * boosted_amplitude_estimate(p0, &self.ae, rng) - 1.0),
        }
    }

    /// Typical per-trace error scale: `1/sqrt(shots)` or the AE target.
    pub fn noise_scale(&self) -> f64 {
        match self.mode {
            TraceMode::ExactTrace => 0.0,
            TraceMode::ShotSampled => 1.0 / (self.shots as f64).sqrt(),
            TraceMode::AeModel => 12.0 * PI / self.ae.queries as f64,
        }
    }
}

/// Estimate of `Re Tr(prod U_i rho_i)` to accuracy `eps_t` with confidence
/// `1 - delta` under the chosen mode.
pub fn estimate_trace_product<R: Rng + ?Sized>(
    spec: &SwapTestSpec,
    eps_t: f64,
    delta: f64,
    mode: TraceMode,
    rng: &mut R,
) -> Result<f64> {
    let oracle = TraceOracle::new(mode, eps_t, delta)?;
    oracle.measure(spec.trace_product().re, rng)
}
