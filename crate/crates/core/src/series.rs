//! Truncated Taylor / arcsine / Fourier approximation of the matrix
//! logarithm, and a Chebyshev polynomial approximation of `1/x`.
//!
//! `log(1 + x)` is expanded to order `K`, the variable `x = sigma - 1` is
//! rewritten as `(2/pi) arcsin(sin(pi x / 2))`, powers of the arcsine are
//! truncated at order `L`, and binomial expansions of `sin^l` keep only the
//! `2M + 1` central frequencies. The result is a cosine series
//! `log sigma ~ sum_j c_j exp(i pi j sigma / 2)` with real, even `c_j`.

use std::f64::consts::{E, PI};

use num_traits::{FromPrimitive, One, Zero};
use serde::Serialize;

use crate::error::{QibError, Result};
use crate::linalg::{CMatrix, HermitianOperator};

/// Largest `K * L` accepted when building coefficient tables.
pub const MAX_TABLE_WORK: f64 = 4.0e9;
/// Largest arcsine truncation order accepted.
pub const MAX_ARCSIN_ORDER: usize = 200_000;

/// `a_n = (-1)^(n+1) / n` for `n = 0..=k` (with `a_0 = 0`).
pub fn taylor_log_coeffs(k: usize) -> Vec<f64> {
    (0..=k)
        .map(|n| {
            if n == 0 {
                0.0
            } else if n % 2 == 1 {
                1.0 / n as f64
            } else {
                -1.0 / n as f64
            }
        })
        .collect()
}

/// `sum_n a_n x^n` by Horner's rule.
pub fn taylor_log_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|n| 1.0 / n as f64).sum()
}

/// Smallest order for which the truncated series of `log x` is within `eps`
/// on `[1/alpha, 1]`: `ceil(ln(3/eps) / ln(alpha/(alpha-1)))`.
pub fn taylor_log_min_order(alpha: f64, eps: f64) -> Result<usize> {
    if !(alpha > 1.0) || !(eps > 0.0) {
        return Err(QibError::Validation(format!(
            "need alpha > 1 and eps > 0 (got {alpha}, {eps})"
        )));
    }
    let k = ((3.0 / eps).ln() / (alpha / (alpha - 1.0)).ln()).ceil();
    Ok(k.max(1.0) as usize)
}

/// Coefficients of `arcsin t` up to `t^l`, in any numeric field.
pub fn arcsin_series_coeffs<T>(l: usize) -> Vec<T>
where
    T: Clone + Zero + One + FromPrimitive + std::ops::Mul<Output = T> + std::ops::Div<Output = T>,
{
    let mut out = vec![T::zero(); l + 1];
    if l == 0 {
        return out;
    }
    let mut c = T::one();
    out[1] = c.clone();
    let mut n = 1usize;
    while 2 * n + 1 <= l {
        let num = T::from_usize((2 * n - 1) * (2 * n - 1)).expect("representable");
        let den = T::from_usize(2 * n * (2 * n + 1)).expect("representable");
        c = c * num / den;
        out[2 * n + 1] = c.clone();
        n += 1;
    }
    out
}

/// Coefficients of `(arcsin t)^k` up to `t^l` for `k = 0..=k_max`, by repeated
/// Cauchy products. Generic so that exact rational arithmetic can be used.
pub fn arcsin_power_coeffs<T>(k_max: usize, l: usize) -> Vec<Vec<T>>
where
    T: Clone
        + Zero
        + One
        + FromPrimitive
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>
        + std::ops::Add<Output = T>,
{
    let base = arcsin_series_coeffs::<T>(l);
    let mut rows = Vec::with_capacity(k_max + 1);
    let mut unit = vec![T::zero(); l + 1];
    unit[0] = T::one();
    rows.push(unit);
    for k in 1..=k_max {
        let prev = &rows[k - 1];
        let mut next = vec![T::zero(); l + 1];
        for i in 0..=l {
            if prev[i].is_zero() {
                continue;
            }
            for j in 1..=(l - i) {
                if base[j].is_zero() {
                    continue;
                }
                next[i + j] = next[i + j].clone() + prev[i].clone() * base[j].clone();
            }
        }
        rows.push(next);
    }
    rows
}

/// `b_l^(k)`: coefficients of `((2/pi) arcsin t)^k` in `f64`.
///
/// Only the parity class `l = k (mod 2)` is nonzero, so rows are stored
/// compressed: entry `i` of row `k` is the coefficient of `t^(2i + k%2)`.
#[derive(Debug, Clone)]
pub struct ArcsinPowerTable {
    pub l: usize,
    rows: Vec<Vec<f64>>,
}

/// Coefficients of `(2/pi) arcsin t` at odd powers `t^(2j+1)`.
fn scaled_arcsin_odd(l: usize) -> Vec<f64> {
    let full = arcsin_series_coeffs::<f64>(l);
    (0..(l + 1) / 2).map(|j| full[2 * j + 1] * 2.0 / PI).collect()
}

/// One compressed Cauchy product step: multiplies a parity-`p` row by the odd
/// base series, truncated at degree `l`.
fn multiply_by_base(prev: &[f64], parity: usize, base_odd: &[f64], l: usize, min_degree: usize) -> Vec<f64> {
    let out_parity = 1 - parity;
    let out_len = if l >= out_parity { (l - out_parity) / 2 + 1 } else { 0 };
    let mut out = vec![0.0; out_len];
    let start = min_degree.saturating_sub(parity) / 2;
    for (i, &a) in prev.iter().enumerate().skip(start) {
        if a == 0.0 {
            continue;
        }
        // degree 2i + parity times degree 2j + 1 lands at compressed index i + j + parity
        let offset = i + parity;
        if offset >= out_len {
            break;
        }
        for (o, &b) in out[offset..].iter_mut().zip(base_odd.iter()) {
            *o += a * b;
        }
    }
    out
}

impl ArcsinPowerTable {
    pub fn new(k_max: usize, l: usize) -> Self {
        let base = scaled_arcsin_odd(l);
        let mut rows = Vec::with_capacity(k_max + 1);
        rows.push(vec![1.0]);
        for k in 1..=k_max {
            let next = multiply_by_base(&rows[k - 1], (k - 1) % 2, &base, l, k - 1);
            rows.push(next);
        }
        Self { l, rows }
    }

    /// Coefficient of `t^degree` in `((2/pi) arcsin t)^k`.
    pub fn coefficient(&self, k: usize, degree: usize) -> f64 {
        if degree > self.l || degree % 2 != k % 2 {
            return 0.0;
        }
        self.rows[k].get(degree / 2).copied().unwrap_or(0.0)
    }

    pub fn row_one_norm(&self, k: usize) -> f64 {
        self.rows[k].iter().map(|x| x.abs()).sum()
    }

    pub fn k_max(&self) -> usize {
        self.rows.len() - 1
    }
}

/// `beta_l = sum_k a_k b_l^(k)` for `l = 0..=L`, streaming over `k` so the
/// full table is never stored.
fn collapsed_power_series(taylor: &[f64], l: usize) -> Vec<f64> {
    let base = scaled_arcsin_odd(l);
    let mut beta = vec![0.0; l + 1];
    let mut row = vec![1.0];
    for k in 1..taylor.len() {
        row = multiply_by_base(&row, (k - 1) % 2, &base, l, k - 1);
        let parity = k % 2;
        for (i, &v) in row.iter().enumerate() {
            beta[2 * i + parity] += taylor[k] * v;
        }
    }
    beta
}

/// Real even cosine series `f(x) = sum_{|j| <= J} c_j exp(i pi j x / 2)`.
#[derive(Debug, Clone, Serialize)]
pub struct FourierLogSeries {
    /// `c_j` for `j = 0..=max_freq`; `c_{-j} = c_j`.
    pub coeffs: Vec<f64>,
}

impl FourierLogSeries {
    pub fn max_freq(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coefficient(&self, j: i64) -> f64 {
        self.coeffs.get(j.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `sum_j |c_j|` over positive and negative frequencies.
    pub fn one_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 { c.abs() } else { 2.0 * c.abs() })
            .sum()
    }

    /// `sum_j |pi j c_j / 2|`, the Lipschitz constant of the series.
    pub fn derivative_one_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| PI * j as f64 * c.abs())
            .sum()
    }

    /// Clenshaw sums `(sum_j a_j cos(j t), sum_j a_j sin(j t))` for `j >= 1`.
    fn clenshaw(a: &[f64], t: f64) -> (f64, f64) {
        let two_cos = 2.0 * t.cos();
        let (mut b1, mut b2) = (0.0, 0.0);
        for j in (1..a.len()).rev() {
            let b0 = a[j] + two_cos * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        (b1 * t.cos() - b2, b1 * t.sin())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let (cos_sum, _) = Self::clenshaw(&self.coeffs, PI * x / 2.0);
        self.coeffs[0] + 2.0 * cos_sum
    }

    /// `f'(x) = -sum_{j>0} pi j c_j sin(pi j x / 2)`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let weighted: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| PI * j as f64 * c)
            .collect();
        let (_, sin_sum) = Self::clenshaw(&weighted, PI * x / 2.0);
        -sin_sum
    }

    /// Derivative evaluator that reuses the weighted coefficients.
    pub fn derivative_evaluator(&self) -> DerivativeEvaluator {
        DerivativeEvaluator {
            weighted: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| PI * j as f64 * c)
                .collect(),
        }
    }

    /// Nonzero `(j, c_j)` over negative and positive frequencies.
    pub fn terms(&self) -> Vec<(i64, f64)> {
        let j_max = self.max_freq() as i64;
        (-j_max..=j_max)
            .map(|j| (j, self.coefficient(j)))
            .filter(|(_, c)| *c != 0.0)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DerivativeEvaluator {
    weighted: Vec<f64>,
}

impl DerivativeEvaluator {
    pub fn eval(&self, x: f64) -> f64 {
        let (_, s) = FourierLogSeries::clenshaw(&self.weighted, PI * x / 2.0);
        -s
    }
}

/// Fourier coefficients of the approximate logarithm for orders `(K, L, M)`.
pub fn fourier_log_coeffs(k: usize, l: usize, m: usize) -> Result<FourierLogSeries> {
    check_orders(k, l, m)?;
    let taylor = taylor_log_coeffs(k);
    let beta = collapsed_power_series(&taylor, l);
    let max_freq = (2 * m).min(l);
    let mut coeffs = vec![0.0; max_freq + 1];
    // Row l of C(l, m) / 2^l, advanced by a halving Pascal recurrence.
    let mut row = vec![1.0f64];
    for (deg, &b) in beta.iter().enumerate().skip(1) {
        let mut next = vec![0.0; deg + 1];
        next[0] = row[0] * 0.5;
        next[deg] = row[deg - 1] * 0.5;
        for i in 1..deg {
            next[i] = 0.5 * (row[i - 1] + row[i]);
        }
        row = next;
        if b == 0.0 {
            continue;
        }
        let sign = if deg % 2 == 0 { 1.0 } else { -1.0 };
        let lo = (deg + 1) / 2;
        let lo = lo.saturating_sub(m);
        let hi = (deg / 2 + m).min(deg);
        for (mi, &w) in row.iter().enumerate().take(hi + 1).skip(lo) {
            let j = 2 * mi as i64 - deg as i64;
            if j >= 0 {
                coeffs[j as usize] += sign * b * w;
            }
        }
    }
    Ok(FourierLogSeries { coeffs })
}

fn check_orders(k: usize, l: usize, m: usize) -> Result<()> {
    if k == 0 || l == 0 || m == 0 {
        return Err(QibError::Validation("series orders must be positive".into()));
    }
    if l < k {
        return Err(QibError::Validation(format!(
            "arcsine order L = {l} must be at least the Taylor order K = {k}"
        )));
    }
    if l > MAX_ARCSIN_ORDER || (k as f64) * (l as f64) * (l as f64) / 8.0 > MAX_TABLE_WORK * 1e3 {
        return Err(QibError::Capacity(format!(
            "orders K = {k}, L = {l} exceed the coefficient table budget"
        )));
    }
    Ok(())
}

/// Principal-branch-minus-one Lambert W for `x` in `[-1/e, 0)`.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if !(x >= branch - 1e-15 && x < 0.0) {
        return Err(QibError::Domain(format!("W_-1 undefined at {x}")));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    let mut w = if x < -0.25 {
        let p = -(2.0 * (1.0 + E * x)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        l1 - (-l1).ln()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-12 * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}

/// Orders and sample count selected for a target accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanOrders {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    /// Uniform samples for the Duhamel integral.
    pub n: f64,
}

/// Chooses `(K, L, M, n)` from the error target, the smallest admissible
/// eigenvalue and the operator norm of the reference-state derivative.
pub fn plan_orders(eps: f64, lambda_min: f64, deriv_norm: f64) -> Result<PlanOrders> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(QibError::Validation(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(lambda_min > 0.0 && lambda_min < 1.0) {
        return Err(QibError::Validation(format!(
            "lambda_min must lie in (0, 1), got {lambda_min}"
        )));
    }
    if !(deriv_norm > 0.0) || !deriv_norm.is_finite() {
        return Err(QibError::Validation(format!(
            "derivative norm must be positive, got {deriv_norm}"
        )));
    }
    let lam = lambda_min;
    let k_raw = (12.0 * deriv_norm / (lam * eps)).ln() / (1.0 / (1.0 - lam)).ln();
    let k = (k_raw.ceil().max(1.0)) as usize;
    let h_k = harmonic(k);

    let ell = (1.0 / (1.0 - lam * lam)).ln();
    let b = eps * lam.powi(3) * (2.0 - lam * lam).powf(1.5)
        / (12.0 * ((1.0 + E * E) / E) * deriv_norm * h_k * (1.0 - lam * lam));
    let arg = -ell * b;
    let l_raw = if arg > -1.0 / E {
        -lambert_w_minus1(arg)? / ell
    } else {
        1.0
    };
    if !l_raw.is_finite() || l_raw > MAX_ARCSIN_ORDER as f64 {
        return Err(QibError::Capacity(format!(
            "arcsine order {l_raw:.3e} exceeds {MAX_ARCSIN_ORDER}"
        )));
    }
    let l = (l_raw.ceil() as usize).max(k);

    let m_raw = ((l as f64 / 2.0) * (24.0 * PI * l as f64 * deriv_norm * h_k / eps).ln()).sqrt();
    let m = (m_raw.ceil().max(1.0)) as usize;
    let n = (16.0 * PI * PI * (m * m) as f64 * h_k * h_k * deriv_norm * deriv_norm / (eps * eps)).ceil();
    Ok(PlanOrders { k, l, m, n })
}

/// A fully built approximation of the logarithm.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximationPlan {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub target_error: f64,
    pub lambda_min: f64,
    pub deriv_norm: f64,
    /// `sum_k |a_k|`, the harmonic number `H_K`.
    pub taylor_one_norm: f64,
    /// Uniform Duhamel samples prescribed for `target_error`.
    pub duhamel_samples: f64,
    #[serde(skip)]
    pub series: FourierLogSeries,
}

impl ApproximationPlan {
    /// Builds the plan chosen by [`plan_orders`].
    pub fn plan(eps: f64, lambda_min: f64, deriv_norm: f64) -> Result<Self> {
        let o = plan_orders(eps, lambda_min, deriv_norm)?;
        Self::with_orders(o.k, o.l, o.m, eps, lambda_min, deriv_norm)
    }

    /// Builds a plan with explicitly chosen orders.
    pub fn with_orders(
        k: usize,
        l: usize,
        m: usize,
        eps: f64,
        lambda_min: f64,
        deriv_norm: f64,
    ) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_min < 1.0) {
            return Err(QibError::Validation(format!(
                "lambda_min must lie in (0, 1), got {lambda_min}"
            )));
        }
        let series = fourier_log_coeffs(k, l, m)?;
        let h_k = harmonic(k);
        let n = (16.0 * PI * PI * (m * m) as f64 * h_k * h_k * deriv_norm * deriv_norm / (eps * eps)).ceil();
        Ok(Self {
            k,
            l,
            m,
            target_error: eps,
            lambda_min,
            deriv_norm,
            taylor_one_norm: h_k,
            duhamel_samples: n,
            series,
        })
    }

    /// Standard deviation bound `pi M H_K ||d sigma|| / sqrt(n)` of one
    /// Monte Carlo Duhamel estimate with `n` samples.
    pub fn duhamel_stddev_bound(&self, deriv_norm: f64, n: usize) -> f64 {
        PI * self.m as f64 * self.taylor_one_norm * deriv_norm / (n as f64).sqrt()
    }

    /// Scalar approximation of `log x`.
    pub fn log(&self, x: f64) -> f64 {
        self.series.eval(x)
    }

    /// Support eigenvalues must lie in `[lambda_min, 1]`.
    pub fn check_window(&self, name: &str, eigenvalues: &[f64], threshold: f64) -> Result<()> {
        let slack = 1e-9;
        for &v in eigenvalues {
            if v > threshold && (v < self.lambda_min * (1.0 - slack) || v > 1.0 + slack) {
                return Err(QibError::WindowViolation {
                    name: name.to_string(),
                    eigenvalue: v,
                    lower: self.lambda_min,
                    upper: 1.0,
                });
            }
        }
        Ok(())
    }
}

/// Approximate `log sigma` on the support of `sigma` (kernel mapped to zero).
pub fn approx_log_operator(sigma: &HermitianOperator<f64>, plan: &ApproximationPlan) -> Result<HermitianOperator<f64>> {
    let s = sigma.spectrum();
    let thr = crate::scalar::Real::support_threshold();
    plan.check_window("sigma", &s.values, thr)?;
    let m = s.map_real(|v| if v > thr { plan.log(v) } else { 0.0 });
    HermitianOperator::new(m)
}

/// Odd Chebyshev approximation of `1/x` on `[1/kappa, 1]`:
/// `f(x) = 4 sum_{j=0}^{j0} (-1)^j [sum_{i=j+1}^{b} C(2b, b+i) / 4^b] T_{2j+1}(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct ChebyshevInversePlan {
    pub kappa: f64,
    pub epsilon: f64,
    pub b: usize,
    pub j0: usize,
    /// Coefficient of `T_{2j+1}` at index `j`.
    pub coeffs: Vec<f64>,
}

impl ChebyshevInversePlan {
    pub fn new(kappa: f64, epsilon: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(QibError::Validation(format!(
                "need kappa >= 1 and eps in (0, 1), got {kappa}, {epsilon}"
            )));
        }
        let b_raw = kappa * kappa * (kappa / epsilon).ln();
        if b_raw > 1e8 {
            return Err(QibError::Capacity(format!("binomial order {b_raw:.3e} too large")));
        }
        let b = (b_raw.ceil() as usize).max(1);
        let j0 = ((b as f64) * (4.0 * b as f64 / epsilon).ln()).sqrt().ceil() as usize;
        // w_i = C(2b, b+i) / 4^b, starting from the central term.
        let mut w = vec![0.0; b + 1];
        w[0] = (1..=b).fold(1.0, |acc, t| acc * (2 * t - 1) as f64 / (2 * t) as f64);
        for i in 0..b {
            w[i + 1] = w[i] * (b - i) as f64 / (b + i + 1) as f64;
        }
        let mut tail = vec![0.0; b + 2];
        for i in (1..=b).rev() {
            tail[i] = tail[i + 1] + w[i];
        }
        let coeffs = (0..=j0)
            .map(|j| {
                let t = if j < b { tail[j + 1] } else { 0.0 };
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                4.0 * sign * t
            })
            .collect();
        Ok(Self {
            kappa,
            epsilon,
            b,
            j0,
            coeffs,
        })
    }

    /// Clenshaw evaluation of the odd Chebyshev series.
    pub fn eval(&self, x: f64) -> f64 {
        let n = 2 * self.coeffs.len();
        let coef = |i: usize| if i % 2 == 1 { self.coeffs[i / 2] } else { 0.0 };
        let (mut b1, mut b2) = (0.0, 0.0);
        for i in (1..n).rev() {
            let b0 = coef(i) + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2
    }

    pub fn one_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Monomial coefficients of the polynomial. Conversion from the Chebyshev
    /// basis is ill-conditioned, so this is limited to low degrees.
    pub fn monomial_coeffs(&self) -> Result<Vec<f64>> {
        if self.j0 > 25 {
            return Err(QibError::Capacity(format!(
                "monomial form of degree {} is numerically meaningless",
                2 * self.j0 + 1
            )));
        }
        let deg = 2 * self.j0 + 1;
        let mut out = vec![0.0; deg + 1];
        let mut t_prev = vec![1.0];
        let mut t_cur = vec![0.0, 1.0];
        for n in 1..=deg {
            if n % 2 == 1 {
                for (o, t) in out.iter_mut().zip(&t_cur) {
                    *o += self.coeffs[n / 2] * t;
                }
            }
            let mut t_next = vec![0.0; n + 2];
            for (i, &t) in t_cur.iter().enumerate() {
                t_next[i + 1] += 2.0 * t;
            }
            for (i, &t) in t_prev.iter().enumerate() {
                t_next[i] -= t;
            }
            t_prev = std::mem::replace(&mut t_cur, t_next);
        }
        Ok(out)
    }
}

/// Result of [`chebyshev_inverse`].
#[derive(Debug, Clone)]
pub struct ApproximateInverse {
    pub operator: HermitianOperator<f64>,
    /// Support eigenvalues outside `[1/kappa, 1]`.
    pub out_of_window: Vec<f64>,
}

/// Applies the Chebyshev inverse by spectral mapping and reports eigenvalues
/// outside the window where the accuracy guarantee holds.
pub fn chebyshev_inverse(op: &HermitianOperator<f64>, plan: &ChebyshevInversePlan) -> ApproximateInverse {
    let s = op.spectrum();
    let thr: f64 = crate::scalar::Real::support_threshold();
    let lo = 1.0 / plan.kappa;
    let out_of_window = s
        .values
        .iter()
        .copied()
        .filter(|v| v.abs() > thr && (v.abs() < lo * (1.0 - 1e-12) || v.abs() > 1.0 + 1e-12))
        .collect();
    let m: CMatrix<f64> = s.map_real(|v| plan.eval(v));
    ApproximateInverse {
        operator: HermitianOperator::from_hermitian_part(&m),
        out_of_window,
    }
}
