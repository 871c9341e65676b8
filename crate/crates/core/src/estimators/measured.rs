//! Measured Rényi-2 divergence through the Lyapunov inverse
//! `omega = Phi^-1(rho)`, which solves `omega sigma + sigma omega = rho`.
//!
//! The pipeline evaluates `omega = int_0^L e^{-s sigma} rho e^{-s sigma} ds`
//! with a composite trapezoid rule and truncated Taylor exponentials.

use serde::Serialize;

use crate::error::{QibError, Result};
use crate::linalg::{identity, trace_product, CMatrix, DensityMatrix, HermitianOperator, Spectrum};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;

/// Which closed form of the divergence is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasuredForm {
    /// `ln(2 Tr(rho omega))`; zero for identical states and equal to the
    /// classical Rényi-2 divergence on commuting pairs.
    Variational,
    /// `ln(Tr(rho omega) - Tr(rho omega^2) / 4)`.
    ClosedForm,
}

/// Cutoff, slice count and error split of the quadrature pipeline.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyapunovPlan {
    pub cutoff: f64,
    pub slices: usize,
    /// `[cutoff, trapezoid, exponential truncation, trace estimation]` budgets.
    pub eps: [f64; 4],
    pub lambda_min: f64,
    pub sigma_norm: f64,
    pub rho_norm: f64,
    /// Gauss-Legendre nodes for the inner integral of the derivative.
    pub t_nodes: usize,
}

impl LyapunovPlan {
    /// Splits `eps` equally over the four error sources.
    pub fn new(eps: f64, lambda_min: f64, sigma_norm: f64, rho_norm: f64, deriv_norm: f64) -> Result<Self> {
        if !(eps > 0.0) || !(lambda_min > 0.0) || !(sigma_norm > 0.0) || !(rho_norm > 0.0) {
            return Err(QibError::Validation("Lyapunov plan needs positive inputs".into()));
        }
        let e = eps / 4.0;
        let scale = rho_norm.max(deriv_norm * rho_norm);
        let cutoff = ((scale / (2.0 * lambda_min * e)).ln() / (2.0 * lambda_min)).max(0.0);
        let slices = (sigma_norm * (rho_norm * cutoff.powi(3) / (3.0 * e)).sqrt()).ceil().max(1.0) as usize;
        if slices > 5_000_000 {
            return Err(QibError::Capacity(format!("{slices} trapezoid slices")));
        }
        Ok(Self {
            cutoff,
            slices,
            eps: [e; 4],
            lambda_min,
            sigma_norm,
            rho_norm,
            t_nodes: 16,
        })
    }

    /// Plan sized for a concrete pair.
    pub fn for_states(eps: f64, rho: &CMatrix<f64>, d_rho_norm: f64, sigma: &DensityMatrix<f64>) -> Result<Self> {
        let s = sigma.eigen();
        let lam = s.values.first().copied().unwrap_or(0.0);
        let sn = s.values.last().copied().unwrap_or(0.0);
        let rn = HermitianOperator::from_hermitian_part(rho).operator_norm();
        Self::new(eps, lam, sn, rn.max(1e-300), d_rho_norm)
    }

    /// Combined bound on `||omega_pipeline - omega||`.
    pub fn omega_error_bound(&self) -> f64 {
        self.eps[0] + self.eps[1] + self.eps[2]
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LyapunovMethod {
    /// Closed form in the eigenbasis of `sigma`.
    Exact,
    Pipeline(LyapunovPlan),
}

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub omega: CMatrix<f64>,
    /// Operator norm of `omega sigma + sigma omega - rho`.
    pub residual: f64,
}

fn positive_spectrum(sigma: &DensityMatrix<f64>) -> Result<Spectrum<f64>> {
    let s = sigma.eigen();
    match s.values.first() {
        Some(&v) if v > sigma.support_threshold() => Ok(s),
        Some(&v) => Err(QibError::Singular(format!(
            "reference has eigenvalue {v:e}; a positive definite operator is required"
        ))),
        None => Err(QibError::Validation("empty operator".into())),
    }
}

fn exact_inverse(rho: &CMatrix<f64>, s: &Spectrum<f64>) -> CMatrix<f64> {
    let r = s.to_eigenbasis(rho);
    let n = s.values.len();
    let w = CMatrix::<f64>::from_fn(n, n, |i, j| r[(i, j)] / (s.values[i] + s.values[j]));
    s.from_eigenbasis(&w)
}

/// Truncated-Taylor `exp(-alpha sigma)` with scaling and squaring, accurate to
/// `tol` in operator norm for positive semidefinite `sigma`.
pub(crate) fn exp_neg_taylor(sigma: &CMatrix<f64>, alpha: f64, sigma_norm: f64, tol: f64) -> CMatrix<f64> {
    let d = sigma.nrows();
    let x = alpha * sigma_norm;
    let squarings = if x > 0.5 { (x / 0.5).log2().ceil() as u32 } else { 0 };
    let parts = 2f64.powi(squarings as i32);
    let y = x / parts;
    let per_factor = tol / (2.0 * parts);
    // Smallest K with y^(K+1) / (K+1)! <= per_factor.
    let mut k = 0usize;
    let mut term = y;
    while term > per_factor && k < 200 {
        k += 1;
        term *= y / (k + 1) as f64;
    }
    let a = sigma * Complex64::new(-alpha / parts, 0.0);
    let id = identity::<f64>(d);
    let mut e = id.clone();
    for m in (1..=k).rev() {
        e = &id + &a * e * Complex64::new(1.0 / m as f64, 0.0);
    }
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

fn pipeline_inverse(rho: &CMatrix<f64>, sigma: &CMatrix<f64>, plan: &LyapunovPlan) -> CMatrix<f64> {
    let n = plan.slices;
    let h = plan.cutoff / n as f64;
    let step_tol = plan.eps[2] / (3.0 * plan.rho_norm * n as f64 * plan.cutoff.max(1e-300));
    let e_h = exp_neg_taylor(sigma, h, plan.sigma_norm, step_tol);
    let d = sigma.nrows();
    let mut e = identity::<f64>(d);
    let mut acc = CMatrix::<f64>::zeros(d, d);
    for i in 0..=n {
        let w = trapezoid_weight(i, n) * h;
        acc += (&e * rho * &e) * Complex64::new(w, 0.0);
        e = &e * &e_h;
    }
    acc
}

/// Solves `omega sigma + sigma omega = rho` for positive definite `sigma`.
pub fn lyapunov_inverse(rho: &CMatrix<f64>, sigma: &DensityMatrix<f64>, method: &LyapunovMethod) -> Result<LyapunovSolution> {
    if rho.nrows() != sigma.dim() || rho.ncols() != sigma.dim() {
        return Err(QibError::dims("rho", sigma.dim(), rho.nrows()));
    }
    let s = positive_spectrum(sigma)?;
    let omega = match method {
        LyapunovMethod::Exact => exact_inverse(rho, &s),
        LyapunovMethod::Pipeline(plan) => pipeline_inverse(rho, sigma.matrix(), plan),
    };
    let r = &omega * sigma.matrix() + sigma.matrix() * &omega - rho;
    let residual = HermitianOperator::from_hermitian_part(&r).operator_norm();
    Ok(LyapunovSolution { omega, residual })
}

fn form_value(rho: &CMatrix<f64>, omega: &CMatrix<f64>, form: MeasuredForm) -> f64 {
    let ro = trace_product(rho, omega).re;
    match form {
        MeasuredForm::Variational => 2.0 * ro,
        MeasuredForm::ClosedForm => ro - 0.25 * trace_product(rho, &(omega * omega)).re,
    }
}

/// Measured Rényi-2 divergence of `rho` from positive definite `sigma`.
pub fn measured_renyi2(
    rho: &DensityMatrix<f64>,
    sigma: &DensityMatrix<f64>,
    form: MeasuredForm,
    method: &LyapunovMethod,
) -> Result<f64> {
    let sol = lyapunov_inverse(rho.matrix(), sigma, method)?;
    let q = form_value(rho.matrix(), &sol.omega, form);
    if !(q > 0.0) {
        return Err(QibError::Domain(format!("argument of the logarithm is {q:e}")));
    }
    Ok(q.ln())
}

/// `d omega` from the pipeline: the inverse applied to `d rho` plus the
/// Duhamel correction for the change of `sigma`.
fn pipeline_derivative(
    rho: &CMatrix<f64>,
    d_rho: &CMatrix<f64>,
    sigma: &CMatrix<f64>,
    d_sigma: &CMatrix<f64>,
    plan: &LyapunovPlan,
) -> CMatrix<f64> {
    let mut d_omega = pipeline_inverse(d_rho, sigma, plan);
    let n = plan.slices;
    let h = plan.cutoff / n as f64;
    let tol = plan.eps[2] / (3.0 * plan.rho_norm * n as f64 * plan.cutoff.max(1e-300));
    let (t, tw) = gauss_legendre(plan.t_nodes);
    let e_h = exp_neg_taylor(sigma, h, plan.sigma_norm, tol);
    let d = sigma.nrows();
    let mut e_s = identity::<f64>(d);
    for i in 0..=n {
        let s = i as f64 * h;
        if i > 0 {
            let mut inner = CMatrix::<f64>::zeros(d, d);
            for (&tq, &wq) in t.iter().zip(&tw) {
                let a = exp_neg_taylor(sigma, s * tq, plan.sigma_norm, tol);
                let b = exp_neg_taylor(sigma, s * (1.0 - tq), plan.sigma_norm, tol);
                let mid = a * d_sigma * b;
                inner += (&mid * rho * &e_s + &e_s * rho * &mid) * Complex64::new(wq, 0.0);
            }
            let w = trapezoid_weight(i, n) * h * s;
            d_omega -= inner * Complex64::new(w, 0.0);
        }
        e_s = &e_s * &e_h;
    }
    d_omega
}

/// Parameter derivative of [`measured_renyi2`] given `d rho` and `d sigma`.
pub fn measured_renyi2_derivative(
    rho: &DensityMatrix<f64>,
    d_rho: &CMatrix<f64>,
    sigma: &DensityMatrix<f64>,
    d_sigma: &CMatrix<f64>,
    form: MeasuredForm,
    method: &LyapunovMethod,
) -> Result<f64> {
    let d = sigma.dim();
    for (name, m) in [("d_rho", d_rho), ("d_sigma", d_sigma)] {
        if m.nrows() != d || m.ncols() != d {
            return Err(QibError::dims(name, d, m.nrows()));
        }
    }
    let s = positive_spectrum(sigma)?;
    let r = rho.matrix();
    let (omega, d_omega) = match method {
        LyapunovMethod::Exact => {
            let omega = exact_inverse(r, &s);
            let source = d_rho - d_sigma * &omega - &omega * d_sigma;
            let d_omega = exact_inverse(&source, &s);
            (omega, d_omega)
        }
        LyapunovMethod::Pipeline(plan) => (
            pipeline_inverse(r, sigma.matrix(), plan),
            pipeline_derivative(r, d_rho, sigma.matrix(), d_sigma, plan),
        ),
    };
    let q = form_value(r, &omega, form);
    if !(q > 0.0) {
        return Err(QibError::Domain(format!("argument of the logarithm is {q:e}")));
    }
    let base = trace_product(d_rho, &omega).re + trace_product(r, &d_omega).re;
    let dq = match form {
        MeasuredForm::Variational => 2.0 * base,
        MeasuredForm::ClosedForm => {
            base - 0.25
                * (trace_product(d_rho, &(&omega * &omega)).re
                    + trace_product(r, &(&d_omega * &omega + &omega * &d_omega)).re)
        }
    };
    Ok(dq / q)
}
