//! Petz Rényi-2 divergence and the Rényi-2 / Hilbert-Schmidt surrogate bounds.

use serde::{Deserialize, Serialize};

use crate::entropy::{check_support, qib_objective, QibInstance};
use crate::error::{QibError, Result};
use crate::linalg::{anticommutator, trace_product, CMatrix, DensityMatrix};
use crate::series::{chebyshev_inverse, ChebyshevInversePlan};

/// Pseudo-inverse on the support.
fn pseudo_inverse(sigma: &DensityMatrix<f64>) -> CMatrix<f64> {
    let thr = sigma.support_threshold();
    sigma.eigen().map_real(|v| if v > thr { 1.0 / v } else { 0.0 })
}

/// `ln Tr(rho^2 sigma^-1)` with the inverse taken on the support of `sigma`.
pub fn renyi2_divergence(rho: &DensityMatrix<f64>, sigma: &DensityMatrix<f64>) -> Result<f64> {
    check_support(rho, sigma)?;
    let rho2 = rho.matrix() * rho.matrix();
    Ok(trace_product(&rho2, &pseudo_inverse(sigma)).re.ln())
}

fn half_hs_squared(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    let d = a - b;
    0.5 * trace_product(&d, &d).re
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QibBounds {
    pub lower: f64,
    pub objective: f64,
    pub upper: f64,
}

/// Upper bound `beta D2(rho_RX~ || rho_R rho_X~) - (1-beta) HS(rho_X~Y, rho_X~ rho_Y)`.
pub fn renyi2_upper_bound(instance: &QibInstance<f64>) -> Result<f64> {
    let s = instance.states()?;
    let b = instance.beta();
    let mut v = 0.0;
    if b > 0.0 {
        v += b * renyi2_divergence(&s.rho_rxt, &s.product_rxt)?;
    }
    if b < 1.0 {
        v -= (1.0 - b) * half_hs_squared(s.rho_xty.matrix(), s.product_xty.matrix());
    }
    Ok(v)
}

/// Lower and upper surrogates around the exact objective. Both rest on
/// `D2 >= D1 >= (1/2)||.||_1^2 >= (1/2) Tr((.)^2)`.
pub fn qib_bounds(instance: &QibInstance<f64>) -> Result<QibBounds> {
    let s = instance.states()?;
    let b = instance.beta();
    let mut lower = 0.0;
    if b > 0.0 {
        lower += b * half_hs_squared(s.rho_rxt.matrix(), s.product_rxt.matrix());
    }
    if b < 1.0 {
        lower -= (1.0 - b) * renyi2_divergence(&s.rho_xty, &s.product_xty)?;
    }
    Ok(QibBounds {
        lower,
        objective: qib_objective(instance)?,
        upper: renyi2_upper_bound(instance)?,
    })
}

/// How `sigma^-1` is obtained for the upper-bound gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InverseMode {
    /// Pseudo-inverse on the support.
    Exact,
    /// Odd Chebyshev polynomial with closeness parameter `epsilon`.
    Chebyshev { epsilon: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct RenyiGradient {
    pub values: Vec<f64>,
    /// Bound on the deviation from the exact-inverse gradient (zero when exact).
    pub error_budgets: Vec<f64>,
    /// Support eigenvalues of the reference outside the polynomial window.
    pub out_of_window: Vec<f64>,
}

/// Gradient of [`renyi2_upper_bound`]:
/// `beta (Tr({tau, d tau} S) - Tr(tau^2 S d sigma S)) / Tr(tau^2 S) - (1-beta) Tr(Delta d Delta)`.
pub fn renyi2_bound_gradient(instance: &QibInstance<f64>, inverse: InverseMode) -> Result<RenyiGradient> {
    let s = instance.states()?;
    let b = instance.beta();
    let tau = &s.rho_rxt;
    let sigma = &s.product_rxt;
    let (inv, out_of_window, closeness, lam) = if b > 0.0 {
        check_support(tau, sigma)?;
        let lam = sigma.min_support_eigenvalue();
        match inverse {
            InverseMode::Exact => (pseudo_inverse(sigma), vec![], 0.0, lam),
            InverseMode::Chebyshev { epsilon } => {
                let plan = ChebyshevInversePlan::new((1.0 / lam).max(1.0), epsilon)?;
                let approx = chebyshev_inverse(&sigma.as_hermitian(), &plan);
                // |f(x) - 1/x| <= 2 epsilon on the window.
                (approx.operator.into_matrix(), approx.out_of_window, 2.0 * epsilon, lam)
            }
        }
    } else {
        (CMatrix::<f64>::zeros(1, 1), vec![], 0.0, 1.0)
    };
    let tau2 = tau.matrix() * tau.matrix();
    let delta = s.rho_xty.matrix() - s.product_xty.matrix();
    let mut values = Vec::new();
    let mut budgets = Vec::new();
    for k in 0..instance.params().len() {
        let d = instance.state_derivatives(&s, k)?;
        let mut g = 0.0;
        let mut budget = 0.0;
        if b > 0.0 {
            let n = trace_product(&anticommutator(tau.matrix(), d.d_rxt.matrix()), &inv).re
                - trace_product(&tau2, &(&inv * d.d_product_rxt.matrix() * &inv)).re;
            let den = trace_product(&tau2, &inv).re;
            if !(den > 0.0) {
                return Err(QibError::Domain("non-positive Rényi-2 trace".into()));
            }
            g += b * n / den;
            if closeness > 0.0 {
                let eps_n = 2.0 * closeness * d.d_rxt.operator_norm()
                    + closeness * d.d_product_rxt.operator_norm() * (2.0 / lam + closeness);
                let eps_d = closeness;
                let denom = den * (den - eps_d);
                budget = if denom > 0.0 {
                    b * (n.abs() * eps_d + den * eps_n) / denom
                } else {
                    f64::INFINITY
                };
            }
        }
        if b < 1.0 {
            let dd = d.d_xty.matrix() - d.d_product_xty.matrix();
            g -= (1.0 - b) * trace_product(&delta, &dd).re;
        }
        values.push(g);
        budgets.push(budget);
    }
    Ok(RenyiGradient {
        values,
        error_budgets: budgets,
        out_of_window,
    })
}

