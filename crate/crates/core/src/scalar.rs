//! Scalar abstraction shared by the generic linear-algebra layer.

use nalgebra::RealField;

/// Real scalar with the tolerances used for validating quantum states.
pub trait Real: RealField + Copy + Send + Sync + 'static {
    /// Largest Hermiticity residual that is silently symmetrized.
    fn hermitian_tol() -> Self;
    /// Allowed deviation of a density-matrix trace from one.
    fn trace_tol() -> Self;
    /// Most negative eigenvalue still accepted as positive semidefinite.
    fn psd_tol() -> Self;
    /// Eigenvalues at or below this magnitude are treated as kernel.
    fn support_threshold() -> Self;
    /// Weight a state may place on the kernel of a reference before the
    /// support condition counts as violated.
    fn support_violation_tol() -> Self;

    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn hermitian_tol() -> Self {
        1e-12
    }
    fn trace_tol() -> Self {
        1e-9
    }
    fn psd_tol() -> Self {
        1e-10
    }
    fn support_threshold() -> Self {
        1e-10
    }
    fn support_violation_tol() -> Self {
        1e-8
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn hermitian_tol() -> Self {
        1e-5
    }
    fn trace_tol() -> Self {
        1e-4
    }
    fn psd_tol() -> Self {
        1e-5
    }
    fn support_threshold() -> Self {
        1e-5
    }
    fn support_violation_tol() -> Self {
        1e-3
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}
