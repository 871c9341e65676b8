//! Numerical toolkit for the quantum information bottleneck: exact entropies
//! of channel outputs, Fourier-series logarithms and their parameter
//! derivatives, sampled trace estimation, Rényi-2 surrogates and a gradient
//! descent trainer.
//!
//! The linear-algebra, register, channel and entropy layers are generic over
//! the real scalar. Estimators, sampling and training work in `f64`; the
//! aliases below name the `f64` instantiations.

pub mod channel;
pub mod config;
pub mod entropy;
pub mod error;
pub mod estimators;
pub mod instances;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod registers;
pub mod sampling;
pub mod scalar;
pub mod series;
pub mod trainer;

pub use error::{ErrorCategory, QibError, Result};
pub use scalar::Real;

pub type ComplexMatrix = linalg::CMatrix<f64>;
pub type ComplexVector = linalg::CVector<f64>;
pub type DensityMatrix = linalg::DensityMatrix<f64>;
pub type HermitianOperator = linalg::HermitianOperator<f64>;
pub type LabeledEnsemble = registers::LabeledEnsemble<f64>;
pub type ParameterizedChannel = channel::ParameterizedChannel<f64>;
pub type QibInstance = entropy::QibInstance<f64>;
