//! Tag, data, label and reference registers, and the labeled ensemble state.

use num_complex::Complex;

use crate::error::{QibError, Result};
use crate::linalg::{CMatrix, CVector, DensityMatrix};
use crate::scalar::Real;

/// Dimensions of the registers carried by a labeled ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub dim_tag: usize,
    pub dim_data: usize,
    pub dim_label: usize,
    /// The reference register mirrors the data register.
    pub dim_ref: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleRecord<T: Real> {
    pub tag: usize,
    pub state: CVector<T>,
    pub label: usize,
    pub weight: T,
}

/// Validated finite ensemble of labeled pure states.
#[derive(Debug, Clone)]
pub struct LabeledEnsemble<T: Real> {
    records: Vec<EnsembleRecord<T>>,
    layout: RegisterLayout,
}

impl<T: Real> LabeledEnsemble<T> {
    /// `dim_label` defaults to one more than the largest label.
    pub fn new(records: Vec<EnsembleRecord<T>>, dim_label: Option<usize>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| QibError::Validation("ensemble has no records".into()))?;
        let dim_data = first.state.len();
        if dim_data == 0 {
            return Err(QibError::Validation("empty state vector".into()));
        }
        let mut total = T::zero();
        for (i, r) in records.iter().enumerate() {
            if r.state.len() != dim_data {
                return Err(QibError::dims(format!("record {i} state"), dim_data, r.state.len()));
            }
            if !(r.weight >= T::zero()) || !r.weight.is_finite() {
                return Err(QibError::Validation(format!("record {i} has invalid weight")));
            }
            let n = r.state.norm();
            if (n - T::one()).abs() > T::trace_tol() {
                return Err(QibError::Validation(format!(
                    "record {i} state has norm {}",
                    n.to_f64()
                )));
            }
            total += r.weight;
        }
        if (total - T::one()).abs() > T::trace_tol() {
            return Err(QibError::Validation(format!(
                "weights sum to {} instead of one",
                total.to_f64()
            )));
        }
        let max_label = records.iter().map(|r| r.label).max().unwrap_or(0);
        let dim_label = match dim_label {
            Some(d) if d > max_label => d,
            Some(d) => {
                return Err(QibError::IndexOutOfRange {
                    index: max_label,
                    count: d,
                })
            }
            None => max_label + 1,
        };
        let dim_tag = records.iter().map(|r| r.tag).max().unwrap_or(0) + 1;
        Ok(Self {
            records,
            layout: RegisterLayout {
                dim_tag,
                dim_data,
                dim_label,
                dim_ref: dim_data,
            },
        })
    }

    pub fn records(&self) -> &[EnsembleRecord<T>] {
        &self.records
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    fn basis_projector(d: usize, k: usize) -> CMatrix<T> {
        let mut m = CMatrix::<T>::zeros(d, d);
        m[(k, k)] = Complex::new(T::one(), T::zero());
        m
    }

    /// Joint state on tag (x) data (x) label.
    pub fn build_labeled_ensemble(&self) -> DensityMatrix<T> {
        let l = self.layout;
        let d = l.dim_tag * l.dim_data * l.dim_label;
        let mut m = CMatrix::<T>::zeros(d, d);
        for r in &self.records {
            let t = Self::basis_projector(l.dim_tag, r.tag);
            let y = Self::basis_projector(l.dim_label, r.label);
            let psi = &r.state * r.state.adjoint();
            m += t.kronecker(&psi).kronecker(&y) * Complex::new(r.weight, T::zero());
        }
        DensityMatrix::from_trusted(&m)
    }

    /// Data (x) label state with the tag register traced out.
    pub fn data_label_state(&self) -> DensityMatrix<T> {
        let l = self.layout;
        let d = l.dim_data * l.dim_label;
        let mut m = CMatrix::<T>::zeros(d, d);
        for r in &self.records {
            let y = Self::basis_projector(l.dim_label, r.label);
            let psi = &r.state * r.state.adjoint();
            m += psi.kronecker(&y) * Complex::new(r.weight, T::zero());
        }
        DensityMatrix::from_trusted(&m)
    }

    pub fn data_state(&self) -> DensityMatrix<T> {
        let d = self.layout.dim_data;
        let mut m = CMatrix::<T>::zeros(d, d);
        for r in &self.records {
            m += (&r.state * r.state.adjoint()) * Complex::new(r.weight, T::zero());
        }
        DensityMatrix::from_trusted(&m)
    }
}

/// Purification of a data state on reference (x) data.
#[derive(Debug, Clone)]
pub struct PurifiedState<T: Real> {
    /// Amplitudes on `R (x) X`, with `R` the leading factor.
    pub amplitudes: CVector<T>,
    /// Eigenvalues of the purified state, ascending.
    pub source_spectrum: Vec<T>,
}

impl<T: Real> PurifiedState<T> {
    pub fn density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_trusted(&(&self.amplitudes * self.amplitudes.adjoint()))
    }

    pub fn dim_data(&self) -> usize {
        self.source_spectrum.len()
    }
}

/// `|psi> = sum_i sqrt(lambda_i) |e_i>_R |e_i>_X` over the eigenbasis of `rho`.
pub fn purify<T: Real>(rho: &DensityMatrix<T>) -> PurifiedState<T> {
    let s = rho.eigen();
    let d = rho.dim();
    let mut amp = CVector::<T>::zeros(d * d);
    for (i, &lam) in s.values.iter().enumerate() {
        if lam <= T::zero() {
            continue;
        }
        let w = Complex::new(lam.sqrt(), T::zero());
        let e = s.vectors.column(i);
        for a in 0..d {
            for b in 0..d {
                amp[a * d + b] += w * e[a] * e[b];
            }
        }
    }
    PurifiedState {
        amplitudes: amp,
        source_spectrum: s.values,
    }
}
