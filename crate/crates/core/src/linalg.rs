//! Dense complex linear algebra: Hermitian operators, density matrices,
//! partial traces and spectral calculus.
//!
//! Eigendecompositions are delegated to `nalgebra`; everything here is
//! generic over the real scalar type.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{QibError, Result};
use crate::scalar::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Largest entrywise modulus of `m - m^dagger`.
pub fn hermitian_residual<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Returns `(m + m^dagger) / 2`.
pub fn symmetrize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let half = c(T::lit(0.5));
    (m + m.adjoint()) * half
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> Complex<T> {
    m.trace()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn anticommutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b + b * a
}

/// Kronecker product with `a` as the leading (most significant) factor.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn identity<T: Real>(d: usize) -> CMatrix<T> {
    CMatrix::<T>::identity(d, d)
}

/// Largest entrywise modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| {
        let v = z.modulus();
        if v > acc {
            v
        } else {
            acc
        }
    })
}

pub fn is_unitary<T: Real>(u: &CMatrix<T>, tol: T) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let prod = u.adjoint() * u;
    max_abs(&(prod - identity::<T>(u.nrows()))) <= tol
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    /// `V diag(f(lambda)) V^dagger` for a complex-valued `f`.
    pub fn map_complex(&self, f: impl Fn(T) -> Complex<T>) -> CMatrix<T> {
        let weights: Vec<Complex<T>> = self.values.iter().map(|&lam| f(lam)).collect();
        self.rebuild(&weights)
    }

    /// `V diag(weights) V^dagger`.
    pub fn rebuild(&self, weights: &[Complex<T>]) -> CMatrix<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &w) in weights.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn map_real(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        self.map_complex(|x| c(f(x)))
    }

    /// Expresses `m` in this eigenbasis: `V^dagger m V`.
    pub fn to_eigenbasis(&self, m: &CMatrix<T>) -> CMatrix<T> {
        self.vectors.adjoint() * m * &self.vectors
    }

    pub fn from_eigenbasis(&self, m: &CMatrix<T>) -> CMatrix<T> {
        &self.vectors * m * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition. The input is assumed Hermitian.
pub fn eigh<T: Real>(m: &CMatrix<T>) -> Spectrum<T> {
    let n = m.nrows();
    if n == 0 {
        return Spectrum {
            values: vec![],
            vectors: CMatrix::<T>::zeros(0, 0),
        };
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::<T>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Spectrum { values, vectors }
}

/// A validated Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianOperator<T: Real> {
    m: CMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Symmetrizes inputs whose Hermiticity residual is below
    /// [`Real::hermitian_tol`] and rejects the rest.
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QibError::dims("columns", m.nrows(), m.ncols()));
        }
        let residual = hermitian_residual(&m);
        if residual > T::hermitian_tol() {
            return Err(QibError::NotHermitian {
                residual: residual.to_f64(),
            });
        }
        Ok(Self { m: symmetrize(&m) })
    }

    /// For matrices Hermitian by construction; only symmetrizes.
    pub(crate) fn from_hermitian_part(m: &CMatrix<T>) -> Self {
        Self { m: symmetrize(m) }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        eigh(&self.m)
    }

    /// Spectral norm `max |lambda|`.
    pub fn operator_norm(&self) -> T {
        self.spectrum()
            .values
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Schatten-1 norm `sum |lambda|`.
    pub fn trace_norm(&self) -> T {
        self.spectrum()
            .values
            .iter()
            .fold(T::zero(), |acc, &v| acc + v.abs())
    }
}

/// Spectral summary of a density matrix.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralProfile<T: Real + Serialize> {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<T>,
    /// Smallest eigenvalue above the support threshold.
    pub min_support_eigenvalue: T,
    pub rank: usize,
}

/// Positive semidefinite, unit-trace, Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix<T: Real> {
    m: CMatrix<T>,
    support_threshold: T,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        let h = HermitianOperator::new(m)
            .map_err(|e| QibError::InvalidDensity(e.to_string()))?;
        let m = h.into_matrix();
        let tr = m.trace();
        if (tr.re - T::one()).abs() > T::trace_tol() || tr.im.abs() > T::trace_tol() {
            return Err(QibError::InvalidDensity(format!(
                "trace {} differs from one",
                tr.re.to_f64()
            )));
        }
        let spec = eigh(&m);
        if let Some(&lo) = spec.values.first() {
            if lo < -T::psd_tol() {
                return Err(QibError::InvalidDensity(format!(
                    "negative eigenvalue {:e}",
                    lo.to_f64()
                )));
            }
        }
        Ok(Self {
            m,
            support_threshold: T::support_threshold(),
        })
    }

    /// Wraps a matrix that is a density matrix by construction (for example the
    /// output of a channel). Only symmetrizes.
    pub(crate) fn from_trusted(m: &CMatrix<T>) -> Self {
        Self {
            m: symmetrize(m),
            support_threshold: T::support_threshold(),
        }
    }

    /// `|v><v|` for a unit vector `v`.
    pub fn from_pure(v: &CVector<T>) -> Result<Self> {
        let norm = v.norm();
        if (norm - T::one()).abs() > T::trace_tol() {
            return Err(QibError::InvalidDensity(format!(
                "state vector has norm {}",
                norm.to_f64()
            )));
        }
        Ok(Self::from_trusted(&(v * v.adjoint())))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let w = T::one() / T::lit(d as f64);
        Self::from_trusted(&(identity::<T>(d) * c(w)))
    }

    pub fn from_diagonal(p: &[T]) -> Result<Self> {
        let v: Vec<Complex<T>> = p.iter().map(|&x| c(x)).collect();
        Self::new(CMatrix::<T>::from_diagonal(&CVector::<T>::from_vec(v)))
    }

    pub fn with_support_threshold(mut self, threshold: T) -> Self {
        self.support_threshold = threshold;
        self
    }

    pub fn support_threshold(&self) -> T {
        self.support_threshold
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn eigen(&self) -> Spectrum<T> {
        eigh(&self.m)
    }

    pub fn as_hermitian(&self) -> HermitianOperator<T> {
        HermitianOperator { m: self.m.clone() }
    }

    pub fn spectrum(&self) -> SpectralProfile<T>
    where
        T: Serialize,
    {
        let mut values = self.eigen().values;
        values.reverse();
        let support: Vec<T> = values
            .iter()
            .copied()
            .filter(|&v| v > self.support_threshold)
            .collect();
        SpectralProfile {
            min_support_eigenvalue: support.last().copied().unwrap_or(T::zero()),
            rank: support.len(),
            eigenvalues: values,
        }
    }

    /// Smallest eigenvalue above the support threshold.
    pub fn min_support_eigenvalue(&self) -> T {
        self.eigen()
            .values
            .into_iter()
            .find(|&v| v > self.support_threshold)
            .unwrap_or(T::zero())
    }

    pub fn purity(&self) -> T {
        trace_product(&self.m, &self.m).re
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_trusted(&kron(&self.m, &other.m))
    }

    /// Partial trace over every subsystem whose `keep` flag is false.
    pub fn partial_trace(&self, dims: &[usize], keep: &[bool]) -> Result<Self> {
        Ok(Self::from_trusted(&partial_trace(&self.m, dims, keep)?))
    }
}

/// Partial trace of an arbitrary square matrix on a tensor product space.
/// Subsystem 0 is the most significant factor.
pub fn partial_trace<T: Real>(m: &CMatrix<T>, dims: &[usize], keep: &[bool]) -> Result<CMatrix<T>> {
    if dims.len() != keep.len() {
        return Err(QibError::dims("keep mask", dims.len(), keep.len()));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(QibError::Validation("subsystem of dimension zero".into()));
    }
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(QibError::dims("rows", total, m.nrows()));
    }
    let kept_dim: usize = dims
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(&d, _)| d)
        .product();
    let traced_dim = total / kept_dim;

    // Split every full index into (kept index, traced index).
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for full in 0..total {
        let mut rem = full;
        let mut kept = 0usize;
        let mut traced = 0usize;
        let mut kept_stride = 1usize;
        let mut traced_stride = 1usize;
        for (&d, &k) in dims.iter().zip(keep).rev() {
            let digit = rem % d;
            rem /= d;
            if k {
                kept += digit * kept_stride;
                kept_stride *= d;
            } else {
                traced += digit * traced_stride;
                traced_stride *= d;
            }
        }
        groups[traced].push((full, kept));
    }

    let mut out = CMatrix::<T>::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(r, kr) in group {
            for &(col, kc) in group {
                out[(kr, kc)] += m[(r, col)];
            }
        }
    }
    Ok(out)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
pub fn spectral_decompose<T: Real>(h: &HermitianOperator<T>) -> (Vec<T>, CMatrix<T>) {
    let s = h.spectrum();
    (s.values, s.vectors)
}

/// `f(H)` by spectral mapping. Eigenvalues with `|lambda| <= threshold` are
/// treated as kernel and mapped to zero.
pub fn apply_matrix_function<T: Real>(
    h: &HermitianOperator<T>,
    f: impl Fn(T) -> T,
    threshold: T,
) -> Result<HermitianOperator<T>> {
    let s = h.spectrum();
    let mut mapped = Vec::with_capacity(s.values.len());
    for &lam in &s.values {
        if lam.abs() <= threshold {
            mapped.push(T::zero());
            continue;
        }
        let v = f(lam);
        if !v.is_finite() {
            return Err(QibError::Domain(format!(
                "function undefined at eigenvalue {:e}",
                lam.to_f64()
            )));
        }
        mapped.push(v);
    }
    let weights: Vec<Complex<T>> = mapped.into_iter().map(c).collect();
    let m = s.rebuild(&weights);
    Ok(HermitianOperator::from_hermitian_part(&m))
}

/// `exp(-i theta H)`.
pub fn unitary_exp<T: Real>(h: &HermitianOperator<T>, theta: T) -> CMatrix<T> {
    h.spectrum().map_complex(|lam| {
        let phase = -theta * lam;
        Complex::new(phase.cos(), phase.sin())
    })
}
