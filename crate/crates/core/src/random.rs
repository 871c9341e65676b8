//! Random states and operators for experiments and tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, CVector, DensityMatrix, HermitianOperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<f64> {
    CMatrix::<f64>::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector<f64> {
    let v = CVector::<f64>::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Induced-measure random state of the given rank.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix<f64> {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / Complex64::new(tr, 0.0)).expect("Ginibre product is a state")
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix<f64> {
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianOperator<f64> {
    let g = ginibre(d, d, rng);
    HermitianOperator::new((&g + g.adjoint()) * Complex64::new(0.5, 0.0)).expect("symmetric by construction")
}

/// Random state with the prescribed eigenvalues in a Haar-random basis.
pub fn random_density_with_spectrum<R: Rng + ?Sized>(spectrum: &[f64], rng: &mut R) -> DensityMatrix<f64> {
    let d = spectrum.len();
    let u = random_unitary(d, rng);
    let diag = CMatrix::<f64>::from_diagonal(&CVector::<f64>::from_iterator(
        d,
        spectrum.iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    DensityMatrix::new(&u * diag * u.adjoint()).expect("valid spectrum")
}

/// Eigenvalues drawn uniformly in `[lo, hi]` and rescaled to unit sum. The
/// caller is responsible for choosing a range compatible with normalization;
/// ranges that admit no normalized spectrum panic.
pub fn random_spectrum_in<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    let n = d as f64;
    assert!(
        n * lo < 1.0 && n * hi > 1.0,
        "no normalized spectrum of size {d} lies strictly inside [{lo}, {hi}]"
    );
    loop {
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(lo..=hi)).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / s).collect();
        if p.iter().all(|&x| x >= lo && x <= hi) {
            return p;
        }
    }
}
