//! Parameterized quantum channels built from Pauli-generated unitaries.
//!
//! Qubit 0 is the most significant tensor factor, so the Pauli string `"XZ"`
//! places `X` on qubit 0 and `Z` on qubit 1. Ancilla qubits are appended after
//! the input qubits and start in `|0>`. The channel is
//! `rho -> Tr_discard(U (rho (x) |0..0><0..0|) U^dagger)` with
//! `U = U_1 U_2 ... U_n` and `U_k = exp(-i alpha_k H_k)`.

use num_complex::Complex;

use crate::error::{QibError, Result};
use crate::linalg::{
    commutator, identity, kron, partial_trace, trace_product, unitary_exp, CMatrix, DensityMatrix,
    HermitianOperator,
};
use crate::scalar::Real;

fn single_pauli<T: Real>(p: char) -> Result<CMatrix<T>> {
    let z = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let entries = match p {
        'I' => [one, z, z, one],
        'X' => [z, one, one, z],
        'Y' => [z, -i, i, z],
        'Z' => [one, z, z, -one],
        other => {
            return Err(QibError::UnsupportedBasis(format!(
                "unknown Pauli symbol {other:?}"
            )))
        }
    };
    Ok(CMatrix::<T>::from_row_slice(2, 2, &entries))
}

/// Matrix of a Pauli string such as `"XIZ"`.
pub fn pauli_matrix<T: Real>(label: &str) -> Result<CMatrix<T>> {
    if label.is_empty() {
        return Err(QibError::UnsupportedBasis("empty Pauli string".into()));
    }
    let mut m = identity::<T>(1);
    for ch in label.chars() {
        m = kron(&m, &single_pauli::<T>(ch)?);
    }
    Ok(m)
}

/// `sum_j coeff_j P_j` for Pauli strings on `n_qubits` qubits.
pub fn pauli_sum<T: Real>(terms: &[(String, T)], n_qubits: usize) -> Result<HermitianOperator<T>> {
    let d = 1usize << n_qubits;
    let mut m = CMatrix::<T>::zeros(d, d);
    for (label, coeff) in terms {
        if label.chars().count() != n_qubits {
            return Err(QibError::dims(
                format!("Pauli string {label}"),
                n_qubits,
                label.chars().count(),
            ));
        }
        m += pauli_matrix::<T>(label)? * Complex::new(*coeff, T::zero());
    }
    HermitianOperator::new(m)
}

fn pauli_label(mut index: usize, n_qubits: usize) -> String {
    let mut chars = vec!['I'; n_qubits];
    for q in (0..n_qubits).rev() {
        chars[q] = ['I', 'X', 'Y', 'Z'][index % 4];
        index /= 4;
    }
    chars.into_iter().collect()
}

fn qubit_count(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(QibError::UnsupportedBasis(format!(
            "dimension {d} is not a power of two"
        )));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Expansion of a Hermitian operator in the orthonormal Pauli basis
/// `V_j = P_j / sqrt(d)`, so `H = sum_j b_j V_j` and `b_j = Tr(V_j H)`.
#[derive(Debug, Clone)]
pub struct GeneratorExpansion<T: Real> {
    pub n_qubits: usize,
    pub labels: Vec<String>,
    pub coefficients: Vec<T>,
}

impl<T: Real> GeneratorExpansion<T> {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn one_norm(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |a, &b| a + b.abs())
    }

    /// `max_j |Tr(P_j H)|` with unnormalized Pauli strings.
    pub fn max_unitary_coefficient(&self) -> T {
        let s = T::lit(self.dim() as f64).sqrt();
        self.coefficients
            .iter()
            .fold(T::zero(), |a, &b| a.max(b.abs() * s))
    }

    /// Terms `(w_j, P_j)` with `H = sum_j w_j P_j`, dropping zero weights.
    pub fn unitary_terms(&self) -> Result<Vec<(T, CMatrix<T>)>> {
        let s = T::lit(self.dim() as f64).sqrt();
        let mut out = Vec::new();
        for (label, &b) in self.labels.iter().zip(&self.coefficients) {
            if b != T::zero() {
                out.push((b / s, pauli_matrix::<T>(label)?));
            }
        }
        Ok(out)
    }

    pub fn reconstruct(&self) -> Result<CMatrix<T>> {
        let d = self.dim();
        let mut m = CMatrix::<T>::zeros(d, d);
        for (w, p) in self.unitary_terms()? {
            m += p * Complex::new(w, T::zero());
        }
        Ok(m)
    }
}

pub fn pauli_expand<T: Real>(h: &HermitianOperator<T>) -> Result<GeneratorExpansion<T>> {
    let n = qubit_count(h.dim())?;
    let s = T::lit(h.dim() as f64).sqrt();
    let count = 1usize << (2 * n);
    let mut labels = Vec::with_capacity(count);
    let mut coefficients = Vec::with_capacity(count);
    for j in 0..count {
        let label = pauli_label(j, n);
        let p = pauli_matrix::<T>(&label)?;
        coefficients.push(trace_product(&p, h.matrix()).re / s);
        labels.push(label);
    }
    Ok(GeneratorExpansion {
        n_qubits: n,
        labels,
        coefficients,
    })
}

/// Channel `Tr_discard(U (rho (x) |0><0|_anc) U^dagger)`.
#[derive(Debug, Clone)]
pub struct ParameterizedChannel<T: Real> {
    input_qubits: usize,
    ancilla_qubits: usize,
    discard: Vec<usize>,
    generators: Vec<HermitianOperator<T>>,
    params: Vec<T>,
    factors: Vec<CMatrix<T>>,
}

impl<T: Real> ParameterizedChannel<T> {
    pub fn new(
        input_qubits: usize,
        ancilla_qubits: usize,
        discard: Vec<usize>,
        generators: Vec<HermitianOperator<T>>,
        params: Vec<T>,
    ) -> Result<Self> {
        let total = input_qubits + ancilla_qubits;
        if input_qubits == 0 {
            return Err(QibError::Validation("channel needs at least one input qubit".into()));
        }
        if total > 12 {
            return Err(QibError::Capacity(format!("{total} qubits exceed the dense limit")));
        }
        let mut sorted = discard.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != discard.len() {
            return Err(QibError::Validation("discard list has duplicates".into()));
        }
        if let Some(&q) = sorted.iter().find(|&&q| q >= total) {
            return Err(QibError::IndexOutOfRange { index: q, count: total });
        }
        if sorted.len() == total {
            return Err(QibError::Validation("channel discards every qubit".into()));
        }
        let d = 1usize << total;
        for (k, g) in generators.iter().enumerate() {
            if g.dim() != d {
                return Err(QibError::dims(format!("generator {k}"), d, g.dim()));
            }
        }
        if params.len() != generators.len() {
            return Err(QibError::dims("parameters", generators.len(), params.len()));
        }
        let factors = generators
            .iter()
            .zip(&params)
            .map(|(h, &a)| unitary_exp(h, a))
            .collect();
        Ok(Self {
            input_qubits,
            ancilla_qubits,
            discard: sorted,
            generators,
            params,
            factors,
        })
    }

    /// Builds generators from Pauli-string sums.
    pub fn from_pauli_terms(
        input_qubits: usize,
        ancilla_qubits: usize,
        discard: Vec<usize>,
        generators: &[Vec<(String, T)>],
        params: Vec<T>,
    ) -> Result<Self> {
        let n = input_qubits + ancilla_qubits;
        let gens = generators
            .iter()
            .map(|terms| pauli_sum(terms, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(input_qubits, ancilla_qubits, discard, gens, params)
    }

    /// Identity channel on `n` qubits.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, 0, vec![], vec![], vec![])
    }

    pub fn with_parameters(&self, params: &[T]) -> Result<Self> {
        Self::new(
            self.input_qubits,
            self.ancilla_qubits,
            self.discard.clone(),
            self.generators.clone(),
            params.to_vec(),
        )
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn generators(&self) -> &[HermitianOperator<T>] {
        &self.generators
    }

    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn discard(&self) -> &[usize] {
        &self.discard
    }

    pub fn total_qubits(&self) -> usize {
        self.input_qubits + self.ancilla_qubits
    }

    pub fn input_dim(&self) -> usize {
        1 << self.input_qubits
    }

    pub fn output_dim(&self) -> usize {
        1 << (self.total_qubits() - self.discard.len())
    }

    /// `U = U_1 U_2 ... U_n`; `U_n` acts on the state first.
    pub fn unitary(&self) -> CMatrix<T> {
        let d = 1usize << self.total_qubits();
        self.factors.iter().fold(identity::<T>(d), |acc, f| acc * f)
    }

    /// `(U_1 ... U_{k-1}) H_k (U_1 ... U_{k-1})^dagger` (zero-based `k`), so that
    /// `dU/d alpha_k = -i H~_k U`.
    pub fn effective_generator(&self, k: usize) -> Result<HermitianOperator<T>> {
        if k >= self.generators.len() {
            return Err(QibError::IndexOutOfRange {
                index: k,
                count: self.generators.len(),
            });
        }
        let d = 1usize << self.total_qubits();
        let prefix = self.factors[..k]
            .iter()
            .fold(identity::<T>(d), |acc, f| acc * f);
        let m = &prefix * self.generators[k].matrix() * prefix.adjoint();
        Ok(HermitianOperator::from_hermitian_part(&m))
    }

    /// `U E` where `E` appends the ancillas in `|0>`.
    pub fn isometry(&self) -> CMatrix<T> {
        let u = self.unitary();
        let stride = 1usize << self.ancilla_qubits;
        CMatrix::<T>::from_fn(u.nrows(), self.input_dim(), |r, c| u[(r, c * stride)])
    }

    fn trace_dims(&self, left: usize, right: usize) -> (Vec<usize>, Vec<bool>) {
        let mut dims = vec![left];
        let mut keep = vec![true];
        for q in 0..self.total_qubits() {
            dims.push(2);
            keep.push(self.discard.binary_search(&q).is_err());
        }
        dims.push(right);
        keep.push(true);
        (dims, keep)
    }

    fn check_extended(&self, m: &CMatrix<T>, left: usize, right: usize) -> Result<()> {
        let expected = left * self.input_dim() * right;
        if m.nrows() != expected || m.ncols() != expected {
            return Err(QibError::dims("channel input", expected, m.nrows()));
        }
        Ok(())
    }

    /// `(1_left (x) Phi (x) 1_right)(m)` for any square `m`.
    pub fn apply_extended(&self, m: &CMatrix<T>, left: usize, right: usize) -> Result<CMatrix<T>> {
        self.check_extended(m, left, right)?;
        let w = kron(&kron(&identity::<T>(left), &self.isometry()), &identity::<T>(right));
        let big = &w * m * w.adjoint();
        let (dims, keep) = self.trace_dims(left, right);
        partial_trace(&big, &dims, &keep)
    }

    /// Derivative of [`Self::apply_extended`] with respect to `alpha_k`.
    pub fn derivative_extended(
        &self,
        m: &CMatrix<T>,
        left: usize,
        right: usize,
        k: usize,
    ) -> Result<CMatrix<T>> {
        self.check_extended(m, left, right)?;
        let h = self.effective_generator(k)?;
        let w = kron(&kron(&identity::<T>(left), &self.isometry()), &identity::<T>(right));
        let hb = kron(&kron(&identity::<T>(left), h.matrix()), &identity::<T>(right));
        let big = &w * m * w.adjoint();
        let minus_i = Complex::new(T::zero(), -T::one());
        let d = commutator(&hb, &big) * minus_i;
        let (dims, keep) = self.trace_dims(left, right);
        partial_trace(&d, &dims, &keep)
    }

    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        Ok(DensityMatrix::from_trusted(&self.apply_extended(rho.matrix(), 1, 1)?))
    }

    /// `d Phi(rho) / d alpha_k = Tr_discard(-i [H~_k, U rho U^dagger])`.
    pub fn channel_state_derivative(
        &self,
        rho: &DensityMatrix<T>,
        k: usize,
    ) -> Result<HermitianOperator<T>> {
        let d = self.derivative_extended(rho.matrix(), 1, 1, k)?;
        Ok(HermitianOperator::from_hermitian_part(&d))
    }

    /// Kraus operators `(<i|_discard (x) 1) U E`.
    pub fn kraus_operators(&self) -> Vec<CMatrix<T>> {
        let w = self.isometry();
        let n = self.total_qubits();
        let kept: Vec<usize> = (0..n).filter(|q| self.discard.binary_search(q).is_err()).collect();
        let out_dim = self.output_dim();
        let env_count = 1usize << self.discard.len();
        let mut ops = Vec::with_capacity(env_count);
        for e in 0..env_count {
            let mut k = CMatrix::<T>::zeros(out_dim, self.input_dim());
            for o in 0..out_dim {
                let mut row = 0usize;
                for (pos, &q) in kept.iter().enumerate() {
                    let bit = (o >> (kept.len() - 1 - pos)) & 1;
                    row |= bit << (n - 1 - q);
                }
                for (pos, &q) in self.discard.iter().enumerate() {
                    let bit = (e >> (self.discard.len() - 1 - pos)) & 1;
                    row |= bit << (n - 1 - q);
                }
                for col in 0..self.input_dim() {
                    k[(o, col)] = w[(row, col)];
                }
            }
            ops.push(k);
        }
        ops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, max_abs};
    use crate::random::{random_density, random_hermitian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn terms(list: &[(&str, f64)]) -> Vec<(String, f64)> {
        list.iter().map(|(s, c)| (s.to_string(), *c)).collect()
    }

    fn toy(seed: u64) -> ParameterizedChannel<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = vec![
            terms(&[("YI", 1.0)]),
            terms(&[("XY", 1.0), ("ZI", 0.3)]),
            terms(&[("IY", 1.0)]),
        ];
        let params = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        ParameterizedChannel::from_pauli_terms(2, 0, vec![0], &gens, params).unwrap()
    }

    #[test]
    fn pauli_string_qubit_order() {
        let xz = pauli_matrix::<f64>("XZ").unwrap();
        let x = pauli_matrix::<f64>("X").unwrap();
        let z = pauli_matrix::<f64>("Z").unwrap();
        assert!(max_abs(&(xz - kron(&x, &z))) == 0.0);
        assert!(pauli_matrix::<f64>("XQ").is_err());
    }

    #[test]
    fn unitary_is_unitary_and_first_effective_generator_is_raw() {
        let ch = toy(1);
        assert!(is_unitary(&ch.unitary(), 1e-12));
        let h0 = ch.effective_generator(0).unwrap();
        assert!(max_abs(&(h0.matrix() - ch.generators()[0].matrix())) < 1e-14);
        let h1 = ch.effective_generator(1).unwrap();
        let u1 = unitary_exp(&ch.generators()[0], ch.params()[0]);
        let expect = &u1 * ch.generators()[1].matrix() * u1.adjoint();
        assert!(max_abs(&(h1.matrix() - expect)) < 1e-13);
        assert!(ch.effective_generator(3).is_err());
    }

    #[test]
    fn kraus_form_matches_partial_trace_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gens = vec![terms(&[("XYZ", 0.7), ("IZX", -0.4)]), terms(&[("YIY", 1.0)])];
        let ch = ParameterizedChannel::from_pauli_terms(2, 1, vec![0, 2], &gens, vec![0.3, -1.1]).unwrap();
        let rho = random_density(4, 4, &mut rng);
        let out = ch.apply(&rho).unwrap();
        let mut kraus_out = CMatrix::<f64>::zeros(2, 2);
        let mut completeness = CMatrix::<f64>::zeros(4, 4);
        for k in ch.kraus_operators() {
            kraus_out += &k * rho.matrix() * k.adjoint();
            completeness += k.adjoint() * &k;
        }
        assert!(max_abs(&(kraus_out - out.matrix())) < 1e-13);
        assert!(max_abs(&(completeness - identity::<f64>(4))) < 1e-13);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = toy(2);
        let rho = random_density(4, 4, &mut rng);
        let h = 1e-5;
        for k in 0..ch.param_count() {
            let mut p = ch.params().to_vec();
            p[k] += h;
            let plus = ch.with_parameters(&p).unwrap().apply(&rho).unwrap();
            p[k] -= 2.0 * h;
            let minus = ch.with_parameters(&p).unwrap().apply(&rho).unwrap();
            let fd = (plus.matrix() - minus.matrix()) / num_complex::Complex64::new(2.0 * h, 0.0);
            let an = ch.channel_state_derivative(&rho, k).unwrap();
            assert!(max_abs(&(fd - an.matrix())) < 1e-8, "parameter {k}");
        }
    }

    #[test]
    fn parameter_shift_rule_for_pauli_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gens = vec![terms(&[("XY", 1.0)]), terms(&[("ZX", 1.0)]), terms(&[("YY", 1.0)])];
        let ch = ParameterizedChannel::from_pauli_terms(2, 0, vec![1], &gens, vec![0.4, -0.2, 1.3]).unwrap();
        let rho = random_density(4, 2, &mut rng);
        let shift = std::f64::consts::FRAC_PI_4;
        for k in 0..3 {
            let mut p = ch.params().to_vec();
            p[k] += shift;
            let plus = ch.with_parameters(&p).unwrap().apply(&rho).unwrap();
            p[k] -= 2.0 * shift;
            let minus = ch.with_parameters(&p).unwrap().apply(&rho).unwrap();
            let an = ch.channel_state_derivative(&rho, k).unwrap();
            assert!(max_abs(&(plus.matrix() - minus.matrix() - an.matrix())) < 1e-12);
        }
    }

    #[test]
    fn extended_application_acts_locally() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ch = toy(3);
        let a = random_density(3, 3, &mut rng);
        let rho = random_density(4, 4, &mut rng);
        let joint = a.kron(&rho);
        let out = ch.apply_extended(joint.matrix(), 3, 1).unwrap();
        let expect = kron(a.matrix(), ch.apply(&rho).unwrap().matrix());
        assert!(max_abs(&(out - expect)) < 1e-13);
    }

    #[test]
    fn pauli_expansion_round_trip_and_coefficient_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut rng);
            let e = pauli_expand(&h).unwrap();
            assert!(max_abs(&(e.reconstruct().unwrap() - h.matrix())) < 1e-12);
            assert!(e.max_unitary_coefficient() <= 4.0 * h.operator_norm() + 1e-12);
            let frob2: f64 = e.coefficients.iter().map(|b| b * b).sum();
            let direct = trace_product(h.matrix(), h.matrix()).re;
            assert!((frob2 - direct).abs() < 1e-10);
        }
        let odd = random_hermitian(3, &mut rng);
        assert!(matches!(pauli_expand(&odd), Err(QibError::UnsupportedBasis(_))));
    }

    #[test]
    fn validation_errors() {
        let g = vec![terms(&[("XX", 1.0)])];
        assert!(ParameterizedChannel::from_pauli_terms(2, 0, vec![2], &g, vec![0.1]).is_err());
        assert!(ParameterizedChannel::from_pauli_terms(2, 0, vec![0], &g, vec![]).is_err());
        assert!(ParameterizedChannel::from_pauli_terms(2, 0, vec![0, 1], &g, vec![0.1]).is_err());
        let bad = vec![terms(&[("XXX", 1.0)])];
        assert!(ParameterizedChannel::from_pauli_terms(2, 0, vec![0], &bad, vec![0.1]).is_err());
    }
}
