//! Exact entropies, relative entropies and the information-bottleneck
//! objective. All logarithms are natural.

use num_complex::Complex;

use crate::channel::ParameterizedChannel;
use crate::error::{QibError, Result};
use crate::linalg::{kron, CMatrix, DensityMatrix, HermitianOperator, Spectrum};
use crate::registers::{purify, LabeledEnsemble};
use crate::scalar::Real;

pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    let thr = rho.support_threshold();
    rho.eigen()
        .values
        .into_iter()
        .filter(|&l| l > thr)
        .fold(T::zero(), |acc, l| acc - l * l.ln())
}

/// Largest weight `<v|rho|v>` over kernel vectors `v` of `sigma`.
fn kernel_weight<T: Real>(rho: &CMatrix<T>, sigma: &Spectrum<T>, threshold: T) -> T {
    let mut worst = T::zero();
    for (j, &l) in sigma.values.iter().enumerate() {
        if l <= threshold {
            let v = sigma.vectors.column(j);
            let w = (v.adjoint() * rho * v)[(0, 0)].re;
            worst = worst.max(w);
        }
    }
    worst
}

/// Fails with [`QibError::SupportViolation`] unless `supp(rho)` lies in `supp(sigma)`.
pub fn check_support<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(QibError::dims("state", sigma.dim(), rho.dim()));
    }
    let s = sigma.eigen();
    let w = kernel_weight(rho.matrix(), &s, sigma.support_threshold());
    if w > T::support_violation_tol() {
        return Err(QibError::SupportViolation(format!(
            "state places weight {:e} on the kernel of the reference",
            w.to_f64()
        )));
    }
    Ok(())
}

/// `Tr(rho log sigma)` with the logarithm restricted to the support of `sigma`.
pub fn trace_log<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    check_support(rho, sigma)?;
    let s = sigma.eigen();
    let thr = sigma.support_threshold();
    let mut acc = T::zero();
    for (j, &l) in s.values.iter().enumerate() {
        if l > thr {
            let v = s.vectors.column(j);
            acc += (v.adjoint() * rho.matrix() * v)[(0, 0)].re * l.ln();
        }
    }
    Ok(acc)
}

/// `S(rho || sigma) = Tr rho log rho - Tr rho log sigma`.
pub fn relative_entropy<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    let cross = trace_log(rho, sigma)?;
    Ok(-von_neumann_entropy(rho) - cross)
}

/// `I(A;B) = S(A) + S(B) - S(AB)` for a bipartite state with factor dimensions `dims`.
pub fn mutual_information<T: Real>(rho_ab: &DensityMatrix<T>, dims: [usize; 2]) -> Result<T> {
    let a = rho_ab.partial_trace(&dims, &[true, false])?;
    let b = rho_ab.partial_trace(&dims, &[false, true])?;
    Ok(von_neumann_entropy(&a) + von_neumann_entropy(&b) - von_neumann_entropy(rho_ab))
}

/// Every state entering the objective at the current parameters.
#[derive(Debug, Clone)]
pub struct QibStates<T: Real> {
    pub rho_x: DensityMatrix<T>,
    pub rho_y: DensityMatrix<T>,
    /// Purification of `rho_x` on reference (x) data.
    pub purified: DensityMatrix<T>,
    /// Reference (x) channel output.
    pub rho_rxt: DensityMatrix<T>,
    pub rho_r: DensityMatrix<T>,
    pub rho_xt: DensityMatrix<T>,
    /// Channel output (x) label.
    pub rho_xty: DensityMatrix<T>,
    /// `rho_r (x) rho_xt`.
    pub product_rxt: DensityMatrix<T>,
    /// `rho_xt (x) rho_y`.
    pub product_xty: DensityMatrix<T>,
}

/// Parameter derivatives of the states in [`QibStates`] for one parameter.
#[derive(Debug, Clone)]
pub struct QibDerivatives<T: Real> {
    pub d_rxt: HermitianOperator<T>,
    pub d_xt: HermitianOperator<T>,
    pub d_xty: HermitianOperator<T>,
    pub d_product_rxt: HermitianOperator<T>,
    pub d_product_xty: HermitianOperator<T>,
}

/// Data-label state, channel and trade-off weight `beta`.
#[derive(Debug, Clone)]
pub struct QibInstance<T: Real> {
    data_label: DensityMatrix<T>,
    dim_data: usize,
    dim_label: usize,
    channel: ParameterizedChannel<T>,
    beta: T,
}

impl<T: Real> QibInstance<T> {
    pub fn new(
        data_label: DensityMatrix<T>,
        dim_label: usize,
        channel: ParameterizedChannel<T>,
        beta: T,
    ) -> Result<Self> {
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(QibError::Validation(format!(
                "beta {} outside [0, 1]",
                beta.to_f64()
            )));
        }
        if dim_label == 0 || data_label.dim() % dim_label != 0 {
            return Err(QibError::dims("label register", dim_label, data_label.dim()));
        }
        let dim_data = data_label.dim() / dim_label;
        if dim_data != channel.input_dim() {
            return Err(QibError::dims("channel input", channel.input_dim(), dim_data));
        }
        Ok(Self {
            data_label,
            dim_data,
            dim_label,
            channel,
            beta,
        })
    }

    pub fn from_ensemble(
        ensemble: &LabeledEnsemble<T>,
        channel: ParameterizedChannel<T>,
        beta: T,
    ) -> Result<Self> {
        Self::new(
            ensemble.data_label_state(),
            ensemble.layout().dim_label,
            channel,
            beta,
        )
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn channel(&self) -> &ParameterizedChannel<T> {
        &self.channel
    }

    pub fn params(&self) -> &[T] {
        self.channel.params()
    }

    pub fn dim_data(&self) -> usize {
        self.dim_data
    }

    pub fn dim_label(&self) -> usize {
        self.dim_label
    }

    pub fn dim_output(&self) -> usize {
        self.channel.output_dim()
    }

    pub fn data_label(&self) -> &DensityMatrix<T> {
        &self.data_label
    }

    pub fn with_parameters(&self, params: &[T]) -> Result<Self> {
        Ok(Self {
            channel: self.channel.with_parameters(params)?,
            ..self.clone()
        })
    }

    pub fn with_beta(&self, beta: T) -> Result<Self> {
        Self::new(self.data_label.clone(), self.dim_label, self.channel.clone(), beta)
    }

    pub fn states(&self) -> Result<QibStates<T>> {
        let dx = self.dim_data;
        let dy = self.dim_label;
        let dout = self.dim_output();
        let rho_x = self.data_label.partial_trace(&[dx, dy], &[true, false])?;
        let rho_y = self.data_label.partial_trace(&[dx, dy], &[false, true])?;
        let purified = purify(&rho_x).density();
        let rho_rxt =
            DensityMatrix::from_trusted(&self.channel.apply_extended(purified.matrix(), dx, 1)?);
        let rho_r = rho_rxt.partial_trace(&[dx, dout], &[true, false])?;
        let rho_xt = self.channel.apply(&rho_x)?;
        let rho_xty =
            DensityMatrix::from_trusted(&self.channel.apply_extended(self.data_label.matrix(), 1, dy)?);
        let product_rxt = rho_r.kron(&rho_xt);
        let product_xty = rho_xt.kron(&rho_y);
        Ok(QibStates {
            rho_x,
            rho_y,
            purified,
            rho_rxt,
            rho_r,
            rho_xt,
            rho_xty,
            product_rxt,
            product_xty,
        })
    }

    pub fn state_derivatives(&self, states: &QibStates<T>, k: usize) -> Result<QibDerivatives<T>> {
        let dx = self.dim_data;
        let dy = self.dim_label;
        let ch = &self.channel;
        let d_rxt = ch.derivative_extended(states.purified.matrix(), dx, 1, k)?;
        let d_xt = ch.derivative_extended(states.rho_x.matrix(), 1, 1, k)?;
        let d_xty = ch.derivative_extended(self.data_label.matrix(), 1, dy, k)?;
        let d_product_rxt = kron(states.rho_r.matrix(), &d_xt);
        let d_product_xty = kron(&d_xt, states.rho_y.matrix());
        Ok(QibDerivatives {
            d_rxt: HermitianOperator::from_hermitian_part(&d_rxt),
            d_xt: HermitianOperator::from_hermitian_part(&d_xt),
            d_xty: HermitianOperator::from_hermitian_part(&d_xty),
            d_product_rxt: HermitianOperator::from_hermitian_part(&d_product_rxt),
            d_product_xty: HermitianOperator::from_hermitian_part(&d_product_xty),
        })
    }

    /// `(I(R; X~), I(X~; Y))`.
    pub fn information(&self) -> Result<(T, T)> {
        let s = self.states()?;
        self.information_from(&s)
    }

    pub fn information_from(&self, s: &QibStates<T>) -> Result<(T, T)> {
        let i_rx = mutual_information(&s.rho_rxt, [self.dim_data, self.dim_output()])?;
        let i_xy = mutual_information(&s.rho_xty, [self.dim_output(), self.dim_label])?;
        Ok((i_rx, i_xy))
    }

    /// Fails unless both joint states are supported inside their product references.
    pub fn check_kernel_containment(&self) -> Result<()> {
        let s = self.states()?;
        check_support(&s.rho_rxt, &s.product_rxt)?;
        check_support(&s.rho_xty, &s.product_xty)
    }
}

/// `beta I(R; X~) - (1 - beta) I(X~; Y)`.
pub fn qib_objective<T: Real>(instance: &QibInstance<T>) -> Result<T> {
    let (i_rx, i_xy) = instance.information()?;
    let b = instance.beta();
    Ok(b * i_rx - (T::one() - b) * i_xy)
}

/// Central finite differences of the exact objective, optionally with one
/// Richardson extrapolation step.
pub fn qib_gradient_fd<T: Real>(instance: &QibInstance<T>, step: T, richardson: bool) -> Result<Vec<T>> {
    let central = |k: usize, h: T| -> Result<T> {
        let mut p = instance.params().to_vec();
        p[k] += h;
        let plus = qib_objective(&instance.with_parameters(&p)?)?;
        p[k] -= h + h;
        let minus = qib_objective(&instance.with_parameters(&p)?)?;
        Ok((plus - minus) / (h + h))
    };
    (0..instance.params().len())
        .map(|k| {
            let d = central(k, step)?;
            if richardson {
                let half = central(k, step / T::lit(2.0))?;
                Ok((T::lit(4.0) * half - d) / T::lit(3.0))
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// `(I(R; X~), I(X~; Y))` at the instance's parameters.
pub fn info_plane_point<T: Real>(instance: &QibInstance<T>) -> Result<(T, T)> {
    instance.information()
}

/// Analytic derivative of `Tr(a log b)` using exact divided differences of the
/// logarithm in the eigenbasis of `b`. Used as an independent reference.
pub fn trace_log_derivative_exact<T: Real>(
    a: &DensityMatrix<T>,
    da: &CMatrix<T>,
    b: &DensityMatrix<T>,
    db: &CMatrix<T>,
) -> Result<T> {
    check_support(a, b)?;
    let s = b.eigen();
    let thr = b.support_threshold();
    let at = s.to_eigenbasis(a.matrix());
    let dat = s.to_eigenbasis(da);
    let dbt = s.to_eigenbasis(db);
    let n = s.values.len();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        let li = s.values[i];
        if li > thr {
            acc += dat[(i, i)] * Complex::new(li.ln(), T::zero());
        }
        for j in 0..n {
            let lj = s.values[j];
            if li <= thr || lj <= thr {
                continue;
            }
            let dd = if (li - lj).abs() <= T::lit(1e-12) * li.max(lj) {
                T::one() / li
            } else {
                (li.ln() - lj.ln()) / (li - lj)
            };
            acc += at[(j, i)] * dbt[(i, j)] * Complex::new(dd, T::zero());
        }
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, CVector};
    use crate::random::{random_density, random_pure_state};
    use crate::registers::EnsembleRecord;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn terms(list: &[(&str, f64)]) -> Vec<(String, f64)> {
        list.iter().map(|(s, c)| (s.to_string(), *c)).collect()
    }

    #[test]
    fn entropy_of_maximally_mixed_and_pure() {
        let mm = DensityMatrix::<f64>::maximally_mixed(4);
        assert!((von_neumann_entropy(&mm) - 4f64.ln()).abs() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pure = DensityMatrix::from_pure(&random_pure_state(3, &mut rng)).unwrap();
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_of_commuting_pair() {
        let p = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let q = DensityMatrix::<f64>::maximally_mixed(2);
        let expect = 0.75 * (0.75f64 / 0.5).ln() + 0.25 * (0.25f64 / 0.5).ln();
        assert!((relative_entropy(&p, &q).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn support_violation_is_reported() {
        let p = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let q = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(relative_entropy(&p, &q), Err(QibError::SupportViolation(_))));
        assert!(relative_entropy(&q, &p).is_ok());
    }

    #[test]
    fn bell_state_mutual_information() {
        let s = 1.0 / 2f64.sqrt();
        let z = Complex64::new(0.0, 0.0);
        let v = CVector::<f64>::from_vec(vec![Complex64::new(s, 0.0), z, z, Complex64::new(s, 0.0)]);
        let bell = DensityMatrix::from_pure(&v).unwrap();
        assert!((mutual_information(&bell, [2, 2]).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-13);
    }

    fn orthogonal_ensemble() -> LabeledEnsemble<f64> {
        let mut e0 = CVector::<f64>::zeros(2);
        e0[0] = Complex64::new(1.0, 0.0);
        let mut e1 = CVector::<f64>::zeros(2);
        e1[1] = Complex64::new(1.0, 0.0);
        LabeledEnsemble::new(
            vec![
                EnsembleRecord { tag: 0, state: e0, label: 0, weight: 0.5 },
                EnsembleRecord { tag: 1, state: e1, label: 1, weight: 0.5 },
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn identity_channel_information_values() {
        let inst = QibInstance::from_ensemble(&orthogonal_ensemble(), ParameterizedChannel::identity(1).unwrap(), 0.5).unwrap();
        let (i_rx, i_xy) = inst.information().unwrap();
        assert!((i_rx - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((i_xy - 2f64.ln()).abs() < 1e-12);
        inst.check_kernel_containment().unwrap();
    }

    /// Bell pair on the ancillas, then swap the input into an ancilla and keep
    /// the qubit holding half of the Bell pair.
    fn depolarizer() -> ParameterizedChannel<f64> {
        let q = std::f64::consts::FRAC_PI_4;
        let gens = vec![
            terms(&[("XXI", 1.0)]),
            terms(&[("YYI", 1.0)]),
            terms(&[("ZZI", 1.0)]),
            terms(&[("IXY", 1.0)]),
        ];
        ParameterizedChannel::from_pauli_terms(1, 2, vec![1, 2], &gens, vec![q; 4]).unwrap()
    }

    #[test]
    fn fully_depolarizing_channel_destroys_information() {
        let ch = depolarizer();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = ch.apply(&random_density(2, 2, &mut rng)).unwrap();
        assert!(max_abs(&(out.matrix() - DensityMatrix::<f64>::maximally_mixed(2).matrix())) < 1e-12);
        let inst = QibInstance::from_ensemble(&orthogonal_ensemble(), ch, 0.5).unwrap();
        let (i_rx, i_xy) = inst.information().unwrap();
        assert!(i_rx.abs() < 1e-10 && i_xy.abs() < 1e-10);
    }

    fn random_instance(seed: u64, beta: f64) -> QibInstance<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = (0..3)
            .map(|t| EnsembleRecord {
                tag: t,
                state: random_pure_state(4, &mut rng),
                label: t % 2,
                weight: 1.0 / 3.0,
            })
            .collect();
        let ens = LabeledEnsemble::new(records, None).unwrap();
        let gens = vec![terms(&[("YI", 1.0)]), terms(&[("XY", 1.0)]), terms(&[("IY", 1.0), ("ZZ", 0.5)])];
        let params = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ch = ParameterizedChannel::from_pauli_terms(2, 0, vec![0], &gens, params).unwrap();
        QibInstance::from_ensemble(&ens, ch, beta).unwrap()
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for seed in 0..5 {
            let inst = random_instance(seed, 0.3);
            let s = inst.states().unwrap();
            let fd = qib_gradient_fd(&inst, 1e-4, true).unwrap();
            for (k, &g) in fd.iter().enumerate() {
                let d = inst.state_derivatives(&s, k).unwrap();
                let b = inst.beta();
                let ds = |a: &DensityMatrix<f64>, da: &HermitianOperator<f64>, bb: &DensityMatrix<f64>, db: &HermitianOperator<f64>| {
                    trace_log_derivative_exact(a, da.matrix(), bb, db.matrix()).unwrap()
                };
                let rel = |a: &DensityMatrix<f64>, da: &HermitianOperator<f64>, bb: &DensityMatrix<f64>, db: &HermitianOperator<f64>| {
                    ds(a, da, a, da) - ds(a, da, bb, db)
                };
                let an = b * rel(&s.rho_rxt, &d.d_rxt, &s.product_rxt, &d.d_product_rxt)
                    - (1.0 - b) * rel(&s.rho_xty, &d.d_xty, &s.product_xty, &d.d_product_xty);
                assert!((an - g).abs() < 1e-7, "seed {seed} k {k}: {an} vs {g}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn klein_inequality(seed in any::<u64>(), d in 2usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = random_density(d, d, &mut rng);
                let q = random_density(d, d, &mut rng);
                prop_assert!(relative_entropy(&p, &q).unwrap() >= -1e-10);
                prop_assert!(relative_entropy(&p, &p).unwrap().abs() < 1e-10);
            }

            #[test]
            fn mutual_information_bounds(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rho = random_density(6, 3, &mut rng);
                let i = mutual_information(&rho, [2, 3]).unwrap();
                prop_assert!(i >= -1e-10);
                prop_assert!(i <= 2.0 * 2f64.ln() + 1e-10);
                let a = rho.partial_trace(&[2, 3], &[true, false]).unwrap();
                let b = rho.partial_trace(&[2, 3], &[false, true]).unwrap();
                let as_divergence = relative_entropy(&rho, &a.kron(&b)).unwrap();
                prop_assert!((as_divergence - i).abs() < 1e-9);
            }

            #[test]
            fn data_processing_on_information(seed in 0u64..1000) {
                let inst = random_instance(seed, 0.5);
                let (i_rx, i_xy) = inst.information().unwrap();
                let s = inst.states().unwrap();
                let i_r_x = 2.0 * von_neumann_entropy(&s.rho_x);
                let i_x_y = mutual_information(inst.data_label(), [4, 2]).unwrap();
                prop_assert!(i_rx <= i_r_x + 1e-9);
                prop_assert!(i_xy <= i_x_y + 1e-9);
                prop_assert!(i_rx >= -1e-10 && i_xy >= -1e-10);
            }
        }
    }
}
