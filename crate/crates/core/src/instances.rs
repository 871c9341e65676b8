//! Ready-made ensembles, channels and instances used by experiments and tests.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ParameterizedChannel;
use crate::entropy::QibInstance;
use crate::error::Result;
use crate::linalg::CVector;
use crate::random::random_pure_state;
use crate::registers::{EnsembleRecord, LabeledEnsemble};

fn terms(list: &[(&str, f64)]) -> Vec<(String, f64)> {
    list.iter().map(|(s, c)| (s.to_string(), *c)).collect()
}

fn real_state(amps: &[f64]) -> CVector<f64> {
    CVector::<f64>::from_iterator(amps.len(), amps.iter().map(|&a| Complex64::new(a, 0.0)))
}

/// Two equally weighted two-qubit states with overlap 0.6 and labels 0 / 1.
pub fn toy_ensemble() -> LabeledEnsemble<f64> {
    LabeledEnsemble::new(
        vec![
            EnsembleRecord { tag: 0, state: real_state(&[1.0, 0.0, 0.0, 0.0]), label: 0, weight: 0.5 },
            EnsembleRecord { tag: 1, state: real_state(&[0.6, 0.0, 0.0, 0.8]), label: 1, weight: 0.5 },
        ],
        Some(2),
    )
    .expect("valid toy ensemble")
}

/// Two-qubit unitary followed by discarding qubit 0.
pub fn toy_channel(params: &[f64]) -> Result<ParameterizedChannel<f64>> {
    let gens = vec![
        terms(&[("YI", 1.0)]),
        terms(&[("IY", 1.0)]),
        terms(&[("ZX", 1.0)]),
        terms(&[("XZ", 1.0)]),
    ];
    ParameterizedChannel::from_pauli_terms(2, 0, vec![0], &gens, params.to_vec())
}

pub fn toy_instance(beta: f64, params: &[f64]) -> Result<QibInstance<f64>> {
    QibInstance::from_ensemble(&toy_ensemble(), toy_channel(params)?, beta)
}

/// `n` parameters drawn uniformly from `[-pi, pi]`.
pub fn random_parameters(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Uniform initial parameters for the toy channel.
pub fn toy_initial_params(seed: u64) -> Vec<f64> {
    random_parameters(4, seed)
}

/// One data qubit and one ancilla; the ancilla is discarded.
fn one_qubit_channel(params: Vec<f64>) -> Result<ParameterizedChannel<f64>> {
    let gens = vec![
        terms(&[("XY", 1.0), ("ZI", 0.4)]),
        terms(&[("YX", 1.0)]),
        terms(&[("ZY", 0.8), ("IX", 0.5)]),
    ];
    ParameterizedChannel::from_pauli_terms(1, 1, vec![1], &gens, params)
}

/// Smallest support eigenvalue over the four reference states.
pub fn window_floor(instance: &QibInstance<f64>) -> Result<f64> {
    let s = instance.states()?;
    Ok([&s.rho_rxt, &s.product_rxt, &s.rho_xty, &s.product_xty]
        .iter()
        .map(|r| r.min_support_eigenvalue())
        .fold(f64::INFINITY, f64::min))
}

/// Random one-qubit instance with three parameters, resampled until every
/// reference state has support eigenvalues of at least `floor`.
pub fn random_one_qubit_instance(seed: u64, beta: f64, floor: f64) -> Result<QibInstance<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        // Nearly orthogonal pair keeps the data spectrum inside [0.35, 0.65].
        let theta = rng.random_range(0.0..2.0 * PI);
        let a = random_pure_state(2, &mut rng);
        let perp = CVector::<f64>::from_vec(vec![-a[1].conj(), a[0].conj()]);
        let overlap = rng.random_range(0.0..0.3f64);
        let b = &a * Complex64::new(overlap, 0.0)
            + perp * Complex64::from_polar((1.0 - overlap * overlap).sqrt(), theta);
        let ens = LabeledEnsemble::new(
            vec![
                EnsembleRecord { tag: 0, state: a, label: 0, weight: 0.5 },
                EnsembleRecord { tag: 1, state: b, label: 1, weight: 0.5 },
            ],
            Some(2),
        )?;
        let params = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
        let inst = QibInstance::from_ensemble(&ens, one_qubit_channel(params)?, beta)?;
        if window_floor(&inst)? >= floor {
            return Ok(inst);
        }
    }
}

/// Random instance with a two-qubit data register, three labeled records and a
/// channel with one ancilla that keeps both data qubits.
pub fn random_two_qubit_instance(seed: u64, beta: f64) -> Result<QibInstance<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let records = raw
        .iter()
        .enumerate()
        .map(|(t, w)| EnsembleRecord {
            tag: t,
            state: random_pure_state(4, &mut rng),
            label: t % 2,
            weight: w / total,
        })
        .collect();
    let ens = LabeledEnsemble::new(records, Some(2))?;
    let gens = vec![
        terms(&[("XYZ", 1.0), ("ZIX", 0.3)]),
        terms(&[("IYY", 1.0)]),
        terms(&[("YXI", 0.7), ("ZZZ", 0.2)]),
    ];
    let params = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
    let ch = ParameterizedChannel::from_pauli_terms(2, 1, vec![2], &gens, params)?;
    QibInstance::from_ensemble(&ens, ch, beta)
}

/// Bell pair on two ancillas, input swapped into the first ancilla, and only
/// the qubit holding half of the Bell pair kept: a fully depolarizing channel.
pub fn depolarizing_channel() -> Result<ParameterizedChannel<f64>> {
    let q = PI / 4.0;
    let gens = vec![
        terms(&[("XXI", 1.0)]),
        terms(&[("YYI", 1.0)]),
        terms(&[("ZZI", 1.0)]),
        terms(&[("IXY", 1.0)]),
    ];
    ParameterizedChannel::from_pauli_terms(1, 2, vec![1, 2], &gens, vec![q; 4])
}
