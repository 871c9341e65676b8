//! JSON file formats for ensembles and channels.
//!
//! Ensemble:
//! `{"dim_label": 2, "records": [{"tag": 0, "state": [[re, im], ...], "label": 0, "weight": 0.5}]}`
//!
//! Channel:
//! `{"input_qubits": 2, "ancilla_qubits": 0, "discard": [0],
//!   "generators": [[["YI", 1.0]], [["ZX", 0.5], ["XZ", 0.5]]], "parameters": [0.1, 0.2]}`

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{pauli_expand, ParameterizedChannel};
use crate::error::{QibError, Result};
use crate::linalg::CVector;
use crate::registers::{EnsembleRecord, LabeledEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub tag: usize,
    pub state: Vec<[f64; 2]>,
    pub label: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_label: Option<usize>,
    pub records: Vec<RecordFile>,
}

impl EnsembleFile {
    pub fn to_ensemble(&self) -> Result<LabeledEnsemble<f64>> {
        let records = self
            .records
            .iter()
            .map(|r| EnsembleRecord {
                tag: r.tag,
                state: CVector::<f64>::from_iterator(r.state.len(), r.state.iter().map(|[re, im]| Complex64::new(*re, *im))),
                label: r.label,
                weight: r.weight,
            })
            .collect();
        LabeledEnsemble::new(records, self.dim_label)
    }

    pub fn from_ensemble(ens: &LabeledEnsemble<f64>) -> Self {
        Self {
            dim_label: Some(ens.layout().dim_label),
            records: ens
                .records()
                .iter()
                .map(|r| RecordFile {
                    tag: r.tag,
                    state: r.state.iter().map(|c| [c.re, c.im]).collect(),
                    label: r.label,
                    weight: r.weight,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub input_qubits: usize,
    #[serde(default)]
    pub ancilla_qubits: usize,
    #[serde(default)]
    pub discard: Vec<usize>,
    /// Each generator is a list of `(Pauli string, coefficient)` pairs.
    pub generators: Vec<Vec<(String, f64)>>,
    pub parameters: Vec<f64>,
}

impl ChannelFile {
    pub fn to_channel(&self) -> Result<ParameterizedChannel<f64>> {
        ParameterizedChannel::from_pauli_terms(
            self.input_qubits,
            self.ancilla_qubits,
            self.discard.clone(),
            &self.generators,
            self.parameters.clone(),
        )
    }

    /// Re-expands the channel's generators in the Pauli basis.
    pub fn from_channel(ch: &ParameterizedChannel<f64>) -> Result<Self> {
        let generators = ch
            .generators()
            .iter()
            .map(|g| {
                let e = pauli_expand(g)?;
                let scale = (g.dim() as f64).sqrt();
                Ok(e.labels
                    .iter()
                    .zip(&e.coefficients)
                    .filter(|(_, c)| c.abs() > 1e-14)
                    .map(|(l, c)| (l.clone(), c / scale))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            input_qubits: ch.input_qubits(),
            ancilla_qubits: ch.ancilla_qubits(),
            discard: ch.discard().to_vec(),
            generators,
            parameters: ch.params().to_vec(),
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QibError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    serde_json::from_str(&text).map_err(|e| QibError::Validation(format!("{}: {e}", path.display())))
}

pub fn load_ensemble(path: &Path) -> Result<LabeledEnsemble<f64>> {
    read_json::<EnsembleFile>(path)?.to_ensemble()
}

pub fn load_channel(path: &Path) -> Result<ParameterizedChannel<f64>> {
    read_json::<ChannelFile>(path)?.to_channel()
}
