//! JSON model format. Numeric fields round-trip bit-exactly; indices are
//! 0-based in files.

use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::netmodel::types::{IoMap, NetworkModel, ParameterSpace, SecondOrderModel};
use crate::scalar::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

/// On-disk schema of a model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct ModelFile<T: Real> {
    pub n: usize,
    pub edges: Vec<(usize, usize, T)>,
    pub inertia: Vec<T>,
    pub damping: Vec<T>,
    pub input_map: IoMap<T>,
    pub output_map: IoMap<T>,
    pub param_blocks: Vec<usize>,
    pub param_box: ParamBox<T>,
}

impl<T: Real> ModelFile<T> {
    pub fn from_model(model: &SecondOrderModel<T>) -> Self {
        let net = model.network();
        let ps = model.param_space();
        Self {
            n: net.node_count(),
            edges: net.edges().to_vec(),
            inertia: net.inertia().to_vec(),
            damping: net.damping().to_vec(),
            input_map: net.input_map().clone(),
            output_map: net.output_map().clone(),
            param_blocks: ps.block_sizes().to_vec(),
            param_box: ParamBox {
                lower: ps.lower().to_vec(),
                upper: ps.upper().to_vec(),
            },
        }
    }

    pub fn into_model(self) -> Result<SecondOrderModel<T>> {
        let blocks_total: usize = self.param_blocks.iter().sum();
        if blocks_total != self.n {
            return Err(Error::Schema {
                path: "param_blocks".into(),
                msg: format!("block sizes sum to {blocks_total}, expected n = {}", self.n),
            });
        }
        if self.inertia.len() != self.n {
            return Err(Error::Schema {
                path: "inertia".into(),
                msg: format!("length {} != n = {}", self.inertia.len(), self.n),
            });
        }
        if self.damping.len() != self.n {
            return Err(Error::Schema {
                path: "damping".into(),
                msg: format!("length {} != n = {}", self.damping.len(), self.n),
            });
        }
        let network = NetworkModel::new(
            self.n,
            self.edges,
            Array1::from_vec(self.inertia),
            Array1::from_vec(self.damping),
            self.input_map,
            self.output_map,
        )?;
        let ps = ParameterSpace::new(self.param_blocks, self.param_box.lower, self.param_box.upper)?;
        SecondOrderModel::from_network(network, ps)
    }
}

pub fn model_to_json<T: Real>(model: &SecondOrderModel<T>) -> Result<String> {
    let file = ModelFile::from_model(model);
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json<T: Real>(text: &str) -> Result<SecondOrderModel<T>> {
    let file: ModelFile<T> = serde_json::from_str(text)?;
    file.into_model()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write the model; returns the SHA-256 of the bytes written (ROM files
/// reference models by this hash).
pub fn save_model<T: Real>(path: &Path, model: &SecondOrderModel<T>) -> Result<String> {
    let text = model_to_json(model)?;
    std::fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn load_model<T: Real>(path: &Path) -> Result<(SecondOrderModel<T>, String)> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let model = model_from_json(&text)?;
    Ok((model, sha256_hex(&bytes)))
}
