use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EncoderError, Result};
use crate::matrix::Matrix;

pub const DEFAULT_LAYERS: usize = 5;
pub const DEFAULT_HIDDEN: usize = 512;

const CHECKPOINT_FORMAT: &str = "sgkit-encoder-params";
const CHECKPOINT_VERSION: u32 = 1;

/// One message-passing round: message `W_msg·[h; f] + b_msg`, update `W_upd·a + b_upd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub msg_weight: Matrix,
    pub msg_bias: Vec<f64>,
    pub upd_weight: Matrix,
    pub upd_bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        LayerParams {
            msg_weight: Matrix::zeros(hidden, 2 * dim),
            msg_bias: vec![0.0; hidden],
            upd_weight: Matrix::zeros(dim, hidden),
            upd_bias: vec![0.0; dim],
        }
    }

    fn check(&self, dim: usize, hidden: usize) -> Result<()> {
        let ok = self.msg_weight.rows == hidden
            && self.msg_weight.cols == 2 * dim
            && self.msg_weight.data.len() == hidden * 2 * dim
            && self.msg_bias.len() == hidden
            && self.upd_weight.rows == dim
            && self.upd_weight.cols == hidden
            && self.upd_weight.data.len() == dim * hidden
            && self.upd_bias.len() == dim;
        if ok {
            Ok(())
        } else {
            Err(EncoderError::Dimension(format!(
                "layer shapes do not match dim {dim}, hidden {hidden}"
            )))
        }
    }
}

/// GNN weights plus the gate `alpha`. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub dim: usize,
    pub hidden: usize,
    pub alpha: f64,
    pub layers: Vec<LayerParams>,
}

impl EncoderParams {
    pub fn zeros(dim: usize, hidden: usize, n_layers: usize) -> Self {
        EncoderParams {
            dim,
            hidden,
            alpha: 0.0,
            layers: (0..n_layers).map(|_| LayerParams::zeros(dim, hidden)).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases, `alpha = 0`.
    pub fn init(dim: usize, hidden: usize, n_layers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let s = (6.0 / (rows + cols) as f64).sqrt();
            Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-s..s))
        };
        let layers = (0..n_layers)
            .map(|_| LayerParams {
                msg_weight: glorot(hidden, 2 * dim),
                msg_bias: vec![0.0; hidden],
                upd_weight: glorot(dim, hidden),
                upd_bias: vec![0.0; dim],
            })
            .collect();
        EncoderParams {
            dim,
            hidden,
            alpha: 0.0,
            layers,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn check(&self) -> Result<()> {
        self.layers.iter().try_for_each(|l| l.check(self.dim, self.hidden))
    }

    pub fn num_params(&self) -> usize {
        1 + self.layers.len()
            * (self.hidden * 2 * self.dim + self.hidden + self.dim * self.hidden + self.dim)
    }

    /// `alpha` first, then per layer: msg_weight, msg_bias, upd_weight, upd_bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.push(self.alpha);
        for l in &self.layers {
            out.extend_from_slice(&l.msg_weight.data);
            out.extend_from_slice(&l.msg_bias);
            out.extend_from_slice(&l.upd_weight.data);
            out.extend_from_slice(&l.upd_bias);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        self.alpha = flat[0];
        let mut rest = &flat[1..];
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for l in &mut self.layers {
            take(&mut l.msg_weight.data);
            take(&mut l.msg_bias);
            take(&mut l.upd_weight.data);
            take(&mut l.upd_bias);
        }
    }

    /// Human-readable name of flat index `i`.
    pub fn param_name(&self, i: usize) -> String {
        if i == 0 {
            return "alpha".into();
        }
        let per_layer = (self.num_params() - 1) / self.layers.len().max(1);
        let (layer, mut off) = ((i - 1) / per_layer, (i - 1) % per_layer);
        for (name, len) in [
            ("msg_weight", self.hidden * 2 * self.dim),
            ("msg_bias", self.hidden),
            ("upd_weight", self.dim * self.hidden),
            ("upd_bias", self.dim),
        ] {
            if off < len {
                return format!("layers[{layer}].{name}[{off}]");
            }
            off -= len;
        }
        unreachable!()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            n_layers: self.layers.len(),
            params: self.clone(),
        };
        let text = serde_json::to_string(&doc).map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Loads a checkpoint; `expected_dim` rejects a mismatched embedding width.
    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let doc: Checkpoint =
            serde_json::from_str(&text).map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(EncoderError::Checkpoint(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(EncoderError::Checkpoint(format!("unsupported version {}", doc.version)));
        }
        if doc.n_layers != doc.params.layers.len() {
            return Err(EncoderError::Checkpoint(format!(
                "header says {} layers, found {}",
                doc.n_layers,
                doc.params.layers.len()
            )));
        }
        if let Some(d) = expected_dim {
            if d != doc.params.dim {
                return Err(EncoderError::Dimension(format!(
                    "checkpoint dim {} but backend dim {d}",
                    doc.params.dim
                )));
            }
        }
        doc.params.check()?;
        Ok(doc.params)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    n_layers: usize,
    params: EncoderParams,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_gate_is_zero() {
        let p = EncoderParams::init(4, 3, 2, 9);
        assert_eq!(p.alpha, 0.0);
        p.check().unwrap();
        assert!(p.layers[0].msg_weight.data.iter().any(|&w| w != 0.0));
    }

    #[test]
    fn flat_round_trip() {
        let p = EncoderParams::init(3, 2, 2, 1);
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.num_params());
        let mut q = EncoderParams::zeros(3, 2, 2);
        q.set_flat(&flat);
        assert_eq!(p, q);
        assert_eq!(q.param_name(0), "alpha");
        assert_eq!(q.param_name(1), "layers[0].msg_weight[0]");
        assert_eq!(q.param_name(13), "layers[0].msg_bias[0]");
        assert_eq!(q.param_name(q.num_params() - 1), "layers[1].upd_bias[2]");
    }
}
