use serde::{Deserialize, Serialize};

use crate::data::encoder::{BoundEncoder, HashEncoder, DEFAULT_VOCAB_BUCKETS};
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, xavier_uniform, Checkpoint, SeededRng, Tape, Tensor, Var};

/// Head count used when none is given: one head per 64 hidden units for
/// hidden sizes above 64, otherwise 4 (falling back to 1 if 4 does not divide).
pub fn default_heads(d_m: usize) -> usize {
    if d_m > 64 && d_m.is_multiple_of(64) {
        d_m / 64
    } else if d_m.is_multiple_of(4) {
        4
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden size of node representations.
    pub d_m: usize,
    /// Hash buckets of the text encoder.
    pub d_v: usize,
    pub heads: usize,
    /// Stacked edge-attention layers.
    pub layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(64)
    }
}

impl ModelConfig {
    pub fn new(d_m: usize) -> Self {
        Self {
            d_m,
            d_v: DEFAULT_VOCAB_BUCKETS,
            heads: default_heads(d_m),
            layers: 1,
        }
    }

    pub fn d_k(&self) -> usize {
        self.d_m / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_m == 0 || self.d_v == 0 || self.heads == 0 || self.layers == 0 {
            return Err(Error::Config(format!("model dimensions must be positive: {self:?}")));
        }
        if !self.d_m.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "d_m = {} is not divisible by heads = {}",
                self.d_m, self.heads
            )));
        }
        Ok(())
    }
}

/// `y = x · weightᵀ + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// `out × in`
    pub weight: Tensor,
    /// `1 × out`
    pub bias: Tensor,
}

impl LinearParams {
    pub fn init(rng: &mut SeededRng, input: usize, output: usize) -> Self {
        Self {
            weight: xavier_uniform(rng, &[output, input], input, output),
            bias: Tensor::zeros(&[1, output]),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[1, output]),
        }
    }

    fn bind<'a>(&'a self, tape: &Tape<'a>, trainable: bool) -> BoundLinear {
        BoundLinear {
            weight: tape.leaf(&self.weight, trainable),
            bias: tape.leaf(&self.bias, trainable),
        }
    }
}

/// Query/key/value projections of one attention head, each `d_m × d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub query: Tensor,
    pub key: Tensor,
    pub value: Tensor,
}

impl HeadParams {
    pub fn init(rng: &mut SeededRng, d_m: usize, d_k: usize) -> Self {
        Self {
            query: xavier_uniform(rng, &[d_m, d_k], d_m, d_k),
            key: xavier_uniform(rng, &[d_m, d_k], d_m, d_k),
            value: xavier_uniform(rng, &[d_m, d_k], d_m, d_k),
        }
    }

    pub fn d_k(&self) -> usize {
        self.query.shape()[1]
    }

    fn bind<'a>(&'a self, tape: &Tape<'a>, trainable: bool) -> BoundHead {
        BoundHead {
            query: tape.leaf(&self.query, trainable),
            key: tape.leaf(&self.key, trainable),
            value: tape.leaf(&self.value, trainable),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundLinear {
    pub weight: Var,
    pub bias: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundHead {
    pub query: Var,
    pub key: Var,
    pub value: Var,
}

/// All learnable weights of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub encoder: HashEncoder,
    /// `layers[l][i]` is head `i` of edge-attention layer `l`.
    pub layers: Vec<Vec<HeadParams>>,
    /// `d_m → 1` node attention logit.
    pub node_attention: LinearParams,
    /// `d_m → 3` label head.
    pub label: LinearParams,
    /// `d_m → 2` relevance head; its second probability is the CO-SCO.
    pub confidence: LinearParams,
}

/// [`ModelParams`] recorded on a tape, plus the flat list of leaves in
/// [`ModelParams::tensors`] order.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub encoder: BoundEncoder,
    pub layers: Vec<Vec<BoundHead>>,
    pub node_attention: BoundLinear,
    pub label: BoundLinear,
    pub confidence: BoundLinear,
    pub leaves: Vec<Var>,
}

impl ModelParams {
    /// Xavier-uniform weights, zero biases, unit mixing weights.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(seed);
        let (d_m, d_k) = (config.d_m, config.d_k());
        let encoder = HashEncoder::with_rng(config.d_v, d_m, &mut rng);
        let layers = (0..config.layers)
            .map(|_| (0..config.heads).map(|_| HeadParams::init(&mut rng, d_m, d_k)).collect())
            .collect();
        Ok(Self {
            config,
            encoder,
            layers,
            node_attention: LinearParams::init(&mut rng, d_m, 1),
            label: LinearParams::init(&mut rng, d_m, 3),
            confidence: LinearParams::init(&mut rng, d_m, 2),
        })
    }

    /// Named tensors in canonical order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = self
            .encoder
            .tensors()
            .into_iter()
            .map(|(n, t)| (format!("encoder.{n}"), t))
            .collect();
        for (l, heads) in self.layers.iter().enumerate() {
            for (i, h) in heads.iter().enumerate() {
                out.push((format!("layer{l}.head{i}.query"), &h.query));
                out.push((format!("layer{l}.head{i}.key"), &h.key));
                out.push((format!("layer{l}.head{i}.value"), &h.value));
            }
        }
        for (name, lin) in [
            ("node_attention", &self.node_attention),
            ("label", &self.label),
            ("confidence", &self.confidence),
        ] {
            out.push((format!("{name}.weight"), &lin.weight));
            out.push((format!("{name}.bias"), &lin.bias));
        }
        out
    }

    /// Mutable tensors in the same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self.encoder.tensors_mut().into_iter().collect();
        for heads in &mut self.layers {
            for h in heads {
                out.extend([&mut h.query, &mut h.key, &mut h.value]);
            }
        }
        for lin in [&mut self.node_attention, &mut self.label, &mut self.confidence] {
            out.extend([&mut lin.weight, &mut lin.bias]);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Leaves are created in [`ModelParams::tensors`] order.
    pub fn bind<'a>(&'a self, tape: &Tape<'a>, trainable: bool) -> BoundParams {
        let first = tape.len();
        let encoder = self.encoder.bind(tape, trainable);
        let layers = self
            .layers
            .iter()
            .map(|heads| heads.iter().map(|h| h.bind(tape, trainable)).collect())
            .collect();
        let node_attention = self.node_attention.bind(tape, trainable);
        let label = self.label.bind(tape, trainable);
        let confidence = self.confidence.bind(tape, trainable);
        let leaves = (first..tape.len()).map(Var::from_id).collect();
        BoundParams {
            encoder,
            layers,
            node_attention,
            label,
            confidence,
            leaves,
        }
    }

    pub fn to_checkpoint(&self, extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({ "model": self.config, "run": extra });
        Checkpoint::new(meta, self.tensors())
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let config: ModelConfig = serde_json::from_value(ckpt.meta["model"].clone())
            .map_err(|e| Error::Incompatible(format!("checkpoint lacks a model config: {e}")))?;
        config.validate().map_err(|e| Error::Incompatible(e.to_string()))?;
        let mut params = Self::init(config, 0)?;
        let loaded = ckpt.tensors()?;
        let expected: Vec<(String, Vec<usize>)> = params
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.shape().to_vec()))
            .collect();
        if loaded.len() != expected.len() {
            return Err(Error::Incompatible(format!(
                "checkpoint holds {} tensors, model config needs {}",
                loaded.len(),
                expected.len()
            )));
        }
        for ((name, tensor), (want_name, want_shape)) in loaded.iter().zip(&expected) {
            if name != want_name || tensor.shape() != want_shape.as_slice() {
                return Err(Error::Incompatible(format!(
                    "checkpoint tensor {name} {:?} does not match expected {want_name} {want_shape:?}",
                    tensor.shape()
                )));
            }
        }
        for (slot, (_, tensor)) in params.tensors_mut().into_iter().zip(loaded) {
            *slot = tensor;
        }
        Ok(params)
    }
}
