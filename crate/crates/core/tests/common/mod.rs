//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use cogat::data::{EvidenceId, Label};
use cogat::graph::{record_forward, EncodedGraph, EvidenceNode, MaskMode, ModelConfig, ModelParams, ReasoningGraph};
use cogat::numerics::{SeededRng, Tape};
use cogat::training::record_loss;
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: [&str; 24] = [
    "red", "blue", "green", "kite", "house", "boat", "is", "the", "of", "has", "a", "zorbel", "kanu", "mirel",
    "owns", "painted", "door", "flag", "coat", "white", "black", "records", "show", "that",
];

pub fn sentence(rng: &mut SeededRng, len: usize) -> String {
    (0..len).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Random graph with `n` evidence nodes and random gold relevance.
pub fn random_graph(rng: &mut SeededRng, id: u64, n: usize) -> ReasoningGraph {
    let evidence = (0..n)
        .map(|i| EvidenceNode {
            id: EvidenceId(format!("Doc_{i}"), i as u32),
            title: format!("Doc_{}", rng.gen_range(0..4)),
            text: {
                let len = rng.gen_range(2..8);
                sentence(rng, len)
            },
            relevant: rng.gen_bool(0.5),
        })
        .collect();
    let len = rng.gen_range(3..7);
    let claim = sentence(rng, len);
    let label = Label::ALL[rng.gen_range(0..3)];
    ReasoningGraph::new(id, claim, evidence, label, vec![]).unwrap()
}

pub fn small_config() -> ModelConfig {
    ModelConfig {
        d_m: 8,
        d_v: 64,
        heads: 2,
        layers: 1,
    }
}

fn relevance(graph: &ReasoningGraph) -> Vec<usize> {
    if graph.is_padded() {
        Vec::new()
    } else {
        graph.gold_relevance()
    }
}

/// Full multi-task loss of one graph.
pub fn loss_value(params: &ModelParams, graph: &ReasoningGraph, mode: MaskMode) -> f64 {
    let encoded = EncodedGraph::new(graph, params.config.d_v).unwrap();
    let tape = Tape::new();
    let bound = params.bind(&tape, false);
    let vars = record_forward(&tape, &bound, &encoded, mode, 1.0).unwrap();
    let loss = record_loss(&tape, &vars, graph.gold_label, &relevance(graph), true).unwrap();
    tape.scalar(loss)
}

/// Analytic gradient of [`loss_value`], flattened per tensor in canonical order.
pub fn analytic_gradient(params: &ModelParams, graph: &ReasoningGraph, mode: MaskMode) -> Vec<Vec<f64>> {
    let encoded = EncodedGraph::new(graph, params.config.d_v).unwrap();
    let tape = Tape::new();
    let bound = params.bind(&tape, true);
    let vars = record_forward(&tape, &bound, &encoded, mode, 1.0).unwrap();
    let loss = record_loss(&tape, &vars, graph.gold_label, &relevance(graph), true).unwrap();
    let grads = tape.backward(loss).unwrap();
    bound
        .leaves
        .iter()
        .map(|&v| match grads.get(v) {
            Some(g) => g.data().to_vec(),
            None => vec![0.0; tape.value(v).len()],
        })
        .collect()
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    const FLOOR: f64 = 1e-6;
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

pub struct GradReport {
    /// Worst relative error per named tensor.
    pub per_tensor: Vec<(String, f64)>,
    pub checked: usize,
}

impl GradReport {
    pub fn worst(&self) -> f64 {
        self.per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

/// Central differences with step `h` against the tape gradient, every scalar
/// of every parameter tensor.
pub fn gradient_check(params: &ModelParams, graph: &ReasoningGraph, h: f64) -> GradReport {
    let analytic = analytic_gradient(params, graph, MaskMode::Soft);
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let mut probe = params.clone();
    let mut per_tensor = Vec::new();
    let mut checked = 0;
    for (k, name) in names.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..analytic[k].len() {
            let original = probe.tensors_mut()[k].data()[i];
            probe.tensors_mut()[k].data_mut()[i] = original + h;
            let plus = loss_value(&probe, graph, MaskMode::Soft);
            probe.tensors_mut()[k].data_mut()[i] = original - h;
            let minus = loss_value(&probe, graph, MaskMode::Soft);
            probe.tensors_mut()[k].data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(analytic[k][i], numeric));
            checked += 1;
        }
        per_tensor.push((name.clone(), worst));
    }
    GradReport { per_tensor, checked }
}

/// Brute-force FEVER hit over bitmask-encoded sentence sets.
pub fn brute_fever_hit(pred_label: Label, gold_label: Label, predicted: u32, groups: &[u32]) -> bool {
    if pred_label != gold_label {
        return false;
    }
    if gold_label == Label::NotEnoughInfo {
        return true;
    }
    groups.iter().any(|&g| g & !predicted == 0)
}

pub fn mask_to_ids(mask: u32) -> Vec<EvidenceId> {
    (0..32)
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| EvidenceId("U".into(), b))
        .collect()
}
