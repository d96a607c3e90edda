use super::layers::{
    argmax_label, record_aggregate, record_confidence, record_edge_attention, record_label, record_mask,
    record_node_attention,
};
use super::params::{BoundParams, ModelParams};
use super::{MaskMode, ReasoningGraph};
use crate::data::encoder::{evidence_tokens, tokenize, truncate_pair, PairBags, TokenBag};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// A graph reduced to hashed token bags, ready for repeated forwards.
///
/// Node `p` holds the evidence-side bags of evidence item `p`; a padded graph
/// holds a single empty entry, which encodes to the blank node.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedGraph {
    pub claim: TokenBag,
    pub nodes: Vec<PairBags>,
    pub padded: bool,
}

impl EncodedGraph {
    pub fn new(graph: &ReasoningGraph, buckets: usize) -> Result<Self> {
        let claim_tokens = tokenize(&graph.claim);
        if claim_tokens.is_empty() {
            return Err(Error::contract(format!("graph {}: claim has no tokens", graph.id)));
        }
        let (claim_part, _) = truncate_pair::<String>(&claim_tokens, &[]);
        let claim = TokenBag::from_tokens(claim_part, buckets);
        let nodes = if graph.is_padded() {
            vec![PairBags::default()]
        } else {
            graph
                .evidence
                .iter()
                .map(|n| {
                    let ev = evidence_tokens(&n.title, &n.text);
                    let (claim_part, ev) = truncate_pair(&claim_tokens, &ev);
                    PairBags::new(claim_part, ev, buckets)
                })
                .collect()
        };
        Ok(Self {
            claim,
            nodes,
            padded: graph.is_padded(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    /// `1 × 3`
    pub label_probs: Var,
    /// `l × 2` relevance distributions; column 1 is the CO-SCO.
    pub node_probs: Var,
    pub co_scos: Vec<f64>,
    /// `[layer][head]`, each `l × l`.
    pub edge_attention: Vec<Vec<Var>>,
    /// `l × 1`
    pub node_attention: Var,
}

/// Records the full model on `tape`.
pub fn record_forward(
    tape: &Tape<'_>,
    params: &BoundParams,
    graph: &EncodedGraph,
    mode: MaskMode,
    alpha: f64,
) -> Result<ForwardVars> {
    if graph.nodes.is_empty() {
        return Err(Error::contract("graph has no nodes"));
    }
    let claim_part = params.encoder.record_claim(tape, &graph.claim)?;
    let blank = params.encoder.record_pair(tape, claim_part, &PairBags::default())?;
    let rows: Vec<Var> = if graph.padded {
        vec![blank]
    } else {
        graph
            .nodes
            .iter()
            .map(|bag| params.encoder.record_pair(tape, claim_part, bag))
            .collect::<Result<_>>()?
    };
    let initial = tape.stack_rows(&rows)?;
    let node_probs = record_confidence(tape, &params.confidence, initial)?;
    let (mut h, co_scos) = record_mask(tape, &rows, blank, node_probs, mode, alpha)?;
    let mut edge_attention = Vec::with_capacity(params.layers.len());
    for heads in &params.layers {
        let (next, attn) = record_edge_attention(tape, heads, h)?;
        h = next;
        edge_attention.push(attn);
    }
    let beta = record_node_attention(tape, &params.node_attention, h)?;
    let pooled = record_aggregate(tape, h, beta)?;
    let label_probs = record_label(tape, &params.label, pooled)?;
    Ok(ForwardVars {
        label_probs,
        node_probs,
        co_scos,
        edge_attention,
        node_attention: beta,
    })
}

/// Attention captured during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    /// `[layer][head]`, each `l × l`; row `p` is node `p`'s distribution over sources.
    pub edge_weights: Vec<Vec<Tensor>>,
    pub node_weights: Vec<f64>,
    pub co_scos: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub label_probs: [f64; 3],
    pub predicted: Label,
    /// Per-node `[irrelevant, relevant]` probabilities.
    pub node_probs: Vec<[f64; 2]>,
    pub trace: AttentionTrace,
}

impl Inference {
    pub fn co_scos(&self) -> &[f64] {
        &self.trace.co_scos
    }
}

/// Forward pass on a pre-encoded graph with frozen parameters.
pub fn infer(graph: &EncodedGraph, params: &ModelParams, mode: MaskMode, alpha: f64) -> Result<Inference> {
    let tape = Tape::new();
    let bound = params.bind(&tape, false);
    let vars = record_forward(&tape, &bound, graph, mode, alpha)?;
    let lp = tape.value(vars.label_probs);
    let label_probs = [lp.data()[0], lp.data()[1], lp.data()[2]];
    drop(lp);
    let node_probs = tape
        .value(vars.node_probs)
        .data()
        .chunks(2)
        .map(|c| [c[0], c[1]])
        .collect();
    let edge_weights = vars
        .edge_attention
        .iter()
        .map(|layer| layer.iter().map(|a| tape.value(*a).clone()).collect())
        .collect();
    let node_weights = tape.value(vars.node_attention).data().to_vec();
    if !label_probs.iter().all(|p| p.is_finite()) {
        return Err(Error::Numeric("non-finite label distribution".into()));
    }
    Ok(Inference {
        label_probs,
        predicted: argmax_label(&label_probs),
        node_probs,
        trace: AttentionTrace {
            edge_weights,
            node_weights,
            co_scos: vars.co_scos,
        },
    })
}

/// Encodes `graph` with the parameters' hashing size and runs [`infer`].
pub fn forward(graph: &ReasoningGraph, params: &ModelParams, mode: MaskMode, alpha: f64) -> Result<Inference> {
    let encoded = EncodedGraph::new(graph, params.config.d_v)?;
    infer(&encoded, params, mode, alpha)
}
