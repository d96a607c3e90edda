use crate::data::EvidenceId;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::graph::{infer, EncodedGraph, Inference, MaskMode, ModelParams, ReasoningGraph};
use crate::metrics::{EvalRecord, MetricsBundle, MAX_PREDICTED_EVIDENCE};

/// Relevance threshold on CO-SCO for a node to count as predicted evidence.
pub const EVIDENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub records: Vec<EvalRecord>,
    pub metrics: MetricsBundle,
    /// One per graph, in input order.
    pub inferences: Vec<Inference>,
}

/// Evidence nodes with CO-SCO at or above the threshold, highest first (lower
/// index first on ties), at most five. A padded graph predicts nothing.
pub fn select_evidence(graph: &ReasoningGraph, co_scos: &[f64]) -> Vec<EvidenceId> {
    if graph.is_padded() {
        return Vec::new();
    }
    let mut ranked: Vec<usize> = (0..graph.evidence.len())
        .filter(|&p| co_scos[p] >= EVIDENCE_THRESHOLD)
        .collect();
    ranked.sort_by(|&a, &b| co_scos[b].total_cmp(&co_scos[a]).then(a.cmp(&b)));
    ranked
        .into_iter()
        .take(MAX_PREDICTED_EVIDENCE)
        .map(|p| graph.evidence[p].id.clone())
        .collect()
}

pub fn to_record(graph: &ReasoningGraph, inference: &Inference) -> EvalRecord {
    EvalRecord {
        id: graph.id,
        predicted_label: inference.predicted,
        predicted_evidence: select_evidence(graph, inference.co_scos()),
        gold_label: graph.gold_label,
        gold_evidence_groups: graph.gold_evidence_groups.clone(),
    }
}

/// Scores every graph with `predict`, keeping input order.
pub fn evaluate_with<F>(graphs: &[ReasoningGraph], exec: Execution, predict: F) -> Result<Evaluation>
where
    F: Fn(&ReasoningGraph) -> Result<Inference> + Sync + Send,
{
    let inferences = map_ordered(exec, graphs, predict)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    assemble(graphs, inferences)
}

fn assemble(graphs: &[ReasoningGraph], inferences: Vec<Inference>) -> Result<Evaluation> {
    let records: Vec<EvalRecord> = graphs.iter().zip(&inferences).map(|(g, i)| to_record(g, i)).collect();
    let metrics = MetricsBundle::from_records(&records)?.with_traces(inferences.iter().map(|i| &i.trace))?;
    Ok(Evaluation {
        records,
        metrics,
        inferences,
    })
}

/// Frozen-parameter evaluation with attention traces.
pub fn evaluate(
    params: &ModelParams,
    graphs: &[ReasoningGraph],
    mode: MaskMode,
    alpha: f64,
    exec: Execution,
) -> Result<Evaluation> {
    evaluate_with(graphs, exec, |g| {
        let encoded = EncodedGraph::new(g, params.config.d_v)?;
        infer(&encoded, params, mode, alpha)
    })
}

/// As [`evaluate`] on graphs whose token bags were computed once up front.
pub fn evaluate_encoded(
    params: &ModelParams,
    graphs: &[ReasoningGraph],
    encoded: &[EncodedGraph],
    mode: MaskMode,
    alpha: f64,
    exec: Execution,
) -> Result<Evaluation> {
    if encoded.len() != graphs.len() {
        return Err(Error::contract("encoded graphs do not match the graph list"));
    }
    let indices: Vec<usize> = (0..graphs.len()).collect();
    let inferences = map_ordered(exec, &indices, |&i| infer(&encoded[i], params, mode, alpha))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    assemble(graphs, inferences)
}
