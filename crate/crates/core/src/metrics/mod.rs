//! Scoring and analysis: label accuracy, the strict FEVER score, evidence
//! precision/recall/F1@k, attention entropy, NEI-tendency curves and
//! confidence scaling sweeps.

mod analysis;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{EvidenceId, Label};
use crate::error::{Error, Result};
use crate::graph::AttentionTrace;
use crate::numerics::tape::DISTRIBUTION_TOL;

pub use analysis::{
    entropy_comparison, entropy_csv, nei_curve, nei_tendency, scaling_sweep, EntropyRow, NeiBin, NeiCurve, SweepResult,
    SweepRow, NEI_BINS, NEI_BIN_MAX,
};

/// Evidence identifiers kept per prediction.
pub const MAX_PREDICTED_EVIDENCE: usize = 5;

/// How per-trace entropies are pooled; written into metrics output.
pub const ENTROPY_AGGREGATION: &str = "mean over heads, then nodes, then instances";

/// One scored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: u64,
    pub predicted_label: Label,
    #[serde(default)]
    pub predicted_evidence: Vec<EvidenceId>,
    pub gold_label: Label,
    #[serde(rename = "gold_evidence", default)]
    pub gold_evidence_groups: Vec<Vec<EvidenceId>>,
}

impl EvalRecord {
    pub fn validate(&self) -> Result<()> {
        if self.predicted_evidence.len() > MAX_PREDICTED_EVIDENCE {
            return Err(Error::contract(format!(
                "record {} predicts {} evidence sentences (at most {MAX_PREDICTED_EVIDENCE})",
                self.id,
                self.predicted_evidence.len()
            )));
        }
        Ok(())
    }

    pub fn label_correct(&self) -> bool {
        self.predicted_label == self.gold_label
    }

    /// Some gold group lies entirely within the predicted evidence.
    pub fn covers_gold_group(&self) -> bool {
        let predicted: HashSet<&EvidenceId> = self.predicted_evidence.iter().collect();
        self.gold_evidence_groups
            .iter()
            .any(|group| group.iter().all(|id| predicted.contains(id)))
    }

    /// Strict FEVER hit: correct label and, unless NEI, a fully retrieved gold group.
    pub fn fever_hit(&self) -> bool {
        self.label_correct() && (self.gold_label == Label::NotEnoughInfo || self.covers_gold_group())
    }
}

fn non_empty(records: &[EvalRecord], what: &str) -> Result<()> {
    if records.is_empty() {
        Err(Error::contract(format!("{what} of an empty record set")))
    } else {
        Ok(())
    }
}

pub fn label_accuracy(records: &[EvalRecord]) -> Result<f64> {
    non_empty(records, "label accuracy")?;
    Ok(records.iter().filter(|r| r.label_correct()).count() as f64 / records.len() as f64)
}

pub fn fever_score(records: &[EvalRecord]) -> Result<f64> {
    non_empty(records, "FEVER score")?;
    Ok(records.iter().filter(|r| r.fever_hit()).count() as f64 / records.len() as f64)
}

/// Fraction of records predicted NEI.
pub fn nei_fraction(records: &[EvalRecord]) -> Result<f64> {
    non_empty(records, "NEI fraction")?;
    let nei = records.iter().filter(|r| r.predicted_label == Label::NotEnoughInfo).count();
    Ok(nei as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidencePrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Evidence precision, recall and F1 at `k` over gold-SUPPORTS/REFUTES records.
///
/// Precision is micro-averaged over predicted sentences (0 when nothing is
/// predicted); recall counts records whose top-`k` prediction covers a full
/// gold group. `None` when no record requires evidence.
pub fn evidence_prf(records: &[EvalRecord], k: usize) -> Result<Option<EvidencePrf>> {
    non_empty(records, "evidence P/R/F1")?;
    let scored: Vec<&EvalRecord> = records.iter().filter(|r| r.gold_label.requires_evidence()).collect();
    if scored.is_empty() {
        return Ok(None);
    }
    let (mut predicted, mut hits, mut covered) = (0usize, 0usize, 0usize);
    for r in &scored {
        let top: Vec<EvidenceId> = r.predicted_evidence.iter().take(k).cloned().collect();
        let gold: HashSet<&EvidenceId> = r.gold_evidence_groups.iter().flatten().collect();
        predicted += top.len();
        hits += top.iter().filter(|id| gold.contains(id)).count();
        let truncated = EvalRecord {
            predicted_evidence: top,
            ..(*r).clone()
        };
        covered += usize::from(truncated.covers_gold_group());
    }
    let precision = if predicted == 0 { 0.0 } else { hits as f64 / predicted as f64 };
    let recall = covered as f64 / scored.len() as f64;
    Ok(Some(EvidencePrf {
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
    }))
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn attention_entropy(weights: &[f64]) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::contract(format!("attention weight {w} is negative or NaN")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::contract(format!("attention weights sum to {total}, not 1")));
    }
    Ok(-weights.iter().filter(|&&w| w > 0.0).map(|&w| w * w.ln()).sum::<f64>())
}

/// Edge-attention entropy of one trace: per node, mean over every head of
/// every layer; then mean over nodes.
pub fn edge_entropy(trace: &AttentionTrace) -> Result<f64> {
    let heads: Vec<_> = trace.edge_weights.iter().flatten().collect();
    let first = heads.first().ok_or_else(|| Error::contract("trace has no attention heads"))?;
    let (nodes, _) = first.dims2()?;
    let mut total = 0.0;
    for p in 0..nodes {
        let mut per_node = 0.0;
        for h in &heads {
            per_node += attention_entropy(h.row_slice(p))?;
        }
        total += per_node / heads.len() as f64;
    }
    Ok(total / nodes as f64)
}

pub fn node_entropy(trace: &AttentionTrace) -> Result<f64> {
    attention_entropy(&trace.node_weights)
}

fn mean_of<'t>(traces: impl ExactSizeIterator<Item = &'t AttentionTrace>, f: fn(&AttentionTrace) -> Result<f64>) -> Result<f64> {
    let n = traces.len();
    if n == 0 {
        return Err(Error::contract("entropy of an empty trace set"));
    }
    let mut total = 0.0;
    for t in traces {
        total += f(t)?;
    }
    Ok(total / n as f64)
}

pub fn mean_edge_entropy<'t>(traces: impl ExactSizeIterator<Item = &'t AttentionTrace>) -> Result<f64> {
    mean_of(traces, edge_entropy)
}

pub fn mean_node_entropy<'t>(traces: impl ExactSizeIterator<Item = &'t AttentionTrace>) -> Result<f64> {
    mean_of(traces, node_entropy)
}

/// Every headline number for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub count: usize,
    pub label_accuracy: f64,
    pub fever_score: f64,
    pub nei_fraction: f64,
    /// Absent when no record requires evidence.
    pub evidence_at_5: Option<EvidencePrf>,
    /// Absent when no traces were supplied (e.g. a standalone scorer run).
    pub mean_edge_entropy: Option<f64>,
    pub mean_node_entropy: Option<f64>,
    pub entropy_aggregation: String,
}

impl MetricsBundle {
    pub fn from_records(records: &[EvalRecord]) -> Result<Self> {
        Ok(Self {
            count: records.len(),
            label_accuracy: label_accuracy(records)?,
            fever_score: fever_score(records)?,
            nei_fraction: nei_fraction(records)?,
            evidence_at_5: evidence_prf(records, MAX_PREDICTED_EVIDENCE)?,
            mean_edge_entropy: None,
            mean_node_entropy: None,
            entropy_aggregation: ENTROPY_AGGREGATION.to_string(),
        })
    }

    pub fn with_traces<'t>(mut self, traces: impl ExactSizeIterator<Item = &'t AttentionTrace> + Clone) -> Result<Self> {
        self.mean_edge_entropy = Some(mean_edge_entropy(traces.clone())?);
        self.mean_node_entropy = Some(mean_node_entropy(traces)?);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    /// Aligned two-column text for terminals.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("records", self.count.to_string()),
            ("label_accuracy", format!("{:.4}", self.label_accuracy)),
            ("fever_score", format!("{:.4}", self.fever_score)),
            ("nei_fraction", format!("{:.4}", self.nei_fraction)),
        ];
        match &self.evidence_at_5 {
            Some(e) => {
                rows.push(("precision@5", format!("{:.4}", e.precision)));
                rows.push(("recall@5", format!("{:.4}", e.recall)));
                rows.push(("f1@5", format!("{:.4}", e.f1)));
            }
            None => rows.push(("evidence@5", "n/a".into())),
        }
        if let Some(e) = self.mean_edge_entropy {
            rows.push(("edge_entropy", format!("{e:.4}")));
        }
        if let Some(e) = self.mean_node_entropy {
            rows.push(("node_entropy", format!("{e:.4}")));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}
