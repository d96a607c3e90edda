//! The confidence-masked graph attention reasoner.
//!
//! Pipeline per claim: encode every claim-evidence node and the claim-only
//! blank node, score each node's relevance (CO-SCO), blend each node toward
//! the blank node by that score, run multi-head edge attention over the fully
//! connected node set, pool nodes with a softmax node attention and classify
//! the pooled vector into SUPPORTS / REFUTES / NOT ENOUGH INFO.

mod layers;
mod model;
mod params;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{EvidenceId, Label};
use crate::error::{Error, Result};

pub use layers::{
    aggregate, confidence_score, edge_attention, hard_mask, mask_node, node_attention, predict_label,
    record_aggregate, record_confidence, record_edge_attention, record_label, record_mask,
    record_node_attention,
};
pub(crate) use layers::argmax_label;
pub use layers::HARD_MASK_THRESHOLD;
pub use model::{forward, infer, record_forward, AttentionTrace, EncodedGraph, ForwardVars, Inference};
pub use params::{default_heads, BoundParams, HeadParams, LinearParams, ModelConfig, ModelParams};

/// Cap on evidence nodes per graph when not configured otherwise.
pub const DEFAULT_MAX_EVIDENCE: usize = 5;

/// How node representations are blended with the blank node before attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// `h̃ = s·h + (1 − s)·h_b` with `s = alpha · CO-SCO`.
    #[default]
    Soft,
    /// CO-SCO rounded to 0 or 1 at the 0.5 threshold.
    Hard,
    /// Masking skipped: `h̃ = h` (plain multi-head attention graph).
    NoMask,
}

impl MaskMode {
    pub const ALL: [MaskMode; 3] = [MaskMode::Soft, MaskMode::Hard, MaskMode::NoMask];

    pub fn as_str(self) -> &'static str {
        match self {
            MaskMode::Soft => "soft",
            MaskMode::Hard => "hard",
            MaskMode::NoMask => "no_mask",
        }
    }
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(MaskMode::Soft),
            "hard" => Ok(MaskMode::Hard),
            "no_mask" | "none" => Ok(MaskMode::NoMask),
            other => Err(Error::Config(format!(
                "unknown mask mode {other:?} (expected soft, hard or no_mask)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceNode {
    pub id: EvidenceId,
    pub title: String,
    pub text: String,
    /// Gold relevance: the sentence belongs to some gold evidence group.
    pub relevant: bool,
}

/// One claim with its (truncated) evidence list; the unit of inference.
///
/// A graph with no evidence still has one node: a padding node whose
/// representation is the blank node and whose gold relevance is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningGraph {
    pub id: u64,
    pub claim: String,
    pub evidence: Vec<EvidenceNode>,
    pub gold_label: Label,
    pub gold_evidence_groups: Vec<Vec<EvidenceId>>,
}

impl ReasoningGraph {
    pub fn new(
        id: u64,
        claim: String,
        evidence: Vec<EvidenceNode>,
        gold_label: Label,
        gold_evidence_groups: Vec<Vec<EvidenceId>>,
    ) -> Result<Self> {
        if claim.trim().is_empty() {
            return Err(Error::contract(format!("graph {id}: empty claim")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = evidence.iter().find(|n| !seen.insert(&n.id)) {
            return Err(Error::contract(format!(
                "graph {id}: evidence ({}, {}) appears twice",
                dup.id.0, dup.id.1
            )));
        }
        Ok(Self {
            id,
            claim,
            evidence,
            gold_label,
            gold_evidence_groups,
        })
    }

    pub fn is_padded(&self) -> bool {
        self.evidence.is_empty()
    }

    /// Number of graph nodes, including the padding node.
    pub fn node_count(&self) -> usize {
        self.evidence.len().max(1)
    }

    /// Gold relevance per graph node (padding counts as irrelevant).
    pub fn gold_relevance(&self) -> Vec<usize> {
        if self.is_padded() {
            vec![0]
        } else {
            self.evidence.iter().map(|n| usize::from(n.relevant)).collect()
        }
    }

    /// Same graph with evidence reordered so that new position `i` holds old node `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut check: Vec<usize> = order.to_vec();
        check.sort_unstable();
        if check != (0..self.evidence.len()).collect::<Vec<_>>() {
            return Err(Error::contract("not a permutation of the evidence nodes"));
        }
        let mut g = self.clone();
        g.evidence = order.iter().map(|&i| self.evidence[i].clone()).collect();
        Ok(g)
    }
}
