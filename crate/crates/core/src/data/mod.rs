//! Claim ingestion, graph construction, the hashing text encoder and the
//! synthetic corpus generator.

mod claims;
pub mod encoder;
pub mod synth;

pub use claims::{
    label_histogram, load_claims, parse_claims, parse_jsonl, read_jsonl, save_claims, to_jsonl, write_jsonl,
    Candidate, ClaimInstance, EvidenceId, Label,
};
pub use encoder::HashEncoder;
pub use synth::synth_dataset;

use crate::error::{Error, Result};
use crate::graph::{EvidenceNode, ReasoningGraph};

/// Keeps the first `l_max` candidates in retriever order and flags each one
/// that belongs to any gold group. A claim without candidates yields a padded
/// graph (one blank-derived node).
pub fn build_graph(instance: &ClaimInstance, l_max: usize) -> Result<ReasoningGraph> {
    if l_max == 0 {
        return Err(Error::contract("l_max must be at least 1"));
    }
    let evidence = instance
        .evidence_candidates
        .iter()
        .take(l_max)
        .map(|c| EvidenceNode {
            id: c.id(),
            title: c.title().to_string(),
            text: c.text().to_string(),
            relevant: instance.is_gold(&c.id()),
        })
        .collect();
    ReasoningGraph::new(
        instance.id,
        instance.claim.clone(),
        evidence,
        instance.label,
        instance.gold_evidence_groups.clone(),
    )
}

pub fn build_graphs(instances: &[ClaimInstance], l_max: usize) -> Result<Vec<ReasoningGraph>> {
    instances.iter().map(|c| build_graph(c, l_max)).collect()
}
