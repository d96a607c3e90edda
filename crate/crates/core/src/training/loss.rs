use crate::data::Label;
use crate::error::{Error, Result};
use crate::graph::ForwardVars;
use crate::numerics::{cross_entropy, Tape, Tensor, Var};

/// Loss terms of one graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub fact: f64,
    /// Mean node relevance cross entropy; 0 for a padded graph.
    pub evidence: f64,
    pub total: f64,
}

fn check_aligned(nodes: usize, gold: usize) -> Result<()> {
    if nodes != gold {
        return Err(Error::contract(format!(
            "{nodes} node distributions but {gold} gold relevance flags"
        )));
    }
    Ok(())
}

/// `L = L_fact + L_evi`, or `L_fact` alone when `use_evidence_loss` is false.
///
/// `L_evi` is the mean relevance cross entropy over the supplied nodes; pass
/// empty slices for a padded graph, whose blank node carries no evidence.
pub fn multi_task_loss(
    label_probs: &[f64],
    gold_label: Label,
    node_probs: &[[f64; 2]],
    gold_relevance: &[usize],
    use_evidence_loss: bool,
) -> Result<LossParts> {
    check_aligned(node_probs.len(), gold_relevance.len())?;
    let (fact, _) = cross_entropy(&Tensor::row(label_probs), gold_label.index())?;
    let mut evidence = 0.0;
    if use_evidence_loss && !node_probs.is_empty() {
        let mut sum = 0.0;
        for (p, &g) in node_probs.iter().zip(gold_relevance) {
            sum += cross_entropy(&Tensor::row(p), g)?.0;
        }
        evidence = sum * (1.0 / node_probs.len() as f64);
    }
    let total = if use_evidence_loss { fact + evidence } else { fact };
    Ok(LossParts { fact, evidence, total })
}

/// Tape version of [`multi_task_loss`] on one forward pass.
pub fn record_loss(
    tape: &Tape<'_>,
    vars: &ForwardVars,
    gold_label: Label,
    gold_relevance: &[usize],
    use_evidence_loss: bool,
) -> Result<Var> {
    let fact = tape.cross_entropy(vars.label_probs, gold_label.index())?;
    if !use_evidence_loss || gold_relevance.is_empty() {
        return Ok(fact);
    }
    let (nodes, _) = tape.value(vars.node_probs).dims2()?;
    check_aligned(nodes, gold_relevance.len())?;
    let mut terms = Vec::with_capacity(nodes);
    for (p, &g) in gold_relevance.iter().enumerate() {
        let row = tape.row(vars.node_probs, p)?;
        terms.push(tape.cross_entropy(row, g)?);
    }
    let sum = tape.add_all(&terms)?;
    let evidence = tape.scale(sum, 1.0 / nodes as f64);
    tape.add(fact, evidence)
}
