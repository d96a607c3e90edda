use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ENTROPY_AGGREGATION;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{MaskMode, ModelParams, ReasoningGraph};
use crate::numerics::LOG_FLOOR;
use crate::training::{evaluate, Evaluation};

/// Equal-width cross-entropy bins below [`NEI_BIN_MAX`]; one overflow bin follows.
pub const NEI_BINS: usize = 10;
pub const NEI_BIN_MAX: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeiBin {
    pub lower: f64,
    /// `inf` for the overflow bin.
    pub upper: f64,
    pub count: usize,
    /// Absent for an empty bin.
    pub mean_nei_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeiCurve {
    pub bins: Vec<NeiBin>,
    /// Gold SUPPORTS/REFUTES instances with a wrong predicted label.
    pub misclassified: usize,
    /// Share of those predicted NEI; absent when there are none.
    pub misclassified_nei_fraction: Option<f64>,
}

impl NeiCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,count,mean_nei_prob\n");
        for b in &self.bins {
            let mean = b.mean_nei_prob.map_or(String::new(), |m| m.to_string());
            let _ = writeln!(out, "{},{},{},{}", b.lower, b.upper, b.count, mean);
        }
        let frac = self.misclassified_nei_fraction.map_or(String::new(), |f| f.to_string());
        let _ = writeln!(out, "# misclassified_non_nei={},nei_fraction={}", self.misclassified, frac);
        out
    }
}

/// Bins instances by the cross entropy of their gold label and reports the
/// mean NEI probability per bin.
pub fn nei_curve(predictions: &[([f64; 3], Label)]) -> NeiCurve {
    let width = NEI_BIN_MAX / NEI_BINS as f64;
    let mut sums = [0.0; NEI_BINS + 1];
    let mut counts = [0usize; NEI_BINS + 1];
    let (mut wrong, mut wrong_nei) = (0usize, 0usize);
    for (probs, gold) in predictions {
        let ce = -probs[gold.index()].max(LOG_FLOOR).ln();
        let bin = if ce >= NEI_BIN_MAX {
            NEI_BINS
        } else {
            ((ce / width) as usize).min(NEI_BINS - 1)
        };
        sums[bin] += probs[Label::NotEnoughInfo.index()];
        counts[bin] += 1;
        if gold.requires_evidence() {
            let predicted = crate::graph::argmax_label(probs);
            if predicted != *gold {
                wrong += 1;
                wrong_nei += usize::from(predicted == Label::NotEnoughInfo);
            }
        }
    }
    let bins = (0..=NEI_BINS)
        .map(|b| NeiBin {
            lower: b as f64 * width,
            upper: if b == NEI_BINS { f64::INFINITY } else { (b + 1) as f64 * width },
            count: counts[b],
            mean_nei_prob: (counts[b] > 0).then(|| sums[b] / counts[b] as f64),
        })
        .collect();
    NeiCurve {
        bins,
        misclassified: wrong,
        misclassified_nei_fraction: (wrong > 0).then(|| wrong_nei as f64 / wrong as f64),
    }
}

pub fn nei_tendency(
    params: &ModelParams,
    graphs: &[ReasoningGraph],
    mode: MaskMode,
    exec: Execution,
) -> Result<NeiCurve> {
    let eval = evaluate(params, graphs, mode, 1.0, exec)?;
    Ok(nei_curve(&predictions(graphs, &eval)))
}

fn predictions(graphs: &[ReasoningGraph], eval: &Evaluation) -> Vec<([f64; 3], Label)> {
    graphs
        .iter()
        .zip(&eval.inferences)
        .map(|(g, i)| (i.label_probs, g.gold_label))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub nei_fraction: f64,
    pub label_accuracy: f64,
    pub fever_score: f64,
    pub edge_entropy: f64,
    pub node_entropy: f64,
}

impl SweepRow {
    fn from_eval(alpha: f64, eval: &Evaluation) -> Self {
        let m = &eval.metrics;
        Self {
            alpha,
            nei_fraction: m.nei_fraction,
            label_accuracy: m.label_accuracy,
            fever_score: m.fever_score,
            edge_entropy: m.mean_edge_entropy.expect("evaluation carries traces"),
            node_entropy: m.mean_node_entropy.expect("evaluation carries traces"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn alphas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.alpha).collect()
    }

    pub fn row(&self, alpha: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.alpha == alpha)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,nei_fraction,label_accuracy,fever_score,edge_entropy,node_entropy\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.alpha, r.nei_fraction, r.label_accuracy, r.fever_score, r.edge_entropy, r.node_entropy
            );
        }
        out
    }
}

/// Re-evaluates a soft-mask model with every CO-SCO scaled by each alpha.
pub fn scaling_sweep(
    params: &ModelParams,
    graphs: &[ReasoningGraph],
    alphas: &[f64],
    exec: Execution,
) -> Result<SweepResult> {
    if alphas.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Config(format!("alpha {a} outside [0, 1]")));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("alpha grid must be strictly increasing".into()));
    }
    let rows = alphas
        .iter()
        .map(|&alpha| Ok(SweepRow::from_eval(alpha, &evaluate(params, graphs, MaskMode::Soft, alpha, exec)?)))
        .collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub model: String,
    pub mode: MaskMode,
    pub edge_entropy: f64,
    pub node_entropy: f64,
    pub label_accuracy: f64,
}

/// Mean edge and node attention entropy of several models on one dataset.
pub fn entropy_comparison(
    models: &[(&str, &ModelParams, MaskMode)],
    graphs: &[ReasoningGraph],
    exec: Execution,
) -> Result<Vec<EntropyRow>> {
    models
        .iter()
        .map(|&(name, params, mode)| {
            let eval = evaluate(params, graphs, mode, 1.0, exec)?;
            Ok(EntropyRow {
                model: name.to_string(),
                mode,
                edge_entropy: eval.metrics.mean_edge_entropy.expect("evaluation carries traces"),
                node_entropy: eval.metrics.mean_node_entropy.expect("evaluation carries traces"),
                label_accuracy: eval.metrics.label_accuracy,
            })
        })
        .collect()
}

pub fn entropy_csv(rows: &[EntropyRow]) -> String {
    let mut out = format!("# aggregation: {ENTROPY_AGGREGATION}\nmodel,mode,edge_entropy,node_entropy,label_accuracy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.model, r.mode, r.edge_entropy, r.node_entropy, r.label_accuracy
        );
    }
    out
}
