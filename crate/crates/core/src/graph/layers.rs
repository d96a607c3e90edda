use super::params::{BoundHead, BoundLinear, HeadParams, LinearParams};
use super::MaskMode;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// Hard masking keeps a node whose confidence is at least this value.
pub const HARD_MASK_THRESHOLD: f64 = 0.5;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::contract(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Relevance probabilities `softmax(h · Wᵀ + b)` for every row of `h`, as `l × 2`.
pub fn record_confidence(tape: &Tape<'_>, head: &BoundLinear, h: Var) -> Result<Var> {
    let logits = tape.linear(h, head.weight, head.bias)?;
    tape.softmax(logits, 1)
}

/// Blends each node row toward `blank` according to `mode`.
///
/// Returns the masked `l × d_m` matrix and the CO-SCO of every node.
pub fn record_mask(
    tape: &Tape<'_>,
    rows: &[Var],
    blank: Var,
    node_probs: Var,
    mode: MaskMode,
    alpha: f64,
) -> Result<(Var, Vec<f64>)> {
    check_unit("alpha", alpha)?;
    let mut co_scos = Vec::with_capacity(rows.len());
    let mut masked = Vec::with_capacity(rows.len());
    for (p, &row) in rows.iter().enumerate() {
        let co = tape.index(node_probs, 2 * p + 1)?;
        let co_value = tape.scalar(co);
        co_scos.push(co_value);
        let out = match mode {
            MaskMode::NoMask => row,
            MaskMode::Hard => {
                if co_value >= HARD_MASK_THRESHOLD {
                    row
                } else {
                    blank
                }
            }
            MaskMode::Soft => {
                let keep = tape.affine(co, alpha, 0.0);
                let replace = tape.affine(keep, -1.0, 1.0);
                let kept = tape.scalar_mul(keep, row)?;
                let filled = tape.scalar_mul(replace, blank)?;
                tape.add(kept, filled)?
            }
        };
        masked.push(out);
    }
    Ok((tape.stack_rows(&masked)?, co_scos))
}

/// Multi-head scaled dot-product attention over all node pairs.
///
/// Row `p` of each head's attention matrix is node `p`'s distribution over
/// source nodes `q`. Returns the head-wise concatenation (`l × d_m`) and the
/// per-head `l × l` attention matrices.
pub fn record_edge_attention(tape: &Tape<'_>, heads: &[BoundHead], h: Var) -> Result<(Var, Vec<Var>)> {
    let (rows, _) = tape.value(h).dims2()?;
    if rows == 0 {
        return Err(Error::contract("edge attention over an empty graph"));
    }
    let mut outputs = Vec::with_capacity(heads.len());
    let mut attention = Vec::with_capacity(heads.len());
    for head in heads {
        let q = tape.matmul(h, head.query)?;
        let k = tape.matmul(h, head.key)?;
        let v = tape.matmul(h, head.value)?;
        let d_k = tape.value(head.query).shape()[1];
        let kt = tape.transpose(k)?;
        let scores = tape.matmul(q, kt)?;
        let scaled = tape.scale(scores, 1.0 / (d_k as f64).sqrt());
        let weights = tape.softmax(scaled, 1)?;
        outputs.push(tape.matmul(weights, v)?);
        attention.push(weights);
    }
    Ok((tape.concat_cols(&outputs)?, attention))
}

/// Node attention `β = softmax_p(linear(v_p))`, as an `l × 1` column.
pub fn record_node_attention(tape: &Tape<'_>, head: &BoundLinear, v: Var) -> Result<Var> {
    let logits = tape.linear(v, head.weight, head.bias)?;
    tape.softmax(logits, 0)
}

/// `Σ_p β_p · v_p` as `1 × d_m`.
pub fn record_aggregate(tape: &Tape<'_>, v: Var, beta: Var) -> Result<Var> {
    let bt = tape.transpose(beta)?;
    tape.matmul(bt, v)
}

/// Label distribution `softmax(linear(pooled))` as `1 × 3`.
pub fn record_label(tape: &Tape<'_>, head: &BoundLinear, pooled: Var) -> Result<Var> {
    let logits = tape.linear(pooled, head.weight, head.bias)?;
    tape.softmax(logits, 1)
}

fn bind_linear<'a>(tape: &Tape<'a>, lin: &'a LinearParams) -> BoundLinear {
    BoundLinear {
        weight: tape.leaf(&lin.weight, false),
        bias: tape.leaf(&lin.bias, false),
    }
}

/// CO-SCO of one node: the "relevant" probability of the two-class head.
pub fn confidence_score(h_p: &[f64], head: &LinearParams) -> Result<f64> {
    let tape = Tape::new();
    let lin = bind_linear(&tape, head);
    let h = tape.constant(Tensor::row(h_p));
    let probs = record_confidence(&tape, &lin, h)?;
    let co = tape.value(probs).data()[1];
    Ok(co)
}

/// `(alpha·co)·h_p + (1 − alpha·co)·h_b`, componentwise.
pub fn mask_node(h_p: &[f64], h_b: &[f64], co_sco: f64, alpha: f64) -> Result<Vec<f64>> {
    check_unit("co_sco", co_sco)?;
    check_unit("alpha", alpha)?;
    if h_p.len() != h_b.len() {
        return Err(Error::shape("mask_node", &[h_p.len()], &[h_b.len()]));
    }
    let keep = alpha * co_sco + 0.0;
    let replace = -keep + 1.0;
    Ok(h_p.iter().zip(h_b).map(|(p, b)| keep * p + replace * b).collect())
}

/// `h_p` when `co_sco ≥ 0.5`, otherwise `h_b`.
pub fn hard_mask(h_p: &[f64], h_b: &[f64], co_sco: f64) -> Vec<f64> {
    if co_sco >= HARD_MASK_THRESHOLD {
        h_p.to_vec()
    } else {
        h_b.to_vec()
    }
}

/// Edge attention outside a tape. Returns `(V, per-head attention)`.
pub fn edge_attention(h: &Tensor, heads: &[HeadParams]) -> Result<(Tensor, Vec<Tensor>)> {
    let tape = Tape::new();
    let bound: Vec<BoundHead> = heads
        .iter()
        .map(|p| BoundHead {
            query: tape.leaf(&p.query, false),
            key: tape.leaf(&p.key, false),
            value: tape.leaf(&p.value, false),
        })
        .collect();
    let hv = tape.leaf(h, false);
    let (v, attn) = record_edge_attention(&tape, &bound, hv)?;
    let out = tape.value(v).clone();
    let attn = attn.iter().map(|a| tape.value(*a).clone()).collect();
    Ok((out, attn))
}

/// Node attention weights outside a tape.
pub fn node_attention(v: &Tensor, head: &LinearParams) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let lin = bind_linear(&tape, head);
    let vv = tape.leaf(v, false);
    let beta = record_node_attention(&tape, &lin, vv)?;
    let out = tape.value(beta).data().to_vec();
    Ok(out)
}

/// Probability-weighted row sum outside a tape.
pub fn aggregate(v: &Tensor, beta: &[f64]) -> Result<Vec<f64>> {
    let (rows, _) = v.dims2()?;
    if beta.len() != rows {
        return Err(Error::shape("aggregate", v.shape(), &[beta.len()]));
    }
    let tape = Tape::new();
    let vv = tape.leaf(v, false);
    let b = tape.constant(Tensor::matrix(rows, 1, beta.to_vec())?);
    let pooled = record_aggregate(&tape, vv, b)?;
    let out = tape.value(pooled).data().to_vec();
    Ok(out)
}

/// Label distribution and its argmax (ties go to the lowest class index).
pub fn predict_label(pooled: &[f64], head: &LinearParams) -> Result<([f64; 3], Label)> {
    let tape = Tape::new();
    let lin = bind_linear(&tape, head);
    let x = tape.constant(Tensor::row(pooled));
    let probs = record_label(&tape, &lin, x)?;
    let p = tape.value(probs);
    let probs = [p.data()[0], p.data()[1], p.data()[2]];
    Ok((probs, argmax_label(&probs)))
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmax_label(probs: &[f64; 3]) -> Label {
    Label::from_index(argmax(probs)).expect("three classes")
}
