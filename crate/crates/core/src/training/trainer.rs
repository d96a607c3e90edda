use rand::seq::SliceRandom;

use super::eval::evaluate_encoded;
use super::loss::record_loss;
use super::{LogEntry, TrainConfig, TrainLog};
use crate::data::{build_graphs, ClaimInstance};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{record_forward, EncodedGraph, ModelConfig, ModelParams, ReasoningGraph};
use crate::numerics::{clip_global_norm, seeded_rng, AdamState, Tape, Tensor};

/// Offsets the minibatch-shuffle seed from the initialization seed.
const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Dev-set measurements taken at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevSnapshot {
    pub accuracy: f64,
    pub fever: f64,
    pub mean_cosco_gold: f64,
    pub mean_cosco_noise: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best dev FEVER evaluation.
    pub params: ModelParams,
    pub log: TrainLog,
    pub steps: usize,
    pub best_step: usize,
    pub stopped_early: bool,
    /// Cross-entropy evaluations that hit the probability floor.
    pub floor_hits: usize,
}

fn dev_snapshot(
    params: &ModelParams,
    graphs: &[ReasoningGraph],
    encoded: &[EncodedGraph],
    config: &TrainConfig,
) -> Result<DevSnapshot> {
    let eval = evaluate_encoded(params, graphs, encoded, config.mode, config.alpha, Execution::Parallel)?;
    let (mut gold, mut noise) = (Vec::new(), Vec::new());
    for (g, inf) in graphs.iter().zip(&eval.inferences) {
        if g.is_padded() {
            continue;
        }
        for (node, &co) in g.evidence.iter().zip(inf.co_scos()) {
            if node.relevant {
                gold.push(co);
            } else {
                noise.push(co);
            }
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(DevSnapshot {
        accuracy: eval.metrics.label_accuracy,
        fever: eval.metrics.fever_score,
        mean_cosco_gold: mean(&gold),
        mean_cosco_noise: mean(&noise),
    })
}

/// Trains a fresh model and selects the checkpoint with the best dev FEVER.
pub fn train(
    train_set: &[ClaimInstance],
    dev_set: &[ClaimInstance],
    model: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if dev_set.is_empty() {
        return Err(Error::contract("empty dev set"));
    }
    let dev_graphs = build_graphs(dev_set, config.l_max)?;
    let dev_encoded = dev_graphs
        .iter()
        .map(|g| EncodedGraph::new(g, model.d_v))
        .collect::<Result<Vec<_>>>()?;
    train_with_monitor(train_set, model, config, |params| {
        dev_snapshot(params, &dev_graphs, &dev_encoded, config)
    })
}

/// [`train`] with a caller-supplied dev measurement.
///
/// Evaluations happen every `eval_interval` steps and once more after the
/// last step if it was not already evaluated. Training stops after
/// `patience` consecutive evaluations without a strictly better dev FEVER.
pub fn train_with_monitor<M>(
    train_set: &[ClaimInstance],
    model: ModelConfig,
    config: &TrainConfig,
    mut monitor: M,
) -> Result<TrainOutcome>
where
    M: FnMut(&ModelParams) -> Result<DevSnapshot>,
{
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::contract("empty training set"));
    }
    let graphs = build_graphs(train_set, config.l_max)?;
    let encoded = graphs
        .iter()
        .map(|g| EncodedGraph::new(g, model.d_v))
        .collect::<Result<Vec<_>>>()?;
    let relevance: Vec<Vec<usize>> = graphs
        .iter()
        .map(|g| if g.is_padded() { Vec::new() } else { g.gold_relevance() })
        .collect();

    let mut params = ModelParams::init(model, config.seed)?;
    let mut adam = AdamState::new(params.tensors().into_iter().map(|(_, t)| t), config.learning_rate);
    let mut rng = seeded_rng(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..graphs.len()).collect();

    let mut log = TrainLog::default();
    let mut best: Option<(f64, ModelParams, usize)> = None;
    let mut stale = 0;
    let mut step = 0;
    let mut since_eval: Vec<f64> = Vec::new();
    let mut stopped_early = false;
    let mut floor_hits = 0;
    let max_steps = config.max_steps.unwrap_or(usize::MAX);

    let mut evaluate = |params: &ModelParams, step: usize, losses: &mut Vec<f64>, log: &mut TrainLog| -> Result<bool> {
        let snap = monitor(params)?;
        let loss = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
        losses.clear();
        log.entries.push(LogEntry {
            step,
            loss,
            dev_acc: snap.accuracy,
            dev_fever: snap.fever,
            mean_cosco_gold: snap.mean_cosco_gold,
            mean_cosco_noise: snap.mean_cosco_noise,
        });
        log::info!(
            "step {step}: loss {loss:.4} dev acc {:.4} fever {:.4}",
            snap.accuracy,
            snap.fever
        );
        let improved = best.as_ref().is_none_or(|(b, _, _)| snap.fever > *b);
        if improved {
            best = Some((snap.fever, params.clone(), step));
            stale = 0;
        } else {
            stale += 1;
        }
        Ok(stale >= config.patience)
    };

    'epochs: for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            if step >= max_steps {
                break 'epochs;
            }
            let (value, mut grads) = {
                let tape = Tape::new();
                let bound = params.bind(&tape, true);
                let mut losses = Vec::with_capacity(batch.len());
                for &i in batch {
                    let vars = record_forward(&tape, &bound, &encoded[i], config.mode, config.alpha)?;
                    losses.push(record_loss(
                        &tape,
                        &vars,
                        graphs[i].gold_label,
                        &relevance[i],
                        config.use_evidence_loss,
                    )?);
                }
                let total = tape.add_all(&losses)?;
                let loss = tape.scale(total, 1.0 / batch.len() as f64);
                let value = tape.scalar(loss);
                if !value.is_finite() {
                    return Err(Error::Numeric(format!("non-finite training loss {value} at step {step}")));
                }
                let mut g = tape.backward(loss)?;
                floor_hits += tape.floor_hits();
                let grads: Vec<Option<Tensor>> = bound
                    .leaves
                    .iter()
                    .map(|&leaf| {
                        Some(g.take(leaf).unwrap_or_else(|| Tensor::zeros(tape.value(leaf).shape())))
                    })
                    .collect();
                (value, grads)
            };
            clip_global_norm(&mut grads, config.clip_norm);
            adam.step(&mut params.tensors_mut(), &mut grads)?;
            if !params.is_finite() {
                return Err(Error::Numeric(format!("non-finite parameters after step {step}")));
            }
            step += 1;
            log.step_losses.push(value);
            since_eval.push(value);
            if step % config.eval_interval == 0 && evaluate(&params, step, &mut since_eval, &mut log)? {
                stopped_early = true;
                break 'epochs;
            }
        }
    }
    if log.entries.last().is_none_or(|e| e.step != step) {
        evaluate(&params, step, &mut since_eval, &mut log)?;
    }
    let (_, best_params, best_step) = best.expect("at least one evaluation ran");
    Ok(TrainOutcome {
        params: best_params,
        log,
        steps: step,
        best_step,
        stopped_early,
        floor_hits,
    })
}
