//! Multi-task objective, minibatch Adam training with early stopping on dev
//! FEVER, and evaluation.

mod eval;
mod loss;
mod trainer;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MaskMode, DEFAULT_MAX_EVIDENCE};

pub use eval::{evaluate, evaluate_encoded, evaluate_with, select_evidence, to_record, Evaluation, EVIDENCE_THRESHOLD};
pub use loss::{multi_task_loss, record_loss, LossParts};
pub use trainer::{train, train_with_monitor, DevSnapshot, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Optimizer steps between dev evaluations.
    pub eval_interval: usize,
    /// Consecutive non-improving evaluations tolerated before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: MaskMode,
    pub use_evidence_loss: bool,
    pub l_max: usize,
    /// Confidence scaling applied during training and dev evaluation.
    pub alpha: f64,
    /// Hard cap on optimizer steps, independent of epochs.
    pub max_steps: Option<usize>,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            eval_interval: 1000,
            patience: 5,
            batch_size: 16,
            learning_rate: 5e-5,
            seed: 0,
            mode: MaskMode::Soft,
            use_evidence_loss: true,
            l_max: DEFAULT_MAX_EVIDENCE,
            alpha: 1.0,
            max_steps: None,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    /// Settings for the few-hundred-claim synthetic corpora: a larger step
    /// size and frequent dev checks, bounded at 2000 steps.
    pub fn synthetic(seed: u64, mode: MaskMode) -> Self {
        Self {
            epochs: 1000,
            eval_interval: 50,
            patience: 10,
            learning_rate: 1e-2,
            seed,
            mode,
            max_steps: Some(2000),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("eval_interval", self.eval_interval),
            ("patience", self.patience),
            ("batch_size", self.batch_size),
            ("l_max", self.l_max),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.max_steps == Some(0) {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config(format!("clip_norm must be positive, got {}", self.clip_norm)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    /// Mean training loss over the steps since the previous entry.
    pub loss: f64,
    pub dev_acc: f64,
    pub dev_fever: f64,
    pub mean_cosco_gold: f64,
    pub mean_cosco_noise: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub entries: Vec<LogEntry>,
    /// Batch loss of every optimizer step.
    pub step_losses: Vec<f64>,
}

pub const TRAIN_LOG_HEADER: &str = "step,loss,dev_acc,dev_fever,mean_cosco_gold,mean_cosco_noise";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.step, e.loss, e.dev_acc, e.dev_fever, e.mean_cosco_gold, e.mean_cosco_noise
            );
        }
        out
    }

    pub fn best_dev_fever(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.dev_fever).reduce(f64::max)
    }
}
