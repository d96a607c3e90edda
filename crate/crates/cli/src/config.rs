//! `key = value` run configuration with `--set key=value` overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected so typos surface before any compute.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cogat::graph::{default_heads, MaskMode, ModelConfig};
use cogat::training::TrainConfig;
use cogat::{Error, Result};

pub const RESOLVED_CONFIG: &str = "config.resolved";
pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train_path: PathBuf,
    pub dev_path: PathBuf,
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Scaling grid used by `analyze` when none is given on the command line.
    pub alphas: Vec<f64>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

pub fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::Config("alphas: empty list".into()));
    }
    text.split(',').map(|a| parse_value("alphas", a.trim())).collect()
}

fn format_alphas(alphas: &[f64]) -> String {
    alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Splits `key = value`, trimming both sides.
pub fn split_assignment(line: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key = value, got {line:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Ordered key/value pairs of a config file followed by overrides.
pub fn read_assignments(path: &Path, overrides: &[String]) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let pair = split_assignment(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        pairs.push(pair);
    }
    for o in overrides {
        pairs.push(split_assignment(o)?);
    }
    Ok(pairs)
}

impl RunConfig {
    /// Later assignments win. `heads` defaults by `d_m` when unset.
    pub fn from_assignments(pairs: &[(String, String)]) -> Result<Self> {
        let (mut train_path, mut dev_path, mut out_dir) = (None, None, None);
        let mut model = ModelConfig::new(64);
        let mut heads = None;
        let mut t = TrainConfig::default();
        let mut alphas = DEFAULT_ALPHAS.to_vec();
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "train_path" => train_path = Some(PathBuf::from(v)),
                "dev_path" => dev_path = Some(PathBuf::from(v)),
                "out_dir" => out_dir = Some(PathBuf::from(v)),
                "d_m" => model.d_m = parse_value(key, v)?,
                "d_v" => model.d_v = parse_value(key, v)?,
                "heads" => heads = Some(parse_value(key, v)?),
                "layers" => model.layers = parse_value(key, v)?,
                "epochs" => t.epochs = parse_value(key, v)?,
                "eval_interval" => t.eval_interval = parse_value(key, v)?,
                "patience" => t.patience = parse_value(key, v)?,
                "batch_size" => t.batch_size = parse_value(key, v)?,
                "learning_rate" => t.learning_rate = parse_value(key, v)?,
                "seed" => t.seed = parse_value(key, v)?,
                "mode" => t.mode = v.parse()?,
                "use_evidence_loss" => t.use_evidence_loss = parse_value(key, v)?,
                "l_max" => t.l_max = parse_value(key, v)?,
                "alpha" => t.alpha = parse_value(key, v)?,
                "max_steps" => t.max_steps = if v == "none" { None } else { Some(parse_value(key, v)?) },
                "clip_norm" => t.clip_norm = parse_value(key, v)?,
                "alphas" => alphas = parse_alphas(v)?,
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        model.heads = heads.unwrap_or_else(|| default_heads(model.d_m));
        let missing = |name: &str| Error::Config(format!("{name} is required"));
        let config = Self {
            train_path: train_path.ok_or_else(|| missing("train_path"))?,
            dev_path: dev_path.ok_or_else(|| missing("dev_path"))?,
            out_dir: out_dir.ok_or_else(|| missing("out_dir"))?,
            model,
            train: t,
            alphas,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::from_assignments(&read_assignments(path, overrides)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) || self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "alphas must be strictly increasing values in [0, 1], got {}",
                format_alphas(&self.alphas)
            )));
        }
        Ok(())
    }

    /// Every field, one per line, in a fixed order; loads back to the same config.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let m = &self.model;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("train_path", self.train_path.display().to_string());
        put("dev_path", self.dev_path.display().to_string());
        put("out_dir", self.out_dir.display().to_string());
        put("d_m", m.d_m.to_string());
        put("d_v", m.d_v.to_string());
        put("heads", m.heads.to_string());
        put("layers", m.layers.to_string());
        put("epochs", t.epochs.to_string());
        put("eval_interval", t.eval_interval.to_string());
        put("patience", t.patience.to_string());
        put("batch_size", t.batch_size.to_string());
        put("learning_rate", t.learning_rate.to_string());
        put("seed", t.seed.to_string());
        put("mode", t.mode.to_string());
        put("use_evidence_loss", t.use_evidence_loss.to_string());
        put("l_max", t.l_max.to_string());
        put("alpha", t.alpha.to_string());
        put("max_steps", t.max_steps.map_or("none".into(), |s| s.to_string()));
        put("clip_norm", t.clip_norm.to_string());
        put("alphas", format_alphas(&self.alphas));
        out
    }
}

/// Mode, alpha and evidence cap recorded with a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub mode: MaskMode,
    pub alpha: f64,
    pub l_max: usize,
}
