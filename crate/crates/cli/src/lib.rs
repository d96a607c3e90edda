//! Command-line surface: synth, train, eval, analyze and score.
//!
//! Every command writes its artifacts into an output directory and prints a
//! short summary. Errors map to exit codes via [`exit_code`].

pub mod config;

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use cogat::data::{build_graphs, label_histogram, load_claims, read_jsonl, save_claims, synth_dataset, write_jsonl};
use cogat::graph::{MaskMode, ModelParams};
use cogat::metrics::{entropy_comparison, entropy_csv, nei_tendency, scaling_sweep, EvalRecord, MetricsBundle};
use cogat::numerics::Checkpoint;
use cogat::training::{evaluate, train};
use cogat::{Error, Execution, Result};
use serde_json::json;

pub use config::{EvalSettings, RunConfig, DEFAULT_ALPHAS, RESOLVED_CONFIG};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ENTROPY_FILE: &str = "entropy.csv";
pub const NEI_CURVE_FILE: &str = "nei_curve.csv";

#[derive(Debug, Parser)]
#[command(name = "cogat", version, about = "Confidence-masked graph attention fact verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic train/dev/test corpus as JSONL.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        noise_rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model from a key = value config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override a config entry; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Score a checkpoint on a claims file.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the mode the checkpoint was trained with.
        #[arg(long)]
        mode: Option<MaskMode>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Run config whose model dimensions must match the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Confidence-scaling sweep, attention entropy and NEI tendency reports.
    /// With no report flag, all three are written.
    Analyze {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated, strictly increasing values in [0, 1].
        #[arg(long, value_name = "A,B,..")]
        sweep_alphas: Option<String>,
        #[arg(long)]
        entropy: bool,
        /// Second checkpoint (e.g. a no_mask model) for the entropy comparison.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        nei_curve: bool,
    },
    /// Score prediction records against gold claims.
    Score {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
}

/// 2 for bad input, 3 for incompatible artifacts, 4 for numeric failure.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Incompatible(_) => 3,
        Error::Numeric(_) => 4,
        _ => 2,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth {
            seed,
            n,
            noise_rate,
            out: dir,
        } => cmd_synth(seed, n, noise_rate, &dir, out),
        Command::Train { config, set } => cmd_train(&config, &set, out),
        Command::Eval {
            checkpoint,
            data,
            out: dir,
            mode,
            alpha,
            config,
        } => cmd_eval(&checkpoint, &data, &dir, mode, alpha, config.as_deref(), out),
        Command::Analyze {
            checkpoint,
            data,
            out: dir,
            sweep_alphas,
            entropy,
            baseline,
            nei_curve,
        } => {
            let all = sweep_alphas.is_none() && !entropy && !nei_curve;
            let reports = Reports {
                sweep: match sweep_alphas {
                    Some(text) => Some(config::parse_alphas(&text)?),
                    None if all => Some(Vec::new()),
                    None => None,
                },
                entropy: entropy || all,
                baseline,
                nei_curve: nei_curve || all,
            };
            cmd_analyze(&checkpoint, &data, &dir, &reports, out)
        }
        Command::Score { predictions, gold } => cmd_score(&predictions, &gold, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}

pub fn cmd_synth(seed: u64, n: usize, noise_rate: f64, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let (train_set, dev, test) = synth_dataset(seed, n, noise_rate)?;
    create_dir(dir)?;
    for (name, split) in [("train", &train_set), ("dev", &dev), ("test", &test)] {
        let path = dir.join(format!("{name}.jsonl"));
        save_claims(&path, split)?;
        let [s, r, nei] = label_histogram(split);
        emit(
            out,
            &format!("{name:<5} {:>5} claims (S {s} / R {r} / NEI {nei}) -> {}\n", split.len(), path.display()),
        )?;
    }
    Ok(())
}

pub fn cmd_train(config_path: &Path, overrides: &[String], out: &mut dyn Write) -> Result<()> {
    let config = RunConfig::load(config_path, overrides)?;
    require_file(&config.train_path)?;
    require_file(&config.dev_path)?;
    create_dir(&config.out_dir)?;
    write_file(&config.out_dir.join(RESOLVED_CONFIG), &config.to_text())?;

    let train_set = load_claims(&config.train_path)?;
    let dev = load_claims(&config.dev_path)?;
    let outcome = train(&train_set, &dev, config.model, &config.train)?;
    let t = &config.train;
    let meta = json!({
        "mode": t.mode.as_str(),
        "alpha": t.alpha,
        "l_max": t.l_max,
        "seed": t.seed,
        "steps": outcome.steps,
        "best_step": outcome.best_step,
    });
    let ckpt = outcome.params.to_checkpoint(meta);
    ckpt.save(&config.out_dir.join(CHECKPOINT_FILE))?;
    write_file(&config.out_dir.join(TRAIN_LOG_FILE), &outcome.log.to_csv())?;

    let best = outcome.log.best_dev_fever().unwrap_or(0.0);
    emit(
        out,
        &format!(
            "trained {} steps{}; best dev FEVER {best:.4} at step {}\n",
            outcome.steps,
            if outcome.stopped_early { " (early stop)" } else { "" },
            outcome.best_step
        ),
    )?;
    if outcome.floor_hits > 0 {
        emit(out, &format!("warning: {} cross-entropy terms hit the log floor\n", outcome.floor_hits))?;
    }
    emit(out, &format!("artifacts in {}\n", config.out_dir.display()))
}

/// Parameters plus the evaluation settings recorded at training time.
pub fn load_model(path: &Path) -> Result<(ModelParams, EvalSettings)> {
    require_file(path)?;
    let ckpt = Checkpoint::load(path)?;
    let params = ModelParams::from_checkpoint(&ckpt)?;
    let run = &ckpt.meta["run"];
    let mode = match run["mode"].as_str() {
        Some(m) => m.parse().map_err(|e: Error| Error::Incompatible(e.to_string()))?,
        None => MaskMode::Soft,
    };
    let settings = EvalSettings {
        mode,
        alpha: run["alpha"].as_f64().unwrap_or(1.0),
        l_max: run["l_max"].as_u64().map_or(cogat::graph::DEFAULT_MAX_EVIDENCE, |l| l as usize),
    };
    Ok((params, settings))
}

pub fn cmd_eval(
    checkpoint: &Path,
    data: &Path,
    dir: &Path,
    mode: Option<MaskMode>,
    alpha: Option<f64>,
    config: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let run_config = config.map(|p| RunConfig::load(p, &[])).transpose()?;
    require_file(data)?;
    let (params, mut settings) = load_model(checkpoint)?;
    if let Some(rc) = &run_config {
        if rc.model != params.config {
            return Err(Error::Incompatible(format!(
                "config model {:?} does not match checkpoint model {:?}",
                rc.model, params.config
            )));
        }
        settings = EvalSettings {
            mode: rc.train.mode,
            alpha: rc.train.alpha,
            l_max: rc.train.l_max,
        };
    }
    settings.mode = mode.unwrap_or(settings.mode);
    settings.alpha = alpha.unwrap_or(settings.alpha);
    if !(0.0..=1.0).contains(&settings.alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", settings.alpha)));
    }

    let graphs = build_graphs(&load_claims(data)?, settings.l_max)?;
    let eval = evaluate(&params, &graphs, settings.mode, settings.alpha, Execution::Parallel)?;
    create_dir(dir)?;
    write_file(&dir.join(METRICS_FILE), &eval.metrics.to_json())?;
    write_jsonl(&dir.join(RECORDS_FILE), &eval.records)?;
    emit(out, &MetricsBundle::from_records(&eval.records)?.to_text())
}

/// Which analysis reports to produce. An empty sweep grid means the default grid.
#[derive(Debug, Clone, Default)]
pub struct Reports {
    pub sweep: Option<Vec<f64>>,
    pub entropy: bool,
    pub baseline: Option<PathBuf>,
    pub nei_curve: bool,
}

pub fn cmd_analyze(checkpoint: &Path, data: &Path, dir: &Path, reports: &Reports, out: &mut dyn Write) -> Result<()> {
    require_file(data)?;
    let (params, settings) = load_model(checkpoint)?;
    let baseline = reports.baseline.as_deref().map(load_model).transpose()?;
    let graphs = build_graphs(&load_claims(data)?, settings.l_max)?;
    create_dir(dir)?;

    if let Some(grid) = &reports.sweep {
        let grid = if grid.is_empty() { DEFAULT_ALPHAS.to_vec() } else { grid.clone() };
        let sweep = scaling_sweep(&params, &graphs, &grid, Execution::Parallel)?;
        let path = dir.join(SWEEP_FILE);
        write_file(&path, &sweep.to_csv())?;
        emit(out, &format!("{:>6}  {:>8}  {:>8}  {:>8}\n", "alpha", "nei", "acc", "edge_H"))?;
        for r in &sweep.rows {
            emit(
                out,
                &format!(
                    "{:>6}  {:>8.4}  {:>8.4}  {:>8.4}\n",
                    r.alpha, r.nei_fraction, r.label_accuracy, r.edge_entropy
                ),
            )?;
        }
        emit(out, &format!("sweep -> {}\n", path.display()))?;
    }
    if reports.entropy {
        let mut models = vec![("model", &params, settings.mode)];
        if let Some((p, s)) = &baseline {
            models.push(("baseline", p, s.mode));
        }
        let rows = entropy_comparison(&models, &graphs, Execution::Parallel)?;
        let path = dir.join(ENTROPY_FILE);
        write_file(&path, &entropy_csv(&rows))?;
        for r in &rows {
            emit(
                out,
                &format!(
                    "{} ({}): edge entropy {:.4}, node entropy {:.4}\n",
                    r.model, r.mode, r.edge_entropy, r.node_entropy
                ),
            )?;
        }
        emit(out, &format!("entropy -> {}\n", path.display()))?;
    }
    if reports.nei_curve {
        let curve = nei_tendency(&params, &graphs, settings.mode, Execution::Parallel)?;
        let path = dir.join(NEI_CURVE_FILE);
        write_file(&path, &curve.to_csv())?;
        emit(out, &format!("nei curve -> {}\n", path.display()))?;
    }
    Ok(())
}

/// Joins predictions to gold claims by id and prints the metrics.
///
/// Gold fields inside the prediction lines are ignored; the gold file is
/// authoritative. Every gold claim needs exactly one prediction.
pub fn cmd_score(predictions: &Path, gold: &Path, out: &mut dyn Write) -> Result<()> {
    require_file(predictions)?;
    let gold_claims = load_claims(gold)?;
    let parse_error = |line: usize, message: String| Error::Parse {
        path: predictions.to_path_buf(),
        line,
        message,
    };
    let mut by_id: HashMap<u64, (usize, EvalRecord)> = HashMap::new();
    for (line, rec) in read_jsonl::<EvalRecord>(predictions)? {
        rec.validate().map_err(|e| parse_error(line, e.to_string()))?;
        if let Some((first, _)) = by_id.get(&rec.id) {
            return Err(parse_error(line, format!("claim {} already predicted on line {first}", rec.id)));
        }
        by_id.insert(rec.id, (line, rec));
    }
    let mut records = Vec::with_capacity(gold_claims.len());
    for claim in &gold_claims {
        let (_, rec) = by_id
            .remove(&claim.id)
            .ok_or_else(|| Error::Config(format!("no prediction for claim {}", claim.id)))?;
        records.push(EvalRecord {
            gold_label: claim.label,
            gold_evidence_groups: claim.gold_evidence_groups.clone(),
            ..rec
        });
    }
    if let Some((line, rec)) = by_id.values().min_by_key(|(line, _)| *line) {
        return Err(parse_error(*line, format!("claim {} is not in {}", rec.id, gold.display())));
    }
    emit(out, &MetricsBundle::from_records(&records)?.to_text())
}
