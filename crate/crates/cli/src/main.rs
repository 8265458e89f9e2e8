//! Command-line driver: train / compare / eval / plot.
//!
//! Exit codes: 0 success, 1 usage or config problem, 2 numeric failure,
//! 3 i/o failure. `AUCTION_GAN_THREADS` caps the worker pool (results are
//! identical for any cap).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use auction_gan::config::{coerce_scalar, load_config_overlay};
use auction_gan::experiment::{train_run_with, OutputOptions};
use auction_gan::{
    checkpoint, compare_run, plot, Error, GanPair, Mat, MetricsRecord, SeededRng, TrainConfig,
};

mod csvread;

#[derive(Parser)]
#[command(
    name = "auction-gan",
    version,
    about = "Train ensembles of GAN pairs on a 2D Gaussian ring with auction-style cross-valuation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one ensemble and write run artifacts.
    Train(TrainArgs),
    /// Run classic vs proposed arms over several seeds and tabulate.
    Compare(CompareArgs),
    /// Recompute metrics from a checkpoint directory.
    Eval(EvalArgs),
    /// Render SVG plots from run artifacts.
    Plot(PlotArgs),
}

/// Flags that override config-file keys (flag > file > default).
#[derive(Args, Default)]
struct ConfigFlags {
    /// Config file: JSON (run.json accepted) or flat `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Model kind: gan | wgan.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n_gans: Option<usize>,
    /// Weight of the best-discriminator loss-matching term.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lot_size: Option<usize>,
    /// Disable the valuation round (classic training, same update count).
    #[arg(long)]
    baseline: bool,
    /// Standardize each discriminator's bids before scoring: none | zscore.
    #[arg(long, value_name = "MODE", num_args = 0..=1, default_missing_value = "zscore")]
    normalize_bids: Option<String>,
    /// Use the literal saturating generator loss.
    #[arg(long)]
    saturating: bool,
    /// Loss-matching granularity: per_sample | scalar.
    #[arg(long, value_name = "GRAIN")]
    aux_granularity: Option<String>,
    #[arg(long)]
    hidden_width: Option<usize>,
    #[arg(long)]
    steps_per_epoch: Option<usize>,
    #[arg(long)]
    n_data: Option<usize>,
    #[arg(long)]
    n_eval: Option<usize>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    checkpoint_interval: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Critic parameter clamp bound (wgan only).
    #[arg(long)]
    weight_clip: Option<f64>,
    /// Critic updates per generator update (wgan only).
    #[arg(long)]
    n_critic: Option<usize>,
    #[arg(long)]
    gmm_modes: Option<usize>,
    #[arg(long)]
    gmm_radius: Option<f64>,
    #[arg(long)]
    gmm_std: Option<f64>,
    /// Worker cap (otherwise AUCTION_GAN_THREADS, otherwise all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigFlags {
    fn overlay(&self) -> Map<String, Value> {
        let mut map = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        put("seed", self.seed.map(Value::from));
        put(
            "model",
            self.model.as_deref().map(|m| coerce_scalar(m)),
        );
        put("n_gans", self.n_gans.map(Value::from));
        put("lambda", self.lambda.map(Value::from));
        put("epochs", self.epochs.map(Value::from));
        put("batch_size", self.batch_size.map(Value::from));
        put("lot_size", self.lot_size.map(Value::from));
        if self.baseline {
            put("baseline", Some(Value::Bool(true)));
        }
        put(
            "normalize_bids",
            self.normalize_bids.as_deref().map(|m| coerce_scalar(m)),
        );
        if self.saturating {
            put("saturating", Some(Value::Bool(true)));
        }
        put(
            "aux_granularity",
            self.aux_granularity.as_deref().map(|m| coerce_scalar(m)),
        );
        put("hidden_width", self.hidden_width.map(Value::from));
        put("steps_per_epoch", self.steps_per_epoch.map(Value::from));
        put("n_data", self.n_data.map(Value::from));
        put("n_eval", self.n_eval.map(Value::from));
        put("eval_interval", self.eval_interval.map(Value::from));
        put(
            "checkpoint_interval",
            self.checkpoint_interval.map(Value::from),
        );
        put("learning_rate", self.learning_rate.map(Value::from));
        put("weight_clip", self.weight_clip.map(Value::from));
        put("n_critic", self.n_critic.map(Value::from));
        put("gmm_modes", self.gmm_modes.map(Value::from));
        put("gmm_radius", self.gmm_radius.map(Value::from));
        put("gmm_std", self.gmm_std.map(Value::from));
        put("threads", self.threads.map(Value::from));
        map
    }

    fn resolve(&self) -> Result<TrainConfig, Error> {
        let mut overlays = Vec::new();
        if let Some(path) = &self.config {
            overlays.push(load_config_overlay(path)?);
        }
        overlays.push(self.overlay());
        TrainConfig::from_overlays(&overlays)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigFlags,
    /// Output directory for run artifacts.
    #[arg(long, default_value = "runs/run")]
    out: PathBuf,
    /// Suppress per-epoch progress lines.
    #[arg(long)]
    quiet: bool,
    /// Also write auction_bids.csv / auction_scores.csv.
    #[arg(long)]
    dump_auction: bool,
    /// Also write the training dataset as dataset.csv.
    #[arg(long)]
    dump_dataset: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    cfg: ConfigFlags,
    /// Seeds, comma separated (one classic + one proposed run each).
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, default_value = "runs/compare")]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint directory (one `epoch_NNNNN` under `checkpoints/`).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Evaluation seed; defaults to the training run's own seed
    /// (bit-identical re-evaluation).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_eval: Option<usize>,
    /// Optional JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Run directories. One: per-pair scatters + its coverage curves.
    /// Two: first is drawn solid (classic), second dashed (proposed).
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Output directory for the SVG files.
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Plot(args) => cmd_plot(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(e.exit_code());
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let cfg = args.cfg.resolve()?;
    let quiet = args.quiet;
    let epochs = cfg.epochs;
    let mut last_mean_ll: Option<f64> = None;
    let mut on_epoch = move |report: &auction_gan::EpochReport| {
        if let Some(metrics) = &report.metrics {
            let lls: Vec<f64> = metrics.iter().map(|m| m.mean_log_likelihood).collect();
            last_mean_ll = Some(lls.iter().sum::<f64>() / lls.len() as f64);
        }
        if quiet {
            return;
        }
        let (best, best_score, mean_score) = match &report.auction {
            Some(a) => {
                let mean = a.scores.iter().sum::<f64>() / a.scores.len() as f64;
                (
                    format!("g{}", a.best_index),
                    format!("{:+.4}", a.scores[a.best_index]),
                    format!("{mean:+.4}"),
                )
            }
            None => ("-".into(), "-".into(), "-".into()),
        };
        let ll = last_mean_ll
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "epoch {:>4}/{epochs}  best={best}  best_score={best_score}  mean_score={mean_score}  mean_ll={ll}",
            report.epoch
        );
    };
    let artifacts = train_run_with(
        &cfg,
        &args.out,
        OutputOptions {
            dump_auction: args.dump_auction,
            dump_dataset: args.dump_dataset,
        },
        &mut on_epoch,
    )?;
    if !args.quiet {
        let e = &artifacts.summary.ensemble;
        println!(
            "done: mean_ll={:.3} min_ll={:.3} coverage_w1={} covered_modes={:.2}",
            e.mean_likelihood,
            e.min_likelihood,
            e.mean_coverage_w1
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "n/a".into()),
            e.mean_covered_modes
        );
        println!("artifacts in {}", artifacts.out_dir.display());
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let cfg = args.cfg.resolve()?;
    let quiet = args.quiet;
    let report = compare_run(&cfg, &args.seeds, &args.out, |msg| {
        if !quiet {
            println!("{msg}");
        }
    })?;
    println!("{}", report.table());
    println!("comparison.json in {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Error> {
    let records =
        auction_gan::experiment::evaluate_checkpoint(&args.checkpoint, args.seed, args.n_eval)?;
    for r in &records {
        println!(
            "gan {:>2}: mean_ll={:+.4} coverage_w1={} covered_modes={} assigned={} unassigned={}",
            r.gan_id,
            r.mean_log_likelihood,
            r.coverage_w1
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "n/a".into()),
            r.covered_modes,
            r.histogram.assigned(),
            r.histogram.unassigned,
        );
    }
    let lls: Vec<f64> = records.iter().map(|r| r.mean_log_likelihood).collect();
    let mean = lls.iter().sum::<f64>() / lls.len() as f64;
    let min = lls.iter().copied().fold(f64::INFINITY, f64::min);
    println!("ensemble: mean_ll={mean:+.4} min_ll={min:+.4}");
    if let Some(path) = args.out {
        let body = serde_json::to_string_pretty(&records).expect("records serialize");
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// The pieces of a run directory the plot command needs.
struct RunData {
    label: String,
    config: TrainConfig,
    coverage: BTreeMap<usize, Vec<(usize, f64)>>, // gan -> (epoch, w1)
    ensemble: Vec<GanPair>,
    checkpoint_epoch: usize,
}

fn load_run(dir: &Path, label_hint: Option<String>) -> Result<RunData, Error> {
    let run_json = dir.join("run.json");
    if !run_json.is_file() {
        return Err(Error::artifact(&run_json, "missing run.json"));
    }
    let overlay = load_config_overlay(&run_json)?;
    let config = TrainConfig::from_overlays(&[overlay])?;

    let metrics_path = dir.join("metrics.csv");
    if !metrics_path.is_file() {
        return Err(Error::artifact(&metrics_path, "missing metrics.csv"));
    }
    let coverage = csvread::coverage_by_gan(&metrics_path)?;

    // Latest checkpoint under checkpoints/.
    let ckpt_root = dir.join("checkpoints");
    let mut best: Option<(usize, PathBuf)> = None;
    let entries = std::fs::read_dir(&ckpt_root).map_err(|e| Error::io(&ckpt_root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&ckpt_root, e))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(num) = name.strip_prefix("epoch_") {
            if let Ok(epoch) = num.parse::<usize>() {
                if best.as_ref().map(|(b, _)| epoch > *b).unwrap_or(true) {
                    best = Some((epoch, entry.path()));
                }
            }
        }
    }
    let (checkpoint_epoch, ckpt_dir) =
        best.ok_or_else(|| Error::artifact(&ckpt_root, "no epoch_* checkpoints"))?;
    let (ensemble, _, _) = checkpoint::load_ensemble(&ckpt_dir)?;

    let label = label_hint.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".into())
    });
    Ok(RunData {
        label,
        config,
        coverage,
        ensemble,
        checkpoint_epoch,
    })
}

fn cmd_plot(args: PlotArgs) -> Result<(), Error> {
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut runs = Vec::new();
    for (idx, dir) in args.runs.iter().enumerate() {
        let hint = match (args.runs.len(), idx) {
            (1, _) => None,
            (_, 0) => Some("classic".to_string()),
            (_, 1) => Some("proposed".to_string()),
            _ => None,
        };
        runs.push(load_run(dir, hint)?);
    }

    // Scatters: generated samples over a true-data background, regenerated
    // from the checkpoint with the run's own eval stream.
    for (idx, run) in runs.iter().enumerate() {
        let cfg = &run.config;
        let gmm = cfg.gmm()?;
        let mut bg_rng = SeededRng::stream(cfg.seed, "plot-background");
        let background = gmm.sample(&mut bg_rng, 2000.min(cfg.n_data));
        let extent = gmm.extent();
        for pair in &run.ensemble {
            let mut rng = SeededRng::stream(
                cfg.seed,
                &format!("eval/e{}/g{}", run.checkpoint_epoch, pair.id),
            );
            let samples: Mat = pair.generate(&mut rng, cfg.n_eval)?;
            let title = format!("{} g{} (epoch {})", run.label, pair.id, run.checkpoint_epoch);
            let svg = plot::scatter_svg(&title, &background, &samples, extent);
            let file = if runs.len() == 1 {
                format!("gan{}_scatter.svg", pair.id)
            } else {
                format!("{}{}_gan{}_scatter.svg", run.label, idx, pair.id)
            };
            let path = args.out.join(file);
            std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        }
    }

    // Coverage curves: one series per (run, gan); classic solid, proposed
    // dashed, matching the paper-figure convention.
    let palette = ["#e6a817", "#d62728"];
    let mut series = Vec::new();
    for (idx, run) in runs.iter().enumerate() {
        for (gan, points) in &run.coverage {
            series.push(plot::Series {
                label: format!("{} g{gan}", run.label),
                dashed: idx > 0,
                color: palette[idx % palette.len()].to_string(),
                points: points.iter().map(|(e, v)| (*e as f64, *v)).collect(),
            });
        }
    }
    let svg = plot::line_svg("mode coverage distance", "epoch", "coverage_w1", &series);
    let path = args.out.join("coverage.svg");
    std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Shared by cmd_eval printing and tests.
#[allow(dead_code)]
fn records_json(records: &[MetricsRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}
