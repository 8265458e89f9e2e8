//! Full runs and paired comparisons, with their on-disk artifacts.
//!
//! A run directory contains `run.json` (resolved config), `metrics.csv`
//! (one row per evaluated (epoch, gan)), `summary.json` (final-epoch
//! aggregates), and a `checkpoints/` tree. A comparison directory holds
//! one `seed_N/classic` + `seed_N/proposed` run per seed plus
//! `comparison.json` with per-seed and aggregate numbers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::fsio;
use crate::gan::GanPair;
use crate::mat::stable_mean;
use crate::metrics::MetricsRecord;
use crate::parallel;
use crate::rng::SeededRng;
use crate::trainer::{evaluate_ensemble, init_ensemble, train_epoch, EpochReport};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Worker cap, from the config or the `AUCTION_GAN_THREADS` variable.
/// Results never depend on this; only wall time does.
pub fn thread_cap(cfg: &TrainConfig) -> Option<usize> {
    cfg.threads.or_else(|| {
        std::env::var("AUCTION_GAN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

/// Extra file outputs a run may emit.
#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    pub dump_auction: bool,
    pub dump_dataset: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanSummary {
    pub gan_id: usize,
    pub mean_log_likelihood: f64,
    pub coverage_w1: Option<f64>,
    pub covered_modes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean_likelihood: f64,
    pub min_likelihood: f64,
    pub mean_coverage_w1: Option<f64>,
    pub mean_covered_modes: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub epoch: usize,
    pub per_gan: Vec<GanSummary>,
    pub ensemble: EnsembleSummary,
}

impl RunSummary {
    fn from_records(epoch: usize, records: &[MetricsRecord]) -> Self {
        let per_gan: Vec<GanSummary> = records
            .iter()
            .map(|r| GanSummary {
                gan_id: r.gan_id,
                mean_log_likelihood: r.mean_log_likelihood,
                coverage_w1: r.coverage_w1,
                covered_modes: r.covered_modes,
            })
            .collect();
        let lls: Vec<f64> = per_gan.iter().map(|g| g.mean_log_likelihood).collect();
        let coverages: Vec<f64> = per_gan.iter().filter_map(|g| g.coverage_w1).collect();
        let covered: Vec<f64> = per_gan.iter().map(|g| g.covered_modes as f64).collect();
        RunSummary {
            epoch,
            ensemble: EnsembleSummary {
                mean_likelihood: stable_mean(&lls),
                min_likelihood: lls.iter().copied().fold(f64::INFINITY, f64::min),
                mean_coverage_w1: if coverages.is_empty() {
                    None
                } else {
                    Some(stable_mean(&coverages))
                },
                mean_covered_modes: stable_mean(&covered),
            },
            per_gan,
        }
    }
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub config: TrainConfig,
    pub reports: Vec<EpochReport>,
    pub summary: RunSummary,
    pub final_checkpoint: PathBuf,
    pub ensemble: Vec<GanPair>,
}

fn checkpoint_dir(out_dir: &Path, epoch: usize) -> PathBuf {
    out_dir.join("checkpoints").join(format!("epoch_{epoch:05}"))
}

fn write_run_json(out_dir: &Path, cfg: &TrainConfig) -> Result<()> {
    let body = serde_json::json!({
        "artifact": "auction-gan",
        "version": ARTIFACT_VERSION,
        "config": cfg,
    });
    fsio::atomic_write(
        &out_dir.join("run.json"),
        serde_json::to_string_pretty(&body).expect("run.json serializes").as_bytes(),
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "nan".to_string(),
    }
}

/// Render the metrics CSV. Versioned header comment, then one row per
/// evaluated (epoch, gan). Auction columns only exist outside baseline
/// mode; epoch 0 predates any valuation so its cells stay empty.
fn metrics_csv(cfg: &TrainConfig, reports: &[EpochReport], init_metrics: &[MetricsRecord]) -> String {
    let modes = cfg.gmm_modes;
    let mut out = format!(
        "# auction-gan metrics v1 model={} n_gans={} gmm_modes={} baseline={}\n",
        cfg.model, cfg.n_gans, modes, cfg.baseline
    );
    out.push_str("epoch,gan_id,mean_log_likelihood,coverage_w1,covered_modes,assigned,unassigned");
    for k in 0..modes {
        out.push_str(&format!(",mode_{k}"));
    }
    if !cfg.baseline {
        out.push_str(",score,is_best");
    }
    out.push('\n');

    let mut push_row = |r: &MetricsRecord, auction: Option<(&[f64], usize)>| {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            r.epoch,
            r.gan_id,
            r.mean_log_likelihood,
            fmt_opt(r.coverage_w1),
            r.covered_modes,
            r.histogram.assigned(),
            r.histogram.unassigned
        ));
        for c in &r.histogram.counts {
            out.push_str(&format!(",{c}"));
        }
        if !cfg.baseline {
            match auction {
                Some((scores, best)) => out.push_str(&format!(
                    ",{},{}",
                    scores[r.gan_id],
                    (r.gan_id == best) as u8
                )),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    };

    for r in init_metrics {
        push_row(r, None);
    }
    for report in reports {
        if let Some(metrics) = &report.metrics {
            let auction = report
                .auction
                .as_ref()
                .map(|a| (a.scores.as_slice(), a.best_index));
            for r in metrics {
                push_row(r, auction);
            }
        }
    }
    out
}

fn auction_dump_csvs(reports: &[EpochReport]) -> (String, String) {
    let mut bids = String::from("epoch,i,j,bid\n");
    let mut scores = String::from("epoch,i,score,is_best\n");
    for report in reports {
        if let Some(a) = &report.auction {
            let n = a.bids.n();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        bids.push_str(&format!("{},{i},{j},{}\n", report.epoch, a.bids.get(i, j)));
                    }
                }
            }
            for (i, s) in a.scores.iter().enumerate() {
                scores.push_str(&format!(
                    "{},{i},{s},{}\n",
                    report.epoch,
                    (i == a.best_index) as u8
                ));
            }
        }
    }
    (bids, scores)
}

/// Execute a full training run and write its artifacts under `out_dir`.
pub fn train_run(cfg: &TrainConfig, out_dir: &Path) -> Result<RunArtifacts> {
    train_run_with(cfg, out_dir, OutputOptions::default(), &mut |_| {})
}

pub fn train_run_with(
    cfg: &TrainConfig,
    out_dir: &Path,
    opts: OutputOptions,
    on_epoch: &mut (dyn FnMut(&EpochReport) + Send),
) -> Result<RunArtifacts> {
    let cfg = cfg.clone().resolved()?;
    fsio::create_dir_all(out_dir)?;
    write_run_json(out_dir, &cfg)?;

    let gmm = cfg.gmm()?;
    let mut data_rng = SeededRng::stream(cfg.seed, "data");
    let dataset = gmm.sample(&mut data_rng, cfg.n_data);
    if opts.dump_dataset {
        fsio::atomic_write(
            &out_dir.join("dataset.csv"),
            crate::gmm::GaussianMixture::dataset_csv(&dataset).as_bytes(),
        )?;
    }

    let cap = thread_cap(&cfg);
    let (ensemble, reports, init_metrics) =
        parallel::with_pool(cap, || -> Result<(Vec<GanPair>, Vec<EpochReport>, Vec<MetricsRecord>)> {
            let mut ensemble = init_ensemble(&cfg)?;
            checkpoint::save_ensemble(&checkpoint_dir(out_dir, 0), &ensemble, 0, &cfg)?;
            let init_metrics = evaluate_ensemble(&ensemble, &gmm, &cfg, 0)?;

            let mut reports = Vec::with_capacity(cfg.epochs);
            for epoch in 1..=cfg.epochs {
                let report = train_epoch(&mut ensemble, &dataset, &gmm, &cfg, epoch)?;
                if cfg.checkpoint_interval > 0 && epoch % cfg.checkpoint_interval == 0 {
                    checkpoint::save_ensemble(
                        &checkpoint_dir(out_dir, epoch),
                        &ensemble,
                        epoch,
                        &cfg,
                    )?;
                }
                on_epoch(&report);
                reports.push(report);
            }
            Ok((ensemble, reports, init_metrics))
        })?;

    let final_checkpoint = checkpoint_dir(out_dir, cfg.epochs);
    checkpoint::save_ensemble(&final_checkpoint, &ensemble, cfg.epochs, &cfg)?;

    fsio::atomic_write(
        &out_dir.join("metrics.csv"),
        metrics_csv(&cfg, &reports, &init_metrics).as_bytes(),
    )?;
    if opts.dump_auction {
        let (bids, scores) = auction_dump_csvs(&reports);
        fsio::atomic_write(&out_dir.join("auction_bids.csv"), bids.as_bytes())?;
        fsio::atomic_write(&out_dir.join("auction_scores.csv"), scores.as_bytes())?;
    }

    let last_records: &[MetricsRecord] = reports
        .iter()
        .rev()
        .find_map(|r| r.metrics.as_deref())
        .unwrap_or(&init_metrics);
    let last_epoch = last_records.first().map(|r| r.epoch).unwrap_or(0);
    let summary = RunSummary::from_records(last_epoch, last_records);
    fsio::atomic_write(
        &out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes").as_bytes(),
    )?;

    Ok(RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        config: cfg,
        reports,
        summary,
        final_checkpoint,
        ensemble,
    })
}

/// Re-evaluate a checkpoint: regenerate `n_eval` samples per pair with the
/// checkpoint's eval stream (or an override seed) and recompute metrics.
pub fn evaluate_checkpoint(
    ckpt_dir: &Path,
    seed_override: Option<u64>,
    n_eval_override: Option<usize>,
) -> Result<Vec<MetricsRecord>> {
    let (ensemble, epoch, mut cfg) = checkpoint::load_ensemble(ckpt_dir)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(n) = n_eval_override {
        cfg.n_eval = n;
    }
    let gmm = cfg.gmm()?;
    parallel::with_pool(thread_cap(&cfg), || {
        evaluate_ensemble(&ensemble, &gmm, &cfg, epoch)
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn over(values: &[f64]) -> Self {
        let mean = stable_mean(values);
        let std = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (values.len() - 1) as f64;
            var.sqrt()
        };
        MeanStd { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} +- {:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmSummary {
    pub mean_likelihood: f64,
    pub min_likelihood: f64,
    pub mean_coverage_w1: Option<f64>,
    pub mean_covered_modes: f64,
}

impl From<&RunSummary> for ArmSummary {
    fn from(s: &RunSummary) -> Self {
        ArmSummary {
            mean_likelihood: s.ensemble.mean_likelihood,
            min_likelihood: s.ensemble.min_likelihood,
            mean_coverage_w1: s.ensemble.mean_coverage_w1,
            mean_covered_modes: s.ensemble.mean_covered_modes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub classic: ArmSummary,
    pub proposed: ArmSummary,
    /// Epoch-0 checkpoints of the two arms were byte-identical.
    pub shared_init: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmAggregate {
    pub mean_likelihood: MeanStd,
    pub min_likelihood: MeanStd,
    pub mean_coverage_w1: Option<MeanStd>,
    pub mean_covered_modes: MeanStd,
}

fn aggregate(arms: &[&ArmSummary]) -> ArmAggregate {
    let lls: Vec<f64> = arms.iter().map(|a| a.mean_likelihood).collect();
    let mins: Vec<f64> = arms.iter().map(|a| a.min_likelihood).collect();
    let covs: Vec<f64> = arms.iter().filter_map(|a| a.mean_coverage_w1).collect();
    let covered: Vec<f64> = arms.iter().map(|a| a.mean_covered_modes).collect();
    ArmAggregate {
        mean_likelihood: MeanStd::over(&lls),
        min_likelihood: MeanStd::over(&mins),
        mean_coverage_w1: if covs.is_empty() {
            None
        } else {
            Some(MeanStd::over(&covs))
        },
        mean_covered_modes: MeanStd::over(&covered),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedComparison>,
    pub classic: ArmAggregate,
    pub proposed: ArmAggregate,
}

impl ComparisonReport {
    /// Two-column summary table (classic vs proposed).
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<22}{:>20}{:>20}\n",
            "", "classic", "proposed"
        ));
        let mut row = |label: &str, a: String, b: String| {
            out.push_str(&format!("{label:<22}{a:>20}{b:>20}\n"));
        };
        row(
            "mean likelihood",
            self.classic.mean_likelihood.to_string(),
            self.proposed.mean_likelihood.to_string(),
        );
        row(
            "min likelihood",
            self.classic.min_likelihood.to_string(),
            self.proposed.min_likelihood.to_string(),
        );
        row(
            "mean coverage_w1",
            self.classic
                .mean_coverage_w1
                .map(|m| m.to_string())
                .unwrap_or_else(|| "n/a".into()),
            self.proposed
                .mean_coverage_w1
                .map(|m| m.to_string())
                .unwrap_or_else(|| "n/a".into()),
        );
        row(
            "mean covered modes",
            self.classic.mean_covered_modes.to_string(),
            self.proposed.mean_covered_modes.to_string(),
        );
        out
    }
}

fn summary_path_complete(dir: &Path) -> bool {
    dir.join("summary.json").is_file() && dir.join("metrics.csv").is_file()
}

fn load_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join("summary.json");
    serde_json::from_str(&fsio::read_to_string(&path)?)
        .map_err(|e| Error::artifact(&path, format!("bad summary: {e}")))
}

fn checkpoints_byte_identical(a: &Path, b: &Path, n_gans: usize) -> Result<bool> {
    for id in 0..n_gans {
        for name in [format!("gan{id}_generator.net"), format!("gan{id}_discriminator.net")] {
            let fa = fsio::read_bytes(&a.join(&name))?;
            let fb = fsio::read_bytes(&b.join(&name))?;
            if fa != fb {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Paired comparison: for every seed, run the classic (baseline) and
/// proposed arms from identical initial parameters, then aggregate across
/// seeds. Arms whose artifacts already exist are reused rather than rerun,
/// so an interrupted comparison resumes at seed granularity.
pub fn compare_run(
    base_cfg: &TrainConfig,
    seeds: &[u64],
    out_root: &Path,
    mut progress: impl FnMut(&str),
) -> Result<ComparisonReport> {
    if seeds.is_empty() {
        return Err(Error::Config("comparison needs at least one seed".into()));
    }
    let base_cfg = base_cfg.clone().resolved()?;
    fsio::create_dir_all(out_root)?;

    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let seed_dir = out_root.join(format!("seed_{seed}"));
        let mut arm_summaries = Vec::with_capacity(2);
        for (arm, baseline) in [("classic", true), ("proposed", false)] {
            let arm_dir = seed_dir.join(arm);
            let mut cfg = base_cfg.clone();
            cfg.seed = seed;
            cfg.baseline = baseline;
            if summary_path_complete(&arm_dir) {
                progress(&format!("seed {seed} {arm}: cached"));
                arm_summaries.push(load_summary(&arm_dir)?);
            } else {
                progress(&format!("seed {seed} {arm}: running"));
                let artifacts = train_run(&cfg, &arm_dir)?;
                arm_summaries.push(artifacts.summary);
            }
        }
        let shared_init = checkpoints_byte_identical(
            &checkpoint_dir(&seed_dir.join("classic"), 0),
            &checkpoint_dir(&seed_dir.join("proposed"), 0),
            base_cfg.n_gans,
        )?;
        let proposed = arm_summaries.pop().expect("proposed summary");
        let classic = arm_summaries.pop().expect("classic summary");
        per_seed.push(SeedComparison {
            seed,
            classic: ArmSummary::from(&classic),
            proposed: ArmSummary::from(&proposed),
            shared_init,
        });
    }

    let classic = aggregate(&per_seed.iter().map(|s| &s.classic).collect::<Vec<_>>());
    let proposed = aggregate(&per_seed.iter().map(|s| &s.proposed).collect::<Vec<_>>());
    let report = ComparisonReport {
        seeds: seeds.to_vec(),
        per_seed,
        classic,
        proposed,
    };
    fsio::atomic_write(
        &out_root.join("comparison.json"),
        serde_json::to_string_pretty(&report).expect("report serializes").as_bytes(),
    )?;
    Ok(report)
}
