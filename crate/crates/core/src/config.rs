//! Run configuration: defaults, config-file parsing, flag merging.
//!
//! Configs can be written as JSON or as flat `key = value` lines whose keys
//! mirror the [`TrainConfig`] field names. Overlays merge with precedence
//! flag > file > default; the fully resolved config is what lands in
//! `run.json`, and `run.json` itself is accepted back as a config file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::gan::ModelKind;
use crate::gmm::GaussianMixture;
use crate::nn::Optimizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxGranularity {
    /// Match per-sample loss vectors (real terms then fake terms).
    PerSample,
    /// Match the scalar batch losses.
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidNormalization {
    None,
    Zscore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundMetric {
    /// Unit spacing between adjacent modes around the ring.
    Circular,
    /// Actual center-to-center distances.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    Sgd,
    Adam,
    Rmsprop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of generator/discriminator pairs (>= 2 unless `baseline`).
    pub n_gans: usize,
    pub model: ModelKind,
    /// Weight of the loss-matching term in the second update pass.
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Samples per valuation lot.
    pub lot_size: usize,
    /// Minibatches per pass per epoch; `None` resolves to
    /// `n_data / batch_size`.
    pub steps_per_epoch: Option<usize>,
    /// Dataset size drawn once per run.
    pub n_data: usize,
    pub latent_dim: usize,
    pub hidden_width: usize,
    pub gmm_modes: usize,
    pub gmm_radius: f64,
    pub gmm_std: f64,
    pub seed: u64,
    /// Disable the valuation round and run a plain second pass instead.
    pub baseline: bool,
    /// Use the literal saturating generator loss.
    pub saturating: bool,
    pub normalize_bids: BidNormalization,
    pub aux_granularity: AuxGranularity,
    /// Critic updates per generator update (WGAN only).
    pub n_critic: usize,
    /// `None` picks the model default: Adam for `gan`, RMSProp for `wgan`.
    pub optimizer: Option<OptimizerChoice>,
    /// `None` picks the model default: 2e-4 for `gan`, 5e-5 for `wgan`.
    pub learning_rate: Option<f64>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub rmsprop_decay: f64,
    pub opt_epsilon: f64,
    /// Critic parameter clamp bound (WGAN only).
    pub weight_clip: f64,
    pub eval_interval: usize,
    /// Generated samples per pair per evaluation.
    pub n_eval: usize,
    /// Checkpoint every this many epochs; 0 keeps only epoch 0 and final.
    pub checkpoint_interval: usize,
    /// Mode-assignment cutoff as a multiple of the mode std.
    pub quality_radius: f64,
    /// Assigned-mass fraction for a mode to count as covered.
    pub covered_threshold: f64,
    pub ground_metric: GroundMetric,
    /// Worker cap; `None` defers to AUCTION_GAN_THREADS / all cores.
    pub threads: Option<usize>,
    /// Debug hook: key RNG streams by phase only, so pairs share draws.
    pub shared_pair_streams: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_gans: 8,
            model: ModelKind::Gan,
            lambda: 0.5,
            epochs: 200,
            batch_size: 256,
            lot_size: 256,
            steps_per_epoch: None,
            n_data: 65536,
            latent_dim: 2,
            hidden_width: 256,
            gmm_modes: 8,
            gmm_radius: 2.0,
            gmm_std: 0.2,
            seed: 0,
            baseline: false,
            saturating: false,
            normalize_bids: BidNormalization::None,
            aux_granularity: AuxGranularity::PerSample,
            n_critic: 5,
            optimizer: None,
            learning_rate: None,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            rmsprop_decay: 0.99,
            opt_epsilon: 1e-8,
            weight_clip: 0.01,
            eval_interval: 10,
            n_eval: 10000,
            checkpoint_interval: 0,
            quality_radius: 3.0,
            covered_threshold: 0.02,
            ground_metric: GroundMetric::Circular,
            threads: None,
            shared_pair_streams: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_gans < 2 && !self.baseline {
            return Err(Error::Config(
                "multi-player mode requires n_gans >= 2 (key: n_gans; use baseline for single-pair runs)".into(),
            ));
        }
        if self.n_gans == 0 {
            return Err(Error::Config("n_gans must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        for (key, value) in [
            ("batch_size", self.batch_size),
            ("lot_size", self.lot_size),
            ("n_data", self.n_data),
            ("latent_dim", self.latent_dim),
            ("hidden_width", self.hidden_width),
            ("gmm_modes", self.gmm_modes),
            ("n_critic", self.n_critic),
            ("eval_interval", self.eval_interval),
            ("n_eval", self.n_eval),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("{key} must be at least 1")));
            }
        }
        if let Some(0) = self.steps_per_epoch {
            return Err(Error::Config("steps_per_epoch must be at least 1".into()));
        }
        if !(self.gmm_std > 0.0) {
            return Err(Error::Config("gmm_std must be positive".into()));
        }
        if !self.gmm_radius.is_finite() {
            return Err(Error::Config("gmm_radius must be finite".into()));
        }
        if !(self.weight_clip > 0.0) {
            return Err(Error::Config("weight_clip must be positive".into()));
        }
        if !(self.quality_radius > 0.0) {
            return Err(Error::Config("quality_radius must be positive".into()));
        }
        if !(self.covered_threshold > 0.0 && self.covered_threshold < 1.0) {
            return Err(Error::Config(
                "covered_threshold must lie strictly between 0 and 1".into(),
            ));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr >= 0.0) || !lr.is_finite() {
                return Err(Error::Config(format!(
                    "learning_rate must be finite and non-negative, got {lr}"
                )));
            }
        }
        Ok(())
    }

    /// Validate and materialize derived defaults (steps_per_epoch).
    pub fn resolved(mut self) -> Result<Self> {
        self.validate()?;
        if self.steps_per_epoch.is_none() {
            self.steps_per_epoch = Some((self.n_data / self.batch_size).max(1));
        }
        Ok(self)
    }

    pub fn effective_steps_per_epoch(&self) -> usize {
        self.steps_per_epoch
            .unwrap_or((self.n_data / self.batch_size).max(1))
    }

    pub fn gmm(&self) -> Result<GaussianMixture> {
        GaussianMixture::ring(self.gmm_modes, self.gmm_radius, self.gmm_std)
    }

    fn default_lr(&self) -> f64 {
        match self.model {
            ModelKind::Gan => 2e-4,
            ModelKind::Wgan => 5e-5,
        }
    }

    /// Optimizer for both networks of every pair (same settings).
    pub fn build_optimizer(&self) -> Optimizer {
        let lr = self.learning_rate.unwrap_or_else(|| self.default_lr());
        let choice = self.optimizer.unwrap_or(match self.model {
            ModelKind::Gan => OptimizerChoice::Adam,
            ModelKind::Wgan => OptimizerChoice::Rmsprop,
        });
        match choice {
            OptimizerChoice::Sgd => Optimizer::Sgd { lr },
            OptimizerChoice::Adam => Optimizer::Adam {
                lr,
                beta1: self.adam_beta1,
                beta2: self.adam_beta2,
                epsilon: self.opt_epsilon,
            },
            OptimizerChoice::Rmsprop => Optimizer::Rmsprop {
                lr,
                decay: self.rmsprop_decay,
                epsilon: self.opt_epsilon,
            },
        }
    }

    /// Clip bound for the discriminator (WGAN critics only).
    pub fn disc_weight_clip(&self) -> Option<f64> {
        match self.model {
            ModelKind::Gan => None,
            ModelKind::Wgan => Some(self.weight_clip),
        }
    }

    /// Build a config from layered key/value overlays (later wins).
    pub fn from_overlays(overlays: &[Map<String, Value>]) -> Result<Self> {
        let mut merged = Map::new();
        for overlay in overlays {
            for (k, v) in overlay {
                merged.insert(k.clone(), v.clone());
            }
        }
        let cfg: TrainConfig = serde_json::from_value(Value::Object(merged))
            .map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse a config file body into an overlay map. JSON objects are taken
/// as-is (a `run.json` wrapper is unwrapped via its `config` key); anything
/// else is read as flat `key = value` lines with `#` comments.
pub fn parse_config_overlay(content: &str) -> Result<Map<String, Value>> {
    let trimmed = content.trim_start();
    if trimmed.starts_with('{') {
        let value: Value =
            serde_json::from_str(trimmed).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?;
        let Value::Object(mut obj) = value else {
            return Err(Error::Config("JSON config must be an object".into()));
        };
        if let Some(Value::Object(inner)) = obj.remove("config") {
            return Ok(inner);
        }
        return Ok(obj);
    }
    let mut map = Map::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), coerce_scalar(value.trim()));
    }
    Ok(map)
}

/// Read and parse a config file.
pub fn load_config_overlay(path: &Path) -> Result<Map<String, Value>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_overlay(&content)
        .map_err(|e| Error::artifact(path, e.to_string()))
}

/// Best-effort scalar typing for flat key=value files.
pub fn coerce_scalar(raw: &str) -> Value {
    match raw {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        "auto" | "null" => return Value::Null,
        _ => {}
    }
    if let Ok(v) = raw.parse::<u64>() {
        return Value::from(v);
    }
    if let Ok(v) = raw.parse::<i64>() {
        return Value::from(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Value::from(v);
    }
    Value::String(raw.to_string())
}
