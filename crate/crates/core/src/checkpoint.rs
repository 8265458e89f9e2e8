//! Parameter checkpoints.
//!
//! One network per file: a single-line JSON header (layer shapes,
//! activations, optional RNG stream/position) followed by the parameters
//! as a flat little-endian f64 stream, per layer weights row-major then
//! bias. Ensemble checkpoints are a directory of per-pair network files
//! plus a `meta.json` carrying the epoch and the resolved run config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::fsio;
use crate::gan::GanPair;
use crate::nn::{Activation, Layer, Mlp, OptimizerState};

pub const NETWORK_FORMAT: &str = "auction-gan-mlp-v1";
pub const META_FORMAT: &str = "auction-gan-checkpoint-v1";

/// Position of a named RNG stream, recorded so draws can resume exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngCursor {
    pub stream: String,
    /// `u128` word position, kept as a string for JSON round-tripping.
    pub word_pos: String,
}

impl RngCursor {
    pub fn new(stream: &str, word_pos: u128) -> Self {
        RngCursor {
            stream: stream.to_string(),
            word_pos: word_pos.to_string(),
        }
    }

    pub fn position(&self) -> Result<u128> {
        self.word_pos
            .parse()
            .map_err(|_| Error::Numeric(format!("invalid rng position `{}`", self.word_pos)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkHeader {
    format: String,
    dims: Vec<usize>,
    activations: Vec<Activation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng: Option<RngCursor>,
}

pub fn save_mlp(path: &Path, mlp: &Mlp, rng: Option<&RngCursor>) -> Result<()> {
    let header = NetworkHeader {
        format: NETWORK_FORMAT.to_string(),
        dims: mlp.dims(),
        activations: mlp.layers().iter().map(|l| l.activation()).collect(),
        rng: rng.cloned(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    for layer in mlp.layers() {
        for v in layer.weights().iter().chain(layer.bias()) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fsio::atomic_write(path, &bytes)
}

pub fn load_mlp(path: &Path) -> Result<(Mlp, Option<RngCursor>)> {
    let bytes = fsio::read_bytes(path)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::artifact(path, "missing header line"))?;
    let header: NetworkHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| Error::artifact(path, format!("bad header: {e}")))?;
    if header.format != NETWORK_FORMAT {
        return Err(Error::artifact(
            path,
            format!("unsupported format `{}`", header.format),
        ));
    }
    if header.dims.len() < 2 || header.activations.len() != header.dims.len() - 1 {
        return Err(Error::artifact(path, "inconsistent dims/activations"));
    }

    let expected_params: usize = header
        .dims
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum();
    let payload = &bytes[newline + 1..];
    if payload.len() != expected_params * 8 {
        return Err(Error::artifact(
            path,
            format!(
                "parameter payload is {} bytes, expected {}",
                payload.len(),
                expected_params * 8
            ),
        ));
    }

    let mut floats = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut layers = Vec::with_capacity(header.activations.len());
    for (i, act) in header.activations.iter().enumerate() {
        let (inn, out) = (header.dims[i], header.dims[i + 1]);
        let weights: Vec<f64> = floats.by_ref().take(inn * out).collect();
        let bias: Vec<f64> = floats.by_ref().take(out).collect();
        layers.push(Layer::new(inn, out, weights, bias, *act)?);
    }
    let mlp = Mlp::from_layers(layers)?;
    mlp.assert_finite("checkpointed parameters")
        .map_err(|e| Error::artifact(path, e.to_string()))?;
    Ok((mlp, header.rng))
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleMeta {
    format: String,
    epoch: usize,
    config: TrainConfig,
}

fn generator_file(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("gan{id}_generator.net"))
}

fn discriminator_file(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("gan{id}_discriminator.net"))
}

pub fn save_ensemble(
    dir: &Path,
    ensemble: &[GanPair],
    epoch: usize,
    cfg: &TrainConfig,
) -> Result<()> {
    fsio::create_dir_all(dir)?;
    for pair in ensemble {
        save_mlp(&generator_file(dir, pair.id), &pair.generator, None)?;
        save_mlp(&discriminator_file(dir, pair.id), &pair.discriminator, None)?;
    }
    let meta = EnsembleMeta {
        format: META_FORMAT.to_string(),
        epoch,
        config: cfg.clone(),
    };
    fsio::atomic_write(
        &dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).expect("meta serializes").as_bytes(),
    )
}

/// Load an ensemble checkpoint; optimizer state is rebuilt fresh (the
/// format stores parameters, not moments). Network shapes are validated
/// against the stored config.
pub fn load_ensemble(dir: &Path) -> Result<(Vec<GanPair>, usize, TrainConfig)> {
    let meta_path = dir.join("meta.json");
    let meta: EnsembleMeta = serde_json::from_str(&fsio::read_to_string(&meta_path)?)
        .map_err(|e| Error::artifact(&meta_path, format!("bad meta: {e}")))?;
    if meta.format != META_FORMAT {
        return Err(Error::artifact(
            &meta_path,
            format!("unsupported format `{}`", meta.format),
        ));
    }
    let cfg = meta.config.clone().resolved()?;
    let optimizer = cfg.build_optimizer();

    let expected_gen = vec![
        cfg.latent_dim,
        cfg.hidden_width,
        cfg.hidden_width,
        crate::trainer::DATA_DIM,
    ];
    let expected_disc = vec![crate::trainer::DATA_DIM, cfg.hidden_width, cfg.hidden_width, 1];

    let mut ensemble = Vec::with_capacity(cfg.n_gans);
    for id in 0..cfg.n_gans {
        let gen_path = generator_file(dir, id);
        let disc_path = discriminator_file(dir, id);
        let (generator, _) = load_mlp(&gen_path)?;
        let (discriminator, _) = load_mlp(&disc_path)?;
        if generator.dims() != expected_gen {
            return Err(Error::artifact(
                &gen_path,
                format!(
                    "generator dims {:?} do not match config {:?}",
                    generator.dims(),
                    expected_gen
                ),
            ));
        }
        if discriminator.dims() != expected_disc {
            return Err(Error::artifact(
                &disc_path,
                format!(
                    "discriminator dims {:?} do not match config {:?}",
                    discriminator.dims(),
                    expected_disc
                ),
            ));
        }
        let gen_opt = OptimizerState::new(optimizer, None, &generator)?;
        let disc_opt = OptimizerState::new(optimizer, cfg.disc_weight_clip(), &discriminator)?;
        ensemble.push(GanPair::new(
            id,
            cfg.model,
            generator,
            discriminator,
            gen_opt,
            disc_opt,
        )?);
    }
    Ok((ensemble, meta.epoch, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::trainer::init_ensemble;

    #[test]
    fn network_round_trips_bit_exactly() {
        let mut rng = SeededRng::stream(3, "ckpt-net");
        let mlp = Mlp::init(&[2, 5, 3], Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.net");
        let cursor = RngCursor::new("latent/e3/g1", rng.word_pos());
        save_mlp(&path, &mlp, Some(&cursor)).unwrap();
        let (loaded, rng_info) = load_mlp(&path).unwrap();
        assert_eq!(loaded.checksum(), mlp.checksum());
        assert_eq!(rng_info.unwrap(), cursor);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut rng = SeededRng::stream(4, "ckpt-trunc");
        let mlp = Mlp::init(&[2, 4, 1], Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.net");
        save_mlp(&path, &mlp, None).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_mlp(&path), Err(Error::Artifact { .. })));
    }

    #[test]
    fn ensemble_round_trips_and_validates_shapes() {
        let cfg = TrainConfig {
            n_gans: 2,
            hidden_width: 6,
            n_data: 32,
            batch_size: 8,
            lot_size: 8,
            epochs: 1,
            ..TrainConfig::default()
        }
        .resolved()
        .unwrap();
        let ensemble = init_ensemble(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_ensemble(dir.path(), &ensemble, 7, &cfg).unwrap();

        let (loaded, epoch, loaded_cfg) = load_ensemble(dir.path()).unwrap();
        assert_eq!(epoch, 7);
        assert_eq!(loaded_cfg.n_gans, 2);
        for (a, b) in ensemble.iter().zip(&loaded) {
            assert_eq!(a.checksum(), b.checksum());
        }

        // Mismatched width in meta must be a descriptive error.
        let meta_path = dir.path().join("meta.json");
        let mut meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
        meta["config"]["hidden_width"] = serde_json::Value::from(16);
        std::fs::write(&meta_path, serde_json::to_string(&meta).unwrap()).unwrap();
        let err = load_ensemble(dir.path()).unwrap_err();
        assert!(err.to_string().contains("dims"), "{err}");
    }
}
