//! Multi-player GAN training on synthetic 2D Gaussian mixtures.
//!
//! This crate trains an ensemble of GAN pairs on a ring-of-Gaussians toy
//! distribution and measures how well the trained generators cover its modes.
//! Each epoch runs in two stages: every pair first trains on its own
//! (standard adversarial updates), then the ensemble holds a valuation round
//! in which every generator presents a lot of samples and every other
//! discriminator bids on it. The pair with the best net score is selected,
//! and a second update pass pulls every discriminator's per-sample loss
//! profile toward the best discriminator's, weighted by `lambda`.
//!
//! Everything is deterministic per seed: the RNG is a keyed counter stream,
//! worker scheduling never affects results, and two runs with the same
//! config produce byte-identical metrics files.
//!
//! Module map:
//! - [`rng`], [`mat`]: seeded random streams and a minimal row-major matrix.
//! - [`nn`]: fixed-topology MLP forward/backward and optimizers.
//! - [`gmm`]: the ring mixture sampler and exact log-density.
//! - [`gan`]: vanilla/WGAN losses and single-pair update steps.
//! - [`auction`]: lots, bids, scores, best-pair selection.
//! - [`metrics`]: likelihood, mode assignment, coverage distance.
//! - [`trainer`], [`experiment`]: epoch orchestration and full runs.
//! - [`checkpoint`], [`plot`]: parameter files and SVG output.

pub mod auction;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod experiment;
pub mod gan;
pub mod gmm;
pub mod mat;
pub mod metrics;
pub mod nn;
pub mod plot;
pub mod rng;
pub mod trainer;

pub(crate) mod fsio;
pub(crate) mod parallel;

pub use auction::{compute_bid, compute_scores, make_lot, run_auction, select_best};
pub use auction::{AuctionResult, BidMatrix, Lot};
pub use config::{AuxGranularity, BidNormalization, GroundMetric, TrainConfig};
pub use error::{Error, Result};
pub use experiment::{compare_run, train_run, ComparisonReport, RunArtifacts};
pub use gan::{
    disc_loss, disc_loss_of, disc_update, gen_loss, gen_update, individual_step, AuxRef,
    DiscLossTerms, GanPair, ModelKind,
};
pub use gmm::GaussianMixture;
pub use mat::Mat;
pub use metrics::{
    assign_modes, coverage_wasserstein, covered_mode_count, mean_log_likelihood, MetricsRecord,
    ModeHistogram,
};
pub use nn::{Activation, Gradients, Mlp, Optimizer, OptimizerState};
pub use rng::SeededRng;
pub use trainer::{auxiliary_loss, auxiliary_pass, train_epoch, EpochReport};
