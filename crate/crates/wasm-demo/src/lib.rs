//! Browser demo session. Wraps the training loop behind three calls a
//! static page can drive: construct/reset with a JSON config, advance some
//! epochs, and pull display data (generated samples, valuation scores,
//! coverage metrics, density field) as JSON / flat arrays.

use serde_json::json;
use wasm_bindgen::prelude::*;

use auction_gan::config::parse_config_overlay;
use auction_gan::trainer::{init_ensemble, train_epoch, EpochReport};
use auction_gan::{GanPair, GaussianMixture, Mat, SeededRng, TrainConfig};

fn demo_defaults() -> TrainConfig {
    TrainConfig {
        n_gans: 4,
        lambda: 1.0,
        epochs: usize::MAX, // open-ended session; epochs drive nothing here
        batch_size: 64,
        lot_size: 64,
        steps_per_epoch: Some(8),
        n_data: 1024,
        hidden_width: 16,
        learning_rate: Some(1e-3),
        n_eval: 512,
        eval_interval: 1,
        ..TrainConfig::default()
    }
}

fn err_to_js(e: auction_gan::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// One interactive training session over the ring mixture.
#[wasm_bindgen]
pub struct Demo {
    cfg: TrainConfig,
    gmm: GaussianMixture,
    dataset: Mat,
    ensemble: Vec<GanPair>,
    epoch: usize,
    last_report: Option<EpochReport>,
}

#[wasm_bindgen]
impl Demo {
    /// `config_json` overrides demo defaults; keys follow the run config
    /// (`n_gans`, `model`, `lambda`, `baseline`, `seed`, ...).
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<Demo, JsValue> {
        let cfg = Self::build_config(config_json).map_err(err_to_js)?;
        let gmm = cfg.gmm().map_err(err_to_js)?;
        let mut data_rng = SeededRng::stream(cfg.seed, "data");
        let dataset = gmm.sample(&mut data_rng, cfg.n_data);
        let ensemble = init_ensemble(&cfg).map_err(err_to_js)?;
        Ok(Demo {
            cfg,
            gmm,
            dataset,
            ensemble,
            epoch: 0,
            last_report: None,
        })
    }

    fn build_config(config_json: &str) -> auction_gan::Result<TrainConfig> {
        let defaults = serde_json::to_value(demo_defaults()).expect("defaults serialize");
        let mut overlays = vec![defaults.as_object().expect("object").clone()];
        let trimmed = config_json.trim();
        if !trimmed.is_empty() {
            overlays.push(parse_config_overlay(trimmed)?);
        }
        TrainConfig::from_overlays(&overlays)
    }

    pub fn epoch(&self) -> u32 {
        self.epoch as u32
    }

    pub fn n_gans(&self) -> u32 {
        self.cfg.n_gans as u32
    }

    /// Half-width of the square the data lives in; for canvas scaling.
    pub fn extent(&self) -> f64 {
        self.gmm.extent()
    }

    /// Advance `n` epochs (individual pass, valuation, matching pass) and
    /// return the session state as JSON.
    pub fn train_epochs(&mut self, n: u32) -> Result<String, JsValue> {
        for _ in 0..n {
            self.epoch += 1;
            let report = train_epoch(
                &mut self.ensemble,
                &self.dataset,
                &self.gmm,
                &self.cfg,
                self.epoch,
            )
            .map_err(err_to_js)?;
            self.last_report = Some(report);
        }
        self.state_json(300)
    }

    /// Session state without training: per-pair fresh samples plus the
    /// latest valuation scores and metrics.
    pub fn state_json(&self, samples_per_gan: u32) -> Result<String, JsValue> {
        let mut gans = Vec::with_capacity(self.ensemble.len());
        for pair in &self.ensemble {
            let mut rng = SeededRng::stream(
                self.cfg.seed,
                &format!("demo-show/e{}/g{}", self.epoch, pair.id),
            );
            let samples = pair
                .generate(&mut rng, samples_per_gan as usize)
                .map_err(err_to_js)?;
            let coords: Vec<[f64; 2]> = samples.iter_rows().map(|r| [r[0], r[1]]).collect();

            let (mean_ll, coverage, covered) = match &self.last_report {
                Some(report) => match &report.metrics {
                    Some(metrics) => {
                        let m = &metrics[pair.id];
                        (
                            Some(m.mean_log_likelihood),
                            m.coverage_w1,
                            Some(m.covered_modes),
                        )
                    }
                    None => (None, None, None),
                },
                None => (None, None, None),
            };
            let aux_mean = self.last_report.as_ref().and_then(|r| {
                let v = &r.aux_losses[pair.id];
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            });
            gans.push(json!({
                "id": pair.id,
                "samples": coords,
                "mean_ll": mean_ll,
                "coverage_w1": coverage,
                "covered_modes": covered,
                "aux_loss": aux_mean,
            }));
        }

        let auction = self.last_report.as_ref().and_then(|r| r.auction.as_ref());
        let state = json!({
            "epoch": self.epoch,
            "model": self.cfg.model.to_string(),
            "lambda": self.cfg.lambda,
            "baseline": self.cfg.baseline,
            "best": auction.map(|a| a.best_index),
            "scores": auction.map(|a| a.scores.clone()),
        });
        Ok(json!({"state": state, "gans": gans}).to_string())
    }

    /// `n` true-data points, interleaved `x0, y0, x1, y1, ...`.
    pub fn real_samples(&self, n: u32) -> Vec<f64> {
        let mut rng = SeededRng::stream(self.cfg.seed, "demo-background");
        let samples = self.gmm.sample(&mut rng, n as usize);
        samples.data().to_vec()
    }

    /// Row-major `resolution x resolution` density field over the data
    /// square, scaled to max 1 for direct use as pixel intensity.
    pub fn density_grid(&self, resolution: u32) -> Vec<f64> {
        let res = resolution.max(2) as usize;
        let extent = self.extent();
        let mut values = Vec::with_capacity(res * res);
        let mut max = f64::NEG_INFINITY;
        for row in 0..res {
            // canvas convention: row 0 at the top (y = +extent)
            let y = extent - 2.0 * extent * (row as f64 + 0.5) / res as f64;
            for col in 0..res {
                let x = -extent + 2.0 * extent * (col as f64 + 0.5) / res as f64;
                let d = self.gmm.log_density(&[x, y]).exp();
                if d > max {
                    max = d;
                }
                values.push(d);
            }
        }
        if max > 0.0 {
            for v in &mut values {
                *v /= max;
            }
        }
        values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn session_trains_and_reports_state() {
        let mut demo = Demo::new(r#"{"n_gans": 2, "hidden_width": 8, "steps_per_epoch": 2, "batch_size": 8, "lot_size": 8, "n_data": 64, "n_eval": 64, "seed": 5}"#)
            .unwrap();
        assert_eq!(demo.epoch(), 0);
        let state = demo.train_epochs(2).unwrap();
        assert_eq!(demo.epoch(), 2);
        let parsed: serde_json::Value = serde_json::from_str(&state).unwrap();
        assert_eq!(parsed["state"]["epoch"], 2);
        assert!(parsed["state"]["best"].is_number());
        assert_eq!(parsed["gans"].as_array().unwrap().len(), 2);
        assert_eq!(
            parsed["gans"][0]["samples"].as_array().unwrap().len(),
            300
        );
        assert!(parsed["gans"][0]["mean_ll"].is_number());
    }

    #[test]
    fn baseline_session_has_no_scores() {
        let mut demo = Demo::new(r#"{"n_gans": 2, "baseline": true, "hidden_width": 8, "steps_per_epoch": 1, "batch_size": 8, "lot_size": 8, "n_data": 64, "n_eval": 64}"#)
            .unwrap();
        let state = demo.train_epochs(1).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&state).unwrap();
        assert!(parsed["state"]["best"].is_null());
        assert!(parsed["state"]["scores"].is_null());
    }

    #[test]
    fn density_grid_and_background_are_well_formed() {
        let demo = Demo::new("").unwrap();
        let grid = demo.density_grid(32);
        assert_eq!(grid.len(), 32 * 32);
        let max = grid.iter().cloned().fold(0.0f64, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert_eq!(demo.real_samples(100).len(), 200);
    }

    #[test]
    fn invalid_config_is_a_js_error() {
        assert!(Demo::new(r#"{"n_gans": 0}"#).is_err());
        assert!(Demo::new(r#"{"made_up_key": 1}"#).is_err());
    }
}
