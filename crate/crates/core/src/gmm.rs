//! 2D Gaussian mixture: sampler and exact log-density.
//!
//! The canonical configuration is `M` equally weighted isotropic modes on a
//! circle, the usual ring benchmark for mode-dropping generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::SeededRng;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub center: [f64; 2],
    pub std: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    modes: Vec<Mode>,
}

impl GaussianMixture {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Config("mixture needs at least one mode".into()));
        }
        let mut weight_sum = 0.0;
        for (k, m) in modes.iter().enumerate() {
            if !(m.std > 0.0) {
                return Err(Error::Config(format!("mode {k} std must be positive")));
            }
            if !(m.weight > 0.0) {
                return Err(Error::Config(format!("mode {k} weight must be positive")));
            }
            if !m.center.iter().all(|v| v.is_finite()) {
                return Err(Error::Config(format!("mode {k} center must be finite")));
            }
            weight_sum += m.weight;
        }
        if (weight_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "mode weights sum to {weight_sum}, expected 1"
            )));
        }
        Ok(GaussianMixture { modes })
    }

    /// `count` equally weighted modes of shared `std` spaced on a circle of
    /// `radius`: center_k = (r cos(2 pi k / M), r sin(2 pi k / M)).
    pub fn ring(count: usize, radius: f64, std: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("ring needs at least one mode".into()));
        }
        let weight = 1.0 / count as f64;
        let modes = (0..count)
            .map(|k| {
                let angle = std::f64::consts::TAU * k as f64 / count as f64;
                Mode {
                    center: [radius * angle.cos(), radius * angle.sin()],
                    std,
                    weight,
                }
            })
            .collect();
        GaussianMixture::new(modes)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Largest distance from the origin at which meaningful mass lives;
    /// used to size plot extents and integration boxes.
    pub fn extent(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| (m.center[0].powi(2) + m.center[1].powi(2)).sqrt() + 6.0 * m.std)
            .fold(0.0, f64::max)
    }

    /// Draw `n` points: choose a mode by weight, then add isotropic noise.
    pub fn sample(&self, rng: &mut SeededRng, n: usize) -> Mat {
        let mut out = Mat::zeros(n, 2);
        for r in 0..n {
            let mode = self.pick_mode(rng.uniform());
            let row = out.row_mut(r);
            row[0] = mode.center[0] + mode.std * rng.standard_normal();
            row[1] = mode.center[1] + mode.std * rng.standard_normal();
        }
        out
    }

    fn pick_mode(&self, u: f64) -> &Mode {
        let mut acc = 0.0;
        for m in &self.modes {
            acc += m.weight;
            if u < acc {
                return m;
            }
        }
        self.modes.last().expect("nonempty mixture")
    }

    /// `log sum_k w_k N(x; c_k, std_k^2 I)` via log-sum-exp.
    pub fn log_density(&self, x: &[f64; 2]) -> f64 {
        let mut terms = Vec::with_capacity(self.modes.len());
        let mut max_term = f64::NEG_INFINITY;
        for m in &self.modes {
            let dx = x[0] - m.center[0];
            let dy = x[1] - m.center[1];
            let var = m.std * m.std;
            let term = m.weight.ln() - LN_2PI - var.ln() - (dx * dx + dy * dy) / (2.0 * var);
            if term > max_term {
                max_term = term;
            }
            terms.push(term);
        }
        if !max_term.is_finite() {
            return max_term;
        }
        let sum_exp: f64 = terms.iter().map(|t| (t - max_term).exp()).sum();
        max_term + sum_exp.ln()
    }

    /// Dataset CSV with header `x,y`.
    pub fn dataset_csv(samples: &Mat) -> String {
        let mut out = String::from("x,y\n");
        for row in samples.iter_rows() {
            out.push_str(&format!("{},{}\n", row[0], row[1]));
        }
        out
    }
}
