//! SGD / Adam / RMSProp parameter updates with optional weight clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Gradients, Mlp};

/// Update rule and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Rmsprop {
        lr: f64,
        decay: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub fn adam(lr: f64, beta1: f64, beta2: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1,
            beta2,
            epsilon: 1e-8,
        }
    }

    pub fn rmsprop(lr: f64, decay: f64) -> Self {
        Optimizer::Rmsprop {
            lr,
            decay,
            epsilon: 1e-8,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr }
            | Optimizer::Adam { lr, .. }
            | Optimizer::Rmsprop { lr, .. } => lr,
        }
    }
}

#[derive(Debug, Clone)]
struct ShadowLayer {
    w: Vec<f64>,
    b: Vec<f64>,
}

/// Optimizer plus its per-parameter moment buffers for one network.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    opt: Optimizer,
    weight_clip: Option<f64>,
    step: u64,
    first: Vec<ShadowLayer>,
    second: Vec<ShadowLayer>, // Adam only
}

impl OptimizerState {
    pub fn new(opt: Optimizer, weight_clip: Option<f64>, mlp: &Mlp) -> Result<Self> {
        // lr = 0 is allowed: it freezes the network, which degenerate-case
        // tests rely on.
        if !(opt.learning_rate() >= 0.0) || !opt.learning_rate().is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be a finite non-negative value, got {}",
                opt.learning_rate()
            )));
        }
        if let Some(c) = weight_clip {
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "weight clip bound must be positive, got {c}"
                )));
            }
        }
        let zeros = |m: &Mlp| -> Vec<ShadowLayer> {
            m.layers()
                .iter()
                .map(|l| ShadowLayer {
                    w: vec![0.0; l.weights().len()],
                    b: vec![0.0; l.bias().len()],
                })
                .collect()
        };
        let needs_first = !matches!(opt, Optimizer::Sgd { .. });
        let needs_second = matches!(opt, Optimizer::Adam { .. });
        Ok(OptimizerState {
            opt,
            weight_clip,
            step: 0,
            first: if needs_first { zeros(mlp) } else { Vec::new() },
            second: if needs_second { zeros(mlp) } else { Vec::new() },
        })
    }

    pub fn optimizer(&self) -> Optimizer {
        self.opt
    }

    pub fn weight_clip(&self) -> Option<f64> {
        self.weight_clip
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update. Rejects non-finite gradients before touching the
    /// parameters and rejects non-finite parameters after the update.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        self.step += 1;
        let n_layers = mlp.layers().len();
        for l in 0..n_layers {
            let (gw, gb) = grads.layer_slices(l);
            let params = mlp.layers_mut()[l].params_mut();
            if params.weights.len() != gw.len() || params.bias.len() != gb.len() {
                return Err(Error::Shape(format!(
                    "gradient shape does not match parameters in layer {l}"
                )));
            }
            match self.opt {
                Optimizer::Sgd { lr } => {
                    sgd_slice(params.weights, gw, lr);
                    sgd_slice(params.bias, gb, lr);
                }
                Optimizer::Adam {
                    lr,
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let t = self.step;
                    let m = &mut self.first[l];
                    let v = &mut self.second[l];
                    adam_slice(params.weights, gw, &mut m.w, &mut v.w, lr, beta1, beta2, epsilon, t);
                    adam_slice(params.bias, gb, &mut m.b, &mut v.b, lr, beta1, beta2, epsilon, t);
                }
                Optimizer::Rmsprop { lr, decay, epsilon } => {
                    let s = &mut self.first[l];
                    rmsprop_slice(params.weights, gw, &mut s.w, lr, decay, epsilon);
                    rmsprop_slice(params.bias, gb, &mut s.b, lr, decay, epsilon);
                }
            }
            if let Some(c) = self.weight_clip {
                for p in params.weights.iter_mut().chain(params.bias.iter_mut()) {
                    *p = p.clamp(-c, c);
                }
            }
        }
        mlp.assert_finite("parameters after optimizer step")
    }
}

fn sgd_slice(params: &mut [f64], grads: &[f64], lr: f64) {
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: u64,
) {
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

fn rmsprop_slice(
    params: &mut [f64],
    grads: &[f64],
    s: &mut [f64],
    lr: f64,
    decay: f64,
    epsilon: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        s[i] = decay * s[i] + (1.0 - decay) * g * g;
        params[i] -= lr * g / (s[i].sqrt() + epsilon);
    }
}
