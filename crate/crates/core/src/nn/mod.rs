//! Fixed-topology multilayer perceptrons with exact analytic backprop.
//!
//! Weights are row-major `(out x in)` per layer, biases per output unit.
//! The backward pass recomputes the forward activations internally, so the
//! API stays value-oriented: `backward_batch(input, upstream)` returns the
//! parameter gradients of whatever scalar loss produced `upstream` plus the
//! gradient with respect to the input batch (needed to chain a generator
//! behind a discriminator).

mod optim;

pub use optim::{Optimizer, OptimizerState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the post-activation value `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer: `y = act(W x + b)`.
#[derive(Debug, Clone)]
pub struct Layer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>, // row-major (out_dim x in_dim)
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::Shape(format!(
                "layer weights have {} entries, expected {}x{}",
                weights.len(),
                out_dim,
                in_dim
            )));
        }
        if bias.len() != out_dim {
            return Err(Error::Shape(format!(
                "layer bias has {} entries, expected {out_dim}",
                bias.len()
            )));
        }
        Ok(Layer {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape(format!(
                    "layer dimensions do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        Ok(Mlp { layers })
    }

    /// Bounded-uniform init: weights in `+-sqrt(6/(in+out))`, biases zero.
    pub fn init(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Shape("need at least input and output dims".into()));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (inn, out) = (dims[l], dims[l + 1]);
            let act = if l + 2 == dims.len() { output } else { hidden };
            let bound = (6.0 / (inn + out) as f64).sqrt();
            let weights: Vec<f64> = (0..inn * out).map(|_| rng.range(-bound, bound)).collect();
            layers.push(Layer::new(inn, out, weights, vec![0.0; out], act)?);
        }
        Ok(Mlp { layers })
    }

    /// All-zero parameters; useful for degenerate-case tests.
    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (inn, out) = (dims[l], dims[l + 1]);
            let act = if l + 2 == dims.len() { output } else { hidden };
            layers.push(Layer::new(inn, out, vec![0.0; inn * out], vec![0.0; out], act)?);
        }
        Mlp::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    /// Layer widths as `[input, hidden.., output]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut cur = input.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.out_dim];
            affine_into(layer, &cur, &mut next);
            for v in &mut next {
                *v = layer.activation.apply(*v);
            }
            cur = next;
        }
        Ok(cur)
    }

    pub fn forward_batch(&self, input: &Mat) -> Result<Mat> {
        let acts = self.forward_trace(input)?;
        Ok(acts.into_iter().last().expect("nonempty trace"))
    }

    /// Gradients of the scalar loss whose per-output derivative is
    /// `upstream` (shape `batch x out`), summed over the batch, plus the
    /// loss gradient with respect to the input batch.
    pub fn backward_batch(&self, input: &Mat, upstream: &Mat) -> Result<(Gradients, Mat)> {
        if upstream.rows() != input.rows() || upstream.cols() != self.output_dim() {
            return Err(Error::Shape(format!(
                "upstream is {}x{}, expected {}x{}",
                upstream.rows(),
                upstream.cols(),
                input.rows(),
                self.output_dim()
            )));
        }
        let acts = self.forward_trace(input)?;
        let batch = input.rows();
        let mut grads = Gradients::zeros_like(self);
        let mut da = upstream.clone();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gl = &mut grads.layers[l];
            let mut da_prev = Mat::zeros(batch, layer.in_dim);
            for b in 0..batch {
                let a_prev = acts[l].row(b);
                let y = acts[l + 1].row(b);
                let da_row = da.row(b);
                let dp_row = da_prev.row_mut(b);
                for o in 0..layer.out_dim {
                    let dz = da_row[o] * layer.activation.derivative_from_output(y[o]);
                    if dz == 0.0 {
                        continue;
                    }
                    gl.db[o] += dz;
                    let w_row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let gw_row = &mut gl.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for i in 0..layer.in_dim {
                        gw_row[i] += dz * a_prev[i];
                        dp_row[i] += w_row[i] * dz;
                    }
                }
            }
            da = da_prev;
        }
        Ok((grads, da))
    }

    /// Post-activation values per layer: `[input, a_1, .., a_L]`.
    fn forward_trace(&self, input: &Mat) -> Result<Vec<Mat>> {
        if input.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, network expects {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let batch = input.rows();
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for layer in &self.layers {
            let prev = acts.last().expect("acts nonempty");
            let mut next = Mat::zeros(batch, layer.out_dim);
            for b in 0..batch {
                let out_row = next.row_mut(b);
                affine_into(layer, prev.row(b), out_row);
                for v in out_row.iter_mut() {
                    *v = layer.activation.apply(*v);
                }
            }
            acts.push(next);
        }
        Ok(acts)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flat parameter access (per layer: weights row-major, then bias).
    pub fn param_at(&self, idx: usize) -> f64 {
        let mut i = idx;
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                return layer.bias[i];
            }
            i -= layer.bias.len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn set_param_at(&mut self, idx: usize, value: f64) {
        let mut i = idx;
        for layer in &mut self.layers {
            if i < layer.weights.len() {
                layer.weights[i] = value;
                return;
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                layer.bias[i] = value;
                return;
            }
            i -= layer.bias.len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn max_abs_param(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        for layer in &self.layers {
            if !layer.weights.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite parameter in {what}")));
            }
        }
        Ok(())
    }

    /// FNV-1a over the parameter bit patterns; used to verify that
    /// read-only phases really left the network untouched.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for byte in v.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for layer in &self.layers {
            layer.weights.iter().copied().for_each(&mut eat);
            layer.bias.iter().copied().for_each(&mut eat);
        }
        h
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }
}

#[inline]
fn affine_into(layer: &Layer, x: &[f64], out: &mut [f64]) {
    for o in 0..layer.out_dim {
        let w_row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        let mut acc = layer.bias[o];
        for (w, xv) in w_row.iter().zip(x) {
            acc += w * xv;
        }
        out[o] = acc;
    }
}

pub(crate) struct LayerParamsMut<'a> {
    pub weights: &'a mut [f64],
    pub bias: &'a mut [f64],
}

impl Layer {
    pub(crate) fn params_mut(&mut self) -> LayerParamsMut<'_> {
        LayerParamsMut {
            weights: &mut self.weights,
            bias: &mut self.bias,
        }
    }
}

/// Per-parameter partials, shape-identical to the [`Mlp`] they were
/// computed for.
#[derive(Debug, Clone)]
pub struct Gradients {
    layers: Vec<GradLayer>,
}

#[derive(Debug, Clone)]
struct GradLayer {
    dw: Vec<f64>,
    db: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            layers: mlp
                .layers
                .iter()
                .map(|l| GradLayer {
                    dw: vec![0.0; l.weights.len()],
                    db: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        assert_eq!(self.layers.len(), other.layers.len(), "gradient shapes differ");
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.dw.iter_mut().zip(&b.dw) {
                *x += y;
            }
            for (x, y) in a.db.iter_mut().zip(&b.db) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for v in &mut l.dw {
                *v *= factor;
            }
            for v in &mut l.db {
                *v *= factor;
            }
        }
    }

    pub fn at(&self, idx: usize) -> f64 {
        let mut i = idx;
        for layer in &self.layers {
            if i < layer.dw.len() {
                return layer.dw[i];
            }
            i -= layer.dw.len();
            if i < layer.db.len() {
                return layer.db[i];
            }
            i -= layer.db.len();
        }
        panic!("gradient index {idx} out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.dw.iter().chain(l.db.iter()).all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.dw.iter().chain(l.db.iter()))
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.dw.iter().chain(l.db.iter()).all(|v| *v == 0.0))
    }

    pub(crate) fn layer_slices(&self, idx: usize) -> (&[f64], &[f64]) {
        (&self.layers[idx].dw, &self.layers[idx].db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> SeededRng {
        SeededRng::stream(seed, "nn-tests")
    }

    #[test]
    fn zero_net_with_sigmoid_outputs_half() {
        let mlp = Mlp::zeros(&[3, 4, 2], Activation::Relu, Activation::Sigmoid).unwrap();
        let out = mlp.forward(&[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Layer::new(
            2,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0],
            Activation::Identity,
        )
        .unwrap();
        let mlp = Mlp::from_layers(vec![layer]).unwrap();
        assert_eq!(mlp.forward(&[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn forward_matches_straight_line_reimplementation() {
        // Oracle: an independent nested-loop evaluation of the same
        // weights, written directly against Vec<Vec<f64>> structure.
        let mut r = rng(42);
        let mlp = Mlp::init(&[2, 16, 16, 1], Activation::Relu, Activation::Sigmoid, &mut r)
            .unwrap();
        let input = [0.37, -1.21];

        let mut cur: Vec<f64> = input.to_vec();
        for (li, layer) in mlp.layers().iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim()];
            for o in 0..layer.out_dim() {
                let mut acc = layer.bias()[o];
                for i in 0..layer.in_dim() {
                    acc += layer.weights()[o * layer.in_dim() + i] * cur[i];
                }
                next[o] = if li + 1 == mlp.layers().len() {
                    1.0 / (1.0 + (-acc).exp())
                } else {
                    acc.max(0.0)
                };
            }
            cur = next;
        }

        let got = mlp.forward(&input).unwrap();
        assert_eq!(got.len(), 1);
        assert!((got[0] - cur[0]).abs() < 1e-12, "{} vs {}", got[0], cur[0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut r = rng(7);
        let mlp = Mlp::init(&[3, 5, 2], Activation::Relu, Activation::Identity, &mut r).unwrap();
        let x = r.normal_mat(4, 3);
        let upstream = Mat::zeros(4, 2);
        let (grads, dx) = mlp.backward_batch(&x, &upstream).unwrap();
        assert!(grads.is_zero());
        assert!(dx.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_layer_mean_loss_weight_grad_is_mean_input() {
        // Loss = mean over batch of the single output; upstream = 1/B.
        // d loss / d w_oj = mean_b x_bj, derived by hand for the linear map.
        let mut r = rng(9);
        let mlp = Mlp::init(&[3, 1], Activation::Relu, Activation::Identity, &mut r).unwrap();
        let batch = 6;
        let x = r.normal_mat(batch, 3);
        let mut upstream = Mat::zeros(batch, 1);
        upstream.data_mut().fill(1.0 / batch as f64);
        let (grads, _) = mlp.backward_batch(&x, &upstream).unwrap();
        for j in 0..3 {
            let mean_j: f64 =
                (0..batch).map(|b| x.row(b)[j]).sum::<f64>() / batch as f64;
            assert!((grads.at(j) - mean_j).abs() < 1e-12);
        }
    }

    /// Central differences are invalid next to a ReLU kink; reject cases
    /// where any pre-activation sits within `margin` of zero.
    fn kink_safe(mlp: &Mlp, x: &Mat, margin: f64) -> bool {
        for b in 0..x.rows() {
            let mut cur = x.row(b).to_vec();
            for layer in mlp.layers() {
                let mut next = vec![0.0; layer.out_dim()];
                for o in 0..layer.out_dim() {
                    let mut acc = layer.bias()[o];
                    for i in 0..layer.in_dim() {
                        acc += layer.weights()[o * layer.in_dim() + i] * cur[i];
                    }
                    if matches!(layer.activation(), Activation::Relu) && acc.abs() < margin {
                        return false;
                    }
                    next[o] = layer.activation().apply(acc);
                }
                cur = next;
            }
        }
        true
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        // Compact in-module check; the full 200-configuration sweep lives in
        // the acceptance suite.
        let mut r = rng(1);
        for case in 0..20 {
            let output = match case % 3 {
                0 => Activation::Sigmoid,
                1 => Activation::Identity,
                _ => Activation::Relu,
            };
            let mlp =
                Mlp::init(&[2, 6, 5, 2], Activation::Relu, output, &mut r).unwrap();
            let x = loop {
                let candidate = r.normal_mat(3, 2);
                if kink_safe(&mlp, &candidate, 1e-3) {
                    break candidate;
                }
            };
            let upstream = r.normal_mat(3, 2);
            let (grads, _) = mlp.backward_batch(&x, &upstream).unwrap();

            // loss(params) = sum_{b,o} upstream[b][o] * out[b][o]
            let loss = |m: &Mlp| -> f64 {
                let out = m.forward_batch(&x).unwrap();
                out.data()
                    .iter()
                    .zip(upstream.data())
                    .map(|(o, u)| o * u)
                    .sum()
            };

            let h = 1e-5;
            for idx in 0..mlp.param_count() {
                let orig = mlp.param_at(idx);
                let mut plus = mlp.clone();
                plus.set_param_at(idx, orig + h);
                let mut minus = mlp.clone();
                minus.set_param_at(idx, orig - h);
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = grads.at(idx);
                let scale = analytic.abs().max(numeric.abs());
                if scale < 1e-3 {
                    assert!(
                        (analytic - numeric).abs() < 1e-7,
                        "case {case} idx {idx}: {analytic} vs {numeric}"
                    );
                } else {
                    assert!(
                        (analytic - numeric).abs() / scale < 1e-4,
                        "case {case} idx {idx}: {analytic} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn shape_errors_are_reported() {
        let mlp = Mlp::zeros(&[2, 3], Activation::Relu, Activation::Identity).unwrap();
        assert!(matches!(mlp.forward(&[1.0]), Err(Error::Shape(_))));
        let x = Mat::zeros(4, 2);
        let bad_upstream = Mat::zeros(4, 2); // expected 4x3
        assert!(matches!(
            mlp.backward_batch(&x, &bad_upstream),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn init_is_deterministic_per_seed_and_bounded() {
        let a = Mlp::init(&[2, 8, 1], Activation::Relu, Activation::Sigmoid, &mut rng(5)).unwrap();
        let b = Mlp::init(&[2, 8, 1], Activation::Relu, Activation::Sigmoid, &mut rng(5)).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        let bound0 = (6.0f64 / (2 + 8) as f64).sqrt();
        for w in a.layers()[0].weights() {
            assert!(w.abs() <= bound0);
        }
        assert!(a.layers()[0].bias().iter().all(|v| *v == 0.0));
    }
}
