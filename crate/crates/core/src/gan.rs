//! Vanilla GAN / WGAN losses and single-pair update steps.
//!
//! Loss reductions are means over the batch, computed with an
//! order-independent sum (values sorted before accumulation) so that
//! reported losses are exactly invariant under batch permutation.

use serde::{Deserialize, Serialize};

use crate::config::AuxGranularity;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::nn::{Activation, Mlp, OptimizerState};
use crate::rng::SeededRng;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before any
/// logarithm, which keeps vanilla losses finite for all inputs.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gan,
    Wgan,
}

impl ModelKind {
    pub fn discriminator_output(self) -> Activation {
        match self {
            ModelKind::Gan => Activation::Sigmoid,
            ModelKind::Wgan => Activation::Identity,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Gan => write!(f, "gan"),
            ModelKind::Wgan => write!(f, "wgan"),
        }
    }
}

/// One generator/discriminator pair with its optimizer state.
#[derive(Debug, Clone)]
pub struct GanPair {
    pub id: usize,
    pub kind: ModelKind,
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub gen_opt: OptimizerState,
    pub disc_opt: OptimizerState,
}

impl GanPair {
    pub fn new(
        id: usize,
        kind: ModelKind,
        generator: Mlp,
        discriminator: Mlp,
        gen_opt: OptimizerState,
        disc_opt: OptimizerState,
    ) -> Result<Self> {
        if generator.output_dim() != discriminator.input_dim() {
            return Err(Error::Shape(format!(
                "generator outputs {} dims, discriminator expects {}",
                generator.output_dim(),
                discriminator.input_dim()
            )));
        }
        if discriminator.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "discriminator must output a single value, got {}",
                discriminator.output_dim()
            )));
        }
        if discriminator.output_activation() != kind.discriminator_output() {
            return Err(Error::Config(format!(
                "model kind {kind} requires {:?} discriminator output, got {:?}",
                kind.discriminator_output(),
                discriminator.output_activation()
            )));
        }
        Ok(GanPair {
            id,
            kind,
            generator,
            discriminator,
            gen_opt,
            disc_opt,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.generator.input_dim()
    }

    pub fn data_dim(&self) -> usize {
        self.generator.output_dim()
    }

    /// Combined parameter checksum of both networks.
    pub fn checksum(&self) -> u64 {
        self.generator
            .checksum()
            .rotate_left(1)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ self.discriminator.checksum()
    }

    /// Generate `n` samples from the current generator.
    pub fn generate(&self, rng: &mut SeededRng, n: usize) -> Result<Mat> {
        let latents = rng.normal_mat(n, self.latent_dim());
        self.generator.forward_batch(&latents)
    }
}

/// Discriminator loss with its per-sample decomposition:
/// `total == mean(real_terms) + mean(fake_terms)`.
#[derive(Debug, Clone)]
pub struct DiscLossTerms {
    pub total: f64,
    pub real_terms: Vec<f64>,
    pub fake_terms: Vec<f64>,
}

use crate::mat::stable_mean;

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Per-sample real-branch term and its derivative w.r.t. the raw
/// discriminator output.
#[inline]
fn real_term(kind: ModelKind, y: f64) -> (f64, f64) {
    match kind {
        ModelKind::Gan => {
            let p = clamp_prob(y);
            let grad = if y > PROB_CLAMP && y < 1.0 - PROB_CLAMP {
                -1.0 / p
            } else {
                0.0 // clamp saturates
            };
            (-p.ln(), grad)
        }
        ModelKind::Wgan => (-y, -1.0),
    }
}

#[inline]
fn fake_term(kind: ModelKind, y: f64) -> (f64, f64) {
    match kind {
        ModelKind::Gan => {
            let p = clamp_prob(y);
            let grad = if y > PROB_CLAMP && y < 1.0 - PROB_CLAMP {
                1.0 / (1.0 - p)
            } else {
                0.0
            };
            (-(1.0 - p).ln(), grad)
        }
        ModelKind::Wgan => (y, 1.0),
    }
}

struct TermVecs {
    real: Vec<f64>,
    fake: Vec<f64>,
    d_real: Vec<f64>,
    d_fake: Vec<f64>,
}

fn disc_terms(kind: ModelKind, disc: &Mlp, real: &Mat, fake: &Mat) -> Result<TermVecs> {
    let y_real = disc.forward_batch(real)?.column0();
    let y_fake = disc.forward_batch(fake)?.column0();
    let (mut r, mut dr) = (Vec::with_capacity(y_real.len()), Vec::with_capacity(y_real.len()));
    for y in y_real {
        let (t, d) = real_term(kind, y);
        r.push(t);
        dr.push(d);
    }
    let (mut f, mut df) = (Vec::with_capacity(y_fake.len()), Vec::with_capacity(y_fake.len()));
    for y in y_fake {
        let (t, d) = fake_term(kind, y);
        f.push(t);
        df.push(d);
    }
    Ok(TermVecs {
        real: r,
        fake: f,
        d_real: dr,
        d_fake: df,
    })
}

/// Discriminator loss on a (real, fake) batch pair.
///
/// Vanilla: `-mean log D(x) - mean log(1 - D(x_fake))` with clamped
/// probabilities. WGAN: `mean D(x_fake) - mean D(x)` (the critic's
/// maximization objective expressed as a minimized loss).
pub fn disc_loss(pair: &GanPair, real: &Mat, fake: &Mat) -> Result<DiscLossTerms> {
    disc_loss_of(pair.kind, &pair.discriminator, real, fake)
}

/// Same as [`disc_loss`] but against an arbitrary discriminator network
/// (used to evaluate a reference discriminator on another pair's batches).
pub fn disc_loss_of(kind: ModelKind, disc: &Mlp, real: &Mat, fake: &Mat) -> Result<DiscLossTerms> {
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(Error::Shape("batches must be nonempty".into()));
    }
    if real.rows() != fake.rows() {
        return Err(Error::Shape(format!(
            "real batch has {} rows, fake batch has {}",
            real.rows(),
            fake.rows()
        )));
    }
    let terms = disc_terms(kind, disc, real, fake)?;
    Ok(DiscLossTerms {
        total: stable_mean(&terms.real) + stable_mean(&terms.fake),
        real_terms: terms.real,
        fake_terms: terms.fake,
    })
}

/// Generator loss through the pair's discriminator on `latents`.
///
/// Vanilla default is the non-saturating form `-mean log D(G(z))`;
/// `saturating` restores the literal `mean log(1 - D(G(z)))`.
/// WGAN: `-mean D(G(z))`.
pub fn gen_loss(pair: &GanPair, latents: &Mat, saturating: bool) -> Result<f64> {
    if latents.rows() == 0 {
        return Err(Error::Shape("latent batch must be nonempty".into()));
    }
    let fake = pair.generator.forward_batch(latents)?;
    let y = pair.discriminator.forward_batch(&fake)?.column0();
    let terms: Vec<f64> = y.iter().map(|&v| gen_term(pair.kind, v, saturating).0).collect();
    Ok(stable_mean(&terms))
}

#[inline]
fn gen_term(kind: ModelKind, y: f64, saturating: bool) -> (f64, f64) {
    match kind {
        ModelKind::Gan => {
            let p = clamp_prob(y);
            let unclamped = y > PROB_CLAMP && y < 1.0 - PROB_CLAMP;
            if saturating {
                let grad = if unclamped { -1.0 / (1.0 - p) } else { 0.0 };
                ((1.0 - p).ln(), grad)
            } else {
                let grad = if unclamped { -1.0 / p } else { 0.0 };
                (-p.ln(), grad)
            }
        }
        ModelKind::Wgan => (-y, -1.0),
    }
}

/// Reference for the auxiliary term of a discriminator update.
#[derive(Clone, Copy)]
pub enum AuxRef<'a> {
    /// Plain adversarial update.
    None,
    /// The best pair matching itself: the term is identically zero and
    /// contributes no gradient.
    SelfMatch,
    /// Frozen best-pair discriminator used as a constant target.
    Teacher(&'a Mlp),
}

pub struct DiscStepOutcome {
    pub loss: f64,
    pub aux_loss: Option<f64>,
}

/// One discriminator update on (real, fake), optionally with the
/// loss-matching term weighted by `lambda` folded into the gradient.
pub fn disc_update(
    pair: &mut GanPair,
    real: &Mat,
    fake: &Mat,
    aux: AuxRef<'_>,
    lambda: f64,
    granularity: AuxGranularity,
) -> Result<DiscStepOutcome> {
    if real.rows() == 0 || fake.rows() == 0 || real.rows() != fake.rows() {
        return Err(Error::Shape("real/fake batches must be nonempty and equal".into()));
    }
    let batch = real.rows() as f64;
    let own = disc_terms(pair.kind, &pair.discriminator, real, fake)?;
    let loss = stable_mean(&own.real) + stable_mean(&own.fake);

    // Per-sample upstream gradients on the discriminator output, including
    // the auxiliary factor where a teacher is present.
    let mut up_real = Vec::with_capacity(own.real.len());
    let mut up_fake = Vec::with_capacity(own.fake.len());
    let aux_loss = match aux {
        AuxRef::None => {
            for d in &own.d_real {
                up_real.push(d / batch);
            }
            for d in &own.d_fake {
                up_fake.push(d / batch);
            }
            None
        }
        AuxRef::SelfMatch => {
            for d in &own.d_real {
                up_real.push(d / batch);
            }
            for d in &own.d_fake {
                up_fake.push(d / batch);
            }
            Some(0.0)
        }
        AuxRef::Teacher(teacher) => {
            let target = disc_terms(pair.kind, teacher, real, fake)?;
            let value = match granularity {
                AuxGranularity::PerSample => {
                    let sq: Vec<f64> = own
                        .real
                        .iter()
                        .zip(&target.real)
                        .chain(own.fake.iter().zip(&target.fake))
                        .map(|(a, b)| (a - b) * (a - b))
                        .collect();
                    for ((d, own_t), tgt_t) in own.d_real.iter().zip(&own.real).zip(&target.real) {
                        up_real.push(d / batch * (1.0 + lambda * (own_t - tgt_t)));
                    }
                    for ((d, own_t), tgt_t) in own.d_fake.iter().zip(&own.fake).zip(&target.fake) {
                        up_fake.push(d / batch * (1.0 + lambda * (own_t - tgt_t)));
                    }
                    stable_mean(&sq)
                }
                AuxGranularity::Scalar => {
                    let target_loss = stable_mean(&target.real) + stable_mean(&target.fake);
                    let gap = loss - target_loss;
                    let factor = 1.0 + 2.0 * lambda * gap;
                    for d in &own.d_real {
                        up_real.push(d / batch * factor);
                    }
                    for d in &own.d_fake {
                        up_fake.push(d / batch * factor);
                    }
                    gap * gap
                }
            };
            Some(value)
        }
    };

    let up_real = Mat::from_vec(up_real.len(), 1, up_real);
    let up_fake = Mat::from_vec(up_fake.len(), 1, up_fake);
    let (mut grads, _) = pair.discriminator.backward_batch(real, &up_real)?;
    let (fake_grads, _) = pair.discriminator.backward_batch(fake, &up_fake)?;
    grads.add_assign(&fake_grads);
    pair.disc_opt.step(&mut pair.discriminator, &grads)?;
    Ok(DiscStepOutcome { loss, aux_loss })
}

/// One generator update through the (already updated) discriminator.
pub fn gen_update(pair: &mut GanPair, latents: &Mat, saturating: bool) -> Result<f64> {
    let batch = latents.rows() as f64;
    let fake = pair.generator.forward_batch(latents)?;
    let y = pair.discriminator.forward_batch(&fake)?.column0();
    let mut terms = Vec::with_capacity(y.len());
    let mut upstream = Vec::with_capacity(y.len());
    for &v in &y {
        let (t, d) = gen_term(pair.kind, v, saturating);
        terms.push(t);
        upstream.push(d / batch);
    }
    let upstream = Mat::from_vec(upstream.len(), 1, upstream);
    let (_, d_fake) = pair.discriminator.backward_batch(&fake, &upstream)?;
    let (grads, _) = pair.generator.backward_batch(latents, &d_fake)?;
    pair.gen_opt.step(&mut pair.generator, &grads)?;
    Ok(stable_mean(&terms))
}

#[derive(Debug, Clone, Copy)]
pub struct StepLog {
    pub disc_loss: f64,
    pub gen_loss: f64,
}

/// Standard adversarial update for one pair: discriminator update(s) on
/// (real, fresh fakes), then one generator update through the updated
/// discriminator. WGAN runs `n_critic` critic updates (fresh fakes each,
/// weight clip applied by the optimizer) per generator update.
pub fn individual_step(
    pair: &mut GanPair,
    real: &Mat,
    rng: &mut SeededRng,
    n_critic: usize,
    saturating: bool,
) -> Result<StepLog> {
    let batch = real.rows();
    let critic_iters = match pair.kind {
        ModelKind::Gan => 1,
        ModelKind::Wgan => n_critic.max(1),
    };
    let mut disc_losses = Vec::with_capacity(critic_iters);
    for _ in 0..critic_iters {
        let z = rng.normal_mat(batch, pair.latent_dim());
        let fake = pair.generator.forward_batch(&z)?;
        let outcome = disc_update(pair, real, &fake, AuxRef::None, 0.0, AuxGranularity::PerSample)?;
        disc_losses.push(outcome.loss);
    }
    let z = rng.normal_mat(batch, pair.latent_dim());
    let gen_loss = gen_update(pair, &z, saturating)?;
    Ok(StepLog {
        disc_loss: stable_mean(&disc_losses),
        gen_loss,
    })
}
