use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffusion::{forward_sample, LossConfig, NoiseSchedule};
use crate::linalg::axpy;
use crate::selfies::TokenSequence;

use super::{DenoiserError, DescriptorVector, ToyConfig, ToyDenoiser};

/// Two-stage training settings: stage one optimizes the diffusion objective
/// alone, stage two adds the descriptor-regression objective.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Gradient L2-norm clip; the 1/t loss weighting produces rare large
    /// spikes at small t. Zero disables clipping.
    pub clip_norm: f64,
    pub loss: LossConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            stage1_epochs: 60,
            stage2_epochs: 20,
            learning_rate: 0.05,
            momentum: 0.9,
            clip_norm: 5.0,
            loss: LossConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub stage: u8,
    pub epoch: usize,
    pub mean_loss: f64,
}

/// Training-curve log, one record per epoch.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

/// Train a toy denoiser on the corpus with stochastic gradient descent and
/// momentum. `targets` must align with `corpus`; they are consumed in stage
/// two unless the loss weighting is zero.
pub fn train_toy(
    corpus: &[TokenSequence],
    targets: &[DescriptorVector],
    model_cfg: ToyConfig,
    cfg: &TrainConfig,
) -> Result<(ToyDenoiser, TrainLog), DenoiserError> {
    if corpus.is_empty() {
        return Err(DenoiserError::Shape("empty corpus".to_string()));
    }
    if targets.len() != corpus.len() {
        return Err(DenoiserError::Shape(format!(
            "targets ({}) must align with corpus ({})",
            targets.len(),
            corpus.len()
        )));
    }
    for t in targets {
        if t.len() != model_cfg.descriptor_len {
            return Err(DenoiserError::Shape(format!(
                "descriptor length {} != configured {}",
                t.len(),
                model_cfg.descriptor_len
            )));
        }
    }
    let sched = NoiseSchedule::log_linear();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut den = ToyDenoiser::seeded(model_cfg, cfg.seed.wrapping_add(1));
    let mut velocity = vec![0.0; den.param_len()];
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..corpus.len()).collect();

    let total_epochs = cfg.stage1_epochs + cfg.stage2_epochs;
    for epoch in 0..total_epochs {
        let stage: u8 = if epoch < cfg.stage1_epochs { 1 } else { 2 };
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let x0 = &corpus[i];
            let draws = cfg.loss.t_samples.max(1);
            let mut grad = vec![0.0; den.param_len()];
            let mut example_loss = 0.0;
            for _ in 0..draws {
                let t = 1.0 - rng.gen::<f64>();
                let xt = forward_sample(x0, t, &sched, &mut rng)
                    .map_err(|e| DenoiserError::Shape(e.to_string()))?;
                let (loss, g) = den.dlm_backward(x0, &xt, t)?;
                example_loss += loss / draws as f64;
                axpy(1.0 / draws as f64, &g, &mut grad);
            }
            if stage == 2 && cfg.loss.lambda > 0.0 {
                let with_cls = x0.with_cls_prepended();
                let (mtr, g) = den.mtr_backward(&with_cls, targets[i].values(), sched.eps())?;
                example_loss += cfg.loss.lambda * mtr;
                axpy(cfg.loss.lambda, &g, &mut grad);
            }
            if !example_loss.is_finite() {
                return Err(DenoiserError::DivergenceDetected(epoch));
            }
            if cfg.clip_norm > 0.0 {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > cfg.clip_norm {
                    let scale = cfg.clip_norm / norm;
                    for g in grad.iter_mut() {
                        *g *= scale;
                    }
                }
            }
            for (v, g) in velocity.iter_mut().zip(&grad) {
                *v = cfg.momentum * *v + g;
            }
            let params = den.params_mut();
            for (p, v) in params.iter_mut().zip(&velocity) {
                *p -= cfg.learning_rate * v;
            }
            epoch_loss += example_loss;
        }
        let mean_loss = epoch_loss / corpus.len() as f64;
        if !mean_loss.is_finite() {
            return Err(DenoiserError::DivergenceDetected(epoch));
        }
        log.epochs.push(EpochRecord {
            stage,
            epoch,
            mean_loss,
        });
    }
    Ok((den, log))
}
