//! Absorbing-state forward diffusion over token sequences, its analytic
//! posterior, the reverse sampling step, and the training losses.

mod loss;
mod process;
mod schedule;

pub use loss::{combined_loss, dlm_loss, dlm_term, mse, mtr_loss, LossConfig};
pub use process::{forward_sample, posterior, reverse_step, CategoricalDistribution};
pub use schedule::NoiseSchedule;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("time {0} outside (0, 1]")]
    TimeOutOfRange(f64),
    #[error("time order violated: t_prev {t_prev} must be below t {t}")]
    TimeOrder { t_prev: f64, t: f64 },
    #[error("input sequence contains [MASK]")]
    MaskInInput,
    #[error("denoiser assigned {0} probability to [MASK]")]
    DenoiserContractViolation(f64),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error(transparent)]
    Denoiser(#[from] crate::denoiser::DenoiserError),
}
