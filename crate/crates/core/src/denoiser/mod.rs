//! The denoiser contract, a Bayes-exact enumeration oracle for testing, and
//! a small trainable attention denoiser with hand-derived gradients.

mod checkpoint;
mod descriptors;
mod oracle;
mod toy;
mod train;

pub use checkpoint::{load_tensors, save_tensors, NamedTensor};
pub use descriptors::{compute_descriptors, DescriptorVector, DESCRIPTOR_LEN};
pub use oracle::OracleDenoiser;
pub use toy::{MtrHead, ToyConfig, ToyDenoiser};
pub use train::{train_toy, EpochRecord, TrainConfig, TrainLog};

use thiserror::Error;

use crate::diffusion::CategoricalDistribution;
use crate::selfies::{TokenSequence, MASK_ID};

#[derive(Debug, Error, PartialEq)]
pub enum DenoiserError {
    #[error("no dataset sequence is consistent with the unmasked positions")]
    NoConsistentSequence,
    #[error("dataset weights sum to {0}, not 1")]
    BadWeights(f64),
    #[error("dataset sequences must share one length")]
    RaggedDataset,
    #[error("sequence length {got} does not match expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("[MASK] probability {0} must be exactly zero")]
    MaskLeak(f64),
    #[error("unmasked position {0} is not a point mass at its token")]
    CopyThroughViolation(usize),
    #[error("input must start with [CLS]")]
    MissingCls,
    #[error("training diverged: loss became non-finite at epoch {0}")]
    DivergenceDetected(usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Selfies(#[from] crate::selfies::SelfiesError),
}

/// Per-position distributions over the vocabulary predicted from a noised
/// sequence. `[MASK]` never receives probability and unmasked positions are
/// point masses at their own token.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserOutput {
    per_position: Vec<CategoricalDistribution>,
}

impl DenoiserOutput {
    pub fn new(per_position: Vec<CategoricalDistribution>) -> DenoiserOutput {
        DenoiserOutput { per_position }
    }

    pub fn len(&self) -> usize {
        self.per_position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_position.is_empty()
    }

    pub fn position(&self, pos: usize) -> &CategoricalDistribution {
        &self.per_position[pos]
    }

    pub fn positions(&self) -> &[CategoricalDistribution] {
        &self.per_position
    }

    /// Enforce the output constraints against the input sequence.
    pub fn check_contract(&self, xt: &TokenSequence) -> Result<(), DenoiserError> {
        if self.per_position.len() != xt.len() {
            return Err(DenoiserError::LengthMismatch {
                got: self.per_position.len(),
                want: xt.len(),
            });
        }
        for (pos, dist) in self.per_position.iter().enumerate() {
            let leak = dist.prob(MASK_ID);
            if leak != 0.0 {
                return Err(DenoiserError::MaskLeak(leak));
            }
            let tok = xt.get(pos);
            if tok != MASK_ID && dist.prob(tok) != 1.0 {
                return Err(DenoiserError::CopyThroughViolation(pos));
            }
        }
        Ok(())
    }
}

/// Anything that estimates per-position clean-token distributions from a
/// noised sequence at time t. Implementations must be safe for concurrent
/// read-only use.
pub trait Denoiser: Send + Sync {
    fn predict(&self, xt: &TokenSequence, t: f64) -> Result<DenoiserOutput, DenoiserError>;

    fn vocab_size(&self) -> u32;
}
