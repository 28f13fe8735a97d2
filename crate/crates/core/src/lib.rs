//! Masked discrete diffusion engine for molecule strings.
//!
//! The crate is organized around a SELFIES token space: an absorbing-state
//! diffusion process corrupts token sequences into `[MASK]` tokens and a
//! denoiser reverses the corruption. On top of that sit predictor-guided and
//! remasking samplers, a peptide-to-SELFIES assembler, exact data-preparation
//! rules for activity datasets, and a cross-attention fusion network that
//! combines molecule features with pathogen strain context.

pub mod chem;
pub mod dataprep;
pub mod denoiser;
pub mod diffusion;
pub mod fusion;
pub mod guidance;
pub(crate) mod linalg;
pub mod peplink;
pub mod sampler;
pub mod selfies;
