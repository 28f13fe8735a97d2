//! Exact data-preparation rules: activity-label operator handling and
//! transforms, synergy binarization, genome fragmentation and embedding
//! pooling/scaling, strain-name redaction, strain-wise splits, token
//! fingerprints, and evaluation metrics.

mod fingerprint;
mod genome;
mod matrix;
mod metrics;
mod mic;
mod splits;
mod text;

pub use fingerprint::{tanimoto, token_fingerprint};
pub use genome::{
    fragment_contig, pool_fragment_embedding, scale_genome_embeddings, GenomeFragment,
    StrainContext, GENOME_SCALE,
};
pub use matrix::Matrix;
pub use metrics::{
    classification_metrics, regression_metrics, ClassificationMetrics, RegressionMetrics,
};
pub use mic::{binarize_fici, mic_to_label, parse_mic, MicRecord, MicUnit, SynergyRecord};
pub use splits::{strain_wise_splits, ActivityRecord, Fold};
pub use text::redact_strain_name;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataprepError {
    #[error("unparseable record: {0:?}")]
    UnparseableRecord(String),
    #[error("MIC value must be positive, got {0}")]
    NonpositiveMic(f64),
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
    #[error("molecular weight required to convert {0:?} but none available")]
    MissingWeight(String),
    #[error("window {window} must exceed step {step}")]
    BadWindow { window: usize, step: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("matrix entry overflowed to infinity")]
    OverflowToInfinity,
    #[error("genome embedding already scaled")]
    AlreadyScaled,
    #[error("species {0:?} has fewer than {1} strains")]
    TooFewStrains(String, usize),
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),
    #[error("both classes must be present")]
    SingleClass,
    #[error("matrix file malformed: {0}")]
    MalformedMatrix(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Token(#[from] crate::selfies::TokenError),
}
