//! SELFIES tokenization, vocabulary management, and conversion to and from
//! SMILES for the supported chemistry subset.
//!
//! Token inventory and derivation rules follow the published SELFIES
//! grammar: atom tokens with optional `=`/`#` bond prefixes, explicit
//! hydrogen counts and +-1 charges; `[BranchN]`/`[RingN]` tokens whose
//! lengths and distances are read from the 16-symbol index alphabet.
//! Stereochemical tokens pass through tokenization untouched but are
//! rejected by the decoder.

mod decode;
mod encode;
mod token;
mod vocab;

pub use decode::{selfies_to_graph, selfies_to_smiles};
pub use encode::{graph_to_selfies, smiles_to_selfies};
pub use token::{split_tokens, SelfiesToken, TokenError, INDEX_ALPHABET};
pub use vocab::{
    TokenSequence, Vocabulary, VocabularyError, CLS_ID, CLS_TOKEN, DEFAULT_MAX_LEN, MASK_ID,
    MASK_TOKEN, PAD_ID, PAD_TOKEN,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelfiesError {
    #[error("unsupported token {0}")]
    UnsupportedToken(String),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error("unsupported SMILES feature: {0}")]
    UnsupportedFeature(String),
    #[error(transparent)]
    Graph(#[from] crate::chem::GraphError),
}
