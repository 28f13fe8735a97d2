use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

use super::token::{split_tokens, TokenError};

pub const PAD_TOKEN: &str = "[PAD]";
pub const MASK_TOKEN: &str = "[MASK]";
pub const CLS_TOKEN: &str = "[CLS]";

pub const PAD_ID: u32 = 0;
pub const MASK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;

const SPECIALS: [&str; 3] = [PAD_TOKEN, MASK_TOKEN, CLS_TOKEN];

/// Sequences longer than this are discarded at tokenization time.
pub const DEFAULT_MAX_LEN: usize = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("sequence of {len} tokens exceeds the maximum length {max}")]
    TooLong { len: usize, max: usize },
    #[error("special token {0} present where it is not allowed")]
    SpecialTokenPresent(String),
    #[error("token id {0} out of range for vocabulary of size {1}")]
    IdOutOfRange(u32, u32),
    #[error("vocabulary file malformed: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error("io error: {0}")]
    Io(String),
}

/// An immutable SELFIES token vocabulary. `[PAD]`, `[MASK]` and `[CLS]`
/// always occupy ids 0, 1 and 2; the remaining tokens follow in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_len: usize,
}

impl Vocabulary {
    fn from_ordered(tokens: Vec<String>, max_len: usize) -> Vocabulary {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            index,
            max_len,
        }
    }

    /// Build a vocabulary from a corpus of SELFIES strings: the union of
    /// observed tokens plus the special tokens, specials first, the rest in
    /// lexicographic order. Order of the corpus does not matter.
    pub fn build<I, S>(corpus: I) -> Result<Vocabulary, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut observed: BTreeSet<String> = BTreeSet::new();
        let mut any = false;
        for line in corpus {
            any = true;
            for token in split_tokens(line.as_ref())? {
                if !SPECIALS.contains(&token) {
                    observed.insert(token.to_string());
                }
            }
        }
        if !any {
            return Err(VocabularyError::EmptyCorpus);
        }
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(observed);
        Ok(Vocabulary::from_ordered(tokens, DEFAULT_MAX_LEN))
    }

    pub fn with_max_len(mut self, max_len: usize) -> Vocabulary {
        self.max_len = max_len;
        self
    }

    /// Vocabulary size K, special tokens included.
    pub fn size(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn is_special(&self, id: u32) -> bool {
        id < SPECIALS.len() as u32
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Ids of all non-special tokens.
    pub fn content_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (SPECIALS.len() as u32)..self.size()
    }

    pub fn tokenize(&self, text: &str) -> Result<TokenSequence, VocabularyError> {
        let parts = split_tokens(text)?;
        if parts.len() > self.max_len {
            return Err(VocabularyError::TooLong {
                len: parts.len(),
                max: self.max_len,
            });
        }
        let mut ids = Vec::with_capacity(parts.len());
        for p in parts {
            let id = self
                .id_of(p)
                .ok_or_else(|| VocabularyError::UnknownToken(p.to_string()))?;
            ids.push(id);
        }
        Ok(TokenSequence { ids })
    }

    pub fn detokenize(&self, seq: &TokenSequence) -> Result<String, VocabularyError> {
        let mut out = String::new();
        for &id in &seq.ids {
            if self.is_special(id) {
                return Err(VocabularyError::SpecialTokenPresent(
                    self.token(id).unwrap_or("?").to_string(),
                ));
            }
            let token = self
                .token(id)
                .ok_or(VocabularyError::IdOutOfRange(id, self.size()))?;
            out.push_str(token);
        }
        Ok(out)
    }

    /// One token per line, specials first.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), VocabularyError> {
        for t in &self.tokens {
            writeln!(w, "{t}").map_err(|e| VocabularyError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Vocabulary, VocabularyError> {
        let mut tokens = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| VocabularyError::Io(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            tokens.push(t.to_string());
        }
        if tokens.len() < SPECIALS.len() {
            return Err(VocabularyError::MalformedFile(
                "fewer than three tokens".to_string(),
            ));
        }
        for (i, s) in SPECIALS.iter().enumerate() {
            if tokens[i] != *s {
                return Err(VocabularyError::MalformedFile(format!(
                    "token {i} must be {s}, found {}",
                    tokens[i]
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for t in &tokens {
            if !seen.insert(t.clone()) {
                return Err(VocabularyError::MalformedFile(format!(
                    "duplicate token {t}"
                )));
            }
        }
        Ok(Vocabulary::from_ordered(tokens, DEFAULT_MAX_LEN))
    }
}

/// A sequence of vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    ids: Vec<u32>,
}

impl TokenSequence {
    pub fn new(ids: Vec<u32>, vocab_size: u32) -> Result<TokenSequence, VocabularyError> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= vocab_size) {
            return Err(VocabularyError::IdOutOfRange(bad, vocab_size));
        }
        Ok(TokenSequence { ids })
    }

    /// All-`[MASK]` sequence of the given length.
    pub fn masked(len: usize) -> TokenSequence {
        TokenSequence {
            ids: vec![MASK_ID; len],
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn get(&self, i: usize) -> u32 {
        self.ids[i]
    }

    pub fn set(&mut self, i: usize, id: u32) {
        self.ids[i] = id;
    }

    pub fn contains_mask(&self) -> bool {
        self.ids.contains(&MASK_ID)
    }

    pub fn mask_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids
            .iter()
            .enumerate()
            .filter(|(_, &id)| id == MASK_ID)
            .map(|(i, _)| i)
    }

    /// Positions holding a non-special (generated) token.
    pub fn content_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids
            .iter()
            .enumerate()
            .filter(|(_, &id)| id > CLS_ID)
            .map(|(i, _)| i)
    }

    pub fn with_cls_prepended(&self) -> TokenSequence {
        let mut ids = Vec::with_capacity(self.ids.len() + 1);
        ids.push(CLS_ID);
        ids.extend_from_slice(&self.ids);
        TokenSequence { ids }
    }
}

impl From<Vec<u32>> for TokenSequence {
    fn from(ids: Vec<u32>) -> TokenSequence {
        TokenSequence { ids }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_includes_specials_once_and_sorts() {
        let vocab = Vocabulary::build(["[C]", "[C][N]"]).unwrap();
        let tokens: Vec<&str> = vocab.tokens().collect();
        assert_eq!(tokens, vec!["[PAD]", "[MASK]", "[CLS]", "[C]", "[N]"]);
        assert_eq!(vocab.size(), 5);
    }

    #[test]
    fn single_token_corpus_gives_k4() {
        let vocab = Vocabulary::build(["[C]"]).unwrap();
        assert_eq!(vocab.size(), 4);
    }

    #[test]
    fn build_is_order_independent() {
        let a = Vocabulary::build(["[C][N]", "[O]"]).unwrap();
        let b = Vocabulary::build(["[O]", "[N][C]"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_rejects_empty_corpus() {
        let empty: Vec<&str> = Vec::new();
        assert_eq!(
            Vocabulary::build(empty).unwrap_err(),
            VocabularyError::EmptyCorpus
        );
    }

    #[test]
    fn tokenize_roundtrip() {
        let vocab = Vocabulary::build(["[C][N][=C]"]).unwrap();
        let seq = vocab.tokenize("[C][N]").unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(vocab.detokenize(&seq).unwrap(), "[C][N]");
    }

    #[test]
    fn tokenize_rejects_unknown_and_too_long() {
        let vocab = Vocabulary::build(["[C]"]).unwrap().with_max_len(3);
        assert!(matches!(
            vocab.tokenize("[N]"),
            Err(VocabularyError::UnknownToken(_))
        ));
        assert!(matches!(
            vocab.tokenize("[C][C][C][C]"),
            Err(VocabularyError::TooLong { len: 4, max: 3 })
        ));
    }

    #[test]
    fn long_sequence_boundary_is_exact() {
        let vocab = Vocabulary::build(["[C]"]).unwrap();
        let ok: String = "[C]".repeat(DEFAULT_MAX_LEN);
        assert!(vocab.tokenize(&ok).is_ok());
        let too_long: String = "[C]".repeat(DEFAULT_MAX_LEN + 1);
        assert!(matches!(
            vocab.tokenize(&too_long),
            Err(VocabularyError::TooLong { .. })
        ));
    }

    #[test]
    fn detokenize_rejects_specials_and_empty_is_empty() {
        let vocab = Vocabulary::build(["[C]"]).unwrap();
        let seq = TokenSequence::from(vec![MASK_ID]);
        assert!(matches!(
            vocab.detokenize(&seq),
            Err(VocabularyError::SpecialTokenPresent(_))
        ));
        assert_eq!(vocab.detokenize(&TokenSequence::from(vec![])).unwrap(), "");
    }

    #[test]
    fn stereo_tokens_pass_tokenization_but_not_decoding() {
        // Tokenization is pure bracket splitting; the decoder owns the
        // inventory and rejects stereo marks.
        let vocab = Vocabulary::build(["[C@@H1][C]"]).unwrap();
        let seq = vocab.tokenize("[C@@H1][C]").unwrap();
        assert_eq!(vocab.detokenize(&seq).unwrap(), "[C@@H1][C]");
        assert!(matches!(
            crate::selfies::selfies_to_smiles("[C@@H1][C]"),
            Err(crate::selfies::SelfiesError::UnsupportedToken(_))
        ));
    }

    #[test]
    fn save_load_roundtrip() {
        let vocab = Vocabulary::build(["[C][N][O]"]).unwrap();
        let mut buf = Vec::new();
        vocab.save(&mut buf).unwrap();
        let loaded = Vocabulary::load(buf.as_slice()).unwrap();
        assert_eq!(vocab, loaded);
    }

    #[test]
    fn load_rejects_bad_special_order() {
        let bad = "[MASK]\n[PAD]\n[CLS]\n[C]\n";
        assert!(matches!(
            Vocabulary::load(bad.as_bytes()),
            Err(VocabularyError::MalformedFile(_))
        ));
    }
}
