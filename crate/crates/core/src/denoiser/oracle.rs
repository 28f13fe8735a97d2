use crate::diffusion::CategoricalDistribution;
use crate::selfies::{TokenSequence, MASK_ID};

use super::{Denoiser, DenoiserError, DenoiserOutput};

/// Bayes-exact denoiser over a known finite data distribution: the posterior
/// over clean tokens is computed by enumerating the dataset items consistent
/// with the unmasked positions of the input.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    items: Vec<(TokenSequence, f64)>,
    vocab_size: u32,
    len: usize,
}

impl OracleDenoiser {
    pub fn new(
        items: Vec<(TokenSequence, f64)>,
        vocab_size: u32,
    ) -> Result<OracleDenoiser, DenoiserError> {
        if items.is_empty() {
            return Err(DenoiserError::NoConsistentSequence);
        }
        let len = items[0].0.len();
        if items.iter().any(|(s, _)| s.len() != len) {
            return Err(DenoiserError::RaggedDataset);
        }
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DenoiserError::BadWeights(total));
        }
        Ok(OracleDenoiser {
            items,
            vocab_size,
            len,
        })
    }

    /// Uniform weights over the given sequences.
    pub fn uniform(
        seqs: Vec<TokenSequence>,
        vocab_size: u32,
    ) -> Result<OracleDenoiser, DenoiserError> {
        let w = 1.0 / seqs.len().max(1) as f64;
        OracleDenoiser::new(seqs.into_iter().map(|s| (s, w)).collect(), vocab_size)
    }

    pub fn sequence_len(&self) -> usize {
        self.len
    }

    pub fn items(&self) -> &[(TokenSequence, f64)] {
        &self.items
    }
}

impl Denoiser for OracleDenoiser {
    fn predict(&self, xt: &TokenSequence, _t: f64) -> Result<DenoiserOutput, DenoiserError> {
        if xt.len() != self.len {
            return Err(DenoiserError::LengthMismatch {
                got: xt.len(),
                want: self.len,
            });
        }
        let consistent: Vec<&(TokenSequence, f64)> = self
            .items
            .iter()
            .filter(|(x0, _)| {
                (0..self.len).all(|i| xt.get(i) == MASK_ID || xt.get(i) == x0.get(i))
            })
            .collect();
        let total: f64 = consistent.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(DenoiserError::NoConsistentSequence);
        }
        let k = self.vocab_size as usize;
        let mut per_position = Vec::with_capacity(self.len);
        for pos in 0..self.len {
            let mut probs = vec![0.0; k];
            for (x0, w) in &consistent {
                probs[x0.get(pos) as usize] += w / total;
            }
            // Exact renormalization so the sum is 1 bit-for-bit stable.
            let sum: f64 = probs.iter().sum();
            for p in probs.iter_mut() {
                *p /= sum;
            }
            per_position.push(
                CategoricalDistribution::new(probs).expect("oracle probabilities normalized"),
            );
        }
        Ok(DenoiserOutput::new(per_position))
    }

    fn vocab_size(&self) -> u32 {
        self.vocab_size
    }
}
