use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMBEDDING_DIM: usize = 768;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ProviderError {
    #[error("embedding provider unavailable: {0}")]
    Unavailable(String),
    #[error("embedding provider returned {got} values, expected {expected}")]
    BadDimension { expected: usize, got: usize },
    #[error("embedding provider returned {got} vectors for {expected} phrases")]
    BadBatch { expected: usize, got: usize },
    #[error("embedding provider returned a non-finite value")]
    NonFinite,
}

/// A fixed-length real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Checks the dimension and that every entry is finite.
    pub fn new(values: Vec<f64>) -> Result<Self, ProviderError> {
        if values.len() != EMBEDDING_DIM {
            return Err(ProviderError::BadDimension {
                expected: EMBEDDING_DIM,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProviderError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit length. The zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.0.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Maps phrases to vectors. Identical inputs must give identical vectors
/// for a given `model_id`.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    fn embed_batch(&self, phrases: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;

    fn embed(&self, phrase: &str) -> Result<EmbeddingVector, ProviderError> {
        let mut v = self.embed_batch(&[phrase.to_owned()])?;
        v.pop().ok_or(ProviderError::BadBatch { expected: 1, got: 0 })
    }
}

/// Offline embedder: character-trigram counts pushed through a seeded
/// random ±1 projection, then L2-normalized.
///
/// Each word is padded as `^word$` before taking trigrams, so phrases that
/// share words or word stems land close together.
#[derive(Debug, Clone)]
pub struct HashedTrigramEmbedder {
    seed: u64,
    model_id: String,
}

impl Default for HashedTrigramEmbedder {
    fn default() -> Self {
        Self::new(0x005e_ed0f_7a11)
    }
}

impl HashedTrigramEmbedder {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            model_id: format!("builtin-trigram-{EMBEDDING_DIM}-{seed:x}"),
        }
    }

    pub fn trigram_counts(phrase: &str) -> BTreeMap<String, u32> {
        let mut counts = BTreeMap::new();
        for word in phrase.to_lowercase().split_whitespace() {
            let padded: Vec<char> = format!("^{word}$").chars().collect();
            for w in padded.windows(3) {
                *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
        counts
    }

    fn project(&self, trigram: &str, count: f64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(trigram.as_bytes()));
        for block in out.chunks_mut(64) {
            let bits = rng.next_u64();
            for (k, slot) in block.iter_mut().enumerate() {
                *slot += if bits >> k & 1 == 1 { count } else { -count };
            }
        }
    }

    pub fn embed_one(&self, phrase: &str) -> EmbeddingVector {
        let mut values = vec![0.0; EMBEDDING_DIM];
        for (trigram, count) in Self::trigram_counts(phrase) {
            self.project(&trigram, f64::from(count), &mut values);
        }
        EmbeddingVector(values).normalized()
    }
}

impl EmbeddingProvider for HashedTrigramEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, phrases: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        Ok(phrases.iter().map(|p| self.embed_one(p)).collect())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_vectors_are_unit_length_and_stable() {
        let e = HashedTrigramEmbedder::default();
        let a = e.embed_one("shipping offers");
        assert_eq!(a.values().len(), EMBEDDING_DIM);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(a, HashedTrigramEmbedder::default().embed_one("shipping offers"));
        assert_eq!(e.embed_one("   ").norm(), 0.0);
    }

    #[test]
    fn shared_words_raise_similarity() {
        let e = HashedTrigramEmbedder::default();
        let base = e.embed_one("item label");
        let near = e.embed_one("item label size");
        let far = e.embed_one("restaurant owner");
        assert!(base.dot(&near) > 0.6);
        assert!(base.dot(&far).abs() < base.dot(&near));
    }

    #[test]
    fn trigrams_pad_words() {
        let got: Vec<String> = HashedTrigramEmbedder::trigram_counts("ab C").into_keys().collect();
        assert_eq!(got, ["^ab", "^c$", "ab$"]);
    }

    #[test]
    fn vector_validation() {
        assert!(matches!(EmbeddingVector::new(vec![0.0; 3]), Err(ProviderError::BadDimension { got: 3, .. })));
        let mut v = vec![0.0; EMBEDDING_DIM];
        v[0] = f64::NAN;
        assert_eq!(EmbeddingVector::new(v), Err(ProviderError::NonFinite));
    }
}
