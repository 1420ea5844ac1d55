use std::collections::BTreeSet;

use super::{EmbeddingProvider, ProviderError};
use crate::nlp::{NlpResources, PosTag};

/// Picks a single-word parent for a matched term pair by scoring each
/// candidate unigram against the embedding of the whole pair.
pub struct KeywordExtractor<'a> {
    provider: &'a dyn EmbeddingProvider,
    resources: &'a NlpResources,
}

impl<'a> KeywordExtractor<'a> {
    pub fn new(provider: &'a dyn EmbeddingProvider, resources: &'a NlpResources) -> Self {
        Self { provider, resources }
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider
    }

    /// Lemmatized `term` followed by lemmatized `parent`.
    pub fn document(&self, parent: &str, term: &str) -> String {
        let lemmas: Vec<String> = term
            .split_whitespace()
            .chain(parent.split_whitespace())
            .map(|w| self.resources.lemmatizer.lemma(w))
            .collect();
        lemmas.join(" ")
    }

    /// Distinct content words of `document`, sorted.
    pub fn candidates(&self, document: &str) -> BTreeSet<String> {
        document
            .split_whitespace()
            .filter(|w| !self.is_stop_word(w))
            .map(str::to_owned)
            .collect()
    }

    fn is_stop_word(&self, word: &str) -> bool {
        self.resources.lexicon.tags(word).is_some_and(|tags| {
            tags.iter()
                .all(|t| matches!(t, PosTag::Det | PosTag::Prep | PosTag::Conj | PosTag::Pron | PosTag::Other))
        })
    }

    /// The best scoring candidate unigram, or `parent` unchanged when there
    /// is at most one candidate. Score ties go to the alphabetically first
    /// candidate.
    pub fn extract(&self, parent: &str, term: &str) -> Result<String, ProviderError> {
        let document = self.document(parent, term);
        let candidates: Vec<String> = self.candidates(&document).into_iter().collect();
        if candidates.len() <= 1 {
            return Ok(parent.to_owned());
        }
        let mut batch = candidates.clone();
        batch.push(document);
        let vectors = self.provider.embed_batch(&batch)?;
        if vectors.len() != batch.len() {
            return Err(ProviderError::BadBatch {
                expected: batch.len(),
                got: vectors.len(),
            });
        }
        let mut vectors: Vec<_> = vectors.into_iter().map(|v| v.normalized()).collect();
        let doc = vectors.pop().expect("document vector");
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, v) in vectors.iter().enumerate() {
            let s = v.dot(&doc);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        Ok(candidates[best].clone())
    }
}
