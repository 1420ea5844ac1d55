//! Phrase embeddings, the cosine similarity matrix and term pairing.

mod keyword;
mod pairing;
mod provider;
mod similarity;

pub use keyword::KeywordExtractor;
pub use pairing::{pair_terms, ConceptMapping, SelectKeyword, TermClusters, PLACEHOLDER};
pub use provider::{EmbeddingProvider, EmbeddingVector, HashedTrigramEmbedder, ProviderError, EMBEDDING_DIM};
pub use similarity::{similarity_matrix, SimilarityMatrix};

/// Default similarity cut-off for pairing terms.
pub const DEFAULT_THRESHOLD: f64 = 0.4;
