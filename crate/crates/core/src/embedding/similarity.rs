use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, ProviderError};

/// Symmetric cosine similarity matrix over an ordered term list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    terms: Vec<String>,
    /// Row-major, `terms.len()²` entries.
    scores: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl SimilarityMatrix {
    /// Builds a matrix from explicit rows. Rows must be square and symmetric
    /// with a unit diagonal.
    pub fn from_rows(terms: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let n = terms.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(format!("expected a {n}x{n} matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if (row[i] - 1.0).abs() > 1e-9 {
                return Err(format!("diagonal entry {i} is {}", row[i]));
            }
            for (j, &v) in row.iter().enumerate().take(i) {
                if v != rows[j][i] {
                    return Err(format!("entries ({i},{j}) and ({j},{i}) differ"));
                }
            }
        }
        Ok(Self::assemble(terms, rows.into_iter().flatten().collect()))
    }

    fn assemble(terms: Vec<String>, scores: Vec<f64>) -> Self {
        let mut index = HashMap::new();
        for (i, t) in terms.iter().enumerate() {
            index.entry(t.clone()).or_insert(i);
        }
        Self { terms, scores, index }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.terms.len() + j]
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.at(self.position(a)?, self.position(b)?))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.terms.len();
        &self.scores[i * n..(i + 1) * n]
    }
}

/// Pairwise cosine similarity of `phrases`, in the given order.
///
/// Vectors are normalized before the dot product, the upper triangle is
/// computed once and mirrored, and the diagonal is exactly 1.
pub fn similarity_matrix(phrases: &[String], provider: &dyn EmbeddingProvider) -> Result<SimilarityMatrix, ProviderError> {
    let vectors = provider.embed_batch(phrases)?;
    if vectors.len() != phrases.len() {
        return Err(ProviderError::BadBatch {
            expected: phrases.len(),
            got: vectors.len(),
        });
    }
    let vectors: Vec<_> = vectors.into_iter().map(|v| v.normalized()).collect();
    let n = phrases.len();
    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        scores[i * n + i] = 1.0;
        for j in i + 1..n {
            let s = vectors[i].dot(&vectors[j]).clamp(-1.0, 1.0);
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix::assemble(phrases.to_vec(), scores))
}
