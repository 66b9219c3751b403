//! Cosine similarity of additional-token vectors against a fixed set of
//! anchor (overlap) vectors.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;

/// Cosine scores of one additional token against every anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub additional_id: usize,
    /// Indexed like the anchors (overlap order).
    pub scores: Vec<f64>,
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

pub fn norm(a: &[f32]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Cosine of `a` and `b`; 0 if either has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { expected: a.len(), found: b.len() });
    }
    Ok(cosine_with_norms(a, norm(a), b, norm(b)))
}

pub(crate) fn cosine_with_norms(a: &[f32], na: f64, b: &[f32], nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Anchor vectors with cached norms.
#[derive(Debug, Clone)]
pub struct AnchorSet<'a> {
    rows: Vec<&'a [f32]>,
    norms: Vec<f64>,
    dim: usize,
}

impl<'a> AnchorSet<'a> {
    pub fn new(rows: Vec<&'a [f32]>, dim: usize) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimMismatch { expected: dim, found: r.len() });
        }
        let norms = rows.iter().map(|r| norm(r)).collect();
        Ok(Self { rows, norms, dim })
    }

    /// Anchors taken from rows `ids` of `m`.
    pub fn from_matrix(m: &'a EmbeddingMatrix, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let rows = ids
            .into_iter()
            .map(|i| m.get_row(i).ok_or(Error::IdOutOfRange { id: i, size: m.rows() }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, m.dim())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Makes anchor `i` behave like a zero vector.
    pub fn mask(&mut self, i: usize) {
        self.norms[i] = 0.0;
    }

    /// Indices of zero-norm (or masked) anchors; they always score 0.
    pub fn zero_norm(&self) -> Vec<usize> {
        self.norms.iter().enumerate().filter(|(_, &n)| n == 0.0).map(|(i, _)| i).collect()
    }
}

/// Scores `a_vec` against every anchor.
///
/// `a_vec` must have nonzero norm; callers route zero vectors to a fallback.
pub fn cosine_scores(additional_id: usize, a_vec: &[f32], anchors: &AnchorSet<'_>) -> Result<SimilarityRow> {
    if a_vec.len() != anchors.dim {
        return Err(Error::DimMismatch { expected: anchors.dim, found: a_vec.len() });
    }
    let na = norm(a_vec);
    if na == 0.0 {
        return Err(Error::ZeroNorm(additional_id));
    }
    let scores = anchors.rows.iter().zip(&anchors.norms).map(|(o, &no)| cosine_with_norms(a_vec, na, o, no)).collect();
    Ok(SimilarityRow { additional_id, scores })
}

/// Blocked evaluation of [`cosine_scores`] for many additional tokens.
///
/// Each block of additional vectors is scored anchor by anchor so anchor rows
/// are read once per block. Every score is computed by the same expression as
/// [`cosine_scores`], so the output does not depend on the block size.
pub struct BatchSimilarities<'a, 'b> {
    queries: &'a EmbeddingMatrix,
    ids: &'a [usize],
    anchors: &'a AnchorSet<'b>,
    block: usize,
    pos: usize,
    pending: alloc::collections::VecDeque<Result<SimilarityRow>>,
}

pub fn batch_similarities<'a, 'b>(
    queries: &'a EmbeddingMatrix,
    ids: &'a [usize],
    anchors: &'a AnchorSet<'b>,
    block: usize,
) -> Result<BatchSimilarities<'a, 'b>> {
    if queries.dim() != anchors.dim {
        return Err(Error::DimMismatch { expected: anchors.dim, found: queries.dim() });
    }
    if let Some(&id) = ids.iter().find(|&&id| id >= queries.rows()) {
        return Err(Error::IdOutOfRange { id, size: queries.rows() });
    }
    Ok(BatchSimilarities { queries, ids, anchors, block: block.max(1), pos: 0, pending: Default::default() })
}

impl BatchSimilarities<'_, '_> {
    fn fill(&mut self) {
        let end = (self.pos + self.block).min(self.ids.len());
        let block_ids = &self.ids[self.pos..end];
        self.pos = end;

        let rows: Vec<&[f32]> = block_ids.iter().map(|&id| self.queries.row(id)).collect();
        let norms: Vec<f64> = rows.iter().map(|r| norm(r)).collect();
        let mut scores: Vec<Vec<f64>> = block_ids.iter().map(|_| Vec::with_capacity(self.anchors.len())).collect();
        for (o, &no) in self.anchors.rows.iter().zip(&self.anchors.norms) {
            for ((a, &na), out) in rows.iter().zip(&norms).zip(scores.iter_mut()) {
                out.push(cosine_with_norms(a, na, o, no));
            }
        }
        for ((&id, &na), scores) in block_ids.iter().zip(&norms).zip(scores) {
            self.pending.push_back(if na == 0.0 {
                Err(Error::ZeroNorm(id))
            } else {
                Ok(SimilarityRow { additional_id: id, scores })
            });
        }
    }
}

impl Iterator for BatchSimilarities<'_, '_> {
    type Item = Result<SimilarityRow>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pending.is_empty() && self.pos < self.ids.len() {
            self.fill();
        }
        self.pending.pop_front()
    }
}
