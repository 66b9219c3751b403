//! Provenance of each row of an initialized embedding matrix.

use alloc::vec::Vec;

use crate::fallback::FallbackReason;
use crate::matrix::EmbeddingMatrix;

/// One pretrained row contributing to a combined row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEntry {
    /// Position among the candidates the weights were computed over
    /// (overlap index for FOCUS, source id for WECHSEL).
    pub anchor: usize,
    pub source_id: usize,
    pub weight: f64,
}

/// Non-zero weights of one combined row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    pub additional_id: usize,
    pub support: Vec<SupportEntry>,
}

impl WeightAssignment {
    pub fn weight_sum(&self) -> f64 {
        self.support.iter().map(|s| s.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowOrigin {
    /// Verbatim copy of a source row.
    Copied {
        source_id: usize,
    },
    /// Weighted sum of source rows.
    Combined(WeightAssignment),
    Fallback(FallbackReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowRecord {
    /// Row index in the produced matrix.
    pub row: usize,
    /// Target token id, when the row stands for a target token.
    pub target_id: Option<usize>,
    pub origin: RowOrigin,
}

/// `sum_s w_s * source[s]`, accumulated in `f64`, stored as `f32`.
pub fn combine_rows(source: &EmbeddingMatrix, support: &[SupportEntry]) -> Vec<f32> {
    let mut acc = alloc::vec![0f64; source.dim()];
    for entry in support {
        for (a, &v) in acc.iter_mut().zip(source.row(entry.source_id)) {
            *a += entry.weight * f64::from(v);
        }
    }
    acc.into_iter().map(|v| v as f32).collect()
}
