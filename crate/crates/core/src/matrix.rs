//! Dense row-per-token embedding matrices.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major `f32` matrix; row `i` belongs to token id `i` of some vocabulary.
///
/// Every value is finite. The matrix is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
    meta: BTreeMap<String, String>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        Self::with_meta(rows, dim, data, BTreeMap::new())
    }

    pub fn with_meta(rows: usize, dim: usize, data: Vec<f32>, meta: BTreeMap<String, String>) -> Result<Self> {
        let expected =
            rows.checked_mul(dim).ok_or(Error::ShapeMismatch { rows, dim, expected: usize::MAX, found: data.len() })?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch { rows, dim, expected, found: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos.checked_div(dim).unwrap_or(0), pos.checked_rem(dim).unwrap_or(0));
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { rows, dim, data, meta })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    /// # Panics
    /// If `i >= rows`.
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get_row(&self, i: usize) -> Option<&[f32]> {
        (i < self.rows).then(|| self.row(i))
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, ids: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            let row = self.get_row(i).ok_or(Error::IdOutOfRange { id: i, size: self.rows })?;
            data.extend_from_slice(row);
        }
        Ok(Self { rows: ids.len(), dim: self.dim, data, meta: self.meta.clone() })
    }

    pub fn into_parts(self) -> (usize, usize, Vec<f32>, BTreeMap<String, String>) {
        (self.rows, self.dim, self.data, self.meta)
    }

    /// Per-dimension and global mean/std, accumulated in `f64` with the
    /// population convention.
    pub fn stats(&self) -> Result<MatrixStats> {
        if self.rows == 0 {
            return Err(Error::Empty("matrix has no rows"));
        }
        let n = self.rows as f64;
        let mut sum = alloc::vec![0f64; self.dim];
        for row in self.iter_rows() {
            for (s, &v) in sum.iter_mut().zip(row) {
                *s += f64::from(v);
            }
        }
        let dim_mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mut sq = alloc::vec![0f64; self.dim];
        for row in self.iter_rows() {
            for ((s, &v), m) in sq.iter_mut().zip(row).zip(&dim_mean) {
                let d = f64::from(v) - m;
                *s += d * d;
            }
        }
        let dim_std = sq.iter().map(|s| libm::sqrt(s / n)).collect();

        let total = n * self.dim as f64;
        let global_mean = if self.dim == 0 { 0.0 } else { sum.iter().sum::<f64>() / total };
        let global_var = if self.dim == 0 {
            0.0
        } else {
            self.data
                .iter()
                .map(|&v| {
                    let d = f64::from(v) - global_mean;
                    d * d
                })
                .sum::<f64>()
                / total
        };
        Ok(MatrixStats { dim_mean, dim_std, global_mean, global_std: libm::sqrt(global_var) })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatrixStats {
    pub dim_mean: Vec<f64>,
    pub dim_std: Vec<f64>,
    pub global_mean: f64,
    pub global_std: f64,
}

/// Model parameter counts before and after a vocabulary swap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SizeReport {
    pub non_embedding_params: u64,
    pub dim: u64,
    pub old_vocab: u64,
    pub new_vocab: u64,
    pub tied_head: bool,
    pub old_total: u64,
    pub new_total: u64,
    pub reduction_fraction: f64,
}

/// Embedding parameters are counted once with a tied output head and twice
/// without.
pub fn size_report(
    non_embedding_params: u64,
    dim: u64,
    old_vocab: u64,
    new_vocab: u64,
    tied_head: bool,
) -> Result<SizeReport> {
    if dim == 0 || old_vocab == 0 || new_vocab == 0 {
        return Err(Error::InvalidConfig("dim and vocabulary sizes must be positive".into()));
    }
    let copies = if tied_head { 1 } else { 2 };
    let total = |vocab: u64| -> Result<u64> {
        vocab
            .checked_mul(dim)
            .and_then(|e| e.checked_mul(copies))
            .and_then(|e| e.checked_add(non_embedding_params))
            .ok_or_else(|| Error::InvalidConfig("parameter count overflows u64".into()))
    };
    let old_total = total(old_vocab)?;
    let new_total = total(new_vocab)?;
    Ok(SizeReport {
        non_embedding_params,
        dim,
        old_vocab,
        new_vocab,
        tied_head,
        old_total,
        new_total,
        reduction_fraction: 1.0 - new_total as f64 / old_total as f64,
    })
}
