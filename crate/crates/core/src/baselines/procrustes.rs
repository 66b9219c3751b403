use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;

/// Paired source/target vectors used to fit an alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedDictionary {
    dim: usize,
    // Row-major, one pair per row.
    source: Vec<f64>,
    target: Vec<f64>,
}

impl SeedDictionary {
    pub fn new(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let dim = pairs.first().map_or(0, |(s, _)| s.len());
        let mut source = Vec::with_capacity(pairs.len() * dim);
        let mut target = Vec::with_capacity(pairs.len() * dim);
        for (s, t) in pairs {
            for v in [s, t] {
                if v.len() != dim {
                    return Err(Error::DimMismatch { expected: dim, found: v.len() });
                }
            }
            source.extend_from_slice(s);
            target.extend_from_slice(t);
        }
        if let Some(i) = source.iter().chain(&target).position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        Ok(Self { dim, source, target })
    }

    /// Pairs row `i` of `source` with row `i` of `target`.
    pub fn from_matrices(source: &EmbeddingMatrix, target: &EmbeddingMatrix) -> Result<Self> {
        if source.rows() != target.rows() {
            return Err(Error::RowMismatch {
                what: "seed target vectors",
                expected: source.rows(),
                found: target.rows(),
            });
        }
        if source.dim() != target.dim() {
            return Err(Error::DimMismatch { expected: source.dim(), found: target.dim() });
        }
        let widen = |m: &EmbeddingMatrix| m.data().iter().map(|&v| f64::from(v)).collect();
        Ok(Self { dim: source.dim(), source: widen(source), target: widen(target) })
    }

    pub fn len(&self) -> usize {
        self.source.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fewer pairs than dimensions leaves the fit underdetermined.
    pub fn below_recommended(&self) -> bool {
        self.len() < self.dim
    }
}

/// Orthogonal map `W` minimizing `||XW - Y||_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub w: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// `X^T Y` was (numerically) singular; `W` is then not unique.
    pub rank_deficient: bool,
}

impl Alignment {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.dim + j]
    }

    /// Largest entry of `|W^T W - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let v: f64 = (0..d).map(|k| self.get(k, i) * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Maps every row `x` of `m` to `x W`.
    pub fn apply(&self, m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        if m.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: m.dim() });
        }
        let d = self.dim;
        let mut data = Vec::with_capacity(m.rows() * d);
        for row in m.iter_rows() {
            for j in 0..d {
                let v: f64 = row.iter().enumerate().map(|(k, &x)| f64::from(x) * self.get(k, j)).sum();
                data.push(v as f32);
            }
        }
        let mut out = EmbeddingMatrix::new(m.rows(), d, data)?;
        for (k, v) in m.meta() {
            out.set_meta(k.clone(), v.clone());
        }
        Ok(out)
    }
}

/// Solves orthogonal Procrustes through the SVD `X^T Y = U S V^T`, `W = U V^T`.
pub fn procrustes_align(seed: &SeedDictionary) -> Result<Alignment> {
    let n = seed.len();
    if n < 2 {
        return Err(Error::TooFewPairs(n));
    }
    let d = seed.dim;
    let x = DMatrix::from_row_slice(n, d, &seed.source);
    let y = DMatrix::from_row_slice(n, d, &seed.target);
    let m = x.transpose() * y;
    let svd = m.try_svd(true, true, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    let u = svd.u.as_ref().ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::SvdFailed)?;
    let w = u * v_t;

    let singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let largest = singular_values.iter().copied().fold(0.0, f64::max);
    let smallest = singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let rank_deficient = largest == 0.0 || smallest <= largest * 1e-12 * d as f64;

    let mut flat = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            flat.push(w[(i, j)]);
        }
    }
    Ok(Alignment { dim: d, w: flat, singular_values, rank_deficient })
}
