//! Initialization for rows that cannot be built from similar tokens.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::{EmbeddingMatrix, MatrixStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Fallback {
    /// Element-wise normal draw with the source matrix's per-dimension mean and std.
    #[default]
    NormalFromSourceStats,
    /// Copy of a uniformly chosen source row.
    ShuffleRow,
    /// Fail instead of falling back.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FallbackReason {
    /// The token never took part in auxiliary training.
    Untrained,
    /// Its auxiliary vector is all zeros.
    ZeroNorm,
    /// There is nothing to compare against.
    NoAnchors,
}

/// Seeded fallback generator. Draws for a token depend only on the seed and
/// the token id, never on evaluation order.
#[derive(Debug, Clone)]
pub(crate) struct FallbackSampler<'a> {
    policy: Fallback,
    source: &'a EmbeddingMatrix,
    stats: Option<MatrixStats>,
    seed: u64,
}

impl<'a> FallbackSampler<'a> {
    pub fn new(policy: Fallback, source: &'a EmbeddingMatrix, seed: u64) -> Result<Self> {
        let stats = match policy {
            Fallback::NormalFromSourceStats => Some(source.stats()?),
            Fallback::ShuffleRow if source.rows() == 0 => return Err(Error::Empty("source embeddings")),
            _ => None,
        };
        Ok(Self { policy, source, stats, seed })
    }

    pub fn policy(&self) -> Fallback {
        self.policy
    }

    /// Row for `token`, or `None` when fallback is disabled.
    pub fn sample(&self, token: usize) -> Option<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(token as u64);
        match self.policy {
            Fallback::Disabled => None,
            Fallback::ShuffleRow => Some(self.source.row(rng.random_range(0..self.source.rows())).to_vec()),
            Fallback::NormalFromSourceStats => {
                let stats = self.stats.as_ref().expect("stats computed for normal fallback");
                Some(
                    stats
                        .dim_mean
                        .iter()
                        .zip(&stats.dim_std)
                        .map(|(&m, &s)| {
                            let d = Normal::new(m, s).expect("std is finite and non-negative");
                            d.sample(&mut rng) as f32
                        })
                        .collect(),
                )
            }
        }
    }
}
