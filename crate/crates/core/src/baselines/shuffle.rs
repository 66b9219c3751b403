use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;

/// Source row used for each of `target_size` rows: a seeded permutation of
/// the source rows, repeated when the target is larger.
pub fn shuffle_permutation(source_rows: usize, target_size: usize, seed: u64) -> Result<Vec<usize>> {
    if target_size == 0 {
        return Err(Error::InvalidConfig("target size must be >= 1".into()));
    }
    if source_rows == 0 {
        return Err(Error::Empty("source embeddings"));
    }
    let mut perm: Vec<usize> = (0..source_rows).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..target_size).map(|t| perm[t % source_rows]).collect())
}

/// Random initialization by copying permuted pretrained rows.
pub fn shuffle_initialize(source_emb: &EmbeddingMatrix, target_size: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let perm = shuffle_permutation(source_emb.rows(), target_size, seed)?;
    let mut out = source_emb.select_rows(&perm)?;
    out.set_meta("method", "shuffle");
    Ok(out)
}
