//! Reference initializers: random row shuffling and WECHSEL-style top-k
//! softmax combination over an aligned auxiliary space, plus the orthogonal
//! Procrustes solver used to align such spaces.

mod procrustes;
mod shuffle;
mod wechsel;

pub use procrustes::{procrustes_align, Alignment, SeedDictionary};
pub use shuffle::{shuffle_initialize, shuffle_permutation};
pub use wechsel::{wechsel_combine, wechsel_combine_subset, AlignedSpaces, WechselConfig, WechselOutput, WechselPlan};
