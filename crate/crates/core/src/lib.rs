//! Initialization of embedding matrices for a new target-language vocabulary
//! from a pretrained multilingual model's vocabulary and embeddings.
//!
//! The central method ([`focus`]) copies the pretrained rows of tokens shared
//! by both vocabularies and builds every other row as a sparse convex
//! combination of shared-token rows. Weights come from sparsemax over cosine
//! similarities in a small auxiliary embedding space trained on target text
//! ([`skipgram`]). [`baselines`] holds the comparison initializers.
//!
//! The crate is `no_std` and needs only `alloc`; file formats, the CLI and
//! multi-threaded execution live in the `focus` crate.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod corpus;
mod error;
pub mod fallback;
pub mod focus;
pub mod matrix;
pub mod rows;
pub mod similarity;
pub mod skipgram;
pub mod sparsemax;
pub mod vocab;

pub use error::{Collision, Error, Result};
pub use fallback::{Fallback, FallbackReason};
pub use focus::{focus_initialize, FocusConfig, FocusOutput, FocusPlan, FocusSummary, InitMode};
pub use matrix::{size_report, EmbeddingMatrix, MatrixStats, SizeReport};
pub use rows::{RowOrigin, RowRecord, SupportEntry, WeightAssignment};
pub use skipgram::{train_skipgram, AuxiliarySpace, TrainConfig, TrainStats};
pub use vocab::{CanonPolicy, MatchKind, OverlapResult, SpaceMarker, Vocabulary};
