//! Token-id corpora over a target vocabulary.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vocab::{Vocabulary, SPACE_SENTINEL};

/// Sequences of target token ids with per-id counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sequences: Vec<Vec<u32>>,
    token_counts: Vec<u64>,
}

impl Corpus {
    /// Empty sequences are dropped; every id must be below `vocab_size`.
    pub fn new(sequences: Vec<Vec<u32>>, vocab_size: usize) -> Result<Self> {
        let mut token_counts = alloc::vec![0u64; vocab_size];
        let sequences: Vec<Vec<u32>> = sequences.into_iter().filter(|s| !s.is_empty()).collect();
        for &id in sequences.iter().flatten() {
            let slot =
                token_counts.get_mut(id as usize).ok_or(Error::IdOutOfRange { id: id as usize, size: vocab_size })?;
            *slot += 1;
        }
        Ok(Self { sequences, token_counts })
    }

    pub fn sequences(&self) -> &[Vec<u32>] {
        &self.sequences
    }

    pub fn token_counts(&self) -> &[u64] {
        &self.token_counts
    }

    pub fn vocab_size(&self) -> usize {
        self.token_counts.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.token_counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Greedy longest-match segmentation over a canonical vocabulary.
///
/// Each whitespace-separated word is prefixed with the space sentinel, then
/// consumed left to right by the longest vocabulary token matching at the
/// current position. A character no token covers is dropped.
pub struct GreedyTokenizer<'a> {
    vocab: &'a Vocabulary,
    max_chars: usize,
}

/// Outcome of segmenting one line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineStats {
    pub tokens: usize,
    /// Non-sentinel characters that no vocabulary token covered.
    pub dropped_chars: usize,
}

impl<'a> GreedyTokenizer<'a> {
    pub fn new(vocab: &'a Vocabulary) -> Self {
        Self { vocab, max_chars: vocab.max_token_chars() }
    }

    /// Appends the ids of `line` to `out`.
    pub fn tokenize_line(&self, line: &str, out: &mut Vec<u32>) -> LineStats {
        let mut stats = LineStats::default();
        let mut word = alloc::string::String::new();
        for w in line.split_whitespace() {
            word.clear();
            word.push(SPACE_SENTINEL);
            word.push_str(w);
            self.tokenize_word(&word, out, &mut stats);
        }
        stats
    }

    fn tokenize_word(&self, word: &str, out: &mut Vec<u32>, stats: &mut LineStats) {
        // Byte offset of every char boundary, including the end.
        let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).chain(core::iter::once(word.len())).collect();
        let n = bounds.len() - 1;
        let mut pos = 0;
        while pos < n {
            let longest = (1..=self.max_chars.min(n - pos))
                .rev()
                .find_map(|len| self.vocab.id(&word[bounds[pos]..bounds[pos + len]]).map(|id| (len, id)));
            match longest {
                Some((len, id)) => {
                    out.push(id as u32);
                    stats.tokens += 1;
                    pos += len;
                }
                None => {
                    if !word[bounds[pos]..].starts_with(SPACE_SENTINEL) {
                        stats.dropped_chars += 1;
                    }
                    pos += 1;
                }
            }
        }
    }
}
