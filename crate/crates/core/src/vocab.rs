//! Token vocabularies, canonical token forms, and the overlap/additional
//! partition of a target vocabulary against a source vocabulary.
//!
//! Tokenizer families mark a leading space differently: sentencepiece uses
//! `▁`, byte-level BPE encodes the space byte as `Ġ`. Both are rewritten to
//! [`SPACE_SENTINEL`] so that token strings from different tokenizers can be
//! compared directly.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Collision, Error, Result};

/// Canonical representation of a space inside a token.
pub const SPACE_SENTINEL: char = '\u{2E31}';

/// Space marker used by sentencepiece vocabularies.
pub const SENTENCEPIECE_SPACE: char = '\u{2581}';

/// Leading-space convention of a vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SpaceMarker {
    /// `▁` marks a space.
    #[default]
    Sentencepiece,
    /// Byte-level BPE: every byte is mapped to a printable character, the
    /// space byte becomes `Ġ`.
    ByteLevel,
    /// Tokens are taken verbatim.
    None,
}

impl SpaceMarker {
    /// Rewrites a raw token into its canonical form.
    ///
    /// Returns `None` for byte-level tokens whose bytes are not valid UTF-8
    /// on their own; those keep their raw spelling and are only ever matched
    /// exactly.
    pub fn canonical_form(self, raw: &str) -> Option<String> {
        match self {
            SpaceMarker::Sentencepiece => Some(raw.replace(SENTENCEPIECE_SPACE, "\u{2E31}")),
            SpaceMarker::None => Some(String::from(raw)),
            SpaceMarker::ByteLevel => {
                let bytes = byte_level::decode(raw)?;
                let text = String::from_utf8(bytes).ok()?;
                Some(text.replace(' ', "\u{2E31}"))
            }
        }
    }

    /// Inverse of [`SpaceMarker::canonical_form`] for decodable tokens.
    pub fn raw_form(self, canonical: &str) -> String {
        match self {
            SpaceMarker::Sentencepiece => canonical.replace(SPACE_SENTINEL, "\u{2581}"),
            SpaceMarker::None => String::from(canonical),
            SpaceMarker::ByteLevel => byte_level::encode(canonical.replace(SPACE_SENTINEL, " ").as_bytes()),
        }
    }
}

/// Space-marker conventions of the source and target tokenizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CanonPolicy {
    pub source: SpaceMarker,
    pub target: SpaceMarker,
}

impl CanonPolicy {
    /// Canonicalizes both vocabularies, each under its own convention.
    pub fn apply(&self, source: &Vocabulary, target: &Vocabulary) -> Result<(Vocabulary, Vocabulary)> {
        Ok((canonicalize(source, self.source)?, canonicalize(target, self.target)?))
    }
}

/// Ordered token list with a dense id index.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
    space_marker: SpaceMarker,
    canonical: bool,
    // Byte-level tokens that could not be decoded to text.
    opaque: Vec<bool>,
}

impl Vocabulary {
    /// Builds a raw (not yet canonicalized) vocabulary; id = position.
    pub fn new(tokens: Vec<String>, space_marker: SpaceMarker) -> Result<Self> {
        let index = build_index(&tokens).map_err(Error::DuplicateTokens)?;
        let opaque = alloc::vec![false; tokens.len()];
        Ok(Self { tokens, index, space_marker, canonical: false, opaque })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn space_marker(&self) -> SpaceMarker {
        self.space_marker
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// True for byte-level tokens that did not decode to text.
    pub fn is_opaque(&self, id: usize) -> bool {
        self.opaque.get(id).copied().unwrap_or(false)
    }

    /// Longest token length in characters.
    pub fn max_token_chars(&self) -> usize {
        self.tokens.iter().map(|t| t.chars().count()).max().unwrap_or(0)
    }

    /// Spelling of token `id` under `marker`, for writing vocabularies back out.
    pub fn raw_token(&self, id: usize, marker: SpaceMarker) -> Option<String> {
        let tok = self.tokens.get(id)?;
        if !self.canonical || self.is_opaque(id) {
            return Some(tok.clone());
        }
        Some(marker.raw_form(tok))
    }
}

fn build_index(tokens: &[String]) -> core::result::Result<BTreeMap<String, usize>, Vec<String>> {
    let mut index = BTreeMap::new();
    let mut dups = Vec::new();
    for (id, tok) in tokens.iter().enumerate() {
        if index.insert(tok.clone(), id).is_some() {
            dups.push(tok.clone());
        }
    }
    if dups.is_empty() {
        Ok(index)
    } else {
        dups.sort();
        dups.dedup();
        Err(dups)
    }
}

/// Rewrites every token of `v` into canonical form under `marker`.
///
/// Fails if two distinct raw tokens end up with the same canonical spelling.
pub fn canonicalize(v: &Vocabulary, marker: SpaceMarker) -> Result<Vocabulary> {
    let mut tokens = Vec::with_capacity(v.len());
    let mut opaque = Vec::with_capacity(v.len());
    for raw in &v.tokens {
        match marker.canonical_form(raw) {
            Some(c) => {
                tokens.push(c);
                opaque.push(false);
            }
            None => {
                tokens.push(raw.clone());
                opaque.push(true);
            }
        }
    }

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (id, tok) in tokens.iter().enumerate() {
        groups.entry(tok.as_str()).or_default().push(id);
    }
    let collisions: Vec<Collision> = groups
        .iter()
        .filter(|(_, ids)| ids.len() > 1)
        .map(|(canon, ids)| Collision {
            canonical: String::from(*canon),
            raw: ids.iter().map(|&i| v.tokens[i].clone()).collect(),
        })
        .collect();
    if !collisions.is_empty() {
        return Err(Error::CanonicalCollision(collisions));
    }
    drop(groups);

    let index = build_index(&tokens).map_err(Error::DuplicateTokens)?;
    Ok(Vocabulary { tokens, index, space_marker: marker, canonical: true, opaque })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MatchKind {
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapEntry {
    pub target_id: usize,
    pub source_id: usize,
    pub kind: MatchKind,
}

/// A fuzzy match where several source tokens case-fold to the target token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyCandidates {
    pub target_id: usize,
    /// All candidate source ids, ascending.
    pub candidates: Vec<usize>,
    pub chosen: usize,
}

/// Partition of the target vocabulary into overlap and additional tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapResult {
    /// Sorted by target id.
    pub overlap: Vec<OverlapEntry>,
    /// Target ids without a source match, ascending.
    pub additional: Vec<usize>,
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub fuzzy_collisions: Vec<FuzzyCandidates>,
}

impl OverlapResult {
    pub fn exact_count(&self) -> usize {
        self.overlap.iter().filter(|e| e.kind == MatchKind::Exact).count()
    }

    pub fn fuzzy_count(&self) -> usize {
        self.overlap.iter().filter(|e| e.kind == MatchKind::Fuzzy).count()
    }

    /// Overlap entry for a target id, if any.
    pub fn entry_for_target(&self, target_id: usize) -> Option<&OverlapEntry> {
        self.overlap.binary_search_by_key(&target_id, |e| e.target_id).ok().map(|i| &self.overlap[i])
    }

    /// Whether overlap and additional ids partition `0..target_vocab_size`.
    pub fn is_partition(&self) -> bool {
        let mut seen = alloc::vec![false; self.target_vocab_size];
        let ids = self.overlap.iter().map(|e| e.target_id).chain(self.additional.iter().copied());
        for id in ids {
            match seen.get_mut(id) {
                Some(s) if !*s => *s = true,
                _ => return false,
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// Computes the overlap of `target` with `source`.
///
/// Exact matches come first. With `fuzzy` set, a target token without an
/// exact match is matched to a source token that agrees after lowercasing;
/// among several such source tokens the one needing the fewest case changes
/// wins, ties going to the lowest source id.
pub fn compute_overlap(source: &Vocabulary, target: &Vocabulary, fuzzy: bool) -> OverlapResult {
    let mut folded: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    if fuzzy {
        for (id, tok) in source.tokens.iter().enumerate() {
            if !source.is_opaque(id) {
                folded.entry(tok.to_lowercase()).or_default().push(id);
            }
        }
    }

    let mut overlap = Vec::new();
    let mut additional = Vec::new();
    let mut fuzzy_collisions = Vec::new();
    for (target_id, tok) in target.tokens.iter().enumerate() {
        if let Some(source_id) = source.id(tok) {
            overlap.push(OverlapEntry { target_id, source_id, kind: MatchKind::Exact });
            continue;
        }
        if fuzzy && !target.is_opaque(target_id) {
            if let Some(cands) = folded.get(&tok.to_lowercase()) {
                let chosen = cands
                    .iter()
                    .copied()
                    .min_by_key(|&s| (case_edit_distance(tok, &source.tokens[s]), s))
                    .expect("candidate lists are never empty");
                if cands.len() > 1 {
                    fuzzy_collisions.push(FuzzyCandidates { target_id, candidates: cands.clone(), chosen });
                }
                overlap.push(OverlapEntry { target_id, source_id: chosen, kind: MatchKind::Fuzzy });
                continue;
            }
        }
        additional.push(target_id);
    }

    OverlapResult {
        overlap,
        additional,
        source_vocab_size: source.len(),
        target_vocab_size: target.len(),
        fuzzy_collisions,
    }
}

/// Number of character positions at which two case-variants differ.
pub fn case_edit_distance(a: &str, b: &str) -> usize {
    let (na, nb) = (a.chars().count(), b.chars().count());
    let differing = a.chars().zip(b.chars()).filter(|(x, y)| x != y).count();
    differing + na.abs_diff(nb)
}

/// True if the token has at most one character once a leading space
/// sentinel is removed.
pub fn is_single_character(canonical: &str) -> bool {
    let mut rest = canonical.trim_start_matches(SPACE_SENTINEL).chars();
    rest.next().is_none() || rest.next().is_none()
}

/// Report-only view of the overlap with single-character tokens removed.
///
/// Removed entries are not moved to `additional`; the result is no longer a
/// partition and must not be used for initialization.
pub fn clean_overlap_filter(r: &OverlapResult, target: &Vocabulary) -> OverlapResult {
    let overlap = r
        .overlap
        .iter()
        .filter(|e| target.token(e.target_id).is_some_and(|t| !is_single_character(t)))
        .copied()
        .collect();
    OverlapResult { overlap, ..r.clone() }
}

/// GPT-2 style byte <-> printable character mapping.
mod byte_level {
    use alloc::string::String;
    use alloc::vec::Vec;

    fn is_direct(b: u8) -> bool {
        matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
    }

    fn byte_to_char(b: u8) -> char {
        if is_direct(b) {
            return char::from(b);
        }
        let offset = (0..b).filter(|&x| !is_direct(x)).count() as u32;
        char::from_u32(256 + offset).expect("valid code point")
    }

    fn char_to_byte(c: char) -> Option<u8> {
        let cp = c as u32;
        if cp < 256 {
            let b = cp as u8;
            return is_direct(b).then_some(b);
        }
        let offset = cp - 256;
        (0u8..=255).filter(|&x| !is_direct(x)).nth(offset as usize)
    }

    pub fn decode(raw: &str) -> Option<Vec<u8>> {
        raw.chars().map(char_to_byte).collect()
    }

    pub fn encode(bytes: &[u8]) -> String {
        bytes.iter().map(|&b| byte_to_char(b)).collect()
    }

}
