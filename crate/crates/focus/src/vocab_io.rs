//! Vocabulary files.

use std::fmt;
use std::path::Path;

use focus_core::{SpaceMarker, Vocabulary};
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VocabFormat {
    /// `.json` files as a token -> id map, anything else as text.
    #[default]
    Auto,
    /// One token per line; the id is the line number.
    Text,
    /// Sentencepiece `.vocab`: token, tab, score.
    Spm,
    /// JSON object mapping token -> id.
    Json,
}

/// Loads raw (not yet canonical) tokens with dense ids in file order.
pub fn load_vocabulary(path: &Path, format: VocabFormat, marker: SpaceMarker) -> Result<Vocabulary> {
    let tokens = load_tokens(path, format)?;
    Vocabulary::new(tokens, marker).map_err(|source| Error::Input { path: path.to_path_buf(), source })
}

pub fn load_tokens(path: &Path, format: VocabFormat) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format = match format {
        VocabFormat::Auto if path.extension().is_some_and(|e| e == "json") => VocabFormat::Json,
        VocabFormat::Auto => VocabFormat::Text,
        f => f,
    };
    match format {
        VocabFormat::Json => parse_json(&text).map_err(|(line, column, msg)| match line {
            0 => Error::format(path, msg),
            _ => Error::parse(path, line, column, msg),
        }),
        f => parse_lines(&text, f == VocabFormat::Spm).map_err(|(line, msg)| Error::parse(path, line, 1, msg)),
    }
}

fn parse_lines(text: &str, spm: bool) -> std::result::Result<Vec<String>, (usize, String)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let token = if spm { line.split('\t').next().unwrap_or("") } else { line };
            if token.is_empty() {
                Err((i + 1, "empty token".to_string()))
            } else {
                Ok(token.to_string())
            }
        })
        .collect()
}

struct Entries(Vec<(String, u64)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping token strings to integer ids")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut out = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some((k, v)) = map.next_entry::<String, u64>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn parse_json(text: &str) -> std::result::Result<Vec<String>, (usize, usize, String)> {
    let Entries(entries) = serde_json::from_str(text).map_err(|e| (e.line(), e.column(), e.to_string()))?;
    let n = entries.len();
    let mut slots: Vec<Option<String>> = vec![None; n];
    let mut seen = std::collections::BTreeSet::new();
    let mut dups = Vec::new();
    for (token, id) in entries {
        if !seen.insert(token.clone()) {
            dups.push(token);
            continue;
        }
        let slot = usize::try_from(id).ok().filter(|&i| i < n).and_then(|i| slots.get_mut(i));
        match slot {
            Some(s @ None) => *s = Some(token),
            Some(Some(other)) => {
                return Err((0, 0, format!("non-dense ids: id {id} used by both {other:?} and {token:?}")));
            }
            None => return Err((0, 0, format!("non-dense ids: id {id} of {token:?} is outside 0..{n}"))),
        }
    }
    if !dups.is_empty() {
        dups.sort();
        dups.dedup();
        return Err((0, 0, format!("duplicate tokens: {}", dups.join(", "))));
    }
    Ok(slots.into_iter().map(|s| s.expect("every slot filled")).collect())
}
