//! Bilingual seed dictionaries and word-vector text files.

use std::collections::HashMap;
use std::path::Path;

use focus_core::baselines::SeedDictionary;

use crate::error::{Error, Result};
use crate::vtm::fields;

/// Word vectors in the common text layout: `word v1 v2 ...` per line, with
/// an optional leading `count dim` line.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub words: Vec<String>,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl WordVectors {
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        let i = self.words.iter().position(|w| w == word)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    fn index(&self) -> HashMap<&str, usize> {
        let mut index = HashMap::with_capacity(self.words.len());
        for (i, w) in self.words.iter().enumerate() {
            index.entry(w.as_str()).or_insert(i);
        }
        index
    }
}

pub fn load_word_vectors(path: &Path) -> Result<WordVectors> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = WordVectors { words: Vec::new(), dim: 0, data: Vec::new() };
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let mut it = fields(line);
        let Some((_, word)) = it.next() else { continue };
        let values: Vec<(usize, &str)> = it.collect();
        if i == 0 && values.len() == 1 && word.parse::<usize>().is_ok() && values[0].1.parse::<usize>().is_ok() {
            continue;
        }
        if *dim.get_or_insert(values.len()) != values.len() {
            return Err(Error::parse(
                path,
                i + 1,
                1,
                format!("{} values, expected {}", values.len(), dim.unwrap_or(0)),
            ));
        }
        for (column, v) in values {
            out.data.push(parse_value(path, i + 1, column, v)?);
        }
        out.words.push(word.to_string());
    }
    out.dim = dim.unwrap_or(0);
    Ok(out)
}

/// Paired vectors: `source values <TAB> target values` per line.
pub fn load_paired_tsv(path: &Path) -> Result<SeedDictionary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((src, tgt)) = line.split_once('\t') else {
            return Err(Error::parse(path, i + 1, 1, "expected source and target vectors separated by a tab"));
        };
        let offset = src.chars().count() + 1;
        let parse = |s: &str, shift: usize| -> Result<Vec<f64>> {
            fields(s).map(|(c, v)| parse_value(path, i + 1, c + shift, v)).collect()
        };
        pairs.push((parse(src, 0)?, parse(tgt, offset)?));
    }
    SeedDictionary::new(&pairs).map_err(|source| Error::Input { path: path.to_path_buf(), source })
}

/// Word pairs (`source_word <TAB> target_word`) looked up in two vector files.
/// Returns the dictionary and the number of pairs skipped for missing words.
pub fn load_word_pairs(pairs: &Path, source: &WordVectors, target: &WordVectors) -> Result<(SeedDictionary, usize)> {
    let text = std::fs::read_to_string(pairs).map_err(|e| Error::io(pairs, e))?;
    let (si, ti) = (source.index(), target.index());
    let mut out = Vec::new();
    let mut skipped = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split('\t').map(str::trim);
        let (Some(s), Some(t)) = (it.next(), it.next()) else {
            return Err(Error::parse(pairs, i + 1, 1, "expected two tab-separated words"));
        };
        match (si.get(s), ti.get(t)) {
            (Some(&a), Some(&b)) => out.push((
                source.data[a * source.dim..(a + 1) * source.dim].to_vec(),
                target.data[b * target.dim..(b + 1) * target.dim].to_vec(),
            )),
            _ => skipped += 1,
        }
    }
    let dict = SeedDictionary::new(&out).map_err(|source| Error::Input { path: pairs.to_path_buf(), source })?;
    Ok((dict, skipped))
}

fn parse_value(path: &Path, line: usize, column: usize, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(Error::parse(path, line, column, "non-finite value")),
        Err(_) => Err(Error::parse(path, line, column, format!("not a number: {v:?}"))),
    }
}
