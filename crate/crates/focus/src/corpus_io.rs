//! Corpus files: raw text or pre-tokenized ids.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use focus_core::corpus::{Corpus, GreedyTokenizer};
use focus_core::Vocabulary;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// UTF-8 text, one document per line, segmented by greedy longest match.
    #[default]
    Text,
    /// Space-separated target token ids, one sequence per line.
    Ids,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub lines_read: usize,
    pub lines_kept: usize,
    /// Lines that produced no tokens.
    pub lines_dropped: usize,
    /// Characters no vocabulary token covered.
    pub dropped_chars: usize,
    pub tokens: u64,
}

pub fn load_corpus(path: &Path, format: CorpusFormat, vocab: &Vocabulary) -> Result<(Corpus, CorpusReport)> {
    match format {
        CorpusFormat::Text => tokenize_corpus(path, vocab),
        CorpusFormat::Ids => load_id_corpus(path, vocab.len()),
    }
}

/// Segments raw text with [`GreedyTokenizer`]; `vocab` must be canonical.
pub fn tokenize_corpus(path: &Path, vocab: &Vocabulary) -> Result<(Corpus, CorpusReport)> {
    let tokenizer = GreedyTokenizer::new(vocab);
    let mut report = CorpusReport::default();
    let mut sequences = Vec::new();
    for (i, line) in lines(path)?.enumerate() {
        let line = line.map_err(|e| Error::parse(path, i + 1, 1, e.to_string()))?;
        report.lines_read += 1;
        let mut ids = Vec::new();
        let stats = tokenizer.tokenize_line(&line, &mut ids);
        report.dropped_chars += stats.dropped_chars;
        push(&mut sequences, &mut report, ids);
    }
    finish(path, sequences, vocab.len(), report)
}

/// Reads space-separated ids, one sequence per line.
pub fn load_id_corpus(path: &Path, vocab_size: usize) -> Result<(Corpus, CorpusReport)> {
    let mut report = CorpusReport::default();
    let mut sequences = Vec::new();
    for (i, line) in lines(path)?.enumerate() {
        let line = line.map_err(|e| Error::parse(path, i + 1, 1, e.to_string()))?;
        report.lines_read += 1;
        let ids = crate::vtm::fields(&line)
            .map(|(column, f)| match f.parse::<u32>() {
                Ok(id) if (id as usize) < vocab_size => Ok(id),
                Ok(id) => {
                    Err(Error::parse(path, i + 1, column, format!("id {id} out of range for {vocab_size} tokens")))
                }
                Err(_) => Err(Error::parse(path, i + 1, column, format!("not a token id: {f:?}"))),
            })
            .collect::<Result<Vec<u32>>>()?;
        push(&mut sequences, &mut report, ids);
    }
    finish(path, sequences, vocab_size, report)
}

fn lines(path: &Path) -> Result<std::io::Lines<BufReader<File>>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?).lines())
}

fn push(sequences: &mut Vec<Vec<u32>>, report: &mut CorpusReport, ids: Vec<u32>) {
    if ids.is_empty() {
        report.lines_dropped += 1;
    } else {
        report.lines_kept += 1;
        report.tokens += ids.len() as u64;
        sequences.push(ids);
    }
}

fn finish(
    path: &Path,
    sequences: Vec<Vec<u32>>,
    vocab_size: usize,
    report: CorpusReport,
) -> Result<(Corpus, CorpusReport)> {
    if sequences.is_empty() {
        log::warn!("{}: corpus is empty", path.display());
    }
    if report.dropped_chars > 0 {
        log::warn!("{}: {} characters not covered by the vocabulary", path.display(), report.dropped_chars);
    }
    let corpus =
        Corpus::new(sequences, vocab_size).map_err(|source| Error::Input { path: path.to_path_buf(), source })?;
    Ok((corpus, report))
}
