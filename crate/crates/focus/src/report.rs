//! Machine-readable run reports.

use std::collections::BTreeMap;

use focus_core::vocab::{clean_overlap_filter, OverlapResult};
use focus_core::{FocusSummary, SizeReport, TrainStats, Vocabulary};
use serde::Serialize;

use crate::corpus_io::CorpusReport;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyCollision {
    pub target: String,
    pub candidates: Vec<String>,
    pub chosen: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapSection {
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub overlap_count: usize,
    pub exact_count: usize,
    pub fuzzy_count: usize,
    /// Overlap without single-character tokens.
    pub clean_overlap_count: usize,
    pub additional_count: usize,
    pub fuzzy_collisions: Vec<FuzzyCollision>,
}

impl OverlapSection {
    /// Token strings are taken from the canonical vocabularies.
    pub fn new(r: &OverlapResult, source: &Vocabulary, target: &Vocabulary) -> Self {
        let name = |v: &Vocabulary, id: usize| v.token(id).unwrap_or_default().to_string();
        Self {
            source_vocab_size: r.source_vocab_size,
            target_vocab_size: r.target_vocab_size,
            overlap_count: r.overlap.len(),
            exact_count: r.exact_count(),
            fuzzy_count: r.fuzzy_count(),
            clean_overlap_count: clean_overlap_filter(r, target).overlap.len(),
            additional_count: r.additional.len(),
            fuzzy_collisions: r
                .fuzzy_collisions
                .iter()
                .map(|c| FuzzyCollision {
                    target: name(target, c.target_id),
                    candidates: c.candidates.iter().map(|&s| name(source, s)).collect(),
                    chosen: name(source, c.chosen),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct InitSection {
    /// Additional tokens that received a row.
    pub initialized_count: usize,
    pub weighted_count: usize,
    pub fallback_count: usize,
    pub fallback_by_reason: BTreeMap<String, usize>,
    pub unusable_anchor_count: usize,
    pub mean_support_size: f64,
    /// `|S_a|` -> number of tokens.
    pub support_histogram: BTreeMap<usize, usize>,
    pub output_rows: usize,
}

impl InitSection {
    pub fn from_focus(s: &FocusSummary, output_rows: usize) -> Self {
        let by_reason = [
            ("untrained", s.fallback_untrained),
            ("zero-norm", s.fallback_zero_norm),
            ("no-anchors", s.fallback_no_anchors),
        ];
        Self {
            initialized_count: s.initialized_count,
            weighted_count: s.weighted_count,
            fallback_count: s.fallback_count,
            fallback_by_reason: by_reason.iter().filter(|(_, n)| *n > 0).map(|(k, n)| (k.to_string(), *n)).collect(),
            unusable_anchor_count: s.unusable_anchor_count,
            mean_support_size: s.mean_support_size,
            support_histogram: s.support_histogram.clone(),
            output_rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSection {
    pub corpus: CorpusReport,
    pub epochs: usize,
    pub effective_vocab: usize,
    pub untrained_tokens: usize,
    pub tokens_per_epoch: u64,
    pub updates: u64,
    pub loss_first_tenth: Option<f64>,
    pub loss_final_tenth: Option<f64>,
}

impl TrainingSection {
    pub fn new(corpus: CorpusReport, stats: &TrainStats, vocab_size: usize) -> Self {
        Self {
            corpus,
            epochs: stats.epochs,
            effective_vocab: stats.effective_vocab,
            untrained_tokens: vocab_size - stats.effective_vocab,
            tokens_per_epoch: stats.tokens_per_epoch,
            updates: stats.updates,
            loss_first_tenth: stats.loss.mean_between(0.0, 0.1),
            loss_final_tenth: stats.loss.final_tenth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitReport {
    pub format_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_report: Option<SizeReport>,
    /// Wall-clock seconds per stage.
    pub timing: BTreeMap<String, f64>,
    pub config: serde_json::Value,
    pub warnings: Vec<String>,
}

impl InitReport {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            overlap: None,
            training: None,
            init: None,
            size_report: None,
            timing: BTreeMap::new(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    /// `|O| + |A| = |V^t|` and `weighted + fallback = initialized`.
    pub fn check_accounting(&self) -> Result<()> {
        if let Some(o) = &self.overlap {
            if o.overlap_count + o.additional_count != o.target_vocab_size {
                return Err(Error::Verify(format!(
                    "overlap {} + additional {} != target vocabulary {}",
                    o.overlap_count, o.additional_count, o.target_vocab_size
                )));
            }
            if o.exact_count + o.fuzzy_count != o.overlap_count || o.clean_overlap_count > o.overlap_count {
                return Err(Error::Verify("inconsistent overlap counts".into()));
            }
        }
        if let Some(i) = &self.init {
            if i.weighted_count + i.fallback_count != i.initialized_count {
                return Err(Error::Verify(format!(
                    "weighted {} + fallback {} != initialized {}",
                    i.weighted_count, i.fallback_count, i.initialized_count
                )));
            }
            if i.support_histogram.values().sum::<usize>() != i.weighted_count {
                return Err(Error::Verify("support histogram does not cover the weighted rows".into()));
            }
        }
        Ok(())
    }
}
