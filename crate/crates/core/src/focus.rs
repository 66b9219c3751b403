//! FOCUS initialization of a target embedding matrix.
//!
//! Overlap tokens copy their pretrained row. Every additional token is scored
//! against all overlap tokens by cosine similarity in the auxiliary space;
//! sparsemax turns the scores into weights, and the new row is the weighted
//! sum of the pretrained rows of the overlap tokens with non-zero weight.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fallback::{Fallback, FallbackReason, FallbackSampler};
use crate::matrix::EmbeddingMatrix;
use crate::rows::{combine_rows, RowOrigin, RowRecord, SupportEntry, WeightAssignment};
use crate::similarity::{cosine_scores, AnchorSet};
use crate::skipgram::AuxiliarySpace;
use crate::sparsemax::sparsemax_support;
use crate::vocab::OverlapResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum InitMode {
    /// The target vocabulary replaces the source vocabulary.
    #[default]
    Replace,
    /// Additional target tokens are appended after the source vocabulary.
    Extend,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FocusConfig {
    pub mode: InitMode,
    pub fallback: Fallback,
    /// Case-insensitive overlap matching; applied when the overlap is computed.
    pub fuzzy: bool,
    pub seed: u64,
    /// Extend mode: append only the this many most frequent additional tokens.
    pub extend_cap: Option<usize>,
}

impl Default for FocusConfig {
    fn default() -> Self {
        Self { mode: InitMode::Replace, fallback: Fallback::default(), fuzzy: true, seed: 0, extend_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FocusSummary {
    pub overlap_count: usize,
    pub exact_count: usize,
    pub fuzzy_count: usize,
    pub additional_count: usize,
    /// Additional tokens that received a row (all of them in replace mode).
    pub initialized_count: usize,
    pub weighted_count: usize,
    pub fallback_count: usize,
    pub fallback_untrained: usize,
    pub fallback_zero_norm: usize,
    pub fallback_no_anchors: usize,
    /// Overlap tokens unusable for scoring (untrained or zero auxiliary vector).
    pub unusable_anchor_count: usize,
    pub mean_support_size: f64,
    /// `|S_a|` -> number of additional tokens.
    pub support_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocusOutput {
    pub embeddings: EmbeddingMatrix,
    /// One record per row of `embeddings`, in row order.
    pub rows: Vec<RowRecord>,
    pub summary: FocusSummary,
}

impl FocusOutput {
    pub fn weights(&self) -> impl Iterator<Item = &WeightAssignment> {
        self.rows.iter().filter_map(|r| match &r.origin {
            RowOrigin::Combined(w) => Some(w),
            _ => None,
        })
    }
}

/// Precomputed state for initializing additional tokens one at a time.
///
/// [`FocusPlan::assign`] is pure, so rows can be computed in any order or in
/// parallel and handed to [`FocusPlan::assemble`].
pub struct FocusPlan<'a> {
    source_emb: &'a EmbeddingMatrix,
    overlap: &'a OverlapResult,
    aux: &'a AuxiliarySpace,
    cfg: FocusConfig,
    anchors: AnchorSet<'a>,
    usable_anchors: usize,
    fallback: FallbackSampler<'a>,
    targets: Vec<usize>,
}

impl<'a> FocusPlan<'a> {
    /// `frequencies` (per target id) are needed only for a capped extension.
    pub fn new(
        source_emb: &'a EmbeddingMatrix,
        overlap: &'a OverlapResult,
        aux: &'a AuxiliarySpace,
        cfg: &FocusConfig,
        frequencies: Option<&[u64]>,
    ) -> Result<Self> {
        if source_emb.rows() != overlap.source_vocab_size {
            return Err(Error::RowMismatch {
                what: "source embeddings",
                expected: overlap.source_vocab_size,
                found: source_emb.rows(),
            });
        }
        if aux.rows() != overlap.target_vocab_size {
            return Err(Error::RowMismatch {
                what: "auxiliary space",
                expected: overlap.target_vocab_size,
                found: aux.rows(),
            });
        }
        if let Some(e) = overlap.overlap.iter().find(|e| e.source_id >= source_emb.rows()) {
            return Err(Error::IdOutOfRange { id: e.source_id, size: source_emb.rows() });
        }

        let mut anchors = AnchorSet::from_matrix(&aux.input, overlap.overlap.iter().map(|e| e.target_id))?;
        for (i, e) in overlap.overlap.iter().enumerate() {
            if !aux.is_trained(e.target_id) {
                anchors.mask(i);
            }
        }
        let usable_anchors = anchors.len() - anchors.zero_norm().len();

        let targets = match (cfg.mode, cfg.extend_cap) {
            (InitMode::Extend, Some(cap)) => {
                let freq =
                    frequencies.ok_or_else(|| Error::InvalidConfig("extend_cap needs token frequencies".into()))?;
                if freq.len() != overlap.target_vocab_size {
                    return Err(Error::RowMismatch {
                        what: "token frequencies",
                        expected: overlap.target_vocab_size,
                        found: freq.len(),
                    });
                }
                let mut ranked = overlap.additional.clone();
                ranked.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
                ranked.truncate(cap);
                ranked.sort_unstable();
                ranked
            }
            _ => overlap.additional.clone(),
        };

        Ok(Self {
            source_emb,
            overlap,
            aux,
            cfg: cfg.clone(),
            anchors,
            usable_anchors,
            fallback: FallbackSampler::new(cfg.fallback, source_emb, cfg.seed)?,
            targets,
        })
    }

    /// Additional target ids that get a row, in output order.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Row for additional token `a`.
    pub fn assign(&self, a: usize) -> Result<(Vec<f32>, RowOrigin)> {
        if self.usable_anchors == 0 {
            return self.fall_back(a, FallbackReason::NoAnchors);
        }
        if !self.aux.is_trained(a) {
            return self.fall_back(a, FallbackReason::Untrained);
        }
        let sim = match cosine_scores(a, self.aux.input.row(a), &self.anchors) {
            Ok(sim) => sim,
            Err(Error::ZeroNorm(_)) => return self.fall_back(a, FallbackReason::ZeroNorm),
            Err(e) => return Err(e),
        };
        let support: Vec<SupportEntry> = sparsemax_support(&sim.scores)?
            .into_iter()
            .map(|(i, weight)| SupportEntry { anchor: i, source_id: self.overlap.overlap[i].source_id, weight })
            .collect();
        let row = combine_rows(self.source_emb, &support);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput(a));
        }
        Ok((row, RowOrigin::Combined(WeightAssignment { additional_id: a, support })))
    }

    fn fall_back(&self, a: usize, reason: FallbackReason) -> Result<(Vec<f32>, RowOrigin)> {
        if self.fallback.policy() == Fallback::Disabled {
            let count = self.targets.iter().filter(|&&t| self.needs_fallback(t)).count().max(1);
            return Err(Error::FallbackDisabled { count, first: a });
        }
        let row = self.fallback.sample(a).expect("fallback enabled");
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput(a));
        }
        Ok((row, RowOrigin::Fallback(reason)))
    }

    fn needs_fallback(&self, a: usize) -> bool {
        self.usable_anchors == 0 || !self.aux.is_trained(a) || self.aux.input.row(a).iter().all(|&v| v == 0.0)
    }

    /// Builds the output matrix from rows computed for [`FocusPlan::targets`], in order.
    pub fn assemble(self, computed: Vec<(Vec<f32>, RowOrigin)>) -> Result<FocusOutput> {
        if computed.len() != self.targets.len() {
            return Err(Error::RowMismatch {
                what: "computed rows",
                expected: self.targets.len(),
                found: computed.len(),
            });
        }
        let dim = self.source_emb.dim();
        let mut records = Vec::new();
        let (rows, mut data, first_new) = match self.cfg.mode {
            InitMode::Replace => {
                let rows = self.overlap.target_vocab_size;
                let mut data = alloc::vec![0f32; rows * dim];
                for e in &self.overlap.overlap {
                    data[e.target_id * dim..(e.target_id + 1) * dim].copy_from_slice(self.source_emb.row(e.source_id));
                    records.push(RowRecord {
                        row: e.target_id,
                        target_id: Some(e.target_id),
                        origin: RowOrigin::Copied { source_id: e.source_id },
                    });
                }
                (rows, data, None)
            }
            InitMode::Extend => {
                let base = self.source_emb.rows();
                let mut data = Vec::with_capacity((base + self.targets.len()) * dim);
                data.extend_from_slice(self.source_emb.data());
                for s in 0..base {
                    records.push(RowRecord { row: s, target_id: None, origin: RowOrigin::Copied { source_id: s } });
                }
                data.resize((base + self.targets.len()) * dim, 0.0);
                (base + self.targets.len(), data, Some(base))
            }
        };

        let mut summary = FocusSummary {
            overlap_count: self.overlap.overlap.len(),
            exact_count: self.overlap.exact_count(),
            fuzzy_count: self.overlap.fuzzy_count(),
            additional_count: self.overlap.additional.len(),
            initialized_count: self.targets.len(),
            unusable_anchor_count: self.anchors.len() - self.usable_anchors,
            ..FocusSummary::default()
        };
        let mut support_total = 0usize;
        for (i, (&a, (row, origin))) in self.targets.iter().zip(computed).enumerate() {
            let r = first_new.map_or(a, |base| base + i);
            data[r * dim..(r + 1) * dim].copy_from_slice(&row);
            match &origin {
                RowOrigin::Combined(w) => {
                    summary.weighted_count += 1;
                    support_total += w.support.len();
                    *summary.support_histogram.entry(w.support.len()).or_default() += 1;
                }
                RowOrigin::Fallback(reason) => {
                    summary.fallback_count += 1;
                    match reason {
                        FallbackReason::Untrained => summary.fallback_untrained += 1,
                        FallbackReason::ZeroNorm => summary.fallback_zero_norm += 1,
                        FallbackReason::NoAnchors => summary.fallback_no_anchors += 1,
                    }
                }
                RowOrigin::Copied { .. } => {}
            }
            records.push(RowRecord { row: r, target_id: Some(a), origin });
        }
        if summary.weighted_count > 0 {
            summary.mean_support_size = support_total as f64 / summary.weighted_count as f64;
        }
        records.sort_by_key(|r| r.row);

        let mut embeddings = EmbeddingMatrix::new(rows, dim, data).map_err(|e| match e {
            Error::NonFinite { row, .. } => Error::NonFiniteOutput(row),
            other => other,
        })?;
        embeddings.set_meta("method", "focus");
        embeddings.set_meta(
            "rows",
            match self.cfg.mode {
                InitMode::Replace => "target-vocabulary",
                InitMode::Extend => "source-vocabulary+appended",
            },
        );
        Ok(FocusOutput { embeddings, rows: records, summary })
    }
}

/// Sequential FOCUS initialization.
pub fn focus_initialize(
    source_emb: &EmbeddingMatrix,
    overlap: &OverlapResult,
    aux: &AuxiliarySpace,
    cfg: &FocusConfig,
    frequencies: Option<&[u64]>,
) -> Result<FocusOutput> {
    let plan = FocusPlan::new(source_emb, overlap, aux, cfg, frequencies)?;
    let computed = plan.targets().iter().map(|&a| plan.assign(a)).collect::<Result<Vec<_>>>()?;
    plan.assemble(computed)
}
