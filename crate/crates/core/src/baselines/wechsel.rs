use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fallback::{Fallback, FallbackReason, FallbackSampler};
use crate::focus::InitMode;
use crate::matrix::EmbeddingMatrix;
use crate::rows::{combine_rows, RowOrigin, RowRecord, SupportEntry, WeightAssignment};
use crate::similarity::{cosine_with_norms, norm};

/// Source and target token vectors expressed in one coordinate system.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSpaces {
    pub source_tok: EmbeddingMatrix,
    pub target_tok: EmbeddingMatrix,
}

impl AlignedSpaces {
    pub fn new(source_tok: EmbeddingMatrix, target_tok: EmbeddingMatrix) -> Result<Self> {
        if source_tok.dim() != target_tok.dim() {
            return Err(Error::DimMismatch { expected: source_tok.dim(), found: target_tok.dim() });
        }
        Ok(Self { source_tok, target_tok })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct WechselConfig {
    pub k: usize,
    pub temperature: f64,
    pub fallback: Fallback,
    pub seed: u64,
}

impl Default for WechselConfig {
    fn default() -> Self {
        Self { k: 10, temperature: 1.0, fallback: Fallback::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WechselOutput {
    pub embeddings: EmbeddingMatrix,
    pub rows: Vec<RowRecord>,
    pub fallback_count: usize,
}

/// Per-target WECHSEL combination: the `k` most similar source tokens in the
/// aligned space, weighted by a softmax over their cosine similarities.
pub struct WechselPlan<'a> {
    aligned: &'a AlignedSpaces,
    source_emb: &'a EmbeddingMatrix,
    cfg: WechselConfig,
    source_norms: Vec<f64>,
    // Source ids eligible for selection; all of them when `None`.
    candidates: Option<Vec<usize>>,
    fallback: FallbackSampler<'a>,
}

impl<'a> WechselPlan<'a> {
    pub fn new(aligned: &'a AlignedSpaces, source_emb: &'a EmbeddingMatrix, cfg: &WechselConfig) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(cfg.temperature.is_finite() && cfg.temperature > 0.0) {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if aligned.source_tok.rows() != source_emb.rows() {
            return Err(Error::RowMismatch {
                what: "aligned source space",
                expected: source_emb.rows(),
                found: aligned.source_tok.rows(),
            });
        }
        if source_emb.rows() == 0 {
            return Err(Error::Empty("source embeddings"));
        }
        Ok(Self {
            aligned,
            source_emb,
            cfg: cfg.clone(),
            source_norms: aligned.source_tok.iter_rows().map(norm).collect(),
            candidates: None,
            fallback: FallbackSampler::new(cfg.fallback, source_emb, cfg.seed)?,
        })
    }

    /// Restricts selection to the given source ids.
    pub fn restrict(mut self, subset: &[usize]) -> Result<Self> {
        if let Some(&id) = subset.iter().find(|&&id| id >= self.source_emb.rows()) {
            return Err(Error::IdOutOfRange { id, size: self.source_emb.rows() });
        }
        if subset.is_empty() {
            return Err(Error::Empty("source subset"));
        }
        self.candidates = Some(subset.to_vec());
        Ok(self)
    }

    pub fn assign(&self, t: usize) -> Result<(Vec<f32>, RowOrigin)> {
        let target = self
            .aligned
            .target_tok
            .get_row(t)
            .ok_or(Error::IdOutOfRange { id: t, size: self.aligned.target_tok.rows() })?;
        let nt = norm(target);
        if nt == 0.0 {
            return match self.fallback.sample(t) {
                Some(row) => Ok((row, RowOrigin::Fallback(FallbackReason::ZeroNorm))),
                None => Err(Error::FallbackDisabled { count: 1, first: t }),
            };
        }

        let score = |s: usize| cosine_with_norms(target, nt, self.aligned.source_tok.row(s), self.source_norms[s]);
        let mut scored: Vec<(usize, usize, f64)> = match &self.candidates {
            Some(ids) => ids.iter().enumerate().map(|(anchor, &s)| (anchor, s, score(s))).collect(),
            None => (0..self.source_emb.rows()).map(|s| (s, s, score(s))).collect(),
        };
        // Highest similarity first; ties go to the lower source id.
        let order =
            |a: &(usize, usize, f64), b: &(usize, usize, f64)| -> Ordering { b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)) };
        let k = self.cfg.k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);

        let top = scored[0].2;
        let exps: Vec<f64> = scored.iter().map(|s| libm::exp((s.2 - top) / self.cfg.temperature)).collect();
        let total: f64 = exps.iter().sum();
        let support: Vec<SupportEntry> = scored
            .iter()
            .zip(&exps)
            .map(|(&(anchor, source_id, _), &e)| SupportEntry { anchor, source_id, weight: e / total })
            .collect();
        let row = combine_rows(self.source_emb, &support);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput(t));
        }
        Ok((row, RowOrigin::Combined(WeightAssignment { additional_id: t, support })))
    }

    /// Builds the output from rows computed for `targets`, in order.
    ///
    /// Replace mode expects every target id exactly once in ascending order;
    /// extend mode appends the rows after the source embeddings.
    pub fn assemble(
        &self,
        targets: &[usize],
        computed: Vec<(Vec<f32>, RowOrigin)>,
        mode: InitMode,
    ) -> Result<WechselOutput> {
        if computed.len() != targets.len() {
            return Err(Error::RowMismatch { what: "computed rows", expected: targets.len(), found: computed.len() });
        }
        let dim = self.source_emb.dim();
        let mut data = Vec::new();
        let mut rows = Vec::new();
        let base = match mode {
            InitMode::Replace => {
                if targets.iter().enumerate().any(|(i, &t)| i != t) {
                    return Err(Error::InvalidConfig("replace mode needs every target id in order".into()));
                }
                0
            }
            InitMode::Extend => {
                data.extend_from_slice(self.source_emb.data());
                rows.extend((0..self.source_emb.rows()).map(|s| RowRecord {
                    row: s,
                    target_id: None,
                    origin: RowOrigin::Copied { source_id: s },
                }));
                self.source_emb.rows()
            }
        };
        let mut fallback_count = 0;
        for (i, (&t, (row, origin))) in targets.iter().zip(computed).enumerate() {
            if matches!(origin, RowOrigin::Fallback(_)) {
                fallback_count += 1;
            }
            data.extend_from_slice(&row);
            rows.push(RowRecord { row: base + i, target_id: Some(t), origin });
        }
        let mut embeddings = EmbeddingMatrix::new(rows.len(), dim, data)?;
        embeddings.set_meta("method", "wechsel");
        Ok(WechselOutput { embeddings, rows, fallback_count })
    }
}

/// Initializes every target token (replace layout).
pub fn wechsel_combine(
    aligned: &AlignedSpaces,
    source_emb: &EmbeddingMatrix,
    cfg: &WechselConfig,
) -> Result<WechselOutput> {
    let plan = WechselPlan::new(aligned, source_emb, cfg)?;
    run(&plan, aligned.target_tok.rows())
}

/// [`wechsel_combine`] with only `subset` of the source tokens eligible.
pub fn wechsel_combine_subset(
    aligned: &AlignedSpaces,
    source_emb: &EmbeddingMatrix,
    subset: &[usize],
    cfg: &WechselConfig,
) -> Result<WechselOutput> {
    let plan = WechselPlan::new(aligned, source_emb, cfg)?.restrict(subset)?;
    run(&plan, aligned.target_tok.rows())
}

fn run(plan: &WechselPlan<'_>, n: usize) -> Result<WechselOutput> {
    let targets: Vec<usize> = (0..n).collect();
    let computed = targets.iter().map(|&t| plan.assign(t)).collect::<Result<Vec<_>>>()?;
    plan.assemble(&targets, computed, InitMode::Replace)
}
