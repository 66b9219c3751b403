//! Skip-gram with negative sampling over token ids.
//!
//! Tokens are atomic units here, so there are no character n-grams: every
//! target token gets exactly one input vector. The input vectors form the
//! auxiliary space used to measure token similarity.
//!
//! Training runs in shards. A shard reads and writes parameters through
//! [`ParamStore`], which is implemented for `[Cell<f32>]` (single-threaded,
//! bit-reproducible) and `[AtomicU32]` (lock-free shared updates).

use alloc::vec::Vec;
use core::cell::Cell;
#[cfg(target_has_atomic = "64")]
use core::sync::atomic::AtomicU64;
use core::sync::atomic::{AtomicU32, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;

/// Corpora at least this large train for one epoch by default, smaller ones
/// for three.
pub const SINGLE_EPOCH_TOKENS: u64 = 1_000_000_000;

/// Inputs to `sigmoid` are clamped to this range.
pub const MAX_EXP: f64 = 6.0;

const LOSS_BUCKETS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    /// `None` picks 1 or 3 epochs by corpus size.
    pub epochs: Option<usize>,
    pub min_count: u64,
    pub initial_lr: f64,
    /// Frequent-token subsampling threshold; 0 disables subsampling.
    pub subsample_threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: None,
            min_count: 1,
            initial_lr: 0.05,
            subsample_threshold: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be >= 1");
        }
        if self.epochs == Some(0) {
            return bad("epochs must be >= 1");
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return bad("initial_lr must be positive");
        }
        if !(self.subsample_threshold.is_finite() && self.subsample_threshold >= 0.0) {
            return bad("subsample_threshold must be >= 0");
        }
        Ok(())
    }

    pub fn resolved_epochs(&self, corpus_tokens: u64) -> usize {
        self.epochs.unwrap_or(if corpus_tokens >= SINGLE_EPOCH_TOKENS { 1 } else { 3 })
    }
}

/// The trained auxiliary space `F` and its context-side companion.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliarySpace {
    pub input: EmbeddingMatrix,
    pub output: EmbeddingMatrix,
    /// `true` iff the token took part in training.
    pub trained_mask: Vec<bool>,
}

impl AuxiliarySpace {
    pub fn new(input: EmbeddingMatrix, output: EmbeddingMatrix, trained_mask: Vec<bool>) -> Result<Self> {
        if output.rows() != input.rows() {
            return Err(Error::RowMismatch { what: "output vectors", expected: input.rows(), found: output.rows() });
        }
        if output.dim() != input.dim() {
            return Err(Error::DimMismatch { expected: input.dim(), found: output.dim() });
        }
        if trained_mask.len() != input.rows() {
            return Err(Error::RowMismatch { what: "trained mask", expected: input.rows(), found: trained_mask.len() });
        }
        Ok(Self { input, output, trained_mask })
    }

    /// Wraps an externally produced space; every row counts as trained.
    pub fn from_vectors(input: EmbeddingMatrix) -> Self {
        let output = EmbeddingMatrix::new(input.rows(), input.dim(), alloc::vec![0.0; input.rows() * input.dim()])
            .expect("zero matrix is valid");
        let trained_mask = alloc::vec![true; input.rows()];
        Self { input, output, trained_mask }
    }

    pub fn rows(&self) -> usize {
        self.input.rows()
    }

    pub fn is_trained(&self, id: usize) -> bool {
        self.trained_mask.get(id).copied().unwrap_or(false)
    }
}

/// Clamped logistic function, evaluated exactly.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_EXP, MAX_EXP);
    1.0 / (1.0 + libm::exp(-x))
}

/// `d loss / d dot` for one (center, target) pair with label 1 or 0.
pub fn pair_error(label: f64, dot: f64) -> f64 {
    sigmoid(dot) - label
}

fn pair_loss(label: f64, dot: f64) -> f64 {
    let s = sigmoid(dot);
    if label > 0.5 {
        -libm::log(s)
    } else {
        -libm::log(1.0 - s)
    }
}

fn dot64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-log s(u_pos . v) - sum_n log s(-u_n . v)`.
pub fn sgns_loss(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    pair_loss(1.0, dot64(center, positive)) + negatives.iter().map(|n| pair_loss(0.0, dot64(center, n))).sum::<f64>()
}

/// Gradient of [`sgns_loss`] with respect to each vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_gradient(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let mut grad_center = alloc::vec![0.0; center.len()];
    let mut side = |label: f64, u: &[f64]| -> Vec<f64> {
        let e = pair_error(label, dot64(center, u));
        for (g, &x) in grad_center.iter_mut().zip(u) {
            *g += e * x;
        }
        center.iter().map(|&v| e * v).collect()
    };
    let positive = side(1.0, positive);
    let negatives = negatives.iter().map(|n| side(0.0, n)).collect();
    SgnsGradient { center: grad_center, positive, negatives }
}

/// Flat parameter storage shared by a training shard.
pub trait ParamStore {
    fn get(&self, i: usize) -> f32;
    fn set(&self, i: usize, v: f32);
}

impl ParamStore for [Cell<f32>] {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        self[i].get()
    }

    #[inline]
    fn set(&self, i: usize, v: f32) {
        self[i].set(v)
    }
}

impl ParamStore for [AtomicU32] {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f32) {
        self[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

/// Count of processed tokens, driving the learning-rate schedule.
pub trait Progress {
    /// Adds `n` and returns the previous value.
    fn advance(&self, n: u64) -> u64;
}

impl Progress for Cell<u64> {
    fn advance(&self, n: u64) -> u64 {
        let prev = self.get();
        self.set(prev + n);
        prev
    }
}

#[cfg(target_has_atomic = "64")]
impl Progress for AtomicU64 {
    fn advance(&self, n: u64) -> u64 {
        self.fetch_add(n, Ordering::Relaxed)
    }
}

/// Mean training loss per update, bucketed by training progress.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossTrace {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Default for LossTrace {
    fn default() -> Self {
        Self { sums: alloc::vec![0.0; LOSS_BUCKETS], counts: alloc::vec![0; LOSS_BUCKETS] }
    }
}

impl LossTrace {
    fn record(&mut self, bucket: usize, loss: f64) {
        self.sums[bucket] += loss;
        self.counts[bucket] += 1;
    }

    pub fn merge(&mut self, other: &LossTrace) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn updates(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mean loss over updates whose progress fraction lies in `[from, to)`.
    pub fn mean_between(&self, from: f64, to: f64) -> Option<f64> {
        let lo = ((from * LOSS_BUCKETS as f64) as usize).min(LOSS_BUCKETS);
        let hi = (libm::ceil(to * LOSS_BUCKETS as f64) as usize).min(LOSS_BUCKETS);
        let n: u64 = self.counts[lo..hi].iter().sum();
        (n > 0).then(|| self.sums[lo..hi].iter().sum::<f64>() / n as f64)
    }

    /// Mean loss over the final 10% of training.
    pub fn final_tenth(&self) -> Option<f64> {
        self.mean_between(0.9, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainStats {
    pub epochs: usize,
    pub effective_vocab: usize,
    pub tokens_per_epoch: u64,
    pub updates: u64,
    pub loss: LossTrace,
}

/// Everything derived from the corpus and config before training starts.
pub struct SkipGramPlan {
    cfg: TrainConfig,
    epochs: usize,
    vocab_size: usize,
    effective: Vec<bool>,
    keep_prob: Vec<f64>,
    negatives: WeightedAliasIndex<f64>,
    tokens_per_epoch: u64,
}

impl SkipGramPlan {
    pub fn new(corpus: &Corpus, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let counts = corpus.token_counts();
        let threshold = cfg.min_count.max(1);
        let effective: Vec<bool> = counts.iter().map(|&c| c >= threshold).collect();
        let tokens_per_epoch: u64 = counts.iter().zip(&effective).filter(|(_, &e)| e).map(|(&c, _)| c).sum();
        if tokens_per_epoch == 0 {
            return Err(Error::EmptyEffectiveVocabulary(cfg.min_count));
        }

        let scale = cfg.subsample_threshold * tokens_per_epoch as f64;
        let keep_prob = counts
            .iter()
            .map(|&c| {
                if scale <= 0.0 || c == 0 {
                    1.0
                } else {
                    let c = c as f64;
                    ((libm::sqrt(c / scale) + 1.0) * scale / c).min(1.0)
                }
            })
            .collect();

        let weights: Vec<f64> =
            counts.iter().zip(&effective).map(|(&c, &e)| if e { libm::pow(c as f64, 0.75) } else { 0.0 }).collect();
        let negatives = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::InvalidConfig(alloc::format!("negative sampling table: {e}")))?;

        Ok(Self {
            epochs: cfg.resolved_epochs(tokens_per_epoch),
            cfg: cfg.clone(),
            vocab_size: corpus.vocab_size(),
            effective,
            keep_prob,
            negatives,
            tokens_per_epoch,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Total effective tokens over all epochs.
    pub fn budget(&self) -> u64 {
        self.tokens_per_epoch * self.epochs as u64
    }

    pub fn is_effective(&self, id: usize) -> bool {
        self.effective[id]
    }

    /// Draws one token from the unigram^0.75 distribution.
    pub fn sample_negative<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.negatives.sample(rng)
    }

    /// Random stream for shard `shard`; stream 0 is reserved for initialization.
    pub fn shard_rng(&self, shard: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(shard + 1);
        rng
    }

    /// Input vectors uniform in `[-0.5/dim, 0.5/dim]`, output vectors zero.
    pub fn initial_vectors(&self) -> (Vec<f32>, Vec<f32>) {
        let dim = self.cfg.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(0);
        let input = (0..self.vocab_size * dim).map(|_| (rng.random::<f32>() - 0.5) / dim as f32).collect();
        (input, alloc::vec![0.0; self.vocab_size * dim])
    }

    /// Trains on `sequences` for every epoch.
    pub fn run_shard<S, P>(
        &self,
        sequences: &[Vec<u32>],
        input: &S,
        output: &S,
        progress: &P,
        rng: &mut ChaCha8Rng,
        trace: &mut LossTrace,
    ) where
        S: ParamStore + ?Sized,
        P: Progress + ?Sized,
    {
        let dim = self.cfg.dim;
        let budget = self.budget() as f64;
        let mut kept: Vec<usize> = Vec::new();
        let mut center = alloc::vec![0f32; dim];
        let mut grad = alloc::vec![0f32; dim];

        for _ in 0..self.epochs {
            for seq in sequences {
                kept.clear();
                let mut effective_len = 0u64;
                for &t in seq {
                    let t = t as usize;
                    if !self.effective[t] {
                        continue;
                    }
                    effective_len += 1;
                    let p = self.keep_prob[t];
                    if p < 1.0 && rng.random::<f64>() >= p {
                        continue;
                    }
                    kept.push(t);
                }
                let done = progress.advance(effective_len) as f64 / budget;
                let lr = (self.cfg.initial_lr * (1.0 - done)).max(0.0);
                let bucket = ((done * LOSS_BUCKETS as f64) as usize).min(LOSS_BUCKETS - 1);

                for i in 0..kept.len() {
                    let b = rng.random_range(1..=self.cfg.window);
                    let lo = i.saturating_sub(b);
                    let hi = (i + b).min(kept.len() - 1);
                    for j in lo..=hi {
                        if j == i {
                            continue;
                        }
                        let loss = self.update(kept[i], kept[j], lr, input, output, rng, &mut center, &mut grad);
                        trace.record(bucket, loss);
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update<S: ParamStore + ?Sized>(
        &self,
        center_id: usize,
        context_id: usize,
        lr: f64,
        input: &S,
        output: &S,
        rng: &mut ChaCha8Rng,
        center: &mut [f32],
        grad: &mut [f32],
    ) -> f64 {
        let dim = self.cfg.dim;
        let cbase = center_id * dim;
        for (k, v) in center.iter_mut().enumerate() {
            *v = input.get(cbase + k);
        }
        grad.fill(0.0);

        let mut loss = 0.0;
        for d in 0..=self.cfg.negatives {
            let (target, label) = if d == 0 {
                (context_id, 1.0)
            } else {
                let n = self.sample_negative(rng);
                if n == context_id {
                    continue;
                }
                (n, 0.0)
            };
            let base = target * dim;
            let mut f = 0f32;
            for (k, &v) in center.iter().enumerate() {
                f += v * output.get(base + k);
            }
            let f = f64::from(f);
            loss += pair_loss(label, f);
            let g = (-pair_error(label, f) * lr) as f32;
            for (k, (&v, acc)) in center.iter().zip(grad.iter_mut()).enumerate() {
                let u = output.get(base + k);
                *acc += g * u;
                output.set(base + k, u + g * v);
            }
        }
        for (k, &g) in grad.iter().enumerate() {
            input.set(cbase + k, input.get(cbase + k) + g);
        }
        loss
    }

    /// Packs trained vectors into an [`AuxiliarySpace`].
    pub fn finish(&self, input: Vec<f32>, output: Vec<f32>, loss: LossTrace) -> Result<(AuxiliarySpace, TrainStats)> {
        let rows = self.vocab_size;
        let dim = self.cfg.dim;
        let nan_row = |e: Error| match e {
            Error::NonFinite { row, .. } => Error::NonFiniteOutput(row),
            other => other,
        };
        let input = EmbeddingMatrix::new(rows, dim, input).map_err(nan_row)?;
        let output = EmbeddingMatrix::new(rows, dim, output).map_err(nan_row)?;
        let stats = TrainStats {
            epochs: self.epochs,
            effective_vocab: self.effective.iter().filter(|&&e| e).count(),
            tokens_per_epoch: self.tokens_per_epoch,
            updates: loss.updates(),
            loss,
        };
        let space = AuxiliarySpace { input, output, trained_mask: self.effective.clone() };
        Ok((space, stats))
    }
}

/// Single-threaded training; bit-reproducible for a fixed seed.
pub fn train_skipgram(corpus: &Corpus, cfg: &TrainConfig) -> Result<(AuxiliarySpace, TrainStats)> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let plan = SkipGramPlan::new(corpus, cfg)?;
    let (mut input, mut output) = plan.initial_vectors();
    let mut trace = LossTrace::default();
    {
        let input_cells = Cell::from_mut(&mut input[..]).as_slice_of_cells();
        let output_cells = Cell::from_mut(&mut output[..]).as_slice_of_cells();
        let progress = Cell::new(0u64);
        let mut rng = plan.shard_rng(0);
        plan.run_shard(corpus.sequences(), input_cells, output_cells, &progress, &mut rng, &mut trace);
    }
    plan.finish(input, output, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn random_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
    }

    // Central differences of the loss along each coordinate.
    fn numeric_grad(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut x = x.to_vec();
        (0..x.len())
            .map(|i| {
                let orig = x[i];
                x[i] = orig + h;
                let up = f(&x);
                x[i] = orig - h;
                let down = f(&x);
                x[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let dim = rng.random_range(1..12);
            let v = random_vec(&mut rng, dim, 0.8);
            let u = random_vec(&mut rng, dim, 0.8);
            let negs: Vec<Vec<f64>> = (0..rng.random_range(1..6)).map(|_| random_vec(&mut rng, dim, 0.8)).collect();
            let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = sgns_gradient(&v, &u, &neg_refs);

            let num_v = numeric_grad(|x| sgns_loss(x, &u, &neg_refs), &v);
            assert!(rel_err(&g.center, &num_v) < 1e-5);
            let num_u = numeric_grad(|x| sgns_loss(&v, x, &neg_refs), &u);
            assert!(rel_err(&g.positive, &num_u) < 1e-5);
            let num_n0 = numeric_grad(
                |x| {
                    let mut refs = neg_refs.clone();
                    refs[0] = x;
                    sgns_loss(&v, &u, &refs)
                },
                &negs[0],
            );
            assert!(rel_err(&g.negatives[0], &num_n0) < 1e-5);
        }
    }

    #[test]
    fn sigmoid_is_clamped() {
        assert_eq!(sigmoid(100.0), sigmoid(6.0));
        assert_eq!(sigmoid(-100.0), sigmoid(-6.0));
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig { dim: 0, ..Default::default() },
            TrainConfig { window: 0, ..Default::default() },
            TrainConfig { negatives: 0, ..Default::default() },
            TrainConfig { epochs: Some(0), ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
        assert_eq!(TrainConfig::default().resolved_epochs(10), 3);
        assert_eq!(TrainConfig::default().resolved_epochs(SINGLE_EPOCH_TOKENS), 1);
    }

    fn small_corpus() -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seqs = (0..200).map(|_| (0..8).map(|_| rng.random_range(0..6u32)).collect()).collect();
        Corpus::new(seqs, 8).unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig { dim: 8, epochs: Some(2), subsample_threshold: 0.0, seed: 5, ..Default::default() }
    }

    #[test]
    fn training_is_reproducible() {
        let c = small_corpus();
        let (a, sa) = train_skipgram(&c, &small_cfg()).unwrap();
        let (b, sb) = train_skipgram(&c, &small_cfg()).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let (other, _) = train_skipgram(&c, &TrainConfig { seed: 6, ..small_cfg() }).unwrap();
        assert_ne!(a.input, other.input);
    }

    #[test]
    fn untrained_rows_keep_their_initialization() {
        let c = small_corpus();
        let cfg = small_cfg();
        let plan = SkipGramPlan::new(&c, &cfg).unwrap();
        let (init, _) = plan.initial_vectors();
        let (space, stats) = train_skipgram(&c, &cfg).unwrap();
        assert_eq!(stats.effective_vocab, 6);
        for id in 0..8 {
            let row = space.input.row(id);
            let init_row = &init[id * 8..(id + 1) * 8];
            if space.trained_mask[id] {
                assert_ne!(row, init_row);
            } else {
                assert_eq!(row, init_row);
                assert!(space.output.row(id).iter().all(|&v| v == 0.0));
            }
        }
        assert_eq!(space.trained_mask, vec![true, true, true, true, true, true, false, false]);
    }

    #[test]
    fn initialization_range() {
        let plan = SkipGramPlan::new(&small_corpus(), &TrainConfig { dim: 4, ..small_cfg() }).unwrap();
        let (input, output) = plan.initial_vectors();
        assert!(input.iter().all(|v| v.abs() <= 0.125));
        assert!(output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn min_count_filters_everything() {
        let c = Corpus::new(vec![vec![0, 1]], 2).unwrap();
        let cfg = TrainConfig { min_count: 5, ..small_cfg() };
        assert_eq!(train_skipgram(&c, &cfg).unwrap_err(), Error::EmptyEffectiveVocabulary(5));
        assert!(train_skipgram(&Corpus::new(vec![], 2).unwrap(), &small_cfg()).is_err());
    }

    #[test]
    fn negative_sampling_follows_unigram_power() {
        // Counts 1, 10, 100, 1000 over ids 0..4; id 4 never appears.
        let mut seqs = Vec::new();
        for (id, n) in [(0u32, 1), (1, 10), (2, 100), (3, 1000)] {
            for _ in 0..n {
                seqs.push(vec![id]);
            }
        }
        let c = Corpus::new(seqs, 5).unwrap();
        let plan = SkipGramPlan::new(&c, &small_cfg()).unwrap();
        let weights: Vec<f64> = [1.0f64, 10.0, 100.0, 1000.0].iter().map(|c| c.powf(0.75)).collect();
        let total: f64 = weights.iter().sum();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 1_000_000;
        let mut hist = [0u64; 5];
        for _ in 0..draws {
            hist[plan.sample_negative(&mut rng)] += 1;
        }
        assert_eq!(hist[4], 0);
        let chi2: f64 = weights
            .iter()
            .zip(&hist)
            .map(|(w, &o)| {
                let e = w / total * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        // 3 degrees of freedom; 16.27 is the 0.999 quantile.
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn more_epochs_lower_final_loss() {
        let c = small_corpus();
        let one = train_skipgram(&c, &TrainConfig { epochs: Some(1), ..small_cfg() }).unwrap().1;
        let two = train_skipgram(&c, &TrainConfig { epochs: Some(2), ..small_cfg() }).unwrap().1;
        assert!(two.loss.final_tenth().unwrap() <= one.loss.final_tenth().unwrap());
    }
}
