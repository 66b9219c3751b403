//! Multi-threaded drivers for the core kernels.
//!
//! Initializers run rows in parallel and assemble them in a fixed order, so
//! their output does not depend on the thread count. The skip-gram trainer is
//! bit-reproducible only with one thread.

use std::sync::atomic::{AtomicU32, AtomicU64};

use focus_core::baselines::{WechselOutput, WechselPlan};
use focus_core::corpus::Corpus;
use focus_core::skipgram::{LossTrace, SkipGramPlan};
use focus_core::{AuxiliarySpace, FocusOutput, FocusPlan, InitMode, TrainConfig, TrainStats};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "FOCUS_THREADS";

/// `FOCUS_THREADS` if set and positive, else 1.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0).unwrap_or(1)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_focus(plan: FocusPlan<'_>, threads: usize) -> Result<FocusOutput> {
    let computed = with_pool(threads, || plan.targets().par_iter().map(|&a| plan.assign(a)).collect::<Vec<_>>())?;
    let computed = computed.into_iter().collect::<focus_core::Result<Vec<_>>>()?;
    Ok(plan.assemble(computed)?)
}

pub fn run_wechsel(plan: &WechselPlan<'_>, targets: &[usize], mode: InitMode, threads: usize) -> Result<WechselOutput> {
    let computed = with_pool(threads, || targets.par_iter().map(|&t| plan.assign(t)).collect::<Vec<_>>())?;
    let computed = computed.into_iter().collect::<focus_core::Result<Vec<_>>>()?;
    Ok(plan.assemble(targets, computed, mode)?)
}

/// Skip-gram training. One thread defers to the deterministic trainer; more
/// threads split the corpus into contiguous shards that update shared
/// vectors without locks.
pub fn train_skipgram(corpus: &Corpus, cfg: &TrainConfig, threads: usize) -> Result<(AuxiliarySpace, TrainStats)> {
    if threads <= 1 {
        return Ok(focus_core::train_skipgram(corpus, cfg)?);
    }
    if corpus.is_empty() {
        return Err(focus_core::Error::Empty("corpus").into());
    }
    let plan = SkipGramPlan::new(corpus, cfg)?;
    let (input, output) = plan.initial_vectors();
    let to_atomic = |v: Vec<f32>| v.into_iter().map(|x| AtomicU32::new(x.to_bits())).collect::<Vec<_>>();
    let (input, output) = (to_atomic(input), to_atomic(output));
    let progress = AtomicU64::new(0);

    let sequences = corpus.sequences();
    let shard_len = sequences.len().div_ceil(threads);
    let mut trace = LossTrace::default();
    std::thread::scope(|s| {
        let handles: Vec<_> = sequences
            .chunks(shard_len.max(1))
            .enumerate()
            .map(|(i, shard)| {
                let (plan, input, output, progress) = (&plan, &input[..], &output[..], &progress);
                s.spawn(move || {
                    let mut rng = plan.shard_rng(i as u64);
                    let mut local = LossTrace::default();
                    plan.run_shard(shard, input, output, progress, &mut rng, &mut local);
                    local
                })
            })
            .collect();
        for h in handles {
            trace.merge(&h.join().expect("training shard panicked"));
        }
    });

    let from_atomic = |v: Vec<AtomicU32>| v.into_iter().map(|x| f32::from_bits(x.into_inner())).collect::<Vec<_>>();
    Ok(plan.finish(from_atomic(input), from_atomic(output), trace)?)
}
