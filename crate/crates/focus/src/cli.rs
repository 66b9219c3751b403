//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use focus_core::{Fallback, InitMode, SpaceMarker};
use serde::de::DeserializeOwned;

use crate::config::{Method, PipelineConfig};
use crate::corpus_io::CorpusFormat;
use crate::error::{Error, Result};
use crate::pipeline::{self, SeedSource};
use crate::vocab_io::VocabFormat;

#[derive(Debug, Parser)]
#[command(name = "focus", version, about = "Initialize embeddings for a new vocabulary from a pretrained model")]
pub struct Cli {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving every artifact and the manifest.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    /// Worker threads. With more than one, auxiliary training is not reproducible.
    #[arg(long, global = true, env = crate::parallel::THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Overlap between the source and target vocabularies.
    Overlap {
        #[command(flatten)]
        vocab: VocabArgs,
    },
    /// Train the auxiliary token embeddings on target-language text.
    TrainAux {
        #[command(flatten)]
        vocab: VocabArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Build the target embedding matrix.
    Init {
        #[command(flatten)]
        vocab: VocabArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        init: InitArgs,
    },
    /// Check stored embeddings against their audit file.
    Verify {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        source_emb: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Also write the outcome as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Parameter counts before and after a vocabulary swap.
    SizeReport {
        #[arg(long)]
        non_embedding_params: u64,
        #[arg(long)]
        dim: u64,
        #[arg(long)]
        old_vocab: u64,
        #[arg(long)]
        new_vocab: u64,
        /// The output head has its own embedding matrix.
        #[arg(long)]
        untied: bool,
    },
    /// Fit an orthogonal map between two word-vector spaces.
    Align {
        /// TSV of paired vectors: source values, tab, target values.
        #[arg(long, conflicts_with_all = ["seed_words", "source_words", "target_words"])]
        seed_pairs: Option<PathBuf>,
        /// TSV of word pairs looked up in --source-words and --target-words.
        #[arg(long, requires_all = ["source_words", "target_words"])]
        seed_words: Option<PathBuf>,
        #[arg(long)]
        source_words: Option<PathBuf>,
        #[arg(long)]
        target_words: Option<PathBuf>,
        /// VTM matrix to map into the target space.
        #[arg(long)]
        apply: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct VocabArgs {
    #[arg(long)]
    pub source_vocab: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub source_vocab_format: Option<VocabFormat>,
    #[arg(long)]
    pub target_vocab: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub target_vocab_format: Option<VocabFormat>,
    /// sentencepiece, byte-level or none.
    #[arg(long, value_parser = parse_enum::<SpaceMarker>)]
    pub source_marker: Option<SpaceMarker>,
    #[arg(long, value_parser = parse_enum::<SpaceMarker>)]
    pub target_marker: Option<SpaceMarker>,
    /// Case-insensitive matching for tokens without an exact match.
    #[arg(long)]
    pub fuzzy: Option<bool>,
}

#[derive(Debug, Args, Default)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub corpus_format: Option<CorpusFormat>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub train_seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct InitArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// replace or extend.
    #[arg(long, value_parser = parse_enum::<InitMode>)]
    pub mode: Option<InitMode>,
    #[arg(long)]
    pub source_emb: Option<PathBuf>,
    /// Auxiliary space from train-aux; trained from --corpus when absent.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    #[arg(long)]
    pub aligned_source: Option<PathBuf>,
    #[arg(long)]
    pub aligned_target: Option<PathBuf>,
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// normal-from-source-stats, shuffle-row or disabled.
    #[arg(long, value_parser = parse_enum::<Fallback>)]
    pub fallback: Option<Fallback>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub extend_cap: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Adds a size report to the run report.
    #[arg(long)]
    pub non_embedding_params: Option<u64>,
    #[arg(long)]
    pub untied: bool,
    /// Report path, default `<run-dir>/report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl VocabArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        let p = &mut cfg.paths;
        set_opt(&mut p.source_vocab, self.source_vocab);
        set(&mut p.source_vocab_format, self.source_vocab_format);
        set_opt(&mut p.target_vocab, self.target_vocab);
        set(&mut p.target_vocab_format, self.target_vocab_format);
        set(&mut cfg.canon.source, self.source_marker);
        set(&mut cfg.canon.target, self.target_marker);
        set(&mut cfg.init.fuzzy, self.fuzzy);
    }
}

impl CorpusArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        set_opt(&mut cfg.paths.corpus, self.corpus);
        set(&mut cfg.paths.corpus_format, self.corpus_format);
    }
}

impl TrainArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        let t = &mut cfg.train;
        set(&mut t.dim, self.dim);
        set(&mut t.window, self.window);
        set(&mut t.negatives, self.negatives);
        set_opt(&mut t.epochs, self.epochs);
        set(&mut t.min_count, self.min_count);
        set(&mut t.initial_lr, self.lr);
        set(&mut t.subsample_threshold, self.subsample);
        set(&mut t.seed, self.train_seed);
    }
}

impl InitArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        set(&mut cfg.method, self.method);
        set(&mut cfg.mode, self.mode);
        let p = &mut cfg.paths;
        set_opt(&mut p.source_emb, self.source_emb);
        set_opt(&mut p.aux, self.aux);
        set_opt(&mut p.aligned_source, self.aligned_source);
        set_opt(&mut p.aligned_target, self.aligned_target);
        set_opt(&mut p.subset, self.subset);
        set_opt(&mut p.report, self.report);
        set(&mut cfg.init.fallback, self.fallback);
        set(&mut cfg.init.seed, self.seed);
        set_opt(&mut cfg.init.extend_cap, self.extend_cap);
        set(&mut cfg.wechsel.k, self.k);
        set(&mut cfg.wechsel.temperature, self.temperature);
        set_opt(&mut cfg.size.non_embedding_params, self.non_embedding_params);
        if self.untied {
            cfg.size.tied_head = false;
        }
    }
}

fn base_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.paths.run_dir, cli.run_dir.clone());
    set_opt(&mut cfg.threads, cli.threads);
    if cfg.threads == Some(0) {
        return Err(Error::Config("threads must be >= 1".into()));
    }
    Ok(cfg)
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::Overlap { vocab } => {
            vocab.apply(&mut cfg);
            pipeline::cmd_overlap(&cfg)?;
        }
        Command::TrainAux { vocab, corpus, train } => {
            vocab.apply(&mut cfg);
            corpus.apply(&mut cfg);
            train.apply(&mut cfg);
            pipeline::cmd_train_aux(&cfg)?;
        }
        Command::Init { vocab, corpus, train, init } => {
            vocab.apply(&mut cfg);
            corpus.apply(&mut cfg);
            train.apply(&mut cfg);
            init.apply(&mut cfg);
            let report = pipeline::cmd_init(&cfg)?;
            if let Some(i) = &report.init {
                log::info!(
                    "{} rows: {} weighted, {} fallback, mean support {:.2}",
                    i.output_rows,
                    i.weighted_count,
                    i.fallback_count,
                    i.mean_support_size
                );
            }
        }
        Command::Verify { embeddings, source_emb, weights, report } => {
            let r = pipeline::cmd_verify(&embeddings, &source_emb, &weights, report.as_deref())?;
            log::info!(
                "verified {} rows: {} copied, {} weighted (max error {:.3e}), {} fallback",
                r.rows,
                r.copied,
                r.weighted,
                r.max_weighted_error,
                r.fallback
            );
        }
        Command::SizeReport { non_embedding_params, dim, old_vocab, new_vocab, untied } => {
            let out = cfg.report_path("size-report.json");
            let r = pipeline::cmd_size_report(non_embedding_params, dim, old_vocab, new_vocab, !untied, &out)?;
            log::info!(
                "parameters {} -> {}, reduction {:.4} ({})",
                r.old_total,
                r.new_total,
                r.reduction_fraction,
                out.display()
            );
        }
        Command::Align { seed_pairs, seed_words, source_words, target_words, apply } => {
            let seed = match (&seed_pairs, &seed_words, &source_words, &target_words) {
                (Some(p), ..) => SeedSource::PairedVectors(p),
                (None, Some(pairs), Some(s), Some(t)) => {
                    SeedSource::WordPairs { pairs, source_vectors: s, target_vectors: t }
                }
                _ => {
                    return Err(Error::Config(
                        "align needs --seed-pairs or --seed-words with both word-vector files".into(),
                    ))
                }
            };
            let (_, r) = pipeline::cmd_align(seed, apply.as_deref(), &cfg.paths.run_dir)?;
            log::info!("aligned with {} pairs, orthogonality error {:.2e}", r.pairs, r.orthogonality_error);
        }
    }
    Ok(())
}
