//! The pipeline commands. Each one reads its inputs, writes its artifacts
//! into the run directory, and records them in the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use focus_core::baselines::{
    procrustes_align, shuffle_permutation, AlignedSpaces, Alignment, SeedDictionary, WechselPlan,
};
use focus_core::vocab::{canonicalize, compute_overlap, OverlapResult};
use focus_core::{
    size_report, AuxiliarySpace, EmbeddingMatrix, FocusPlan, InitMode, RowOrigin, RowRecord, SizeReport, Vocabulary,
};
use serde::Serialize;

use crate::audit::{self, AuditRecord, VerifyReport};
use crate::config::{require, Method, PipelineConfig};
use crate::corpus_io;
use crate::error::{Error, Result};
use crate::report::{InitReport, InitSection, OverlapSection, TrainingSection};
use crate::{aux_io, manifest, parallel, seed_io, vocab_io, vtm};

pub const EMBEDDINGS_FILE: &str = "embeddings.vtm";
pub const WEIGHTS_FILE: &str = "weights.jsonl";
pub const AUX_DIR: &str = "aux";

struct Stopwatch(BTreeMap<String, f64>);

impl Stopwatch {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

/// Raw and canonical forms of both vocabularies.
pub struct Vocabs {
    pub source_raw: Vocabulary,
    pub target_raw: Vocabulary,
    pub source: Vocabulary,
    pub target: Vocabulary,
}

pub fn load_vocabs(cfg: &PipelineConfig) -> Result<Vocabs> {
    let p = &cfg.paths;
    let source_path = require(&p.source_vocab, "source_vocab")?;
    let source_raw = vocab_io::load_vocabulary(source_path, p.source_vocab_format, cfg.canon.source)?;
    let target_raw = load_target_vocab(cfg)?;
    let source = canonicalize(&source_raw, cfg.canon.source)
        .map_err(|e| Error::Input { path: source_path.to_path_buf(), source: e })?;
    let target = canonicalize(&target_raw, cfg.canon.target)
        .map_err(|e| Error::Input { path: p.target_vocab.clone().unwrap_or_default(), source: e })?;
    Ok(Vocabs { source_raw, target_raw, source, target })
}

fn load_target_vocab(cfg: &PipelineConfig) -> Result<Vocabulary> {
    let path = require(&cfg.paths.target_vocab, "target_vocab")?;
    vocab_io::load_vocabulary(path, cfg.paths.target_vocab_format, cfg.canon.target)
}

fn run_dir(cfg: &PipelineConfig) -> Result<&Path> {
    let dir = cfg.paths.run_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn finish_report(
    cfg: &PipelineConfig,
    mut report: InitReport,
    timing: Stopwatch,
    name: &str,
    mut files: Vec<PathBuf>,
) -> Result<InitReport> {
    report.timing = timing.0;
    report.check_accounting()?;
    let path = cfg.report_path(name);
    crate::write_json(&path, &report)?;
    files.push(path);
    let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    manifest::record(&cfg.paths.run_dir, report.command, report.config.clone(), &refs)?;
    Ok(report)
}

fn overlap_for(cfg: &PipelineConfig, v: &Vocabs, report: &mut InitReport) -> OverlapResult {
    let overlap = compute_overlap(&v.source, &v.target, cfg.init.fuzzy);
    let section = OverlapSection::new(&overlap, &v.source, &v.target);
    log::info!(
        "overlap {} ({} exact, {} fuzzy), clean {}, additional {}",
        section.overlap_count,
        section.exact_count,
        section.fuzzy_count,
        section.clean_overlap_count,
        section.additional_count
    );
    if section.overlap_count == 0 {
        report.warn("overlap is empty: every additional token falls back");
    }
    report.overlap = Some(section);
    overlap
}

/// Overlap analysis. Writes `overlap.tsv` and `overlap.json`.
pub fn cmd_overlap(cfg: &PipelineConfig) -> Result<InitReport> {
    let dir = run_dir(cfg)?;
    let mut timing = Stopwatch(BTreeMap::new());
    let mut report = InitReport::new("overlap", cfg);
    let vocabs = timing.time("load", || load_vocabs(cfg))?;
    let overlap = timing.time("overlap", || overlap_for(cfg, &vocabs, &mut report));

    let tsv = dir.join("overlap.tsv");
    let mut out = String::from("target_id\tsource_id\tkind\ttoken\n");
    for e in &overlap.overlap {
        let kind = match e.kind {
            focus_core::MatchKind::Exact => "exact",
            focus_core::MatchKind::Fuzzy => "fuzzy",
        };
        let token = vocabs.target_raw.token(e.target_id).unwrap_or_default();
        out.push_str(&format!("{}\t{}\t{kind}\t{}\n", e.target_id, e.source_id, escape(token)));
    }
    std::fs::write(&tsv, out).map_err(|e| Error::io(&tsv, e))?;
    finish_report(cfg, report, timing, "overlap.json", vec![tsv])
}

fn escape(token: &str) -> String {
    token.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r")
}

struct Trained {
    space: AuxiliarySpace,
    section: TrainingSection,
    counts: Vec<u64>,
}

fn train_aux(cfg: &PipelineConfig, target: &Vocabulary, timing: &mut Stopwatch) -> Result<Trained> {
    let corpus_path = require(&cfg.paths.corpus, "corpus")?;
    let (corpus, corpus_report) =
        timing.time("tokenize", || corpus_io::load_corpus(corpus_path, cfg.paths.corpus_format, target))?;
    log::info!(
        "corpus: {} lines kept, {} dropped, {} tokens",
        corpus_report.lines_kept,
        corpus_report.lines_dropped,
        corpus_report.tokens
    );
    let threads = cfg.threads();
    let (space, stats) = timing.time("train", || parallel::train_skipgram(&corpus, &cfg.train, threads))?;
    log::info!("trained {} epochs over {} tokens, {} updates", stats.epochs, stats.tokens_per_epoch, stats.updates);
    let section = TrainingSection::new(corpus_report, &stats, target.len());
    aux_io::save_aux(&cfg.paths.run_dir.join(AUX_DIR), &space, Some(&cfg.train), Some(&stats))?;
    Ok(Trained { space, section, counts: corpus.token_counts().to_vec() })
}

fn aux_files(dir: &Path) -> Vec<PathBuf> {
    let aux = dir.join(AUX_DIR);
    [aux_io::INPUT_FILE, aux_io::OUTPUT_FILE, aux_io::SIDECAR_FILE].iter().map(|f| aux.join(f)).collect()
}

/// Trains the auxiliary space into `<run_dir>/aux`.
pub fn cmd_train_aux(cfg: &PipelineConfig) -> Result<InitReport> {
    let dir = run_dir(cfg)?.to_path_buf();
    let mut timing = Stopwatch(BTreeMap::new());
    let mut report = InitReport::new("train-aux", cfg);
    let raw = timing.time("load", || load_target_vocab(cfg))?;
    let target = canonicalize(&raw, cfg.canon.target)?;
    let trained = train_aux(cfg, &target, &mut timing)?;
    if trained.section.corpus.dropped_chars > 0 {
        report
            .warn(format!("{} corpus characters not covered by the vocabulary", trained.section.corpus.dropped_chars));
    }
    if trained.section.untrained_tokens > 0 {
        report.warn(format!("{} target tokens were not trained", trained.section.untrained_tokens));
    }
    report.training = Some(trained.section);
    finish_report(cfg, report, timing, "train-aux.json", aux_files(&dir))
}

fn load_checked(path: &Path, rows: usize, what: &str) -> Result<EmbeddingMatrix> {
    let m = vtm::load_any(path)?;
    if m.rows() != rows {
        return Err(Error::format(path, format!("{what} has {} rows, vocabulary has {rows}", m.rows())));
    }
    Ok(m)
}

fn summarize(rows: &[RowRecord], output_rows: usize) -> InitSection {
    let mut s = InitSection { output_rows, ..Default::default() };
    let mut support_total = 0;
    for r in rows {
        match &r.origin {
            RowOrigin::Combined(w) => {
                s.weighted_count += 1;
                support_total += w.support.len();
                *s.support_histogram.entry(w.support.len()).or_default() += 1;
            }
            RowOrigin::Fallback(reason) => {
                s.fallback_count += 1;
                let key = serde_json::to_value(reason).ok().and_then(|v| v.as_str().map(str::to_string));
                *s.fallback_by_reason.entry(key.unwrap_or_default()).or_default() += 1;
            }
            RowOrigin::Copied { .. } => {}
        }
    }
    s.initialized_count = s.weighted_count + s.fallback_count;
    if s.weighted_count > 0 {
        s.mean_support_size = support_total as f64 / s.weighted_count as f64;
    }
    s
}

fn read_subset(path: &Path, source_raw: &Vocabulary, source: &Vocabulary) -> Result<Vec<usize>> {
    let tokens = vocab_io::load_tokens(path, vocab_io::VocabFormat::Text)?;
    let mut ids = Vec::with_capacity(tokens.len());
    for (i, t) in tokens.iter().enumerate() {
        let id = source_raw
            .id(t)
            .or_else(|| source.id(t))
            .ok_or_else(|| Error::parse(path, i + 1, 1, format!("{t:?} is not in the source vocabulary")))?;
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Builds `E^t` with the configured method. Writes `embeddings.vtm`,
/// `weights.jsonl` and `report.json`.
pub fn cmd_init(cfg: &PipelineConfig) -> Result<InitReport> {
    cfg.validate_init()?;
    let dir = run_dir(cfg)?.to_path_buf();
    let mut timing = Stopwatch(BTreeMap::new());
    let mut report = InitReport::new("init", cfg);
    let vocabs = timing.time("load", || load_vocabs(cfg))?;
    let overlap = timing.time("overlap", || overlap_for(cfg, &vocabs, &mut report));
    let source_emb =
        load_checked(require(&cfg.paths.source_emb, "source_emb")?, vocabs.source.len(), "source embeddings")?;
    let threads = cfg.threads();
    let mut files = Vec::new();

    let (embeddings, rows) = match cfg.method {
        Method::Focus => {
            let mut counts = None;
            let aux = match &cfg.paths.aux {
                Some(path) => aux_io::load_aux(path)?,
                None => {
                    let trained = train_aux(cfg, &vocabs.target, &mut timing)?;
                    files.extend(aux_files(&dir));
                    counts = Some(trained.counts);
                    report.training = Some(trained.section);
                    trained.space
                }
            };
            if aux.rows() != vocabs.target.len() {
                return Err(Error::Config(format!(
                    "auxiliary space has {} rows, target vocabulary has {}",
                    aux.rows(),
                    vocabs.target.len()
                )));
            }
            if cfg.init.extend_cap.is_some() && counts.is_none() {
                let corpus_path = require(&cfg.paths.corpus, "corpus (token frequencies for extend_cap)")?;
                let (corpus, _) = corpus_io::load_corpus(corpus_path, cfg.paths.corpus_format, &vocabs.target)?;
                counts = Some(corpus.token_counts().to_vec());
            }
            let focus_cfg = cfg.focus_config();
            let out = timing.time("initialize", || -> Result<_> {
                let plan = FocusPlan::new(&source_emb, &overlap, &aux, &focus_cfg, counts.as_deref())?;
                parallel::run_focus(plan, threads)
            })?;
            let section = InitSection::from_focus(&out.summary, out.embeddings.rows());
            if out.summary.unusable_anchor_count > 0 {
                report.warn(format!(
                    "{} overlap tokens have no usable auxiliary vector",
                    out.summary.unusable_anchor_count
                ));
            }
            report.init = Some(section);
            (out.embeddings, out.rows)
        }
        Method::Wechsel | Method::WechselSubset => {
            let aligned_source = load_checked(
                require(&cfg.paths.aligned_source, "aligned_source")?,
                vocabs.source.len(),
                "aligned source space",
            )?;
            let aligned_target = load_checked(
                require(&cfg.paths.aligned_target, "aligned_target")?,
                vocabs.target.len(),
                "aligned target space",
            )?;
            let spaces = AlignedSpaces::new(aligned_source, aligned_target)?;
            let mut plan = WechselPlan::new(&spaces, &source_emb, &cfg.wechsel_config())?;
            if cfg.method == Method::WechselSubset {
                let subset = read_subset(require(&cfg.paths.subset, "subset")?, &vocabs.source_raw, &vocabs.source)?;
                log::info!("restricting to {} source tokens", subset.len());
                plan = plan.restrict(&subset)?;
            }
            let targets: Vec<usize> = match cfg.mode {
                InitMode::Replace => (0..vocabs.target.len()).collect(),
                InitMode::Extend => overlap.additional.clone(),
            };
            let out = timing.time("initialize", || parallel::run_wechsel(&plan, &targets, cfg.mode, threads))?;
            report.init = Some(summarize(&out.rows, out.embeddings.rows()));
            (out.embeddings, out.rows)
        }
        Method::Shuffle => {
            let perm = shuffle_permutation(source_emb.rows(), vocabs.target.len(), cfg.init.seed)?;
            let embeddings = source_emb.select_rows(&perm)?;
            let rows = perm
                .iter()
                .enumerate()
                .map(|(t, &s)| RowRecord { row: t, target_id: Some(t), origin: RowOrigin::Copied { source_id: s } })
                .collect::<Vec<_>>();
            report.init = Some(summarize(&rows, embeddings.rows()));
            (embeddings, rows)
        }
    };

    let embeddings = with_run_meta(embeddings, cfg, &vocabs)?;
    if let Some(ne) = cfg.size.non_embedding_params {
        let sr = size_report(
            ne,
            source_emb.dim() as u64,
            source_emb.rows() as u64,
            embeddings.rows() as u64,
            cfg.size.tied_head,
        )?;
        log::info!("parameters {} -> {} ({:.1}% smaller)", sr.old_total, sr.new_total, 100.0 * sr.reduction_fraction);
        report.size_report = Some(sr);
    }

    let emb_path = dir.join(EMBEDDINGS_FILE);
    let weights_path = dir.join(WEIGHTS_FILE);
    timing.time("write", || -> Result<()> {
        vtm::save(&embeddings, &emb_path)?;
        let records: Vec<AuditRecord> = rows
            .iter()
            .map(|r| AuditRecord::from_row(r, vocabs.target_raw.tokens(), vocabs.source_raw.tokens()))
            .collect();
        audit::write_audit(&weights_path, &records)
    })?;
    files.push(emb_path);
    files.push(weights_path);
    finish_report(cfg, report, timing, "report.json", files)
}

fn with_run_meta(m: EmbeddingMatrix, cfg: &PipelineConfig, v: &Vocabs) -> Result<EmbeddingMatrix> {
    let (rows, dim, data, _) = m.into_parts();
    let method = serde_json::to_value(cfg.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let mode = match cfg.mode {
        InitMode::Replace => "replace",
        InitMode::Extend => "extend",
    };
    let meta = BTreeMap::from([
        ("method".to_string(), method),
        ("mode".to_string(), mode.to_string()),
        ("seed".to_string(), cfg.init.seed.to_string()),
        ("source_vocab_size".to_string(), v.source.len().to_string()),
        ("target_vocab_size".to_string(), v.target.len().to_string()),
    ]);
    Ok(EmbeddingMatrix::with_meta(rows, dim, data, meta)?)
}

/// Replays an audit file against stored embeddings.
pub fn cmd_verify(embeddings: &Path, source_emb: &Path, weights: &Path, report: Option<&Path>) -> Result<VerifyReport> {
    let e = vtm::load_any(embeddings)?;
    let s = vtm::load_any(source_emb)?;
    let records = audit::read_audit(weights)?;
    let outcome = audit::verify(&e, &s, &records);
    if let Some(path) = report {
        #[derive(Serialize)]
        struct Out<'a> {
            passed: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            report: Option<&'a VerifyReport>,
            #[serde(skip_serializing_if = "Option::is_none")]
            failure: Option<String>,
        }
        let out = Out {
            passed: outcome.is_ok(),
            report: outcome.as_ref().ok(),
            failure: outcome.as_ref().err().map(ToString::to_string),
        };
        crate::write_json(path, &out)?;
    }
    outcome.map_err(|f| Error::Verify(f.to_string()))
}

pub fn cmd_size_report(
    non_embedding_params: u64,
    dim: u64,
    old_vocab: u64,
    new_vocab: u64,
    tied_head: bool,
    out: &Path,
) -> Result<SizeReport> {
    let r = size_report(non_embedding_params, dim, old_vocab, new_vocab, tied_head)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    crate::write_json(out, &r)?;
    Ok(r)
}

/// Where the seed dictionary comes from.
pub enum SeedSource<'a> {
    PairedVectors(&'a Path),
    WordPairs { pairs: &'a Path, source_vectors: &'a Path, target_vectors: &'a Path },
}

#[derive(Debug, Serialize)]
pub struct AlignReport {
    pub pairs: usize,
    pub skipped_pairs: usize,
    pub dim: usize,
    pub orthogonality_error: f64,
    pub rank_deficient: bool,
    pub below_recommended_pairs: bool,
    pub singular_values: Vec<f64>,
}

/// Fits the Procrustes map, writes it as a `dim x dim` VTM, and applies it
/// to `apply` when given.
pub fn cmd_align(seed: SeedSource<'_>, apply: Option<&Path>, run_dir: &Path) -> Result<(Alignment, AlignReport)> {
    std::fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
    let (dict, skipped): (SeedDictionary, usize) = match seed {
        SeedSource::PairedVectors(p) => (seed_io::load_paired_tsv(p)?, 0),
        SeedSource::WordPairs { pairs, source_vectors, target_vectors } => {
            let s = seed_io::load_word_vectors(source_vectors)?;
            let t = seed_io::load_word_vectors(target_vectors)?;
            seed_io::load_word_pairs(pairs, &s, &t)?
        }
    };
    if dict.below_recommended() {
        log::warn!("only {} seed pairs for dimension {}", dict.len(), dict.dim());
    }
    let w = procrustes_align(&dict)?;
    if w.rank_deficient {
        log::warn!("cross-covariance is rank deficient; the alignment is not unique");
    }
    let mut files = Vec::new();
    let w_path = run_dir.join("alignment.vtm");
    let w32 = EmbeddingMatrix::new(w.dim, w.dim, w.w.iter().map(|&x| x as f32).collect())?;
    vtm::save(&w32, &w_path)?;
    files.push(w_path);
    if let Some(src) = apply {
        let aligned = w.apply(&vtm::load_any(src)?)?;
        let p = run_dir.join("aligned.vtm");
        vtm::save(&aligned, &p)?;
        files.push(p);
    }
    let report = AlignReport {
        pairs: dict.len(),
        skipped_pairs: skipped,
        dim: w.dim,
        orthogonality_error: w.orthogonality_error(),
        rank_deficient: w.rank_deficient,
        below_recommended_pairs: dict.below_recommended(),
        singular_values: w.singular_values.clone(),
    };
    let rp = run_dir.join("align.json");
    crate::write_json(&rp, &report)?;
    files.push(rp);
    let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    manifest::record(run_dir, "align", serde_json::json!({ "pairs": dict.len() }), &refs)?;
    Ok((w, report))
}
