//! Pipeline configuration: one TOML document, overridable from the command line.

use std::path::{Path, PathBuf};

use focus_core::baselines::WechselConfig;
use focus_core::{CanonPolicy, Fallback, FocusConfig, InitMode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::corpus_io::CorpusFormat;
use crate::error::{Error, Result};
use crate::vocab_io::VocabFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Focus,
    Wechsel,
    /// WECHSEL restricted to a subset of source tokens.
    WechselSubset,
    Shuffle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub source_vocab: Option<PathBuf>,
    pub source_vocab_format: VocabFormat,
    pub target_vocab: Option<PathBuf>,
    pub target_vocab_format: VocabFormat,
    /// Pretrained source embeddings (VTM).
    pub source_emb: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub corpus_format: CorpusFormat,
    /// Directory written by `train-aux`, or a single VTM taken as fully trained.
    pub aux: Option<PathBuf>,
    pub aligned_source: Option<PathBuf>,
    pub aligned_target: Option<PathBuf>,
    /// Source tokens eligible for `wechsel-subset`, one per line.
    pub subset: Option<PathBuf>,
    pub run_dir: PathBuf,
    /// Defaults to `report.json` in the run directory.
    pub report: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            source_vocab: None,
            source_vocab_format: VocabFormat::Auto,
            target_vocab: None,
            target_vocab_format: VocabFormat::Auto,
            source_emb: None,
            corpus: None,
            corpus_format: CorpusFormat::Text,
            aux: None,
            aligned_source: None,
            aligned_target: None,
            subset: None,
            run_dir: PathBuf::from("run"),
            report: None,
        }
    }
}

/// Settings shared by every initializer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSection {
    pub fallback: Fallback,
    pub fuzzy: bool,
    pub seed: u64,
    pub extend_cap: Option<usize>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self { fallback: Fallback::default(), fuzzy: true, seed: 0, extend_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WechselSection {
    pub k: usize,
    pub temperature: f64,
}

impl Default for WechselSection {
    fn default() -> Self {
        let d = WechselConfig::default();
        Self { k: d.k, temperature: d.temperature }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeSection {
    /// Enables the size report in `init` when set.
    pub non_embedding_params: Option<u64>,
    pub tied_head: bool,
}

impl Default for SizeSection {
    fn default() -> Self {
        Self { non_embedding_params: None, tied_head: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub method: Method,
    pub mode: InitMode,
    pub threads: Option<usize>,
    pub canon: CanonPolicy,
    pub paths: Paths,
    pub train: TrainConfig,
    pub init: InitSection,
    pub wechsel: WechselSection,
    pub size: SizeSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, column, msg)| Error::parse(path, line, column, msg))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, usize, String)> {
        toml::from_str(text).map_err(|e: toml::de::Error| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            (line, column, e.message().to_string())
        })
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or(1).max(1)
    }

    pub fn focus_config(&self) -> FocusConfig {
        FocusConfig {
            mode: self.mode,
            fallback: self.init.fallback,
            fuzzy: self.init.fuzzy,
            seed: self.init.seed,
            extend_cap: self.init.extend_cap,
        }
    }

    pub fn wechsel_config(&self) -> WechselConfig {
        WechselConfig {
            k: self.wechsel.k,
            temperature: self.wechsel.temperature,
            fallback: self.init.fallback,
            seed: self.init.seed,
        }
    }

    pub fn report_path(&self, default_name: &str) -> PathBuf {
        self.paths.report.clone().unwrap_or_else(|| self.paths.run_dir.join(default_name))
    }

    /// Checks the method/mode combination and the paths it needs.
    pub fn validate_init(&self) -> Result<()> {
        if self.method == Method::Shuffle && self.mode == InitMode::Extend {
            return Err(Error::Config("the shuffle method has no extend mode".into()));
        }
        if self.init.extend_cap.is_some() && self.mode != InitMode::Extend {
            return Err(Error::Config("extend_cap only applies to extend mode".into()));
        }
        if self.init.extend_cap.is_some() && self.method != Method::Focus {
            return Err(Error::Config("extend_cap is only supported by the focus method".into()));
        }
        let p = &self.paths;
        require(&p.source_vocab, "source_vocab")?;
        require(&p.target_vocab, "target_vocab")?;
        require(&p.source_emb, "source_emb")?;
        match self.method {
            Method::Focus if p.aux.is_none() && p.corpus.is_none() => {
                Err(Error::Config("the focus method needs aux or corpus".into()))
            }
            Method::Wechsel | Method::WechselSubset => {
                require(&p.aligned_source, "aligned_source")?;
                require(&p.aligned_target, "aligned_target")?;
                if self.method == Method::WechselSubset {
                    require(&p.subset, "subset")?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn require<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("missing path: {name}")))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
