#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use focus::vtm;
use focus_core::EmbeddingMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYLLABLES: [&str; 12] = ["ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "be", "du", "fe", "go"];

/// Synthetic source/target pair with a topic-structured target corpus.
pub struct Toy {
    pub dir: tempfile::TempDir,
    pub source_vocab: PathBuf,
    pub target_vocab: PathBuf,
    pub source_emb: PathBuf,
    pub corpus: PathBuf,
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
}

impl Toy {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn words(n: usize) -> Vec<String> {
    let mut out = Vec::new();
    'outer: for a in SYLLABLES {
        for b in SYLLABLES {
            if a != b {
                out.push(format!("{a}{b}"));
                if out.len() == n {
                    break 'outer;
                }
            }
        }
    }
    out
}

/// `lines` corpus lines over 60 words in 6 topics; the source shares the
/// first 36 words (some capitalized, matched only fuzzily) with the target.
pub fn toy(lines: usize, source_dim: usize, seed: u64) -> Toy {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = words(60);
    let chars: Vec<String> = {
        let mut c: Vec<char> = SYLLABLES.concat().chars().collect();
        c.sort_unstable();
        c.dedup();
        c.into_iter().map(String::from).collect()
    };

    let mut source = vec!["<unk>".to_string(), "▁".to_string()];
    for (i, w) in words.iter().take(36).enumerate() {
        source.push(if i % 9 == 4 { format!("▁{}", capitalize(w)) } else { format!("▁{w}") });
    }
    source.extend(SYLLABLES.iter().map(|s| s.to_string()));
    source.extend(chars.iter().cloned());
    source.extend(["▁the", "▁and", "▁of"].map(String::from));

    let mut target = vec!["<unk>".to_string(), "▁".to_string()];
    target.extend(words.iter().map(|w| format!("▁{w}")));
    target.extend(SYLLABLES.iter().map(|s| s.to_string()));
    target.extend(chars.iter().cloned());

    let source_vocab = dir.path().join("source.vocab");
    let target_vocab = dir.path().join("target.vocab");
    std::fs::write(&source_vocab, source.join("\n") + "\n").unwrap();
    std::fs::write(&target_vocab, target.join("\n") + "\n").unwrap();

    let emb = EmbeddingMatrix::new(
        source.len(),
        source_dim,
        (0..source.len() * source_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
    )
    .unwrap();
    let source_emb = dir.path().join("source.vtm");
    vtm::save(&emb, &source_emb).unwrap();

    let topics: Vec<&[String]> = words.chunks(10).collect();
    let mut text = String::new();
    for _ in 0..lines {
        let topic = topics.choose(&mut rng).unwrap();
        let n = rng.random_range(6..14);
        let line: Vec<&str> = (0..n)
            .map(|_| {
                if rng.random_bool(0.9) {
                    topic.choose(&mut rng).unwrap().as_str()
                } else {
                    words.choose(&mut rng).unwrap().as_str()
                }
            })
            .collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, text).unwrap();

    Toy { dir, source_vocab, target_vocab, source_emb, corpus, source_tokens: source, target_tokens: target }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

pub fn focus_bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_focus"));
    cmd.env_remove("FOCUS_THREADS").env("RUST_LOG", "warn");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    focus_bin().args(args).output().unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `overlap` + `init` (auxiliary space trained inline) into `run_dir`.
pub fn init_args<'a>(toy: &'a Toy, run_dir: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "init",
        "--run-dir",
        s(run_dir),
        "--source-vocab",
        s(&toy.source_vocab),
        "--target-vocab",
        s(&toy.target_vocab),
        "--source-emb",
        s(&toy.source_emb),
        "--corpus",
        s(&toy.corpus),
    ];
    args.extend_from_slice(extra);
    args
}
