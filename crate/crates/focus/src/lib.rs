//! File formats, pipeline commands and the `focus` command line on top of
//! [`focus_core`].

pub mod audit;
pub mod aux_io;
pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod error;
pub mod manifest;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod seed_io;
pub mod vocab_io;
pub mod vtm;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

pub use error::{Error, ExitCode, Result};

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e.line(), e.column(), e.to_string()))
}
