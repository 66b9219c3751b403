//! VTM v1 matrix files.
//!
//! Layout: the magic `VTM1`, a little-endian `u32` byte length, a UTF-8 JSON
//! header `{"rows","dim","dtype":"f32","byte_order":"little","meta"}`, then
//! `rows * dim` little-endian `f32` values in row-major order. Nothing may
//! follow the payload.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use focus_core::EmbeddingMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VTM1";

const MAX_HEADER_BYTES: u32 = 64 << 20;
const CHUNK_VALUES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub rows: usize,
    pub dim: usize,
    pub dtype: String,
    pub byte_order: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

/// Serializes `m`. Fails on the first non-finite value.
pub fn write_to<W: Write>(m: &EmbeddingMatrix, mut w: W) -> io::Result<()> {
    if let Some(pos) = m.data().iter().position(|v| !v.is_finite()) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("non-finite value in row {}", pos / m.dim())));
    }
    let header = Header {
        rows: m.rows(),
        dim: m.dim(),
        dtype: "f32".into(),
        byte_order: "little".into(),
        meta: m.meta().clone(),
    };
    let json = serde_json::to_vec(&header).map_err(io::Error::other)?;
    let len = u32::try_from(json.len()).map_err(|_| io::Error::other("header too large"))?;
    w.write_all(MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(CHUNK_VALUES * 4);
    for chunk in m.data().chunks(CHUNK_VALUES) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

/// Reads a matrix, checking the header against the payload.
pub fn read_from<R: Read>(r: R) -> std::result::Result<EmbeddingMatrix, String> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| "file too short for VTM magic".to_string())?;
    if &magic != MAGIC {
        return Err(format!("bad magic {magic:?}, expected \"VTM1\""));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|_| "truncated header length".to_string())?;
    let len = u32::from_le_bytes(len);
    if len > MAX_HEADER_BYTES {
        return Err(format!("header length {len} is implausibly large"));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|_| "truncated header".to_string())?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| format!("bad header: {e}"))?;
    if header.dtype != "f32" {
        return Err(format!("unsupported dtype {:?}", header.dtype));
    }
    if header.byte_order != "little" {
        return Err(format!("unsupported byte order {:?}", header.byte_order));
    }
    let total =
        header.rows.checked_mul(header.dim).ok_or_else(|| format!("{} x {} overflows", header.rows, header.dim))?;

    let mut data = Vec::with_capacity(total);
    let mut buf = vec![0u8; CHUNK_VALUES * 4];
    while data.len() < total {
        let want = (total - data.len()).min(CHUNK_VALUES) * 4;
        let got = read_full(&mut r, &mut buf[..want]).map_err(|e| e.to_string())?;
        for bytes in buf[..got - got % 4].chunks_exact(4) {
            let v = f32::from_le_bytes(bytes.try_into().expect("4 bytes"));
            if !v.is_finite() {
                let row = data.len().checked_div(header.dim).unwrap_or(0);
                return Err(format!("non-finite value in row {row}"));
            }
            data.push(v);
        }
        if got < want {
            let rows_found = data.len().checked_div(header.dim).unwrap_or(0);
            return Err(format!(
                "header says {} rows x {} dims but payload holds {} values ({} full rows)",
                header.rows,
                header.dim,
                data.len(),
                rows_found
            ));
        }
    }
    if !r.fill_buf().map_err(|e| e.to_string())?.is_empty() {
        return Err(format!("payload is longer than {} rows x {} dims", header.rows, header.dim));
    }
    EmbeddingMatrix::with_meta(header.rows, header.dim, data, header.meta).map_err(|e| e.to_string())
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

pub fn save(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_to(m, BufWriter::new(file)).map_err(|e| match e.kind() {
        io::ErrorKind::InvalidData => Error::format(path, e.to_string()),
        _ => Error::io(path, e),
    })
}

pub fn load(path: &Path) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_from(file).map_err(|msg| Error::format(path, msg))
}

/// Loads a VTM file, or a whitespace text matrix when the file does not start
/// with the VTM magic.
pub fn load_any(path: &Path) -> Result<EmbeddingMatrix> {
    let mut magic = [0u8; 4];
    let n = File::open(path).and_then(|mut f| read_full(&mut f, &mut magic)).map_err(|e| Error::io(path, e))?;
    if n == 4 && &magic == MAGIC {
        load(path)
    } else {
        load_text(path)
    }
}

/// Whitespace text matrix: one row per line, values separated by spaces.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_text(path: &Path) -> Result<EmbeddingMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_text(&text).map_err(|(line, column, msg)| Error::parse(path, line, column, msg))
}

pub fn parse_text(text: &str) -> std::result::Result<EmbeddingMatrix, (usize, usize, String)> {
    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let start = data.len();
        for (column, field) in fields(line) {
            let v: f32 = field.parse().map_err(|_| (i + 1, column, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err((i + 1, column, format!("non-finite value in row {rows}")));
            }
            data.push(v);
        }
        let n = data.len() - start;
        match dim {
            None => dim = Some(n),
            Some(d) if d != n => return Err((i + 1, 1, format!("row has {n} values, expected {d}"))),
            _ => {}
        }
        rows += 1;
    }
    EmbeddingMatrix::new(rows, dim.unwrap_or(0), data).map_err(|e| (0, 0, e.to_string()))
}

/// Whitespace-separated fields with their 1-based character columns.
pub(crate) fn fields(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let skip = rest.len() - rest.trim_start().len();
        offset += skip;
        rest = &rest[skip..];
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let field = &rest[..end];
        let column = line[..offset].chars().count() + 1;
        offset += end;
        rest = &rest[end..];
        Some((column, field))
    })
}
