//! Per-row audit file (JSON lines) and the verification that replays it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use focus_core::rows::combine_rows;
use focus_core::{EmbeddingMatrix, FallbackReason, RowOrigin, RowRecord, SupportEntry};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a weighted row from its recomputation, per coordinate.
pub const WEIGHTED_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Copy,
    Weighted,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSupport {
    pub token: String,
    pub source_id: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub row: usize,
    pub token: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<usize>,
    pub kind: RowKind,
    /// Copied source row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<AuditSupport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackReason>,
}

impl AuditRecord {
    /// `target` and `source` give printable token strings by id.
    pub fn from_row(r: &RowRecord, target: &[String], source: &[String]) -> Self {
        let token = match r.target_id {
            Some(t) => target[t].clone(),
            None => match r.origin {
                RowOrigin::Copied { source_id } => source[source_id].clone(),
                _ => String::new(),
            },
        };
        let mut rec = AuditRecord {
            row: r.row,
            token,
            target_id: r.target_id,
            kind: RowKind::Copy,
            source_id: None,
            support: Vec::new(),
            fallback: None,
        };
        match &r.origin {
            RowOrigin::Copied { source_id } => rec.source_id = Some(*source_id),
            RowOrigin::Combined(w) => {
                rec.kind = RowKind::Weighted;
                rec.support = w
                    .support
                    .iter()
                    .map(|s| AuditSupport {
                        token: source[s.source_id].clone(),
                        source_id: s.source_id,
                        weight: s.weight,
                    })
                    .collect();
            }
            RowOrigin::Fallback(reason) => {
                rec.kind = RowKind::Fallback;
                rec.fallback = Some(*reason);
            }
        }
        rec
    }
}

pub fn write_audit<'a>(path: &Path, records: impl IntoIterator<Item = &'a AuditRecord>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::format(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_audit(path: &Path) -> Result<Vec<AuditRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(path, i + 1, 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.column(), e.to_string()))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: usize,
    pub copied: usize,
    pub weighted: usize,
    pub fallback: usize,
    pub max_weighted_error: f64,
}

/// The first row that does not match its audit record.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyFailure {
    pub row: usize,
    pub token: Option<String>,
    pub reason: String,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.token {
            Some(t) => write!(f, "row {} (token {t:?}): {}", self.row, self.reason),
            None => write!(f, "row {}: {}", self.row, self.reason),
        }
    }
}

/// Replays every audit record against `embeddings`.
///
/// Copied rows must be bit-equal to their source row; weighted rows must match
/// the recomputed combination within [`WEIGHTED_TOLERANCE`]; fallback rows are
/// only checked for presence. Rows are checked in order and the first failure
/// is returned.
pub fn verify(
    embeddings: &EmbeddingMatrix,
    source: &EmbeddingMatrix,
    records: &[AuditRecord],
) -> std::result::Result<VerifyReport, VerifyFailure> {
    let fail = |row: usize, token: Option<&str>, reason: String| VerifyFailure {
        row,
        token: token.map(str::to_string),
        reason,
    };
    if embeddings.dim() != source.dim() {
        return Err(fail(
            0,
            None,
            format!("dimension {} differs from source dimension {}", embeddings.dim(), source.dim()),
        ));
    }
    let mut by_row: BTreeMap<usize, &AuditRecord> = BTreeMap::new();
    for r in records {
        if r.row >= embeddings.rows() {
            return Err(fail(
                r.row,
                Some(&r.token),
                format!("record for a row beyond the {} stored rows", embeddings.rows()),
            ));
        }
        if by_row.insert(r.row, r).is_some() {
            return Err(fail(r.row, Some(&r.token), "duplicate weight record".into()));
        }
    }

    let mut report = VerifyReport { rows: embeddings.rows(), ..Default::default() };
    for row in 0..embeddings.rows() {
        let Some(rec) = by_row.get(&row) else {
            return Err(fail(row, None, "missing weight record".into()));
        };
        let token = Some(rec.token.as_str());
        let stored = embeddings.row(row);
        let source_row = |id: usize| {
            source
                .get_row(id)
                .ok_or_else(|| fail(row, token, format!("source id {id} out of range for {} rows", source.rows())))
        };
        match rec.kind {
            RowKind::Copy => {
                let id = rec.source_id.ok_or_else(|| fail(row, token, "copy record without source_id".into()))?;
                let expected = source_row(id)?;
                if let Some(col) = (0..stored.len()).find(|&j| stored[j].to_bits() != expected[j].to_bits()) {
                    return Err(fail(
                        row,
                        token,
                        format!(
                            "not a copy of source row {id}: column {col} is {} instead of {}",
                            stored[col], expected[col]
                        ),
                    ));
                }
                report.copied += 1;
            }
            RowKind::Weighted => {
                if rec.support.is_empty() {
                    return Err(fail(row, token, "weighted record with empty support".into()));
                }
                let mut support = Vec::with_capacity(rec.support.len());
                for (anchor, s) in rec.support.iter().enumerate() {
                    source_row(s.source_id)?;
                    if !(s.weight.is_finite() && s.weight > 0.0) {
                        return Err(fail(row, token, format!("weight {} for {:?} is not positive", s.weight, s.token)));
                    }
                    support.push(SupportEntry { anchor, source_id: s.source_id, weight: s.weight });
                }
                let sum: f64 = support.iter().map(|s| s.weight).sum();
                if (sum - 1.0).abs() > WEIGHTED_TOLERANCE {
                    return Err(fail(row, token, format!("weights sum to {sum}")));
                }
                let expected = combine_rows(source, &support);
                for (col, (&a, &b)) in stored.iter().zip(&expected).enumerate() {
                    let err = (f64::from(a) - f64::from(b)).abs();
                    if err.is_nan() || err > WEIGHTED_TOLERANCE * f64::from(b).abs().max(1.0) {
                        return Err(fail(
                            row,
                            token,
                            format!("column {col} is {a} but the weighted combination gives {b}"),
                        ));
                    }
                    report.max_weighted_error = report.max_weighted_error.max(err);
                }
                report.weighted += 1;
            }
            RowKind::Fallback => report.fallback += 1,
        }
    }
    Ok(report)
}
