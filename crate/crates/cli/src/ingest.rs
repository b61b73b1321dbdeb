//! CSV ingestion with length, transform and detrending policies.

use std::path::Path;

use hurst_core::Detrend;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },

    #[error("line {line}: cannot parse {value:?} as a number")]
    ParseError { line: u64, value: String },

    #[error("input holds no samples")]
    EmptyInput,

    #[error("input holds {len} samples, at least 3 are needed")]
    TooShort { len: usize },

    #[error("{len} samples is not 2^n + 1; choose a truncation policy")]
    NotDyadic { len: usize },

    #[error("line {line}: log transform needs positive values, got {value}")]
    NonPositive { line: u64, value: f64 },

    #[error("column {0} not found")]
    MissingColumn(String),
}

/// Column selector: zero-based index or header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for Column {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Column::Index(i) => write!(f, "{i}"),
            Column::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LengthPolicy {
    /// Fail unless the sample count is 2^n + 1.
    RequireDyadic,
    /// Keep the last 2^n + 1 samples.
    TruncateHead,
    /// Keep the first 2^n + 1 samples.
    TruncateTail,
    /// Keep every sample (rolling input).
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DetrendArg {
    None,
    Affine,
}

impl From<DetrendArg> for Detrend {
    fn from(d: DetrendArg) -> Self {
        match d {
            DetrendArg::None => Detrend::None,
            DetrendArg::Affine => Detrend::Affine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestPolicy {
    pub time_col: Option<Column>,
    pub value_col: Column,
    pub length: LengthPolicy,
    pub transform: Transform,
    pub detrend: DetrendArg,
}

impl Default for IngestPolicy {
    fn default() -> Self {
        Self {
            time_col: None,
            value_col: Column::Index(0),
            length: LengthPolicy::RequireDyadic,
            transform: Transform::None,
            detrend: DetrendArg::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestMetadata {
    pub source: String,
    pub header: bool,
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped_head: usize,
    pub dropped_tail: usize,
    /// `n` when the kept sample count is `2^n + 1`.
    pub resolution: Option<u32>,
    pub policy: IngestPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<String>>,
    pub metadata: IngestMetadata,
}

/// Largest `n` with `2^n + 1 <= len`.
pub fn largest_resolution(len: usize) -> Option<u32> {
    if len < 3 {
        None
    } else {
        Some((len - 1).ilog2())
    }
}

fn dyadic_resolution(len: usize) -> Option<u32> {
    let cells = len.checked_sub(1)?;
    (cells >= 2 && cells.is_power_of_two()).then(|| cells.trailing_zeros())
}

fn resolve(col: &Column, headers: Option<&csv::StringRecord>) -> Result<usize, IngestError> {
    match col {
        Column::Index(i) => Ok(*i),
        Column::Name(name) => headers
            .and_then(|h| h.iter().position(|f| f.trim() == name))
            .ok_or_else(|| IngestError::MissingColumn(name.clone())),
    }
}

pub fn ingest_csv(path: &Path, policy: &IngestPolicy) -> Result<Ingested, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    ingest_bytes(&bytes, &path.display().to_string(), policy)
}

pub fn ingest_bytes(
    bytes: &[u8],
    source: &str,
    policy: &IngestPolicy,
) -> Result<Ingested, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IngestError::Io {
            path: source.to_string(),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    // A first row whose value field is not numeric is a header.
    let header = match &policy.value_col {
        Column::Name(_) => true,
        Column::Index(i) => records[0]
            .1
            .get(*i)
            .is_some_and(|f| f.parse::<f64>().is_err()),
    };
    let headers = header.then(|| records[0].1.clone());
    let value_idx = resolve(&policy.value_col, headers.as_ref())?;
    let time_idx = policy
        .time_col
        .as_ref()
        .map(|c| resolve(c, headers.as_ref()))
        .transpose()?;
    let body = &records[usize::from(header)..];
    if body.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    let mut values = Vec::with_capacity(body.len());
    let mut lines = Vec::with_capacity(body.len());
    let mut timestamps = time_idx.map(|_| Vec::with_capacity(body.len()));
    for (line, rec) in body {
        let field = rec
            .get(value_idx)
            .ok_or_else(|| IngestError::MissingColumn(policy.value_col.to_string()))?;
        let v: f64 = field
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::ParseError {
                line: *line,
                value: field.to_string(),
            })?;
        values.push(v);
        lines.push(*line);
        if let (Some(ts), Some(i)) = (timestamps.as_mut(), time_idx) {
            let t = rec
                .get(i)
                .ok_or_else(|| IngestError::MissingColumn(policy.time_col.clone().unwrap().to_string()))?;
            ts.push(t.to_string());
        }
    }
    let rows_read = values.len();
    if rows_read < 3 {
        return Err(IngestError::TooShort { len: rows_read });
    }

    let (start, end) = match policy.length {
        LengthPolicy::Keep => (0, rows_read),
        LengthPolicy::RequireDyadic => {
            if dyadic_resolution(rows_read).is_none() {
                return Err(IngestError::NotDyadic { len: rows_read });
            }
            (0, rows_read)
        }
        LengthPolicy::TruncateTail | LengthPolicy::TruncateHead => {
            let n = largest_resolution(rows_read).expect("at least 3 samples");
            let keep = (1usize << n) + 1;
            if policy.length == LengthPolicy::TruncateTail {
                (0, keep)
            } else {
                (rows_read - keep, rows_read)
            }
        }
    };
    let mut values = values[start..end].to_vec();
    let lines = &lines[start..end];
    let timestamps = timestamps.map(|ts| ts[start..end].to_vec());

    if policy.transform == Transform::Log {
        for (v, &line) in values.iter_mut().zip(lines) {
            if *v <= 0.0 {
                return Err(IngestError::NonPositive { line, value: *v });
            }
            *v = v.ln();
        }
    }
    if policy.detrend == DetrendArg::Affine {
        let x0 = values[0];
        let slope = values[values.len() - 1] - x0;
        let last = (values.len() - 1) as f64;
        for (k, v) in values.iter_mut().enumerate() {
            *v = (*v - x0) - (k as f64 / last) * slope;
        }
    }

    Ok(Ingested {
        metadata: IngestMetadata {
            source: source.to_string(),
            header,
            rows_read,
            rows_kept: values.len(),
            dropped_head: start,
            dropped_tail: rows_read - end,
            resolution: dyadic_resolution(values.len()),
            policy: policy.clone(),
        },
        values,
        timestamps,
    })
}
