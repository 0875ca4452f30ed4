//! Recorded transmitted/received symbol pairs.
//!
//! Text format: one record per row, the 1-based transmitted point index
//! followed by `2N` real numbers (real and imaginary parts interleaved) of the
//! received vector. Whitespace and commas separate tokens; `#` starts a
//! comment line.

use std::fmt::Write as _;
use std::io::BufRead;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{fill_noise, noise_rng, NoiseSpec};
use crate::constellation::{split_tokens, LabeledConstellation};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: expected 1 index and {expected} numeric columns, found {found} tokens")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: `{token}` is not a number")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: `{token}` is not a 1-based point index")]
    BadIndex { line: usize, token: String },
    #[error("record {record}: point index {index} is outside 1..={order}")]
    IndexOutOfRange {
        record: usize,
        index: usize,
        order: usize,
    },
    #[error("records have {records} complex dimensions, constellation has {constellation}")]
    DimensionMismatch {
        records: usize,
        constellation: usize,
    },
    #[error("need at least {needed} records, got {found}")]
    TooFew { needed: usize, found: usize },
    #[error("number of complex dimensions must be at least 1")]
    ZeroDims,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Paired `(transmitted index, received vector)` observations.
///
/// Indices are stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolRecordSet {
    dims: usize,
    tx: Vec<usize>,
    rx: Vec<Complex64>,
}

impl SymbolRecordSet {
    pub fn new(dims: usize) -> Self {
        assert!(dims > 0, "records need at least one complex dimension");
        Self {
            dims,
            tx: Vec::new(),
            rx: Vec::new(),
        }
    }

    pub fn push(&mut self, tx_index: usize, received: &[Complex64]) {
        assert_eq!(
            received.len(),
            self.dims,
            "received vector has wrong dimension"
        );
        self.tx.push(tx_index);
        self.rx.extend_from_slice(received);
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }

    pub fn tx_index(&self, t: usize) -> usize {
        self.tx[t]
    }

    pub fn received(&self, t: usize) -> &[Complex64] {
        &self.rx[t * self.dims..(t + 1) * self.dims]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[Complex64])> + '_ {
        self.tx.iter().copied().zip(self.rx.chunks_exact(self.dims))
    }

    /// Number of records per constellation point.
    pub fn counts(&self, order: usize) -> Vec<usize> {
        let mut counts = vec![0; order];
        for &i in &self.tx {
            if i < order {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Checks dimensions and index range against `c`.
    pub fn validate(&self, c: &LabeledConstellation) -> Result<(), RecordError> {
        if self.dims != c.dims() {
            return Err(RecordError::DimensionMismatch {
                records: self.dims,
                constellation: c.dims(),
            });
        }
        let order = c.order();
        if let Some(t) = self.tx.iter().position(|&i| i >= order) {
            return Err(RecordError::IndexOutOfRange {
                record: t + 1,
                index: self.tx[t] + 1,
                order,
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, y) in self.iter() {
            write!(out, "{}", i + 1).unwrap();
            for z in y {
                write!(out, " {} {}", z.re, z.im).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_records<R: BufRead>(reader: R, dims: usize) -> Result<SymbolRecordSet, RecordError> {
    if dims == 0 {
        return Err(RecordError::ZeroDims);
    }
    let mut records = SymbolRecordSet::new(dims);
    let mut y = Vec::with_capacity(dims);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens = split_tokens(trimmed);
        if tokens.len() != 1 + 2 * dims {
            return Err(RecordError::ColumnCount {
                line: lineno,
                expected: 2 * dims,
                found: tokens.len(),
            });
        }
        let index = tokens[0]
            .parse::<usize>()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| RecordError::BadIndex {
                line: lineno,
                token: tokens[0].to_string(),
            })?;
        y.clear();
        for pair in tokens[1..].chunks_exact(2) {
            let parse = |tok: &str| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| RecordError::NonNumeric {
                        line: lineno,
                        token: tok.to_string(),
                    })
            };
            y.push(Complex64::new(parse(pair[0])?, parse(pair[1])?));
        }
        records.push(index - 1, &y);
    }
    Ok(records)
}

pub fn parse_records(text: &str, dims: usize) -> Result<SymbolRecordSet, RecordError> {
    load_records(text.as_bytes(), dims)
}

/// Simulates `per_point` transmissions of every point through AWGN. Point
/// `i` draws its noise from stream `i` of `seed`, the same streams the Monte
/// Carlo estimators use.
pub fn synthesize_records(
    c: &LabeledConstellation,
    noise: &NoiseSpec,
    per_point: usize,
    seed: u64,
) -> SymbolRecordSet {
    assert_eq!(
        c.dims(),
        noise.dims(),
        "noise and constellation dimensions differ"
    );
    let mut records = SymbolRecordSet::new(c.dims());
    let mut z = Vec::new();
    let mut y = vec![Complex64::default(); c.dims()];
    for (i, x) in c.points().enumerate() {
        let mut rng = noise_rng(seed, i as u64);
        fill_noise(noise, per_point, &mut rng, &mut z);
        for zn in z.chunks_exact(c.dims()) {
            for ((yd, xd), zd) in y.iter_mut().zip(x).zip(zn) {
                *yd = xd + zd;
            }
            records.push(i, &y);
        }
    }
    records
}
