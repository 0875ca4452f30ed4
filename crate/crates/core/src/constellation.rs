//! Multidimensional labeled constellations.
//!
//! A constellation holds `M` points, each a vector of `N` complex coordinates,
//! and optionally a binary label of `m = log2(M)` bits per point. Bit position
//! `k = 1` is the leftmost character of the label string.
//!
//! Point indices are 0-based in the API and 1-based in error messages and
//! files, so that "point 3" always means the third row.
//!
//! # Text format
//!
//! One point per row, `2N` real numbers (real and imaginary parts interleaved
//! per complex dimension), separated by whitespace and/or commas, optionally
//! followed by a binary label token. Lines starting with `#` are comments.
//!
//! ```text
//! # Gray QPSK
//! 1 0 00
//! 0 1 01
//! -1 0 11
//! 0 -1 10
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised while building, loading or querying a constellation.
#[derive(Debug, Error)]
pub enum ConstellationError {
    #[error("line {line}: expected {expected} numeric columns (optionally followed by a label), found {found} tokens")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: `{token}` is not a number")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: `{token}` is not a binary label")]
    BadLabelToken { line: usize, token: String },
    #[error("rows mix labeled and unlabeled points (point {labeled} is labeled, point {unlabeled} is not)")]
    MixedLabels { labeled: usize, unlabeled: usize },
    #[error("points {first} and {second} carry the same label `{label}`")]
    DuplicateLabel {
        first: usize,
        second: usize,
        label: String,
    },
    #[error("label of point {point} has {found} bits, expected log2(M) = {expected}")]
    LabelLength {
        point: usize,
        found: usize,
        expected: usize,
    },
    #[error("labels require M to be a power of two, got M = {0}")]
    NotPowerOfTwo(usize),
    #[error("expected {expected} labels, got {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("constellation has no points")]
    Empty,
    #[error("number of complex dimensions must be at least 1")]
    ZeroDims,
    #[error("{len} coordinates cannot be split into points of {dims} complex dimensions")]
    Ragged { len: usize, dims: usize },
    #[error("coordinate of point {point} is not finite")]
    NonFinite { point: usize },
    #[error("constellation is unlabeled")]
    Unlabeled,
    #[error("constellation has zero energy")]
    ZeroEnergy,
    #[error("target energy must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `M` points in `N` complex dimensions with optional binary labels.
///
/// Values are immutable once built; every transformation returns a new
/// constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledConstellation {
    dims: usize,
    /// Row-major, `M * dims` coordinates.
    points: Vec<Complex64>,
    /// Label of each point as an `m`-bit integer, leftmost character in the
    /// most significant position.
    labels: Option<Vec<u64>>,
    energy: f64,
}

impl LabeledConstellation {
    /// Builds an unlabeled constellation from row-major coordinates.
    pub fn new(dims: usize, points: Vec<Complex64>) -> Result<Self, ConstellationError> {
        if dims == 0 {
            return Err(ConstellationError::ZeroDims);
        }
        if points.is_empty() {
            return Err(ConstellationError::Empty);
        }
        if !points.len().is_multiple_of(dims) {
            return Err(ConstellationError::Ragged {
                len: points.len(),
                dims,
            });
        }
        if let Some(pos) = points
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(ConstellationError::NonFinite {
                point: pos / dims + 1,
            });
        }
        let energy = mean_energy(&points, dims);
        Ok(Self {
            dims,
            points,
            labels: None,
            energy,
        })
    }

    /// Attaches binary labels given as strings of `'0'`/`'1'`.
    pub fn with_labels<S: AsRef<str>>(self, labels: &[S]) -> Result<Self, ConstellationError> {
        let mut values = Vec::with_capacity(labels.len());
        let mut widths = Vec::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            let value = parse_label(label).ok_or_else(|| ConstellationError::BadLabelToken {
                line: i + 1,
                token: label.to_string(),
            })?;
            values.push(value);
            widths.push(label.len());
        }
        self.with_label_values(values, &widths)
    }

    fn with_label_values(
        mut self,
        values: Vec<u64>,
        widths: &[usize],
    ) -> Result<Self, ConstellationError> {
        let order = self.order();
        if values.len() != order {
            return Err(ConstellationError::LabelCount {
                expected: order,
                found: values.len(),
            });
        }
        if !order.is_power_of_two() {
            return Err(ConstellationError::NotPowerOfTwo(order));
        }
        let m = order.trailing_zeros() as usize;
        if let Some(point) = widths.iter().position(|&w| w != m) {
            return Err(ConstellationError::LabelLength {
                point: point + 1,
                found: widths[point],
                expected: m,
            });
        }
        let mut seen: HashMap<u64, usize> = HashMap::with_capacity(order);
        for (i, &v) in values.iter().enumerate() {
            if let Some(&first) = seen.get(&v) {
                return Err(ConstellationError::DuplicateLabel {
                    first: first + 1,
                    second: i + 1,
                    label: format_label(v, m),
                });
            }
            seen.insert(v, i);
        }
        self.labels = Some(values);
        Ok(self)
    }

    /// Number of points `M`.
    pub fn order(&self) -> usize {
        self.points.len() / self.dims
    }

    /// Number of complex dimensions `N`.
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `log2(M)` as a real number; meaningful for any `M`, not just powers of two.
    pub fn log2_order(&self) -> f64 {
        (self.order() as f64).log2()
    }

    /// Mean squared norm of the points, `σ_x²`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Coordinates of point `i` (0-based).
    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i * self.dims..(i + 1) * self.dims]
    }

    /// All coordinates, row-major.
    pub fn coordinates(&self) -> &[Complex64] {
        &self.points
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[Complex64]> + '_ {
        self.points.chunks_exact(self.dims)
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    /// Bits per label, `m = log2(M)`, when labeled.
    pub fn bits_per_label(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|_| self.order().trailing_zeros() as usize)
    }

    /// Label values, most significant bit = bit position 1.
    pub fn label_values(&self) -> Option<&[u64]> {
        self.labels.as_deref()
    }

    /// Bit at 1-based position `k` of the label of point `i`.
    pub fn label_bit(&self, i: usize, k: usize) -> Option<bool> {
        let m = self.bits_per_label()?;
        let labels = self.labels.as_ref()?;
        debug_assert!(k >= 1 && k <= m);
        Some((labels[i] >> (m - k)) & 1 == 1)
    }

    /// Label of point `i` as a `'0'`/`'1'` string.
    pub fn label_string(&self, i: usize) -> Option<String> {
        let m = self.bits_per_label()?;
        Some(format_label(self.labels.as_ref()?[i], m))
    }

    /// Pairs `(i, j)`, `i < j`, of coincident points (0-based).
    pub fn duplicate_points(&self) -> Vec<(usize, usize)> {
        let mut dups = Vec::new();
        let mut seen: HashMap<Vec<(u64, u64)>, usize> = HashMap::new();
        for (j, p) in self.points().enumerate() {
            let key: Vec<(u64, u64)> = p
                .iter()
                // +0.0 folds -0.0 onto 0.0
                .map(|z| ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits()))
                .collect();
            match seen.get(&key) {
                Some(&i) => dups.push((i, j)),
                None => {
                    seen.insert(key, j);
                }
            }
        }
        dups
    }

    /// Scales every point by the single factor `sqrt(target / energy)`.
    pub fn normalize_energy(&self, target: f64) -> Result<Self, ConstellationError> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(ConstellationError::InvalidTarget(target));
        }
        if self.energy == 0.0 {
            return Err(ConstellationError::ZeroEnergy);
        }
        if ((self.energy - target) / target).abs() <= 4.0 * f64::EPSILON {
            return Ok(self.clone());
        }
        Ok(self.scaled((target / self.energy).sqrt()))
    }

    /// Multiplies every coordinate by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        self.map_coordinates(|_, z| z * alpha)
    }

    /// Applies `f(dimension, coordinate)` to every coordinate, keeping labels.
    pub fn map_coordinates<F>(&self, mut f: F) -> Self
    where
        F: FnMut(usize, Complex64) -> Complex64,
    {
        let points: Vec<Complex64> = self
            .points
            .iter()
            .enumerate()
            .map(|(n, &z)| f(n % self.dims, z))
            .collect();
        let energy = mean_energy(&points, self.dims);
        Self {
            dims: self.dims,
            points,
            labels: self.labels.clone(),
            energy,
        }
    }

    /// Cartesian product: point `(i, j)` is `x_i` followed by `y_j`, stored at
    /// index `i * M_other + j`. Labels are concatenated when both sides carry
    /// them.
    pub fn cartesian_product(&self, other: &Self) -> Self {
        let (ma, mb) = (self.order(), other.order());
        let dims = self.dims + other.dims;
        let mut points = Vec::with_capacity(ma * mb * dims);
        for a in self.points() {
            for b in other.points() {
                points.extend_from_slice(a);
                points.extend_from_slice(b);
            }
        }
        let labels = match (&self.labels, &other.labels) {
            (Some(la), Some(lb)) => {
                let shift = mb.trailing_zeros();
                Some(
                    la.iter()
                        .flat_map(|&a| lb.iter().map(move |&b| (a << shift) | b))
                        .collect(),
                )
            }
            _ => None,
        };
        let energy = mean_energy(&points, dims);
        Self {
            dims,
            points,
            labels,
            energy,
        }
    }

    /// Index sets `I_{k,b}` for every bit position and bit value, ordered by
    /// `(k, b)`.
    pub fn index_sets(&self) -> Result<Vec<IndexSet>, ConstellationError> {
        let m = self.bits_per_label().ok_or(ConstellationError::Unlabeled)?;
        let mut sets = Vec::with_capacity(2 * m);
        for k in 1..=m {
            for b in [false, true] {
                let indices = (0..self.order())
                    .filter(|&i| self.label_bit(i, k) == Some(b))
                    .collect();
                sets.push(IndexSet {
                    bit_position: k,
                    bit_value: b as u8,
                    indices,
                });
            }
        }
        Ok(sets)
    }

    /// Table of `d_ij = x_i - x_j` for all pairs.
    pub fn pairwise_differences(&self) -> DifferenceTable {
        DifferenceTable::new(self)
    }

    /// Serializes to the text format read by [`parse_constellation`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.points().enumerate() {
            let mut first = true;
            for z in p {
                for v in [z.re, z.im] {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    write!(out, "{v}").unwrap();
                }
            }
            if let Some(label) = self.label_string(i) {
                out.push(' ');
                out.push_str(&label);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writer.write_all(self.to_text().as_bytes())
    }
}

/// Indices (0-based) of the points whose label has bit value `bit_value` at
/// 1-based position `bit_position`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    pub bit_position: usize,
    pub bit_value: u8,
    pub indices: Vec<usize>,
}

/// Dense `M x M` table of pairwise differences with cached squared norms.
#[derive(Debug, Clone)]
pub struct DifferenceTable {
    order: usize,
    dims: usize,
    diffs: Vec<Complex64>,
    norms: Vec<f64>,
}

impl DifferenceTable {
    fn new(c: &LabeledConstellation) -> Self {
        let (order, dims) = (c.order(), c.dims());
        let mut diffs = Vec::with_capacity(order * order * dims);
        let mut norms = Vec::with_capacity(order * order);
        for xi in c.points() {
            for xj in c.points() {
                let mut norm = 0.0;
                for (a, b) in xi.iter().zip(xj) {
                    let d = a - b;
                    norm += d.norm_sqr();
                    diffs.push(d);
                }
                norms.push(norm);
            }
        }
        Self {
            order,
            dims,
            diffs,
            norms,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `d_ij` (0-based indices).
    pub fn get(&self, i: usize, j: usize) -> &[Complex64] {
        let start = (i * self.order + j) * self.dims;
        &self.diffs[start..start + self.dims]
    }

    /// `‖d_ij‖²`.
    pub fn norm_sqr(&self, i: usize, j: usize) -> f64 {
        self.norms[i * self.order + j]
    }

    /// Row `i`: all `d_ij` for `j = 0..M`, row-major.
    pub(crate) fn row(&self, i: usize) -> &[Complex64] {
        let len = self.order * self.dims;
        &self.diffs[i * len..(i + 1) * len]
    }

    pub(crate) fn norm_row(&self, i: usize) -> &[f64] {
        &self.norms[i * self.order..(i + 1) * self.order]
    }
}

/// Reads a constellation in the text format from `reader`.
pub fn load_constellation<R: BufRead>(
    reader: R,
    dims: usize,
) -> Result<LabeledConstellation, ConstellationError> {
    if dims == 0 {
        return Err(ConstellationError::ZeroDims);
    }
    let columns = 2 * dims;
    let mut coords = Vec::new();
    let mut labels: Vec<(u64, usize)> = Vec::new();
    let mut first_labeled = None;
    let mut first_unlabeled = None;
    let mut row = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        row += 1;
        let tokens = split_tokens(trimmed);
        let label_token = match tokens.len() {
            n if n == columns => None,
            n if n == columns + 1 => Some(tokens[columns]),
            found => {
                return Err(ConstellationError::ColumnCount {
                    line: lineno,
                    expected: columns,
                    found,
                })
            }
        };
        for pair in tokens[..columns].chunks_exact(2) {
            let re = parse_number(pair[0], lineno)?;
            let im = parse_number(pair[1], lineno)?;
            coords.push(Complex64::new(re, im));
        }
        match label_token {
            Some(token) => {
                let value =
                    parse_label(token).ok_or_else(|| ConstellationError::BadLabelToken {
                        line: lineno,
                        token: token.to_string(),
                    })?;
                labels.push((value, token.len()));
                first_labeled.get_or_insert(row);
            }
            None => {
                first_unlabeled.get_or_insert(row);
            }
        }
    }

    if let (Some(labeled), Some(unlabeled)) = (first_labeled, first_unlabeled) {
        return Err(ConstellationError::MixedLabels { labeled, unlabeled });
    }
    let c = LabeledConstellation::new(dims, coords)?;
    for (i, j) in c.duplicate_points() {
        log::warn!("points {} and {} coincide", i + 1, j + 1);
    }
    if labels.is_empty() {
        return Ok(c);
    }
    let (values, widths): (Vec<u64>, Vec<usize>) = labels.into_iter().unzip();
    c.with_label_values(values, &widths)
}

/// Parses a constellation from an in-memory string.
pub fn parse_constellation(
    text: &str,
    dims: usize,
) -> Result<LabeledConstellation, ConstellationError> {
    load_constellation(text.as_bytes(), dims)
}

pub(crate) fn split_tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

fn parse_number(token: &str, line: usize) -> Result<f64, ConstellationError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConstellationError::NonNumeric {
            line,
            token: token.to_string(),
        })
}

fn parse_label(token: &str) -> Option<u64> {
    if token.len() > 63 || !token.bytes().all(|b| b == b'0' || b == b'1') {
        return None;
    }
    Some(
        token
            .bytes()
            .fold(0u64, |acc, b| (acc << 1) | u64::from(b - b'0')),
    )
}

fn format_label(value: u64, bits: usize) -> String {
    (1..=bits)
        .map(|k| {
            if (value >> (bits - k)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn mean_energy(points: &[Complex64], dims: usize) -> f64 {
    let order = points.len() / dims;
    points.iter().map(|z| z.norm_sqr()).sum::<f64>() / order as f64
}
