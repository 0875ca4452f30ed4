//! Post-FEC error-rate prediction from normalized MI/GMI.
//!
//! A calibration table holds measured `(normalized metric, post-FEC error
//! rate)` pairs for one code. Predictions interpolate `log₁₀(rate)` linearly
//! in the metric. Queries outside the calibrated range return a bound
//! instead of an extrapolated value.
//!
//! # File format
//!
//! ```text
//! # NB-LDPC, 8QAM
//! metric_kind: normalized-MI
//! code_rate: 0.80
//! 0.80 1e-2
//! 0.90 1e-4
//! ```
//!
//! Header keys may use `:` or `=`. Data rows are whitespace or comma
//! separated.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use thiserror::Error;

use crate::constellation::split_tokens;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration file is missing the `{0}` header")]
    MissingHeader(&'static str),
    #[error("line {line}: {message}")]
    BadHeader { line: usize, message: String },
    #[error("line {line}: expected `metric error_rate`, found {found} tokens")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: `{token}` is not a number")]
    NonNumeric { line: usize, token: String },
    #[error("calibration point {point}: metric {value} is outside [0, 1]")]
    MetricOutOfRange { point: usize, value: f64 },
    #[error("calibration point {point}: error rate {value} is outside (0, 1]")]
    RateOutOfRange { point: usize, value: f64 },
    #[error("calibration point {point}: metric values must be strictly increasing")]
    NonMonotoneMetric { point: usize },
    #[error("calibration point {point}: error rates must be strictly decreasing in the metric")]
    NonMonotoneRate { point: usize },
    #[error("code rate {0} is outside (0, 1)")]
    CodeRateOutOfRange(f64),
    #[error("calibration needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("table is calibrated for {table} but the query is {query}")]
    KindMismatch {
        table: MetricKind,
        query: MetricKind,
    },
    #[error("target rate {0} is outside (0, 1)")]
    TargetOutOfRange(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Normalized MI pairs with nonbinary decoders, normalized GMI with binary
/// ones; the two are never interchangeable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    NormalizedMi,
    NormalizedGmi,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::NormalizedMi => "normalized-MI",
            MetricKind::NormalizedGmi => "normalized-GMI",
        })
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normalized-mi" | "mi" => Ok(MetricKind::NormalizedMi),
            "normalized-gmi" | "gmi" => Ok(MetricKind::NormalizedGmi),
            _ => Err(format!(
                "unknown metric kind `{s}` (expected normalized-MI or normalized-GMI)"
            )),
        }
    }
}

/// A normalized rate tagged with the metric it was computed as.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedMetric {
    pub kind: MetricKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    metric_kind: MetricKind,
    code_rate: f64,
    points: Vec<(f64, f64)>,
}

impl CalibrationTable {
    pub fn new(
        metric_kind: MetricKind,
        code_rate: f64,
        points: Vec<(f64, f64)>,
    ) -> Result<Self, CalibrationError> {
        if !(code_rate > 0.0 && code_rate < 1.0) {
            return Err(CalibrationError::CodeRateOutOfRange(code_rate));
        }
        if points.len() < 2 {
            return Err(CalibrationError::TooFewPoints(points.len()));
        }
        for (n, &(metric, rate)) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&metric) {
                return Err(CalibrationError::MetricOutOfRange {
                    point: n + 1,
                    value: metric,
                });
            }
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(CalibrationError::RateOutOfRange {
                    point: n + 1,
                    value: rate,
                });
            }
        }
        for (n, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(CalibrationError::NonMonotoneMetric { point: n + 2 });
            }
            if w[1].1 >= w[0].1 {
                return Err(CalibrationError::NonMonotoneRate { point: n + 2 });
            }
        }
        Ok(Self {
            metric_kind,
            code_rate,
            points,
        })
    }

    pub fn metric_kind(&self) -> MetricKind {
        self.metric_kind
    }

    pub fn code_rate(&self) -> f64 {
        self.code_rate
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Prediction for a metric value of this table's kind.
    pub fn predict(&self, metric: f64) -> Prediction {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if metric < first.0 {
            return Prediction::AboveWorstCalibrated { bound: first.1 };
        }
        if metric > last.0 {
            return Prediction::BelowBestCalibrated { bound: last.1 };
        }
        let k = self.points.partition_point(|p| p.0 <= metric);
        let (x0, y0) = self.points[k - 1];
        if x0 == metric {
            return Prediction::Rate(y0);
        }
        let (x1, y1) = self.points[k];
        let t = (metric - x0) / (x1 - x0);
        let log_rate = y0.log10() + t * (y1.log10() - y0.log10());
        Prediction::Rate(10f64.powf(log_rate))
    }
}

/// Outcome of a prediction query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    /// Interpolated post-FEC error rate.
    Rate(f64),
    /// Metric below the calibrated range; the error rate is at least `bound`.
    AboveWorstCalibrated { bound: f64 },
    /// Metric above the calibrated range; the error rate is at most `bound`.
    BelowBestCalibrated { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

impl Prediction {
    /// Compares against a target error rate. A bound settles the comparison
    /// only when it lies on the right side of the target.
    pub fn verdict(&self, target: f64) -> Verdict {
        match *self {
            Prediction::Rate(r) if r <= target => Verdict::Pass,
            Prediction::Rate(_) => Verdict::Fail,
            Prediction::AboveWorstCalibrated { bound } if bound > target => Verdict::Fail,
            Prediction::BelowBestCalibrated { bound } if bound <= target => Verdict::Pass,
            _ => Verdict::Indeterminate,
        }
    }
}

/// Predicts the post-FEC error rate, rejecting metrics of the wrong kind.
pub fn predict_post_fec(
    table: &CalibrationTable,
    metric: NormalizedMetric,
) -> Result<Prediction, CalibrationError> {
    if metric.kind != table.metric_kind {
        return Err(CalibrationError::KindMismatch {
            table: table.metric_kind,
            query: metric.kind,
        });
    }
    Ok(table.predict(metric.value))
}

/// Whether the predicted error rate meets `target_rate`.
pub fn threshold_check(
    table: &CalibrationTable,
    metric: NormalizedMetric,
    target_rate: f64,
) -> Result<Verdict, CalibrationError> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(CalibrationError::TargetOutOfRange(target_rate));
    }
    Ok(predict_post_fec(table, metric)?.verdict(target_rate))
}

pub fn load_calibration<R: BufRead>(reader: R) -> Result<CalibrationTable, CalibrationError> {
    let mut kind = None;
    let mut code_rate = None;
    let mut points = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = trimmed.split_once([':', '=']) {
            let value = value.trim();
            match key.trim() {
                "metric_kind" => {
                    kind = Some(value.parse::<MetricKind>().map_err(|message| {
                        CalibrationError::BadHeader {
                            line: lineno,
                            message,
                        }
                    })?);
                }
                "code_rate" => {
                    code_rate =
                        Some(
                            value
                                .parse::<f64>()
                                .map_err(|_| CalibrationError::BadHeader {
                                    line: lineno,
                                    message: format!("`{value}` is not a code rate"),
                                })?,
                        );
                }
                other => {
                    return Err(CalibrationError::BadHeader {
                        line: lineno,
                        message: format!("unknown header `{other}`"),
                    })
                }
            }
            continue;
        }
        let tokens = split_tokens(trimmed);
        if tokens.len() != 2 {
            return Err(CalibrationError::ColumnCount {
                line: lineno,
                found: tokens.len(),
            });
        }
        let parse = |tok: &str| {
            tok.parse::<f64>()
                .map_err(|_| CalibrationError::NonNumeric {
                    line: lineno,
                    token: tok.to_string(),
                })
        };
        points.push((parse(tokens[0])?, parse(tokens[1])?));
    }
    let kind = kind.ok_or(CalibrationError::MissingHeader("metric_kind"))?;
    let code_rate = code_rate.ok_or(CalibrationError::MissingHeader("code_rate"))?;
    CalibrationTable::new(kind, code_rate, points)
}

pub fn parse_calibration(text: &str) -> Result<CalibrationTable, CalibrationError> {
    load_calibration(text.as_bytes())
}
