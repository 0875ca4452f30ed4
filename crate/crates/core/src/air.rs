//! Shared pieces of the MI/GMI estimators: the estimate type, the error type
//! and the per-sample integrand.
//!
//! Both rates have the form `log₂M − (1/M)·Σᵢ E[Tᵢ(Z)]`, where for a noise
//! vector `z` and `a_j = −(N/σ_z²)·(‖d_ij‖² + 2·Re⟨z, d_ij⟩)`:
//!
//! * MI:  `Tᵢ(z) = log₂ Σ_j exp(a_j)`
//! * GMI: `Tᵢ(z) = Σ_k [log₂ Σ_p exp(a_p) − log₂ Σ_{j ∈ I_{k,bᵢₖ}} exp(a_j)]`
//!
//! with `bᵢₖ` the `k`-th label bit of point `i`. Summing the GMI term over
//! points `i` is the same as summing over `(k, b, i ∈ I_{k,b})`. The inner
//! product is `⟨u, v⟩ = Σ_d u_d·conj(v_d)`.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::ChannelError;
use crate::constellation::{ConstellationError, DifferenceTable, LabeledConstellation};
use crate::records::RecordError;

#[derive(Debug, Error)]
pub enum AirError {
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error("constellation has {constellation} complex dimensions but the noise has {noise}")]
    DimensionMismatch { constellation: usize, noise: usize },
    #[error("Gauss-Hermite rule needs at least 2 nodes per real dimension, got {0}")]
    TooFewNodes(usize),
    #[error("quadrature needs {nodes}^{real_dims} nodes, over the budget of {budget}; use Monte Carlo for this many dimensions")]
    BudgetExceeded {
        nodes: usize,
        real_dims: usize,
        budget: u64,
    },
    #[error("Monte Carlo estimation needs at least one sample per point")]
    NoSamples,
    #[error("point {0} has no records; its noise realizations cannot be estimated")]
    MissingPoint(usize),
    #[error("per-point noise lists cover {found} points, constellation has {expected}")]
    NoiseListCount { expected: usize, found: usize },
}

/// How an estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    MonteCarlo,
    DataDriven,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
            Method::DataDriven => "data-driven",
        })
    }
}

/// Which rate is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Mi,
    Gmi,
}

/// An achievable rate in bits per `N`-dimensional symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AirEstimate {
    /// Estimate clamped to `[0, log₂M]`.
    pub value: f64,
    /// Estimate before clamping.
    pub raw_value: f64,
    pub method: Method,
    /// Samples per point for Monte Carlo; the smallest per-point record count
    /// for data-driven estimates; `None` for quadrature.
    pub samples_per_point: Option<usize>,
    pub seed: Option<u64>,
    /// Standard error of the sample mean; `None` for quadrature.
    pub std_error: Option<f64>,
}

impl AirEstimate {
    pub(crate) fn new(raw_value: f64, log2_order: f64, method: Method) -> Self {
        Self {
            value: raw_value.clamp(0.0, log2_order),
            raw_value,
            method,
            samples_per_point: None,
            seed: None,
            std_error: None,
        }
    }

    /// Exact rate with no sampling error, e.g. the noiseless limit.
    pub(crate) fn exact(value: f64, method: Method) -> Self {
        Self {
            value,
            raw_value: value,
            method,
            samples_per_point: None,
            seed: None,
            std_error: Some(0.0),
        }
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PointStats {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl PointStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Variance of the mean of the samples seen so far.
    pub fn mean_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64 / self.count as f64
        }
    }
}

/// Combines per-point statistics, in point order, into `(raw rate, stderr)`.
pub(crate) fn combine(log2_order: f64, stats: &[PointStats]) -> (f64, f64) {
    let order = stats.len() as f64;
    let mean_sum: f64 = stats.iter().map(|s| s.mean).sum();
    let var_sum: f64 = stats.iter().map(|s| s.mean_variance()).sum();
    (log2_order - mean_sum / order, var_sum.sqrt() / order)
}

/// `ln Σ exp(v)`, stabilized by the maximum.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Evaluates `Tᵢ(z)` for a fixed constellation and noise variance.
pub(crate) struct Integrand<'a> {
    diffs: DifferenceTable,
    /// `N/σ_z²`
    scale: f64,
    kind: RateKind,
    labels: Option<&'a [u64]>,
    bits: usize,
}

/// Reusable buffers for [`Integrand::term`].
#[derive(Default)]
pub(crate) struct Scratch {
    exponents: Vec<f64>,
    shifted: Vec<f64>,
}

/// Subset sums below this (relative to the global maximum term) are
/// recomputed with their own maximum.
const SUBSET_UNDERFLOW: f64 = 1e-200;

impl<'a> Integrand<'a> {
    pub fn new(
        c: &'a LabeledConstellation,
        total_variance: f64,
        kind: RateKind,
    ) -> Result<Self, AirError> {
        let (labels, bits) = match kind {
            RateKind::Mi => (None, 0),
            RateKind::Gmi => {
                let bits = c.bits_per_label().ok_or(ConstellationError::Unlabeled)?;
                (c.label_values(), bits)
            }
        };
        Ok(Self {
            diffs: c.pairwise_differences(),
            scale: c.dims() as f64 / total_variance,
            kind,
            labels,
            bits,
        })
    }

    /// `Tᵢ(z)` in bits.
    pub fn term(&self, i: usize, z: &[Complex64], scratch: &mut Scratch) -> f64 {
        let order = self.diffs.order();
        let dims = self.diffs.dims();
        let row = self.diffs.row(i);
        let norms = self.diffs.norm_row(i);

        let exps = &mut scratch.exponents;
        exps.clear();
        let mut max = f64::NEG_INFINITY;
        let mut argmax = 0;
        for (j, (d, &norm)) in row.chunks_exact(dims).zip(norms).enumerate() {
            let mut re_inner = 0.0;
            for (zc, dc) in z.iter().zip(d) {
                re_inner += zc.re * dc.re + zc.im * dc.im;
            }
            let a = -self.scale * (norm + 2.0 * re_inner);
            if a > max {
                max = a;
                argmax = j;
            }
            exps.push(a);
        }

        // The dominant term contributes exactly 1 after shifting; summing the
        // rest separately and using ln_1p keeps tiny high-SNR terms exact.
        let shifted = &mut scratch.shifted;
        shifted.clear();
        shifted.extend(exps.iter().map(|a| (a - max).exp()));
        shifted[argmax] = 0.0;
        let rest: f64 = shifted.iter().sum();
        let log_rest = rest.ln_1p();

        match self.kind {
            RateKind::Mi => (max + log_rest) / LN_2,
            RateKind::Gmi => {
                let labels = self.labels.expect("GMI integrand carries labels");
                let mut acc = 0.0;
                for k in 1..=self.bits {
                    let shift = self.bits - k;
                    let bit = (labels[i] >> shift) & 1;
                    let in_subset = |j: usize| (labels[j] >> shift) & 1 == bit;
                    let sub: f64 = (0..order)
                        .filter(|&j| in_subset(j))
                        .map(|j| shifted[j])
                        .sum();
                    // ln Σ_all − ln Σ_subset, both relative to exp(max)
                    acc += if in_subset(argmax) {
                        log_rest - sub.ln_1p()
                    } else if sub > SUBSET_UNDERFLOW {
                        log_rest - sub.ln()
                    } else {
                        let sub_max = (0..order)
                            .filter(|&j| in_subset(j))
                            .map(|j| exps[j])
                            .fold(f64::NEG_INFINITY, f64::max);
                        let s: f64 = (0..order)
                            .filter(|&j| in_subset(j))
                            .map(|j| (exps[j] - sub_max).exp())
                            .sum();
                        max + log_rest - (sub_max + s.ln())
                    };
                }
                acc / LN_2
            }
        }
    }
}

/// Rejects a constellation/noise dimension mismatch.
pub(crate) fn check_dims(c: &LabeledConstellation, noise_dims: usize) -> Result<(), AirError> {
    if c.dims() != noise_dims {
        return Err(AirError::DimensionMismatch {
            constellation: c.dims(),
            noise: noise_dims,
        });
    }
    Ok(())
}
