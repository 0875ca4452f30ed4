//! Rates estimated from recorded transmissions.
//!
//! The procedure: estimate the total noise variance from all records, collect
//! the noise realizations `y_t − x_i` of every point `i`, and evaluate the
//! Monte Carlo MI/GMI with those realizations and the estimated variance. On
//! channels that are not AWGN the result is still an achievable rate, for a
//! receiver using the Gaussian metric.

use num_complex::Complex64;

use crate::air::{AirError, AirEstimate, Method, RateKind};
use crate::channel::NoiseBatch;
use crate::constellation::{ConstellationError, LabeledConstellation};
use crate::montecarlo::rate_from_noise;
use crate::records::{RecordError, SymbolRecordSet};

/// Points with fewer records than this are flagged as unreliable.
pub const DEFAULT_MIN_RECORDS_PER_POINT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVarianceEstimate {
    /// `σ̂_z²`, summed over all complex dimensions.
    pub total_variance: f64,
    /// Mean of `y_t − x_tx(t)` per complex dimension; nonzero values hint at
    /// an uncompensated offset.
    pub mean_error: Vec<Complex64>,
    pub records: usize,
}

/// Per-point noise lists `y_t − x_i`, in record order.
pub fn extract_noise(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<Vec<NoiseBatch>, AirError> {
    records.validate(c)?;
    let mut lists = vec![NoiseBatch::new(c.dims()); c.order()];
    let mut z = vec![Complex64::default(); c.dims()];
    for (i, y) in records.iter() {
        for ((zd, yd), xd) in z.iter_mut().zip(y).zip(c.point(i)) {
            *zd = yd - xd;
        }
        lists[i].push(&z);
    }
    Ok(lists)
}

/// `(1/T)·Σ‖z‖²` over extracted noise lists, accumulated point by point.
pub fn noise_variance_of(per_point: &[NoiseBatch]) -> f64 {
    let count: usize = per_point.iter().map(NoiseBatch::len).sum();
    let total: f64 = per_point.iter().map(NoiseBatch::sum_norm_sqr).sum();
    total / count as f64
}

pub fn estimate_noise_variance(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<NoiseVarianceEstimate, AirError> {
    if records.len() < 2 {
        return Err(RecordError::TooFew {
            needed: 2,
            found: records.len(),
        }
        .into());
    }
    let lists = extract_noise(c, records)?;
    let t = records.len() as f64;
    let mut mean_error = vec![Complex64::default(); c.dims()];
    for list in &lists {
        for z in list.iter() {
            for (m, zd) in mean_error.iter_mut().zip(z) {
                *m += zd;
            }
        }
    }
    mean_error.iter_mut().for_each(|m| *m /= t);
    Ok(NoiseVarianceEstimate {
        total_variance: noise_variance_of(&lists),
        mean_error,
        records: records.len(),
    })
}

/// Data-driven MI.
pub fn mi_from_data(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<AirEstimate, AirError> {
    rate_from_data(c, records, RateKind::Mi)
}

/// Data-driven GMI; requires a labeled constellation.
pub fn gmi_from_data(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<AirEstimate, AirError> {
    if !c.is_labeled() {
        return Err(ConstellationError::Unlabeled.into());
    }
    rate_from_data(c, records, RateKind::Gmi)
}

fn rate_from_data(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
    kind: RateKind,
) -> Result<AirEstimate, AirError> {
    let lists = extract_noise(c, records)?;
    if let Some(i) = lists.iter().position(NoiseBatch::is_empty) {
        return Err(AirError::MissingPoint(i + 1));
    }
    let variance = noise_variance_of(&lists);
    if variance == 0.0 {
        // noiseless records: every symbol is recovered perfectly
        let mut estimate = AirEstimate::exact(c.log2_order(), Method::DataDriven);
        estimate.samples_per_point = lists.iter().map(NoiseBatch::len).min();
        return Ok(estimate);
    }
    rate_from_noise(c, variance, &lists, kind, Method::DataDriven)
}

/// 1-based indices of points with fewer than `threshold` records.
pub fn low_count_points(counts: &[usize], threshold: usize) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n < threshold)
        .map(|(i, _)| i + 1)
        .collect()
}
