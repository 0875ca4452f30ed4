//! Monte Carlo MI and GMI.
//!
//! Each point `i` averages its integrand over `N_s` noise vectors. By default
//! point `i` draws fresh noise from stream `i` of the seed
//! ([`NoiseMode::Independent`]); [`NoiseMode::Shared`] feeds every point the
//! same batch (stream 0), which correlates the estimates of different
//! constellations run with one seed and so sharpens comparisons between them.
//!
//! Per-point results are reduced in point order, so estimates are
//! bit-identical for a given seed whatever the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::air::{
    check_dims, combine, AirError, AirEstimate, Integrand, Method, PointStats, RateKind, Scratch,
};
use crate::channel::{fill_noise, noise_rng, NoiseBatch, NoiseSpec};
use crate::constellation::LabeledConstellation;

/// Vectors drawn per refill of the sampling buffer.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Point `i` uses stream `i`.
    #[default]
    Independent,
    /// Every point uses stream 0 (common random numbers).
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub samples_per_point: usize,
    pub seed: u64,
    pub noise_mode: NoiseMode,
}

impl MonteCarloConfig {
    pub fn new(samples_per_point: usize, seed: u64) -> Self {
        Self {
            samples_per_point,
            seed,
            noise_mode: NoiseMode::Independent,
        }
    }

    pub fn with_noise_mode(mut self, noise_mode: NoiseMode) -> Self {
        self.noise_mode = noise_mode;
        self
    }
}

/// Monte Carlo MI with independent per-point noise.
pub fn mi_mc(
    c: &LabeledConstellation,
    noise: &NoiseSpec,
    n_samples: usize,
    seed: u64,
) -> Result<AirEstimate, AirError> {
    rate_mc(
        c,
        noise,
        RateKind::Mi,
        &MonteCarloConfig::new(n_samples, seed),
    )
}

/// Monte Carlo GMI with independent per-point noise.
pub fn gmi_mc(
    c: &LabeledConstellation,
    noise: &NoiseSpec,
    n_samples: usize,
    seed: u64,
) -> Result<AirEstimate, AirError> {
    rate_mc(
        c,
        noise,
        RateKind::Gmi,
        &MonteCarloConfig::new(n_samples, seed),
    )
}

pub fn rate_mc(
    c: &LabeledConstellation,
    noise: &NoiseSpec,
    kind: RateKind,
    config: &MonteCarloConfig,
) -> Result<AirEstimate, AirError> {
    check_dims(c, noise.dims())?;
    if config.samples_per_point == 0 {
        return Err(AirError::NoSamples);
    }
    let integrand = Integrand::new(c, noise.total_variance(), kind)?;
    let dims = c.dims();

    let stats: Vec<PointStats> = (0..c.order())
        .into_par_iter()
        .map_init(
            || (Scratch::default(), Vec::<Complex64>::new()),
            |(scratch, buf), i| {
                let stream = match config.noise_mode {
                    NoiseMode::Independent => i as u64,
                    NoiseMode::Shared => 0,
                };
                let mut rng = noise_rng(config.seed, stream);
                let mut stats = PointStats::default();
                let mut remaining = config.samples_per_point;
                while remaining > 0 {
                    let n = remaining.min(CHUNK);
                    fill_noise(noise, n, &mut rng, buf);
                    for z in buf.chunks_exact(dims) {
                        stats.push(integrand.term(i, z, scratch));
                    }
                    remaining -= n;
                }
                stats
            },
        )
        .collect();

    let (raw, se) = combine(c.log2_order(), &stats);
    let mut estimate = AirEstimate::new(raw, c.log2_order(), Method::MonteCarlo);
    estimate.samples_per_point = Some(config.samples_per_point);
    estimate.seed = Some(config.seed);
    estimate.std_error = Some(se);
    Ok(estimate)
}

/// MI from explicit per-point noise realizations: `per_point[i]` holds the
/// samples used for point `i`. Counts may differ between points.
pub fn mi_from_noise(
    c: &LabeledConstellation,
    total_variance: f64,
    per_point: &[NoiseBatch],
) -> Result<AirEstimate, AirError> {
    rate_from_noise(
        c,
        total_variance,
        per_point,
        RateKind::Mi,
        Method::MonteCarlo,
    )
}

/// GMI from explicit per-point noise realizations.
pub fn gmi_from_noise(
    c: &LabeledConstellation,
    total_variance: f64,
    per_point: &[NoiseBatch],
) -> Result<AirEstimate, AirError> {
    rate_from_noise(
        c,
        total_variance,
        per_point,
        RateKind::Gmi,
        Method::MonteCarlo,
    )
}

pub(crate) fn rate_from_noise(
    c: &LabeledConstellation,
    total_variance: f64,
    per_point: &[NoiseBatch],
    kind: RateKind,
    method: Method,
) -> Result<AirEstimate, AirError> {
    if per_point.len() != c.order() {
        return Err(AirError::NoiseListCount {
            expected: c.order(),
            found: per_point.len(),
        });
    }
    if let Some(batch) = per_point.iter().find(|b| b.dims() != c.dims()) {
        return Err(AirError::DimensionMismatch {
            constellation: c.dims(),
            noise: batch.dims(),
        });
    }
    if let Some(i) = per_point.iter().position(|b| b.is_empty()) {
        return Err(AirError::MissingPoint(i + 1));
    }
    let integrand = Integrand::new(c, total_variance, kind)?;

    let stats: Vec<PointStats> = per_point
        .par_iter()
        .enumerate()
        .map_init(Scratch::default, |scratch, (i, batch)| {
            let mut stats = PointStats::default();
            for z in batch.iter() {
                stats.push(integrand.term(i, z, scratch));
            }
            stats
        })
        .collect();

    let (raw, se) = combine(c.log2_order(), &stats);
    let mut estimate = AirEstimate::new(raw, c.log2_order(), method);
    estimate.samples_per_point = per_point.iter().map(NoiseBatch::len).min();
    estimate.std_error = Some(se);
    Ok(estimate)
}
