//! Discrete-time memoryless AWGN channel.
//!
//! Noise is circularly-symmetric complex Gaussian, spread equally over the
//! `N` complex dimensions: each complex coordinate has variance `σ_z²/N`, so
//! each real coordinate has variance `σ_z²/(2N)`.
//!
//! # Random streams
//!
//! Every sampler is a ChaCha20 generator keyed by `seed_from_u64(seed)` and
//! positioned on ChaCha stream `stream`. Estimators use stream `i` for
//! constellation point `i`, so per-point noise is reproducible regardless of
//! how work is scheduled. Gaussian deviates come from the ziggurat method of
//! `rand_distr::StandardNormal`; each complex coordinate consumes the real
//! part first, then the imaginary part.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidVariance(f64),
    #[error("number of complex dimensions must be at least 1")]
    ZeroDims,
    #[error("SNR must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error("signal energy must be positive, got {0}")]
    InvalidEnergy(f64),
}

/// Total complex noise variance `σ_z²` over `dims` complex dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    total_variance: f64,
    dims: usize,
}

impl NoiseSpec {
    pub fn new(total_variance: f64, dims: usize) -> Result<Self, ChannelError> {
        if !(total_variance > 0.0 && total_variance.is_finite()) {
            return Err(ChannelError::InvalidVariance(total_variance));
        }
        if dims == 0 {
            return Err(ChannelError::ZeroDims);
        }
        Ok(Self {
            total_variance,
            dims,
        })
    }

    /// Noise giving `snr` for a constellation of the given energy.
    pub fn for_snr(energy: f64, snr: SnrPoint, dims: usize) -> Result<Self, ChannelError> {
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(ChannelError::InvalidEnergy(energy));
        }
        Self::new(energy / snr.linear(), dims)
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `σ_z²/N`.
    pub fn per_complex_dim_variance(&self) -> f64 {
        self.total_variance / self.dims as f64
    }

    /// `σ_z²/(2N)`.
    pub fn per_real_dim_variance(&self) -> f64 {
        self.total_variance / (2 * self.dims) as f64
    }
}

/// Signal-to-noise ratio `σ_x²/σ_z²`, total power over total power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    linear: f64,
}

impl SnrPoint {
    pub fn from_linear(linear: f64) -> Result<Self, ChannelError> {
        if !(linear > 0.0 && linear.is_finite()) {
            return Err(ChannelError::InvalidSnr(linear));
        }
        Ok(Self { linear })
    }

    pub fn from_db(db: f64) -> Result<Self, ChannelError> {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }

    pub fn db(&self) -> f64 {
        10.0 * self.linear.log10()
    }
}

/// SNR of a constellation with energy `σ_x²` under `noise`.
pub fn snr_for(energy: f64, noise: &NoiseSpec) -> Result<SnrPoint, ChannelError> {
    if energy.is_nan() || energy <= 0.0 {
        return Err(ChannelError::InvalidEnergy(energy));
    }
    SnrPoint::from_linear(energy / noise.total_variance())
}

/// AWGN capacity in bits per `dims`-dimensional complex symbol,
/// `N·log₂(1 + SNR)`.
pub fn awgn_capacity(snr: SnrPoint, dims: usize) -> f64 {
    dims as f64 * snr.linear().ln_1p() / std::f64::consts::LN_2
}

/// A batch of noise vectors, each of `dims` complex coordinates, stored
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch {
    dims: usize,
    data: Vec<Complex64>,
}

impl NoiseBatch {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            data: Vec::new(),
        }
    }

    pub fn from_flat(dims: usize, data: Vec<Complex64>) -> Self {
        assert!(
            dims > 0 && data.len().is_multiple_of(dims),
            "ragged noise batch"
        );
        Self { dims, data }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of vectors.
    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.dims..(n + 1) * self.dims]
    }

    pub fn push(&mut self, z: &[Complex64]) {
        assert_eq!(z.len(), self.dims);
        self.data.extend_from_slice(z);
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.data.chunks_exact(self.dims)
    }

    pub fn as_flat(&self) -> &[Complex64] {
        &self.data
    }

    /// Applies `f` to every coordinate.
    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// `Σₙ ‖z⁽ⁿ⁾‖²`, accumulated in storage order.
    pub fn sum_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Generator for stream `stream` under `seed`.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills `out` with `count` noise vectors drawn from `rng`.
pub(crate) fn fill_noise<R: Rng>(
    spec: &NoiseSpec,
    count: usize,
    rng: &mut R,
    out: &mut Vec<Complex64>,
) {
    let sigma = spec.per_real_dim_variance().sqrt();
    out.clear();
    out.reserve(count * spec.dims());
    for _ in 0..count * spec.dims() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.push(Complex64::new(sigma * re, sigma * im));
    }
}

/// `count` independent noise vectors from stream 0 of `seed`.
pub fn sample_noise(spec: &NoiseSpec, count: usize, seed: u64) -> NoiseBatch {
    sample_noise_stream(spec, count, seed, 0)
}

/// `count` independent noise vectors from the given stream of `seed`.
pub fn sample_noise_stream(spec: &NoiseSpec, count: usize, seed: u64, stream: u64) -> NoiseBatch {
    let mut rng = noise_rng(seed, stream);
    let mut data = Vec::new();
    fill_noise(spec, count, &mut rng, &mut data);
    NoiseBatch {
        dims: spec.dims(),
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(
            NoiseSpec::new(0.0, 1),
            Err(ChannelError::InvalidVariance(0.0))
        );
        assert_eq!(NoiseSpec::new(1.0, 0), Err(ChannelError::ZeroDims));
        assert!(SnrPoint::from_linear(-1.0).is_err());
        assert!(SnrPoint::from_linear(f64::INFINITY).is_err());
    }

    #[test]
    fn variance_split() {
        let spec = NoiseSpec::new(2.0, 2).unwrap();
        assert_eq!(spec.per_complex_dim_variance(), 1.0);
        assert_eq!(spec.per_real_dim_variance(), 0.5);
    }

    #[test]
    fn capacity_values() {
        let cap = |s: f64, n| awgn_capacity(SnrPoint::from_linear(s).unwrap(), n);
        assert_eq!(cap(1.0, 1), 1.0);
        assert_eq!(cap(3.0, 1), 2.0);
        assert_eq!(cap(1.0, 2), 2.0);
    }

    #[test]
    fn snr_is_total_over_total() {
        let one = NoiseSpec::new(1.0, 1).unwrap();
        assert_eq!(snr_for(1.0, &one).unwrap().db(), 0.0);
        let tenth = NoiseSpec::new(0.1, 1).unwrap();
        assert!((snr_for(1.0, &tenth).unwrap().db() - 10.0).abs() < 1e-12);
        let two_dims = NoiseSpec::new(1.0, 2).unwrap();
        assert_eq!(snr_for(2.0, &two_dims).unwrap().linear(), 2.0);
        assert!(snr_for(0.0, &one).is_err());
    }

    #[test]
    fn db_and_linear_agree() {
        for db in [-10.0, -3.0, 0.0, 7.5, 30.0] {
            let s = SnrPoint::from_db(db).unwrap();
            assert!((s.db() - db).abs() <= 1e-12 * db.abs().max(1.0));
            let back = SnrPoint::from_db(s.db()).unwrap();
            assert!((back.linear() / s.linear() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let spec = NoiseSpec::new(1.0, 2).unwrap();
        let a = sample_noise(&spec, 1000, 42);
        let b = sample_noise(&spec, 1000, 42);
        assert_eq!(a, b);
        let c = sample_noise_stream(&spec, 1000, 42, 1);
        assert_ne!(a, c);
        let d = sample_noise(&spec, 1000, 43);
        assert_ne!(a, d);
    }

    fn moments(batch: &NoiseBatch, dim: usize) -> (Complex64, f64) {
        let n = batch.len() as f64;
        let mean: Complex64 = batch.iter().map(|z| z[dim]).sum::<Complex64>() / n;
        let var = batch
            .iter()
            .map(|z| (z[dim] - mean).norm_sqr())
            .sum::<f64>()
            / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn unit_noise_statistics() {
        let spec = NoiseSpec::new(1.0, 1).unwrap();
        let batch = sample_noise(&spec, 100_000, 7);
        let (mean, var) = moments(&batch, 0);
        // standard error of each mean component: sqrt(0.5 / n)
        let se = (0.5f64 / 100_000.0).sqrt();
        assert!(mean.re.abs() < 5.0 * se && mean.im.abs() < 5.0 * se);
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn two_dim_noise_statistics() {
        let spec = NoiseSpec::new(2.0, 2).unwrap();
        let batch = sample_noise(&spec, 100_000, 11);
        for d in 0..2 {
            let (_, var) = moments(&batch, d);
            assert!((var - 1.0).abs() < 0.05, "dim {d}: {var}");
        }
        // real and imaginary parts uncorrelated, each with half the variance
        let n = batch.len() as f64;
        let re2 = batch.iter().map(|z| z[0].re * z[0].re).sum::<f64>() / n;
        let reim = batch.iter().map(|z| z[0].re * z[0].im).sum::<f64>() / n;
        assert!((re2 - 0.5).abs() < 0.025);
        assert!(reim.abs() < 5.0 * (0.25f64 / n).sqrt());
    }
}
