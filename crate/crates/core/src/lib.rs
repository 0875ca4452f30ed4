//! Achievable information rates for multidimensional constellations over the
//! memoryless AWGN channel.
//!
//! * [`constellation`]: labeled constellations, index sets, pairwise differences
//! * [`channel`]: noise specification, seeded noise sampling, SNR and capacity
//! * [`quadrature`]: MI/GMI by tensor Gauss-Hermite quadrature
//! * [`montecarlo`]: MI/GMI by Monte Carlo integration
//! * [`datadriven`]: MI/GMI estimated from recorded transmissions
//! * [`metrics`]: hard decisions, pre-FEC SER/BER, bit LLRs
//! * [`predictor`]: post-FEC error-rate prediction from calibration tables
//!
//! Rates are in bits per `N`-dimensional symbol. SNR is total signal power
//! over total noise power, `σ_x²/σ_z²`.

pub mod air;
pub mod channel;
pub mod cli;
pub mod constellation;
pub mod datadriven;
pub mod metrics;
pub mod montecarlo;
pub mod predictor;
pub mod quadrature;
pub mod records;
pub mod standard;

pub use air::{AirError, AirEstimate, Method, RateKind};
pub use channel::{awgn_capacity, sample_noise, snr_for, NoiseBatch, NoiseSpec, SnrPoint};
pub use constellation::{load_constellation, parse_constellation, IndexSet, LabeledConstellation};
pub use datadriven::{estimate_noise_variance, extract_noise, gmi_from_data, mi_from_data};
pub use montecarlo::{gmi_mc, mi_mc, MonteCarloConfig, NoiseMode};
pub use predictor::{CalibrationTable, MetricKind, NormalizedMetric, Prediction, Verdict};
pub use quadrature::{gmi_quadrature, mi_quadrature, QuadratureSpec};
pub use records::SymbolRecordSet;
