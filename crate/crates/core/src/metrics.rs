//! Uncoded metrics and demapper outputs: minimum-distance decisions,
//! pre-FEC SER/BER, bitwise LLRs and normalized rates.
//!
//! LLRs use the natural logarithm; rates are in bits.

use thiserror::Error;

use num_complex::Complex64;

use crate::air::AirEstimate;
use crate::channel::NoiseSpec;
use crate::constellation::LabeledConstellation;
use crate::records::{RecordError, SymbolRecordSet};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("constellation is unlabeled; bit metrics need a binary labeling")]
    Unlabeled,
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error("rate normalization needs M >= 2, got M = {0}")]
    TrivialConstellation(usize),
    #[error("received vector has {found} complex dimensions, constellation has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Minimum-distance decision for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardDecision {
    /// 0-based decided point.
    pub decided_index: usize,
    pub correct: bool,
}

/// `argminᵢ ‖y − xᵢ‖²`; ties go to the lowest index.
pub fn hard_decide(c: &LabeledConstellation, y: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, x) in c.points().enumerate() {
        let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }
    best
}

/// Decisions for every record, in record order.
pub fn decide_records(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<Vec<HardDecision>, MetricsError> {
    records.validate(c)?;
    Ok(records
        .iter()
        .map(|(tx, y)| {
            let decided_index = hard_decide(c, y);
            HardDecision {
                decided_index,
                correct: decided_index == tx,
            }
        })
        .collect())
}

fn require_records(records: &SymbolRecordSet) -> Result<(), MetricsError> {
    if records.is_empty() {
        return Err(RecordError::TooFew {
            needed: 1,
            found: 0,
        }
        .into());
    }
    Ok(())
}

/// Fraction of records decided to the wrong point.
pub fn pre_fec_ser(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<f64, MetricsError> {
    require_records(records)?;
    let decisions = decide_records(c, records)?;
    let errors = decisions.iter().filter(|d| !d.correct).count();
    Ok(errors as f64 / records.len() as f64)
}

/// Bit errors between transmitted and decided labels over `T·log₂M` bits.
pub fn pre_fec_ber(
    c: &LabeledConstellation,
    records: &SymbolRecordSet,
) -> Result<f64, MetricsError> {
    let labels = c.label_values().ok_or(MetricsError::Unlabeled)?;
    let bits = c.bits_per_label().unwrap_or(0);
    if bits == 0 {
        return Err(MetricsError::TrivialConstellation(c.order()));
    }
    require_records(records)?;
    let decisions = decide_records(c, records)?;
    let bit_errors: u64 = records
        .iter()
        .zip(&decisions)
        .map(|((tx, _), d)| u64::from((labels[tx] ^ labels[d.decided_index]).count_ones()))
        .sum();
    Ok(bit_errors as f64 / (records.len() * bits) as f64)
}

/// Bitwise LLRs `ln P(b_k = 0 | y) / P(b_k = 1 | y)` under the AWGN metric,
/// for `k = 1..=m`. Positive values favour bit 0.
pub fn bit_llrs(
    c: &LabeledConstellation,
    noise: &NoiseSpec,
    y: &[Complex64],
) -> Result<Vec<f64>, MetricsError> {
    let labels = c.label_values().ok_or(MetricsError::Unlabeled)?;
    if y.len() != c.dims() {
        return Err(MetricsError::DimensionMismatch {
            expected: c.dims(),
            found: y.len(),
        });
    }
    let bits = c.bits_per_label().unwrap_or(0);
    let scale = 1.0 / noise.per_complex_dim_variance();
    let metrics: Vec<f64> = c
        .points()
        .map(|x| {
            -scale
                * x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
        })
        .collect();

    let mut llrs = Vec::with_capacity(bits);
    let mut zeros = Vec::with_capacity(metrics.len() / 2);
    let mut ones = Vec::with_capacity(metrics.len() / 2);
    for k in 1..=bits {
        zeros.clear();
        ones.clear();
        for (&label, &m) in labels.iter().zip(&metrics) {
            if (label >> (bits - k)) & 1 == 0 {
                zeros.push(m);
            } else {
                ones.push(m);
            }
        }
        llrs.push(crate::air::log_sum_exp(&zeros) - crate::air::log_sum_exp(&ones));
    }
    Ok(llrs)
}

/// `value / log₂M`.
pub fn normalize_rate(estimate: &AirEstimate, order: usize) -> Result<f64, MetricsError> {
    if order < 2 {
        return Err(MetricsError::TrivialConstellation(order));
    }
    Ok(estimate.value / (order as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::air::Method;
    use crate::channel::NoiseSpec;
    use crate::records::synthesize_records;
    use crate::standard;

    fn c64(re: f64) -> [Complex64; 1] {
        [Complex64::new(re, 0.0)]
    }

    #[test]
    fn decisions() {
        let c = standard::square_qam_gray(16);
        assert_eq!(hard_decide(&c, c.point(2)), 2);
        let bpsk = standard::bpsk();
        assert_eq!(hard_decide(&bpsk, &c64(0.0)), 0);
        assert_eq!(hard_decide(&bpsk, &c64(-0.2)), 1);
    }

    #[test]
    fn noiseless_error_rates_are_zero() {
        let c = standard::square_qam_gray(16);
        let mut r = SymbolRecordSet::new(1);
        for (i, x) in c.points().enumerate() {
            r.push(i, x);
        }
        assert_eq!(pre_fec_ser(&c, &r).unwrap(), 0.0);
        assert_eq!(pre_fec_ber(&c, &r).unwrap(), 0.0);
    }

    #[test]
    fn ber_needs_labels() {
        let c =
            LabeledConstellation::new(1, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
                .unwrap();
        let mut r = SymbolRecordSet::new(1);
        r.push(0, &c64(1.0));
        assert!(matches!(pre_fec_ber(&c, &r), Err(MetricsError::Unlabeled)));
        assert!(matches!(
            bit_llrs(&c, &NoiseSpec::new(1.0, 1).unwrap(), &c64(0.0)),
            Err(MetricsError::Unlabeled)
        ));
    }

    #[test]
    fn ser_ber_counting_bounds() {
        let c = standard::square_qam_gray(16);
        let noise = NoiseSpec::new(0.2, 1).unwrap();
        let r = synthesize_records(&c, &noise, 500, 9);
        let ser = pre_fec_ser(&c, &r).unwrap();
        let ber = pre_fec_ber(&c, &r).unwrap();
        assert!(ber > 0.0);
        assert!(ber <= ser && ser <= 4.0 * ber, "ber {ber} ser {ser}");
    }

    #[test]
    fn bpsk_llr_closed_form() {
        let c = standard::bpsk();
        let noise = NoiseSpec::new(1.0, 1).unwrap();
        let l = bit_llrs(&c, &noise, &c64(1.0)).unwrap();
        assert!((l[0] - 4.0).abs() < 1e-12);
        assert_eq!(bit_llrs(&c, &noise, &c64(0.0)).unwrap()[0], 0.0);
        // 4·Re(y)/σ² for general y
        let noise = NoiseSpec::new(0.7, 1).unwrap();
        let y = [Complex64::new(-0.3, 0.9)];
        let l = bit_llrs(&c, &noise, &y).unwrap();
        assert!((l[0] - 4.0 * -0.3 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn llr_sign_matches_hard_decision_for_bpsk() {
        let c = standard::bpsk();
        let noise = NoiseSpec::new(0.5, 1).unwrap();
        for re in [-2.0, -0.5, -1e-3, 1e-3, 0.4, 3.0] {
            let y = c64(re);
            let llr = bit_llrs(&c, &noise, &y).unwrap()[0];
            let decided = hard_decide(&c, &y);
            assert_eq!(llr < 0.0, c.label_bit(decided, 1).unwrap());
        }
    }

    #[test]
    fn llrs_are_stable_at_high_snr() {
        let c = standard::square_qam_gray(64);
        let noise = NoiseSpec::new(1e-6, 1).unwrap();
        let llrs = bit_llrs(&c, &noise, c.point(10)).unwrap();
        assert!(llrs.iter().all(|l| l.is_finite() && l.abs() > 1e3));
    }

    #[test]
    fn normalization() {
        let e = AirEstimate::exact(4.0, Method::Quadrature);
        assert_eq!(normalize_rate(&e, 16).unwrap(), 1.0);
        let e = AirEstimate::exact(2.0, Method::Quadrature);
        assert_eq!(normalize_rate(&e, 16).unwrap(), 0.5);
        assert!(matches!(
            normalize_rate(&e, 1),
            Err(MetricsError::TrivialConstellation(1))
        ));
    }
}
