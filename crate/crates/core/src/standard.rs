//! Common unit-energy constellations with Gray labelings.

use num_complex::Complex64;

use crate::constellation::LabeledConstellation;

/// BPSK `{+1, -1}` labeled `"0"`, `"1"`.
pub fn bpsk() -> LabeledConstellation {
    LabeledConstellation::new(1, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
        .and_then(|c| c.with_labels(&["0", "1"]))
        .expect("valid BPSK")
}

/// Unit-energy QPSK `(±1 ± j)/√2`; the first bit follows the sign of the real
/// part, the second the sign of the imaginary part.
pub fn qpsk_gray() -> LabeledConstellation {
    square_qam_gray(4)
}

/// Unit-energy QPSK with a non-Gray labeling: two of the four nearest-neighbour
/// pairs differ in both bits.
pub fn qpsk_anti_gray() -> LabeledConstellation {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    LabeledConstellation::new(
        1,
        vec![
            Complex64::new(-s, -s),
            Complex64::new(-s, s),
            Complex64::new(s, -s),
            Complex64::new(s, s),
        ],
    )
    .and_then(|c| c.with_labels(&["00", "01", "11", "10"]))
    .expect("valid QPSK")
}

/// Unit-energy square `order`-QAM with a binary-reflected Gray code per
/// quadrature. The leading half of each label indexes the in-phase level.
///
/// # Panics
///
/// Panics unless `order` is an even power of two (4, 16, 64, ...).
pub fn square_qam_gray(order: usize) -> LabeledConstellation {
    assert!(
        order.is_power_of_two() && order.trailing_zeros().is_multiple_of(2) && order >= 4,
        "square QAM needs an even power of two, got {order}"
    );
    let bits = order.trailing_zeros() as usize / 2;
    let side = 1usize << bits;
    let level = |l: usize| (2 * l) as f64 - (side - 1) as f64;
    let gray = |l: usize| l ^ (l >> 1);

    let mut points = Vec::with_capacity(order);
    let mut labels = Vec::with_capacity(order);
    for li in 0..side {
        for lq in 0..side {
            points.push(Complex64::new(level(li), level(lq)));
            let value = (gray(li) << bits) | gray(lq);
            labels.push(format!("{value:0width$b}", width = 2 * bits));
        }
    }
    LabeledConstellation::new(1, points)
        .and_then(|c| c.with_labels(&labels))
        .and_then(|c| c.normalize_energy(1.0))
        .expect("valid square QAM")
}

/// Polarization-multiplexed `c`: the same constellation on two complex
/// dimensions. Energy doubles; normalize afterwards if needed.
pub fn polarization_multiplexed(c: &LabeledConstellation) -> LabeledConstellation {
    c.cartesian_product(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_qam_is_unit_energy_and_gray() {
        for order in [4, 16, 64, 256] {
            let c = square_qam_gray(order);
            assert_eq!(c.order(), order);
            assert!((c.energy() - 1.0).abs() < 1e-12);
            let d = c.pairwise_differences();
            let dmin = (0..order)
                .flat_map(|i| (0..order).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| d.norm_sqr(i, j))
                .fold(f64::INFINITY, f64::min);
            // nearest neighbours differ in exactly one bit
            let labels = c.label_values().unwrap();
            for i in 0..order {
                for j in 0..order {
                    if i != j && (d.norm_sqr(i, j) - dmin).abs() < 1e-9 {
                        assert_eq!((labels[i] ^ labels[j]).count_ones(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn qpsk_bits_follow_quadrant() {
        let c = qpsk_gray();
        for i in 0..4 {
            let p = c.point(i)[0];
            assert_eq!(c.label_bit(i, 1).unwrap(), p.re > 0.0);
            assert_eq!(c.label_bit(i, 2).unwrap(), p.im > 0.0);
        }
    }

    #[test]
    fn pm_qpsk_shape() {
        let pm = polarization_multiplexed(&qpsk_gray());
        assert_eq!(pm.order(), 16);
        assert_eq!(pm.dims(), 2);
        assert!((pm.energy() - 2.0).abs() < 1e-12);
    }
}
