//! Deterministic MI/GMI by tensor-product Gauss-Hermite quadrature over the
//! `2N` real noise coordinates.
//!
//! For a real Gaussian coordinate of variance `v`,
//! `E[f(Z)] ≈ π^{-1/2} Σ_k w_k f(√(2v)·x_k)` with `(x_k, w_k)` the
//! Gauss-Hermite rule for the weight `exp(−x²)`. Here `v = σ_z²/(2N)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::air::{check_dims, AirError, AirEstimate, Integrand, Method, RateKind, Scratch};
use crate::channel::NoiseSpec;
use crate::constellation::LabeledConstellation;

pub const DEFAULT_NODES_PER_REAL_DIM: usize = 20;
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Gauss-Hermite nodes and weights for `∫ f(x)·exp(−x²) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes the `n`-point rule. Roots are bracketed by Sturm-sequence
    /// bisection on the Jacobi matrix, then polished by Newton steps on the
    /// orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let bound = (2.0 * n as f64 + 1.0).sqrt();

        // the rule is symmetric: find the upper half and mirror it
        for i in n / 2..n {
            let z = if n % 2 == 1 && i == n / 2 {
                0.0
            } else {
                // the i-th smallest root (0-based) is where the count of
                // eigenvalues below x steps from i to i + 1
                let (mut lo, mut hi) = (0.0, bound);
                while hi - lo > 1e-13 * hi {
                    let mid = 0.5 * (lo + hi);
                    if eigenvalues_below(n, mid) > i {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let mut z = 0.5 * (lo + hi);
                for _ in 0..3 {
                    let (p, dp) = orthonormal_hermite(n, z);
                    let next = z - p / dp;
                    if !(lo..=hi).contains(&next) {
                        break;
                    }
                    z = next;
                }
                z
            };
            let (_, dp) = orthonormal_hermite(n, z);
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (dp * dp);
            weights[n - 1 - i] = weights[i];
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ f(x)·exp(−x²) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Number of eigenvalues below `x` of the Gauss-Hermite Jacobi matrix (zero
/// diagonal, off-diagonal `√(k/2)`), by Sturm sequence.
fn eigenvalues_below(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for k in 0..n {
        let b2 = k as f64 / 2.0;
        q = -x - if k == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Orthonormal Hermite function value `p_n(x)` (with respect to `exp(−x²)`)
/// and the derivative term `√(2n)·p_{n−1}(x)`.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    // π^{-1/4}
    let mut p1 = 0.751_125_544_464_942_5;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Quadrature problem: constellation, noise and rule size.
#[derive(Debug, Clone)]
pub struct QuadratureSpec<'a> {
    pub constellation: &'a LabeledConstellation,
    pub noise: NoiseSpec,
    pub nodes_per_real_dim: usize,
    pub node_budget: u64,
}

impl<'a> QuadratureSpec<'a> {
    pub fn new(constellation: &'a LabeledConstellation, noise: NoiseSpec) -> Self {
        Self {
            constellation,
            noise,
            nodes_per_real_dim: DEFAULT_NODES_PER_REAL_DIM,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_nodes(mut self, nodes_per_real_dim: usize) -> Self {
        self.nodes_per_real_dim = nodes_per_real_dim;
        self
    }

    pub fn with_budget(mut self, node_budget: u64) -> Self {
        self.node_budget = node_budget;
        self
    }

    /// Total tensor node count, if within the budget.
    pub fn total_nodes(&self) -> Result<u64, AirError> {
        if self.nodes_per_real_dim < 2 {
            return Err(AirError::TooFewNodes(self.nodes_per_real_dim));
        }
        let real_dims = 2 * self.constellation.dims();
        u32::try_from(real_dims)
            .ok()
            .and_then(|e| (self.nodes_per_real_dim as u64).checked_pow(e))
            .filter(|&total| total <= self.node_budget)
            .ok_or(AirError::BudgetExceeded {
                nodes: self.nodes_per_real_dim,
                real_dims,
                budget: self.node_budget,
            })
    }
}

/// MI by Gauss-Hermite quadrature, clamped to `[0, log₂M]`.
pub fn mi_quadrature(spec: &QuadratureSpec<'_>) -> Result<AirEstimate, AirError> {
    rate_quadrature(spec, RateKind::Mi)
}

/// GMI by Gauss-Hermite quadrature, clamped to `[0, log₂M]`.
pub fn gmi_quadrature(spec: &QuadratureSpec<'_>) -> Result<AirEstimate, AirError> {
    rate_quadrature(spec, RateKind::Gmi)
}

fn rate_quadrature(spec: &QuadratureSpec<'_>, kind: RateKind) -> Result<AirEstimate, AirError> {
    let c = spec.constellation;
    check_dims(c, spec.noise.dims())?;
    spec.total_nodes()?;
    let integrand = Integrand::new(c, spec.noise.total_variance(), kind)?;
    let grid = TensorGrid::new(spec.nodes_per_real_dim, spec.noise.per_real_dim_variance());

    let per_point: Vec<f64> = (0..c.order())
        .into_par_iter()
        .map_init(
            || {
                (
                    Scratch::default(),
                    vec![Complex64::default(); c.dims()],
                    vec![0usize; 2 * c.dims()],
                )
            },
            |(scratch, z, idx), i| {
                idx.iter_mut().for_each(|k| *k = 0);
                let mut acc = 0.0;
                loop {
                    let w = grid.point(idx, z);
                    acc += w * integrand.term(i, z, scratch);
                    if !grid.advance(idx) {
                        break;
                    }
                }
                acc
            },
        )
        .collect();

    let order = c.order() as f64;
    let raw = c.log2_order() - per_point.iter().sum::<f64>() / order;
    Ok(AirEstimate::new(raw, c.log2_order(), Method::Quadrature))
}

/// Tensor product of a 1-D rule over `2N` real coordinates, scaled to the
/// noise distribution so that weights sum to one.
struct TensorGrid {
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorGrid {
    fn new(nodes: usize, real_variance: f64) -> Self {
        let rule = GaussHermite::new(nodes);
        let scale = (2.0 * real_variance).sqrt();
        let norm = std::f64::consts::PI.sqrt();
        Self {
            coords: rule.nodes().iter().map(|x| scale * x).collect(),
            weights: rule.weights().iter().map(|w| w / norm).collect(),
        }
    }

    /// Writes the noise vector for multi-index `idx` and returns its weight.
    fn point(&self, idx: &[usize], z: &mut [Complex64]) -> f64 {
        let mut w = 1.0;
        for (d, zd) in z.iter_mut().enumerate() {
            let (kr, ki) = (idx[2 * d], idx[2 * d + 1]);
            *zd = Complex64::new(self.coords[kr], self.coords[ki]);
            w *= self.weights[kr] * self.weights[ki];
        }
        w
    }

    /// Odometer increment; false once every multi-index has been visited.
    fn advance(&self, idx: &mut [usize]) -> bool {
        let n = self.coords.len();
        for k in idx.iter_mut() {
            *k += 1;
            if *k < n {
                return true;
            }
            *k = 0;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standard;

    fn gamma_half_int(k: u32) -> f64 {
        // Γ(k + 1/2) = (2k-1)!! / 2^k · √π
        let mut v = std::f64::consts::PI.sqrt();
        for j in 0..k {
            v *= (2 * j + 1) as f64 / 2.0;
        }
        v
    }

    #[test]
    fn small_rules_match_closed_form() {
        let r2 = GaussHermite::new(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r2.nodes()[0] + s).abs() < 1e-14 && (r2.nodes()[1] - s).abs() < 1e-14);
        let r3 = GaussHermite::new(3);
        assert!((r3.nodes()[2] - 1.5f64.sqrt()).abs() < 1e-14);
        assert!(r3.nodes()[1].abs() < 1e-15);
        let sp = std::f64::consts::PI.sqrt();
        assert!((r3.weights()[1] - 2.0 * sp / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in [2, 5, 10, 20, 40, 64] {
            let rule = GaussHermite::new(n);
            for k in 0..n as u32 {
                let exact = gamma_half_int(k);
                let got = rule.integrate(|x| x.powi(2 * k as i32));
                assert!(
                    ((got - exact) / exact).abs() < 1e-11,
                    "n={n} k={k}: {got} vs {exact}"
                );
                if k < 3 {
                    let odd = rule.integrate(|x| x.powi(2 * k as i32 + 1));
                    assert!(odd.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn nodes_are_roots() {
        // H_n vanishes at every node; check through the recurrence
        let n = 20;
        let rule = GaussHermite::new(n);
        for &x in rule.nodes() {
            let (p, dp) = orthonormal_hermite(n, x);
            assert!((p / dp).abs() < 1e-13, "residual step at {x}");
        }
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn large_rules_stay_distinct() {
        for n in [150, 200, 201, 300] {
            let rule = GaussHermite::new(n);
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]), "n={n}");
            let mass: f64 = rule.weights().iter().sum();
            assert!((mass - std::f64::consts::PI.sqrt()).abs() < 1e-13, "n={n}");
            let second = rule.integrate(|x| x * x);
            assert!((second - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn single_point_is_zero() {
        let c = LabeledConstellation::new(1, vec![Complex64::new(0.3, -0.1)]).unwrap();
        let noise = NoiseSpec::new(1.0, 1).unwrap();
        let e = mi_quadrature(&QuadratureSpec::new(&c, noise)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.raw_value, 0.0);
    }

    #[test]
    fn coincident_points_carry_nothing() {
        let p = Complex64::new(1.0, 0.0);
        let c = LabeledConstellation::new(1, vec![p, p]).unwrap();
        for var in [0.01, 1.0, 100.0] {
            let noise = NoiseSpec::new(var, 1).unwrap();
            let e = mi_quadrature(&QuadratureSpec::new(&c, noise)).unwrap();
            assert!(e.raw_value.abs() < 1e-12);
        }
    }

    #[test]
    fn budget_and_node_checks() {
        let c = standard::qpsk_gray();
        let noise = NoiseSpec::new(1.0, 1).unwrap();
        let spec = QuadratureSpec::new(&c, noise).with_nodes(1);
        assert!(matches!(
            mi_quadrature(&spec),
            Err(AirError::TooFewNodes(1))
        ));
        let spec = QuadratureSpec::new(&c, noise).with_budget(399);
        assert!(matches!(
            mi_quadrature(&spec),
            Err(AirError::BudgetExceeded { .. })
        ));
        let spec = QuadratureSpec::new(&c, noise).with_budget(400);
        assert!(mi_quadrature(&spec).is_ok());
        let wrong = NoiseSpec::new(1.0, 2).unwrap();
        assert!(matches!(
            mi_quadrature(&QuadratureSpec::new(&c, wrong)),
            Err(AirError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gmi_needs_labels() {
        let c =
            LabeledConstellation::new(1, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
                .unwrap();
        let noise = NoiseSpec::new(1.0, 1).unwrap();
        assert!(matches!(
            gmi_quadrature(&QuadratureSpec::new(&c, noise)),
            Err(AirError::Constellation(_))
        ));
    }

    #[test]
    fn bpsk_gmi_equals_mi() {
        let c = standard::bpsk();
        for var in [0.1, 1.0, 4.0] {
            let noise = NoiseSpec::new(var, 1).unwrap();
            let spec = QuadratureSpec::new(&c, noise);
            let mi = mi_quadrature(&spec).unwrap().value;
            let gmi = gmi_quadrature(&spec).unwrap().value;
            assert!((mi - gmi).abs() < 1e-9);
        }
    }
}
