//! Eigenvalue counts, delocalization, the isotropic error and QUE.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it once std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{bail, Error, Result};
use crate::spectral_core::{
    f_envelope_extended, m_semicircle_ext, semicircle_mass, EnvelopeParams, ResolventView,
    SpectralPoint,
};

/// Default half-width `K` of the admissible window `[-K, K]`.
pub const DEFAULT_K: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalCount {
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub rho: f64,
    pub kappa: f64,
    /// `ξ |I|/√(κ+|I|) (1/√D + 1/√(N|I|)) + ξ²/N`
    pub bound_bulk: f64,
    /// `√ξ |I| (D^{-1/4} + (N|I|)^{-1/4}) + ξ²/N`
    pub bound_edge: f64,
}

/// `κ(I) = dist(I, {−2, 2})`.
pub fn edge_distance(a: f64, b: f64) -> f64 {
    let dist = |x: f64| if a <= x && x <= b { 0.0 } else { (a - x).abs().min((b - x).abs()) };
    dist(-2.0).min(dist(2.0))
}

/// Fraction of `eigenvalues` in `[a, b]` against the semicircle mass.
pub fn interval_count(
    eigenvalues: &[f64],
    a: f64,
    b: f64,
    params: &EnvelopeParams,
    k: f64,
) -> Result<IntervalCount> {
    if !(a <= b) || a < -k || b > k {
        bail!(InvalidParameter, "interval [{a}, {b}] must lie in [-{k}, {k}]");
    }
    let n = eigenvalues.len() as f64;
    let inside = eigenvalues.iter().filter(|&&l| a <= l && l <= b).count();
    let len = b - a;
    let kappa = edge_distance(a, b);
    let xi = params.xi;
    let tail = xi * xi / n;
    let bound_bulk = if len > 0.0 {
        xi * len / (kappa + len).sqrt()
            * (1.0 / params.big_d.sqrt() + 1.0 / (n * len).sqrt())
            + tail
    } else {
        tail
    };
    let bound_edge = if len > 0.0 {
        xi.sqrt() * len * (params.big_d.powf(-0.25) + (n * len).powf(-0.25)) + tail
    } else {
        tail
    };
    Ok(IntervalCount {
        a,
        b,
        nu: inside as f64 / n,
        rho: semicircle_mass(a, b),
        kappa,
        bound_bulk,
        bound_edge,
    })
}

/// Histogram of `eigenvalues` on consecutive half-open bins `[e_k, e_{k+1})`,
/// normalized by the total count.
pub fn binned_fractions(eigenvalues: &[f64], edges: &[f64]) -> Vec<f64> {
    let n = eigenvalues.len() as f64;
    edges
        .windows(2)
        .map(|w| eigenvalues.iter().filter(|&&l| w[0] <= l && l < w[1]).count() as f64 / n)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelocalizationStats {
    pub sup_norms: Vec<f64>,
    pub max_inf_norm: f64,
    /// `N · max_{α,i} v_{α,i}²`
    pub normalized: f64,
}

pub fn delocalization_stats(view: &ResolventView) -> DelocalizationStats {
    let n = view.n();
    let sup_norms: Vec<f64> = (0..n)
        .map(|a| view.eigenvector(a).iter().fold(0.0, |m: f64, x| m.max(x.abs())))
        .collect();
    let max_inf_norm = sup_norms.iter().copied().fold(0.0, f64::max);
    DelocalizationStats { sup_norms, max_inf_norm, normalized: n as f64 * max_inf_norm * max_inf_norm }
}

/// Coefficient vector with its constraint flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVector {
    coeffs: Vec<f64>,
}

const CONSTRAINT_TOL: f64 = 1e-12;

impl TestVector {
    pub fn new(coeffs: Vec<f64>) -> TestVector {
        TestVector { coeffs }
    }

    /// `a - mean(a)`, so that `Σ a_i = 0`.
    pub fn centered(mut coeffs: Vec<f64>) -> TestVector {
        let mean = coeffs.iter().sum::<f64>() / coeffs.len().max(1) as f64;
        coeffs.iter_mut().for_each(|x| *x -= mean);
        TestVector { coeffs }
    }

    /// `a_i = 1{i ∈ set} − |set|/N`.
    pub fn indicator(n: usize, set: &[usize]) -> Result<TestVector> {
        let frac = set.len() as f64 / n as f64;
        let mut coeffs = alloc::vec![-frac; n];
        for &i in set {
            if i >= n || coeffs[i] > 0.0 {
                bail!(InvalidParameter, "indicator set must hold distinct indices below {n}");
            }
            coeffs[i] += 1.0;
        }
        Ok(TestVector { coeffs })
    }

    /// Standard normal coordinates, `e`-component removed, normalized.
    pub fn random_unit_perp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TestVector {
        let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut t = TestVector::centered(raw);
        let norm = t.norm();
        t.coeffs.iter_mut().for_each(|x| *x /= norm);
        t
    }

    /// `e_i − ⟨e_i, e⟩ e`, normalized.
    pub fn basis_perp(n: usize, i: usize) -> TestVector {
        let mut raw = alloc::vec![0.0; n];
        raw[i] = 1.0;
        let mut t = TestVector::centered(raw);
        let norm = t.norm();
        t.coeffs.iter_mut().for_each(|x| *x /= norm);
        t
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().map(|x| x.abs()).sum::<f64>().max(1.0)
    }

    /// `Σ a_i = 0` up to roundoff; equivalently `a ⊥ e`.
    pub fn sums_to_zero(&self) -> bool {
        self.coeffs.iter().sum::<f64>().abs() <= CONSTRAINT_TOL * self.scale()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    pub fn norm_at_most_one(&self) -> bool {
        self.norm() <= 1.0 + 1e-10
    }
}

/// `⟨a, G(z) b⟩ − m(z)⟨a, b⟩` for unit `a, b ⊥ e`; `z` may lie in either
/// half-plane.
pub fn isotropic_error(
    view: &ResolventView,
    z: Complex64,
    a: &TestVector,
    b: &TestVector,
) -> Result<Complex64> {
    for (name, t) in [("a", a), ("b", b)] {
        if t.len() != view.n() {
            return Err(Error::DimensionMismatch { expected: view.n(), got: t.len() });
        }
        if !t.is_unit() || !t.sums_to_zero() {
            bail!(InvalidParameter, "{name} must be a unit vector orthogonal to e");
        }
    }
    if z.im == 0.0 {
        bail!(InvalidParameter, "isotropic error needs a non-real z");
    }
    let m = m_semicircle_ext(z)?;
    let ab: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
    Ok(view.bilinear(&a.coeffs, &b.coeffs, z)? - m * ab)
}

/// `F_z(ξΦ) + ξ ζ⁴ Φ`.
pub fn isotropic_envelope(z: SpectralPoint, params: &EnvelopeParams, zeta: f64) -> f64 {
    let phi = crate::spectral_core::phi_envelope(z, params).value;
    f_envelope_extended(z.z(), params.xi * phi) + params.xi * zeta.powi(4) * phi
}

/// `Σ_i a_i v_{α,i}²` for `Σ a_i = 0`.
pub fn que_statistic(view: &ResolventView, a: &TestVector, alpha: usize) -> Result<f64> {
    if a.len() != view.n() {
        return Err(Error::DimensionMismatch { expected: view.n(), got: a.len() });
    }
    if alpha >= view.n() {
        bail!(InvalidParameter, "eigenvector index {alpha} out of range");
    }
    if !a.sums_to_zero() {
        bail!(InvalidParameter, "QUE coefficients must sum to zero");
    }
    Ok(view.eigenvector(alpha).iter().zip(&a.coeffs).map(|(v, c)| c * v * v).sum())
}

/// `max_{α,β} |⟨v_α, v_β⟩ − δ_αβ|`.
pub fn orthonormality_residual(view: &ResolventView) -> f64 {
    let n = view.n();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a..n {
            let dot: f64 = view.eigenvector(a).iter().zip(view.eigenvector(b)).map(|(x, y)| x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}
