//! The centred matrix `H`, its resolvent, Stieltjes transforms, reference
//! densities and the error envelopes `Φ`, `F_z`, `Ψ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it once std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::graph_models::{ModelKind, MultiGraph};
use crate::linalg::{symmetric_eigen, ComplexLu, SymmetricEigen};
use crate::quadrature::integrate;

/// `H = (d-1)^{-1/2} (A - d e eᵀ)` with `e = N^{-1/2}(1, …, 1)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

pub fn build_h(a: &MultiGraph) -> Result<Hamiltonian> {
    let (n, d) = (a.n(), a.degree());
    if d < 2 {
        bail!(InvalidParameter, "H needs d >= 2 (d={d})");
    }
    let scale = 1.0 / ((d - 1) as f64).sqrt();
    let shift = d as f64 / n as f64;
    let data = a.adjacency().iter().map(|&x| (x as f64 - shift) * scale).collect();
    Ok(Hamiltonian { n, d, data })
}

impl Hamiltonian {
    /// Wraps an arbitrary symmetric matrix; `d` is metadata only.
    pub fn from_dense(n: usize, d: usize, data: Vec<f64>) -> Result<Hamiltonian> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    bail!(InvalidParameter, "matrix not symmetric at ({i},{j})");
                }
            }
        }
        Ok(Hamiltonian { n, d, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `‖H e‖_∞` for the normalized constant vector.
    pub fn perron_residual(&self) -> f64 {
        let inv = 1.0 / (self.n as f64).sqrt();
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().sum::<f64>().abs() * inv)
            .fold(0.0, f64::max)
    }
}

/// `z = E + iη` with `η > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub e: f64,
    pub eta: f64,
}

impl SpectralPoint {
    pub fn new(e: f64, eta: f64) -> Result<SpectralPoint> {
        if !(eta > 0.0) || !e.is_finite() || !eta.is_finite() {
            bail!(InvalidParameter, "spectral point needs finite E and η > 0 (η={eta})");
        }
        Ok(SpectralPoint { e, eta })
    }

    pub fn z(self) -> Complex64 {
        Complex64::new(self.e, self.eta)
    }
}

/// `1/(λ_α - z)` split into real and imaginary parts.
pub struct Weights {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Eigendecomposition-backed access to `G(z) = (H - z)^{-1}`.
#[derive(Debug, Clone)]
pub struct ResolventView {
    n: usize,
    values: Vec<f64>,
    /// row α: eigenvector α
    vecs: Vec<f64>,
    /// row i: (v_{α,i})_α
    vecs_t: Vec<f64>,
}

impl ResolventView {
    pub fn from_hamiltonian(h: &Hamiltonian) -> Result<ResolventView> {
        Ok(ResolventView::from_eigen(symmetric_eigen(h.data(), h.n())?))
    }

    pub fn from_eigen(eig: SymmetricEigen) -> ResolventView {
        let n = eig.n;
        let mut vecs_t = vec![0.0; n * n];
        for a in 0..n {
            for i in 0..n {
                vecs_t[i * n + a] = eig.vectors[a * n + i];
            }
        }
        ResolventView { n, values: eig.values, vecs: eig.vectors, vecs_t }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvector(&self, alpha: usize) -> &[f64] {
        &self.vecs[alpha * self.n..(alpha + 1) * self.n]
    }

    /// Valid for any non-real `z`.
    pub fn weights(&self, z: Complex64) -> Weights {
        let (mut re, mut im) = (Vec::with_capacity(self.n), Vec::with_capacity(self.n));
        for &l in &self.values {
            let w = (Complex64::new(l, 0.0) - z).inv();
            re.push(w.re);
            im.push(w.im);
        }
        Weights { re, im }
    }

    pub fn entry_with(&self, w: &Weights, i: usize, j: usize) -> Complex64 {
        let n = self.n;
        let (xi, xj) = (&self.vecs_t[i * n..(i + 1) * n], &self.vecs_t[j * n..(j + 1) * n]);
        let (mut re, mut im) = (0.0, 0.0);
        for a in 0..n {
            let p = xi[a] * xj[a];
            re += w.re[a] * p;
            im += w.im[a] * p;
        }
        Complex64::new(re, im)
    }

    pub fn entry(&self, i: usize, j: usize, z: Complex64) -> Complex64 {
        self.entry_with(&self.weights(z), i, j)
    }

    pub fn diagonal_with(&self, w: &Weights) -> Vec<Complex64> {
        let n = self.n;
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        for a in 0..n {
            let v = &self.vecs[a * n..(a + 1) * n];
            let (wr, wi) = (w.re[a], w.im[a]);
            for i in 0..n {
                let p = v[i] * v[i];
                re[i] += wr * p;
                im[i] += wi * p;
            }
        }
        re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect()
    }

    pub fn diagonal(&self, z: Complex64) -> Vec<Complex64> {
        self.diagonal_with(&self.weights(z))
    }

    /// Row `i` of `G(z)`.
    pub fn row(&self, i: usize, z: Complex64) -> Vec<Complex64> {
        let w = self.weights(z);
        (0..self.n).map(|j| self.entry_with(&w, i, j)).collect()
    }

    /// `s(z) = N^{-1} Σ_α (λ_α - z)^{-1}`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let s: Complex64 = self.values.iter().map(|&l| (Complex64::new(l, 0.0) - z).inv()).sum();
        s / self.n as f64
    }

    /// `⟨a, G(z) b⟩` for real `a, b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64], z: Complex64) -> Result<Complex64> {
        let n = self.n;
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.len().min(b.len()) });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (alpha, &l) in self.values.iter().enumerate() {
            let v = &self.vecs[alpha * n..(alpha + 1) * n];
            let pa: f64 = v.iter().zip(a).map(|(x, y)| x * y).sum();
            let pb: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            acc += (Complex64::new(l, 0.0) - z).inv() * (pa * pb);
        }
        Ok(acc)
    }

    /// `max |G_ij|` over the sampled off-diagonal pairs.
    pub fn max_offdiag_with(&self, w: &Weights, pairs: &PairSample) -> f64 {
        pairs.pairs.iter().map(|&(i, j)| self.entry_with(w, i, j).norm()).fold(0.0, f64::max)
    }
}

/// Solve-backed resolvent, for cross-checks on small instances.
pub struct SolveResolvent {
    n: usize,
    h: Vec<f64>,
}

impl SolveResolvent {
    pub fn new(h: &Hamiltonian) -> SolveResolvent {
        SolveResolvent { n: h.n(), h: h.data().to_vec() }
    }

    /// All of `G(z)`, row-major.
    pub fn matrix(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let lu = ComplexLu::shifted(&self.h, self.n, z)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for j in 0..self.n {
            for (i, x) in lu.column(j)?.into_iter().enumerate() {
                out[i * self.n + j] = x;
            }
        }
        Ok(out)
    }
}

/// Roots of `m² + zm + 1 = 0` ordered as `(m, m̂)` with `Im m ≥ Im m̂`.
pub fn quadratic_roots(z: Complex64, rhs: Complex64) -> (Complex64, Complex64) {
    // s² + z s + (1 - rhs) = 0
    let c = Complex64::new(1.0, 0.0) - rhs;
    let disc = (z * z - c * 4.0).sqrt();
    // the root of larger modulus has no cancellation
    let big = if (z.conj() * disc).re >= 0.0 { (-z - disc) * 0.5 } else { (-z + disc) * 0.5 };
    let small = if big.norm() > 0.0 { c / big } else { Complex64::new(0.0, 0.0) };
    if small.im >= big.im { (small, big) } else { (big, small) }
}

/// Stieltjes transform of the semicircle law, the root of
/// `m² + zm + 1 = 0` in the upper half-plane.
pub fn m_semicircle(z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        bail!(InvalidParameter, "m(z) needs Im z > 0 (Im z = {})", z.im);
    }
    Ok(quadratic_roots(z, Complex64::new(0.0, 0.0)).0)
}

/// `m` extended to the lower half-plane by `m(z̄) = conj(m(z))`.
pub fn m_semicircle_ext(z: Complex64) -> Result<Complex64> {
    if z.im < 0.0 {
        Ok(m_semicircle(z.conj())?.conj())
    } else {
        m_semicircle(z)
    }
}

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn kesten_mckay_density(x: f64, d: usize) -> Result<f64> {
    if d < 2 {
        bail!(InvalidParameter, "Kesten–McKay density needs d >= 2 (d={d})");
    }
    if x.abs() >= 2.0 {
        return Ok(0.0);
    }
    let df = d as f64;
    Ok(semicircle_density(x) / (1.0 + 1.0 / (df - 1.0) - x * x / df))
}

fn theta_range(a: f64, b: f64) -> (f64, f64) {
    let clip = |x: f64| x.clamp(-2.0, 2.0) / 2.0;
    (clip(a).asin(), clip(b).asin())
}

/// Semicircle mass of `[a, b]`.
pub fn semicircle_mass(a: f64, b: f64) -> f64 {
    let (t0, t1) = theta_range(a, b);
    let prim = |t: f64| (t + t.sin() * t.cos()) / PI;
    prim(t1) - prim(t0)
}

/// Kesten–McKay mass of `[a, b]` by quadrature in `x = 2 sin θ`.
pub fn kesten_mckay_mass(a: f64, b: f64, d: usize) -> Result<f64> {
    if d < 2 {
        bail!(InvalidParameter, "Kesten–McKay density needs d >= 2 (d={d})");
    }
    let df = d as f64;
    let (t0, t1) = theta_range(a, b);
    let f = |t: f64| {
        let (s, c) = (t.sin(), t.cos());
        2.0 / PI * c * c / (1.0 + 1.0 / (df - 1.0) - 4.0 * s * s / df)
    };
    Ok(integrate(f, t0, t1, 1e-13))
}

/// Default logarithmic parameter `ξ = (log N)²`.
pub fn xi_default(n: usize) -> f64 {
    let l = (n as f64).ln();
    l * l
}

/// Default `ζ = log ξ`.
pub fn zeta_default(xi: f64) -> f64 {
    xi.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegimeWarning {
    /// `D < 1`
    DBelowOne,
    /// `ξΦ > 1`, so `F_z` is evaluated beyond its domain
    XiPhiAboveOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    pub n: usize,
    /// The regime parameter `D`.
    pub big_d: f64,
    pub xi: f64,
}

impl EnvelopeParams {
    pub fn for_model(model: ModelKind, n: usize, d: usize, xi: f64) -> Result<EnvelopeParams> {
        if !(xi > 1.0) {
            bail!(InvalidParameter, "ξ must exceed 1 (ξ={xi})");
        }
        Ok(EnvelopeParams { n, big_d: model.regime_d(n, d), xi })
    }

    pub fn from_parts(n: usize, big_d: f64, xi: f64) -> EnvelopeParams {
        EnvelopeParams { n, big_d, xi }
    }

    pub fn d_below_one(&self) -> bool {
        self.big_d < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValue {
    pub value: f64,
    pub warning: Option<RegimeWarning>,
}

/// `Φ(z) = 1/√(Nη) + 1/√D`.
pub fn phi_envelope(z: SpectralPoint, p: &EnvelopeParams) -> EnvelopeValue {
    let value = 1.0 / (p.n as f64 * z.eta).sqrt() + 1.0 / p.big_d.sqrt();
    let warning = p.d_below_one().then_some(RegimeWarning::DBelowOne);
    EnvelopeValue { value, warning }
}

/// `F_z(r) = [(1 + 1/√|z²-4|) r] ∧ √r` for `r ∈ [0, 1]`.
pub fn f_envelope(z: Complex64, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        bail!(InvalidParameter, "F_z(r) needs r in [0, 1] (r={r})");
    }
    Ok(f_envelope_extended(z, r))
}

/// The same formula for any `r >= 0`.
pub fn f_envelope_extended(z: Complex64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let w = (z * z - 4.0).norm();
    let lin = if w > 0.0 { (1.0 + 1.0 / w.sqrt()) * r } else { f64::INFINITY };
    lin.min(r.sqrt())
}

/// `Ψ = ξ √(Im m / (Nη)) + ξ/√D + (ξ²/(Nη))^{2/3}`.
pub fn psi_envelope(z: SpectralPoint, p: &EnvelopeParams, m: Complex64) -> f64 {
    let ne = p.n as f64 * z.eta;
    p.xi * (m.im.max(0.0) / ne).sqrt() + p.xi / p.big_d.sqrt() + (p.xi * p.xi / ne).powf(2.0 / 3.0)
}

/// Off-diagonal index pairs over which `max |G_ij|` is taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSample {
    pub pairs: Vec<(usize, usize)>,
    pub exhaustive: bool,
}

pub const DEFAULT_PAIR_COUNT: usize = 10_000;
pub const EXHAUSTIVE_BELOW: usize = 300;

impl PairSample {
    /// All pairs `i < j` below `N = 300`, else `count` uniform pairs `i ≠ j`.
    pub fn new<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> PairSample {
        if n < EXHAUSTIVE_BELOW {
            return PairSample::all(n);
        }
        let pairs = (0..count)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect();
        PairSample { pairs, exhaustive: false }
    }

    pub fn all(n: usize) -> PairSample {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        PairSample { pairs, exhaustive: true }
    }
}

/// `Γ(z) = max_ij |G_ij| ∨ 1` over all diagonal entries and the sampled pairs.
pub fn gamma(view: &ResolventView, z: SpectralPoint, pairs: &PairSample) -> f64 {
    let w = view.weights(z.z());
    let diag = view.diagonal_with(&w).iter().map(|g| g.norm()).fold(0.0, f64::max);
    diag.max(view.max_offdiag_with(&w, pairs)).max(1.0)
}

/// `η_k = N / 2^k` for `k = 0, 1, …` while `η_k >= eta_min`.
pub fn dyadic_etas(n: usize, eta_min: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut eta = n as f64;
    while eta >= eta_min && out.len() < 2048 {
        out.push(eta);
        eta *= 0.5;
    }
    out
}

/// `Γ*(E + iη_min)`: sup of `Γ` over the dyadic grid in `[eta_min, N]`.
pub fn gamma_star(view: &ResolventView, e: f64, eta_min: f64, pairs: &PairSample) -> Result<f64> {
    SpectralPoint::new(e, eta_min)?;
    let mut best: f64 = 1.0;
    let mut etas = dyadic_etas(view.n(), eta_min);
    if etas.last() != Some(&eta_min) {
        etas.push(eta_min);
    }
    for eta in etas {
        best = best.max(gamma(view, SpectralPoint { e, eta }, pairs));
    }
    Ok(best)
}
