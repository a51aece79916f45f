//! The perturbed self-consistent equation, the martingale arcsinh tail
//! bound, and moment bounds for exchangeable vectors and matrices.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
#[allow(unused_imports)] // inherent float methods shadow it once std is linked
use num_traits::Float;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{bail, Result};
use crate::spectral_core::{f_envelope, quadratic_roots};

/// Roots of `s² + zs + 1 = R`, the one with larger imaginary part first.
pub fn solve_two_roots(z: Complex64, r: Complex64) -> Result<(Complex64, Complex64)> {
    if !(z.im > 0.0) {
        bail!(InvalidParameter, "solve_two_roots needs Im z > 0");
    }
    Ok(quadratic_roots(z, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityResult {
    /// `max` over both roots `s` of `|s − m| ∧ |s − m̂|`.
    pub lhs: f64,
    /// `3 F_z(r)`
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `|v| ∧ |v̂| ≤ 3F_z(r)` for both roots `s` of `s² + zs + 1 = R`.
pub fn stability_check(z: Complex64, big_r: Complex64, r: f64) -> Result<StabilityResult> {
    if !(z.im > 0.0) {
        bail!(InvalidParameter, "stability check needs Im z > 0");
    }
    if !(0.0..=1.0).contains(&r) {
        bail!(InvalidParameter, "r must lie in [0, 1] (r={r})");
    }
    let cap = (1.0 + z.norm()) * r;
    if big_r.norm() > cap * (1.0 + 1e-12) {
        bail!(InvalidParameter, "|R| = {} exceeds (1+|z|) r = {cap}", big_r.norm());
    }
    let (m, m_hat) = quadratic_roots(z, Complex64::new(0.0, 0.0));
    let (s1, s2) = quadratic_roots(z, big_r);
    let lhs = [s1, s2]
        .iter()
        .map(|&s| (s - m).norm().min((s - m_hat).norm()))
        .fold(0.0, f64::max);
    let rhs = 3.0 * f_envelope(z, r)?;
    Ok(StabilityResult { lhs, rhs, pass: lhs <= rhs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderReport {
    pub steps: usize,
    /// `max |s − m| / F_z(r)` along the ladder.
    pub worst_ratio: f64,
    /// Whether the tracked root stayed in the upper half-plane.
    pub stayed_upper: bool,
    pub pass: bool,
}

/// Follows the root of `s² + zs + 1 = R(η)` continuously from `η = 3` down to
/// `eta_min` on a geometric ladder, starting from the root nearest `m`.
///
/// `r` must be nonincreasing in `η` with values in `[0, 1]`, and `big_r`
/// must satisfy `|R(η)| ≤ (1+|z|) r(η)`.
pub fn branch_ladder_check<FR, FBig>(
    e: f64,
    eta_min: f64,
    steps_per_decade: usize,
    r: FR,
    big_r: FBig,
    constant: f64,
) -> Result<LadderReport>
where
    FR: Fn(f64) -> f64,
    FBig: Fn(f64) -> Complex64,
{
    const ETA_TOP: f64 = 3.0;
    if !(eta_min > 0.0 && eta_min < ETA_TOP) || steps_per_decade == 0 {
        bail!(InvalidParameter, "ladder needs 0 < eta_min < 3 and a positive step count");
    }
    let decades = (ETA_TOP / eta_min).log10();
    let steps = (decades * steps_per_decade as f64).ceil().max(1.0) as usize;
    let ratio = (eta_min / ETA_TOP).powf(1.0 / steps as f64);
    let mut prev: Option<Complex64> = None;
    let mut worst: f64 = 0.0;
    let mut stayed_upper = true;
    for k in 0..=steps {
        let eta = if k == steps { eta_min } else { ETA_TOP * ratio.powi(k as i32) };
        let z = Complex64::new(e, eta);
        let rr = r(eta);
        let rv = big_r(eta);
        if !(0.0..=1.0).contains(&rr) || rv.norm() > (1.0 + z.norm()) * rr * (1.0 + 1e-12) {
            bail!(InvalidParameter, "ladder hypotheses fail at η = {eta}");
        }
        let (m, _) = quadratic_roots(z, Complex64::new(0.0, 0.0));
        let (s1, s2) = quadratic_roots(z, rv);
        let anchor = prev.unwrap_or(m);
        let s = if (s1 - anchor).norm() <= (s2 - anchor).norm() { s1 } else { s2 };
        stayed_upper &= s.im > 0.0;
        let f = f_envelope(z, rr)?;
        let dev = (s - m).norm();
        let q = if dev == 0.0 { 0.0 } else { dev / f };
        worst = worst.max(q);
        prev = Some(s);
    }
    Ok(LadderReport { steps: steps + 1, worst_ratio: worst, stayed_upper, pass: worst <= constant })
}

/// `4 exp(−ξ/(2√2 M) · arcsinh(Mξ/(2√2 S)))`.
pub fn arcsinh_tail_bound(xi: f64, m: f64, s: f64) -> Result<f64> {
    if !(xi > 0.0 && m > 0.0 && s > 0.0) {
        bail!(InvalidParameter, "arcsinh bound needs ξ, M, S > 0");
    }
    let k = 2.0 * 2.0f64.sqrt();
    Ok(4.0 * (-xi / (k * m) * (m * xi / (k * s)).asinh()).exp())
}

/// Martingale with independent steps `±M` of probability `p_μ/2` each and
/// `0` otherwise, so that `|ΔX| ≤ M` and the conditional variance is `p_μ M²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSpec {
    pub m: f64,
    pub p: Vec<f64>,
}

impl MartingaleSpec {
    pub fn new(m: f64, p: Vec<f64>) -> Result<MartingaleSpec> {
        if !(m > 0.0) || p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            bail!(InvalidParameter, "martingale needs M > 0 and step probabilities in [0, 1]");
        }
        Ok(MartingaleSpec { m, p })
    }

    /// `S = Σ_μ s_μ` with `s_μ = p_μ M²`.
    pub fn total_variance(&self) -> f64 {
        self.p.iter().map(|p| p * self.m * self.m).sum()
    }

    pub fn sample_endpoint<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x = 0.0;
        for &p in &self.p {
            let u: f64 = rng.gen();
            if u < p / 2.0 {
                x += self.m;
            } else if u < p {
                x -= self.m;
            }
        }
        x
    }

    /// Empirical `P(|X_d − X_0| ≥ ξ)` for each `ξ` in `xis` over `runs` paths.
    pub fn empirical_tails<R: Rng + ?Sized>(&self, xis: &[f64], runs: u64, rng: &mut R) -> Vec<f64> {
        let mut hits = vec![0u64; xis.len()];
        for _ in 0..runs {
            let x = self.sample_endpoint(rng).abs();
            for (h, &xi) in hits.iter_mut().zip(xis) {
                if x >= xi {
                    *h += 1;
                }
            }
        }
        hits.iter().map(|&h| h as f64 / runs as f64).collect()
    }
}

/// Largest sizes the exact relabeling average supports.
pub const MAX_EXACT_N: usize = 8;
pub const MAX_EXACT_P: u32 = 6;

/// Exchangeable vector `Y_i = y_{π(i)}` or matrix `Y_ij = y_{π(i)π(j)}` for a
/// uniform relabeling `π`, tested against coefficients `a`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExchangeableEnsemble {
    Vector { a: Vec<f64>, y: Vec<f64> },
    /// `y` is `N × N` row-major.
    Matrix { a: Vec<f64>, y: Vec<f64> },
}

impl ExchangeableEnsemble {
    pub fn n(&self) -> usize {
        match self {
            ExchangeableEnsemble::Vector { a, .. } | ExchangeableEnsemble::Matrix { a, .. } => a.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, ylen, n) = match self {
            ExchangeableEnsemble::Vector { a, y } => (a, y.len(), a.len()),
            ExchangeableEnsemble::Matrix { a, y } => (a, y.len(), a.len() * a.len()),
        };
        if ylen != n || a.is_empty() {
            bail!(InvalidParameter, "ensemble dimensions do not match");
        }
        let scale = a.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if a.iter().sum::<f64>().abs() > 1e-12 * scale {
            bail!(InvalidParameter, "coefficients must sum to zero");
        }
        if a.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12 {
            bail!(InvalidParameter, "coefficients must satisfy Σ a_i² ≤ 1");
        }
        Ok(())
    }

    /// `X(π)` for the relabeling `π`.
    pub fn statistic(&self, pi: &[usize]) -> f64 {
        match self {
            ExchangeableEnsemble::Vector { a, y } => {
                a.iter().zip(pi).map(|(c, &k)| c * y[k]).sum()
            }
            ExchangeableEnsemble::Matrix { a, y } => {
                let n = a.len();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += a[i] * a[j] * y[pi[i] * n + pi[j]];
                    }
                }
                acc
            }
        }
    }
}

fn check_budget(n: usize, p: u32) -> Result<()> {
    if n > MAX_EXACT_N || p > MAX_EXACT_P {
        return Err(crate::error::Error::TooLarge(alloc::format!(
            "exact moments limited to N <= {MAX_EXACT_N}, p <= {MAX_EXACT_P} (N={n}, p={p})"
        )));
    }
    if p == 0 || !p.is_multiple_of(2) {
        bail!(InvalidParameter, "moment order must be even and positive (p={p})");
    }
    Ok(())
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `E X^p` averaged over all `N!` relabelings.
pub fn exchangeable_moment_exact(ens: &ExchangeableEnsemble, p: u32) -> Result<f64> {
    ens.validate()?;
    let n = ens.n();
    check_budget(n, p)?;
    let mut acc = CompensatedSum::default();
    let mut count = 0u64;
    for_each_permutation(n, |pi| {
        acc.add(ens.statistic(pi).powi(p as i32));
        count += 1;
    });
    Ok(acc.value() / count as f64)
}

/// Vector ensemble with rational data; `a = scale · a_num` where
/// `scale² = a_scale_sq`, so that irrational normalizations stay exact.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalVectorEnsemble {
    pub a_num: Vec<BigRational>,
    pub a_scale_sq: BigRational,
    pub y: Vec<BigRational>,
}

/// Exact `E X^p` in rational arithmetic.
pub fn exchangeable_moment_rational(ens: &RationalVectorEnsemble, p: u32) -> Result<BigRational> {
    let n = ens.a_num.len();
    if ens.y.len() != n {
        bail!(InvalidParameter, "ensemble dimensions do not match");
    }
    if !ens.a_num.iter().fold(BigRational::zero(), |s, x| s + x).is_zero() {
        bail!(InvalidParameter, "coefficients must sum to zero");
    }
    check_budget(n, p)?;
    let mut total = BigRational::zero();
    let mut count = 0i64;
    for_each_permutation(n, |pi| {
        let x = ens
            .a_num
            .iter()
            .zip(pi)
            .fold(BigRational::zero(), |s, (c, &k)| s + c * &ens.y[k]);
        total += num_traits::pow(x, p as usize);
        count += 1;
    });
    let scale = num_traits::pow(ens.a_scale_sq.clone(), (p / 2) as usize);
    Ok(total * scale / BigRational::from_integer(BigInt::from(count)))
}

/// Monte-Carlo estimate of `E X^p` with its standard error.
pub fn exchangeable_moment_mc<R: Rng + ?Sized>(
    ens: &ExchangeableEnsemble,
    p: u32,
    samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    ens.validate()?;
    if samples < 2 {
        bail!(InvalidParameter, "Monte-Carlo needs at least 2 samples");
    }
    let mut pi: Vec<usize> = (0..ens.n()).collect();
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 1..=samples {
        pi.shuffle(rng);
        let x = ens.statistic(&pi).powi(p as i32);
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok((mean, (var / samples as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs_norm: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

fn lp_mean(values: impl Iterator<Item = f64>, p: u32) -> f64 {
    let (mut acc, mut k) = (CompensatedSum::default(), 0usize);
    for v in values {
        acc.add(v.abs().powi(p as i32));
        k += 1;
    }
    (acc.value() / k as f64).powf(1.0 / p as f64)
}

fn check(lhs_norm: f64, rhs: f64) -> BoundCheck {
    let ratio = if rhs > 0.0 { lhs_norm / rhs } else if lhs_norm == 0.0 { 0.0 } else { f64::INFINITY };
    BoundCheck { lhs_norm, rhs, ratio, pass: lhs_norm <= rhs * (1.0 + 1e-12) }
}

/// `‖Σ a_i Y_i‖_p ≤ C (p²/log p) ‖Y_1‖_p`, with `‖Y_1‖_p` exact over the
/// uniform relabeling.
pub fn vector_bound_check(ens: &ExchangeableEnsemble, p: u32, c: f64) -> Result<BoundCheck> {
    let ExchangeableEnsemble::Vector { y, .. } = ens else {
        bail!(InvalidParameter, "vector bound needs a vector ensemble");
    };
    let lhs = exchangeable_moment_exact(ens, p)?.max(0.0).powf(1.0 / p as f64);
    let pf = p as f64;
    let rhs = c * (pf * pf / pf.ln()) * lp_mean(y.iter().copied(), p);
    Ok(check(lhs, rhs))
}

/// `‖Σ a_i a_j Y_ij‖_p ≤ ‖Y_11‖_p + C (p²/log p)² ‖Y_12‖_p`.
pub fn matrix_bound_check(ens: &ExchangeableEnsemble, p: u32, c: f64) -> Result<BoundCheck> {
    let ExchangeableEnsemble::Matrix { y, a } = ens else {
        bail!(InvalidParameter, "matrix bound needs a matrix ensemble");
    };
    let n = a.len();
    let lhs = exchangeable_moment_exact(ens, p)?.max(0.0).powf(1.0 / p as f64);
    let diag = lp_mean((0..n).map(|i| y[i * n + i]), p);
    let off = if n > 1 {
        lp_mean((0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| y[i * n + j]), p)
    } else {
        0.0
    };
    let pf = p as f64;
    let k = pf * pf / pf.ln();
    Ok(check(lhs, diag + c * k * k * off))
}

/// Exact rational from a ratio of integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
