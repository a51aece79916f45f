//! Monte-Carlo sweeps of the local law envelopes and the dyadic `Γ` ladder.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods shadow it once std is linked
use num_traits::Float;

use crate::error::{bail, Error, Result};
use crate::graph_models::{self, ModelKind, MultiGraph, UniformMethod};
use crate::rng::{aux_rng, trial_rng};
use crate::spectral_core::{
    build_h, f_envelope_extended, gamma, m_semicircle, phi_envelope, psi_envelope,
    EnvelopeParams, PairSample, ResolventView, SpectralPoint,
};

/// Stream tag for the off-diagonal pair sample.
pub const PAIR_STREAM: u64 = 0x5041_4952;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvelopeChoice {
    Phi,
    Psi,
}

impl EnvelopeChoice {
    pub fn name(self) -> &'static str {
        match self {
            EnvelopeChoice::Phi => "phi",
            EnvelopeChoice::Psi => "psi",
        }
    }

    pub fn parse(s: &str) -> Option<EnvelopeChoice> {
        match s {
            "phi" => Some(EnvelopeChoice::Phi),
            "psi" => Some(EnvelopeChoice::Psi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub energies: Vec<f64>,
    pub etas: Vec<f64>,
    pub samples: u64,
    pub envelope: EnvelopeChoice,
    pub xi: f64,
    pub pair_count: usize,
    pub eta_floor: f64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.energies.is_empty() || self.etas.is_empty() {
            bail!(InvalidParameter, "sweep grids must be nonempty");
        }
        if self.energies.iter().any(|e| !e.is_finite()) {
            bail!(InvalidParameter, "energies must be finite");
        }
        if let Some(eta) = self.etas.iter().find(|&&eta| !(eta > 0.0) || eta < self.eta_floor) {
            bail!(InvalidParameter, "η = {eta} is below the floor {}", self.eta_floor);
        }
        if !(self.xi > 1.0) {
            bail!(InvalidParameter, "ξ must exceed 1 (ξ={})", self.xi);
        }
        Ok(())
    }
}

/// `lo, lo + step, …` up to `hi` inclusive, rounded to kill drift.
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect()
}

/// `2^{-k}` for `k = 0..=k_max`.
pub fn dyadic_grid(k_max: u32) -> Vec<f64> {
    (0..=k_max).map(|k| 0.5f64.powi(k as i32)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub model: ModelKind,
    pub n: usize,
    pub d: usize,
    pub uniform_method: UniformMethod,
}

impl ModelParams {
    pub fn new(model: ModelKind, n: usize, d: usize) -> ModelParams {
        ModelParams { model, n, d, uniform_method: UniformMethod::Auto }
    }

    /// Graph of trial `trial` under `seed`.
    pub fn sample(&self, seed: u64, trial: u64) -> Result<MultiGraph> {
        let mut rng = trial_rng(seed, trial);
        match self.model {
            ModelKind::Uniform => {
                graph_models::sample_uniform(self.n, self.d, self.uniform_method, &mut rng)
            }
            m => graph_models::sample(m, self.n, self.d, &mut rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct RegimeFlags {
    pub d_below_one: bool,
    pub xi_phi_above_one: bool,
}

impl RegimeFlags {
    pub fn any(self) -> bool {
        self.d_below_one || self.xi_phi_above_one
    }

    /// `ok`, or reason codes joined by `|`.
    pub fn code(self) -> String {
        let mut parts = Vec::new();
        if self.d_below_one {
            parts.push("d_below_one");
        }
        if self.xi_phi_above_one {
            parts.push("xi_phi_above_one");
        }
        if parts.is_empty() { String::from("ok") } else { parts.join("|") }
    }

    pub fn parse(s: &str) -> Option<RegimeFlags> {
        let mut f = RegimeFlags::default();
        if s == "ok" {
            return Some(f);
        }
        for p in s.split('|') {
            match p {
                "d_below_one" => f.d_below_one = true,
                "xi_phi_above_one" => f.xi_phi_above_one = true,
                _ => return None,
            }
        }
        Some(f)
    }
}

/// Measurements at one `(sample, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LawRecord {
    pub model: ModelKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub trial: u64,
    pub e: f64,
    pub eta: f64,
    pub max_diag_err: f64,
    pub max_offdiag: f64,
    pub s_minus_m: f64,
    /// `Γ(z)` over the diagonal and the sampled pairs.
    pub gamma: f64,
    pub phi: f64,
    pub f_xi_phi: f64,
    pub psi: f64,
    pub envelope: EnvelopeChoice,
    pub flags: RegimeFlags,
}

impl LawRecord {
    /// Envelope for `max |G_ii - m|` and `|s - m|`.
    pub fn diag_envelope(&self) -> f64 {
        match self.envelope {
            EnvelopeChoice::Phi => self.f_xi_phi,
            EnvelopeChoice::Psi => f_envelope_extended(self.z(), self.psi),
        }
    }

    /// Envelope for `max |G_ij|`, `i ≠ j`.
    pub fn offdiag_envelope(&self, xi: f64) -> f64 {
        match self.envelope {
            EnvelopeChoice::Phi => xi * self.phi,
            EnvelopeChoice::Psi => self.psi,
        }
    }

    pub fn z(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.e, self.eta)
    }
}

/// Identifies where records came from.
#[derive(Debug, Clone, Copy)]
pub struct RecordMeta {
    pub model: ModelKind,
    pub d: usize,
    pub seed: u64,
    pub trial: u64,
}

/// Evaluates every grid point of `plan` on one decomposed sample.
pub fn records_for_view(
    view: &ResolventView,
    plan: &SweepPlan,
    meta: RecordMeta,
    pairs: &PairSample,
) -> Result<Vec<LawRecord>> {
    let n = view.n();
    let params = EnvelopeParams::for_model(meta.model, n, meta.d, plan.xi)?;
    let mut out = Vec::with_capacity(plan.energies.len() * plan.etas.len());
    for &e in &plan.energies {
        for &eta in &plan.etas {
            let pt = SpectralPoint::new(e, eta)?;
            let z = pt.z();
            let m = m_semicircle(z)?;
            let w = view.weights(z);
            let diag = view.diagonal_with(&w);
            let max_diag_err = diag.iter().map(|g| (g - m).norm()).fold(0.0, f64::max);
            let max_diag = diag.iter().map(|g| g.norm()).fold(0.0, f64::max);
            let max_offdiag = view.max_offdiag_with(&w, pairs);
            let s: num_complex::Complex64 =
                diag.iter().sum::<num_complex::Complex64>() / n as f64;
            let phi = phi_envelope(pt, &params);
            let xi_phi = plan.xi * phi.value;
            let flags = RegimeFlags {
                d_below_one: phi.warning.is_some(),
                xi_phi_above_one: xi_phi > 1.0,
            };
            out.push(LawRecord {
                model: meta.model,
                n,
                d: meta.d,
                seed: meta.seed,
                trial: meta.trial,
                e,
                eta,
                max_diag_err,
                max_offdiag,
                s_minus_m: (s - m).norm(),
                gamma: max_diag.max(max_offdiag).max(1.0),
                phi: phi.value,
                f_xi_phi: f_envelope_extended(z, xi_phi),
                psi: psi_envelope(pt, &params, m),
                envelope: plan.envelope,
                flags,
            });
        }
    }
    Ok(out)
}

/// Records of a single trial; deterministic in `(seed, trial)`.
pub fn law_sweep_trial(
    plan: &SweepPlan,
    params: &ModelParams,
    seed: u64,
    trial: u64,
) -> Result<Vec<LawRecord>> {
    plan.validate()?;
    let graph = params.sample(seed, trial)?;
    let view = ResolventView::from_hamiltonian(&build_h(&graph)?)?;
    let pairs = PairSample::new(params.n, plan.pair_count, &mut aux_rng(seed, trial, PAIR_STREAM));
    let meta = RecordMeta { model: params.model, d: params.d, seed, trial };
    records_for_view(&view, plan, meta, &pairs)
}

/// All trials in order.
pub fn law_sweep(plan: &SweepPlan, params: &ModelParams, seed: u64) -> Result<Vec<LawRecord>> {
    plan.validate()?;
    let mut out = Vec::new();
    for trial in 0..plan.samples {
        out.extend(law_sweep_trial(plan, params, seed, trial)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicStep {
    pub k: u32,
    pub eta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicReport {
    pub e: f64,
    pub steps: Vec<DyadicStep>,
    /// `min_k (2Γ_k − Γ_{k+1})`; `+∞` for a single step.
    pub min_slack: f64,
    pub violations: usize,
}

/// `Γ(E + iη_k)` for `η_k = N/2^k`, `k = 0..=k_max`, checking
/// `Γ_{k+1} ≤ 2Γ_k` on each consecutive pair.
pub fn dyadic_scan(
    view: &ResolventView,
    e: f64,
    k_max: u32,
    pairs: &PairSample,
) -> Result<DyadicReport> {
    let n = view.n() as f64;
    if k_max as f64 > 4.0 * n.log2() {
        bail!(InvalidParameter, "k_max = {k_max} exceeds 4 log2 N");
    }
    let mut steps = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let eta = n / 2f64.powi(k as i32);
        steps.push(DyadicStep { k, eta, gamma: gamma(view, SpectralPoint::new(e, eta)?, pairs) });
    }
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    for w in steps.windows(2) {
        let slack = 2.0 * w[0].gamma - w[1].gamma;
        min_slack = min_slack.min(slack);
        if slack < 0.0 {
            violations += 1;
        }
    }
    Ok(DyadicReport { e, steps, min_slack, violations })
}

/// Checks `Γ(E + iη/2) ≤ 2Γ(E + iη)` on every pair of records from the same
/// trial and energy whose `η` differ by exactly a factor 2. Returns
/// `(pairs checked, violations)`.
pub fn ladder_violations(records: &[LawRecord]) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&records[a], &records[b]);
        (x.seed, x.trial)
            .cmp(&(y.seed, y.trial))
            .then(x.e.total_cmp(&y.e))
            .then(y.eta.total_cmp(&x.eta))
    });
    let (mut checked, mut bad) = (0, 0);
    for w in idx.windows(2) {
        let (hi, lo) = (&records[w[0]], &records[w[1]]);
        let same = hi.seed == lo.seed && hi.trial == lo.trial && hi.e == lo.e;
        if same && lo.eta * 2.0 == hi.eta {
            checked += 1;
            if lo.gamma > 2.0 * hi.gamma {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlagPolicy {
    ExcludeFlagged,
    IncludeFlagged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConstants {
    pub c_diag: f64,
    pub c_offdiag: f64,
    pub c_s: f64,
    pub records_used: usize,
}

/// Nearest-rank percentile of an unsorted sample, `q ∈ (0, 1]`.
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = (q * values.len() as f64).ceil() as usize;
    values[rank.clamp(1, values.len()) - 1]
}

fn ratio(err: f64, env: f64) -> f64 {
    if err == 0.0 { 0.0 } else { err / env }
}

/// 99th-percentile ratio of each statistic to its envelope.
pub fn fit_envelope_constant(
    records: &[LawRecord],
    xi: f64,
    policy: FlagPolicy,
) -> Result<EnvelopeConstants> {
    let used: Vec<&LawRecord> = records
        .iter()
        .filter(|r| policy == FlagPolicy::IncludeFlagged || !r.flags.any())
        .collect();
    if used.is_empty() {
        return Err(Error::InvalidParameter(alloc::format!(
            "insufficient data: {} records, none usable under {policy:?}",
            records.len()
        )));
    }
    let mut diag: Vec<f64> = used.iter().map(|r| ratio(r.max_diag_err, r.diag_envelope())).collect();
    let mut off: Vec<f64> =
        used.iter().map(|r| ratio(r.max_offdiag, r.offdiag_envelope(xi))).collect();
    let mut s: Vec<f64> = used.iter().map(|r| ratio(r.s_minus_m, r.diag_envelope())).collect();
    Ok(EnvelopeConstants {
        c_diag: percentile(&mut diag, 0.99),
        c_offdiag: percentile(&mut off, 0.99),
        c_s: percentile(&mut s, 0.99),
        records_used: used.len(),
    })
}
