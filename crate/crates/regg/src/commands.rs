//! Subcommand implementations. Each writes its data files and a manifest
//! into the output directory and returns the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use regg_core::eigen_observables::{
    binned_fractions, delocalization_stats, interval_count, isotropic_envelope, isotropic_error,
    que_statistic, TestVector,
};
use regg_core::graph_models::{
    enumerate_matchings, enumerate_simple_regular, Matching, ModelKind, Permutation, UniformMethod,
};
use regg_core::law_harness::{
    dyadic_grid, fit_envelope_constant, ladder_violations, law_sweep_trial, linear_grid,
    EnvelopeChoice, FlagPolicy, LawRecord, ModelParams, SweepPlan,
};
use regg_core::linalg::symmetric_eigenvalues;
use regg_core::local_resampling::{
    edge_key, mm_exact_step_counts, mm_resample, pm_exact_step_counts, pm_switch,
    um_exact_transitions, um_resample,
};
use regg_core::rng::{aux_rng, trial_rng};
use regg_core::spectral_core::{
    build_h, kesten_mckay_mass, EnvelopeParams, ResolventView, SpectralPoint,
};
use regg_core::stability_concentration::{
    arcsinh_tail_bound, branch_ladder_check, exchangeable_moment_exact, exchangeable_moment_mc,
    matrix_bound_check, stability_check, vector_bound_check, ExchangeableEnsemble, MartingaleSpec,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::csvio::{fmt_f64, law_table, Table};
use crate::edgelist::write_edge_list;
use crate::error::CliError;
use crate::manifest::{CheckResult, GridSpec, RunManifest};
use crate::pool::map_trials;
use crate::svg::{Plot, Series};

pub const COMMANDS: [&str; 5] = ["sample", "invariance", "lawsweep", "eigen", "stability"];

const ISO_STREAM: u64 = 0x49534f;
const QUAD_STREAM: u64 = 0x51554144;
const MART_STREAM: u64 = 0x4d415254;
const MOMENT_STREAM: u64 = 0x4d4f4d;

pub const LADDER_ENERGIES: [f64; 8] = [-2.5, -2.0, -1.0, 0.0, 0.5, 1.99, 2.01, 3.0];
pub const LADDER_PHASES: [f64; 4] = [0.0, 1.0, 2.5, 4.0];
pub const MOMENT_ORDERS: [u32; 3] = [2, 4, 6];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Out<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl Out<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.notes.insert(key.into(), value.to_string());
    }

    fn check(&mut self, c: CheckResult) {
        self.manifest.checks.push(c);
    }

    fn finish(self, command: &str) -> Result<RunManifest, CliError> {
        let path = self.dir.join(RunManifest::file_name(command));
        fs::write(&path, self.manifest.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}

/// Runs `command` under `cfg` (defaults filled in) and writes its outputs
/// into `out`.
pub fn execute(command: &str, cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest, CliError> {
    let mut cfg = cfg.clone();
    cfg.resolve();
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut o = Out { dir: out, manifest: RunManifest::new(command, &cfg) };
    match command {
        "sample" => sample(&cfg, &mut o)?,
        "invariance" => invariance(&cfg, &mut o)?,
        "lawsweep" => lawsweep(&cfg, &mut o)?,
        "eigen" => eigen(&cfg, &mut o)?,
        "stability" => stability(&cfg, &mut o)?,
        other => return Err(usage(format!("unknown command {other:?}"))),
    }
    o.finish(command)
}

pub fn uniform_method(cfg: &ExperimentConfig) -> Result<UniformMethod, CliError> {
    let g = &cfg.graph;
    match g.uniform_method.as_deref().unwrap_or("auto") {
        "auto" => Ok(UniformMethod::Auto),
        "rejection" => Ok(UniformMethod::Rejection {
            max_tries: g.rejection_budget.unwrap_or(regg_core::graph_models::DEFAULT_REJECTION_BUDGET),
        }),
        "chain" => Ok(UniformMethod::SwitchingChain { moves: g.chain_moves }),
        other => Err(usage(format!("unknown uniform method {other:?}"))),
    }
}

fn model_params(cfg: &ExperimentConfig) -> Result<ModelParams, CliError> {
    let (model, n, d) = (cfg.model()?, cfg.n()?, cfg.d()?);
    model.check_parameters(n, d)?;
    let mut p = ModelParams::new(model, n, d);
    p.uniform_method = uniform_method(cfg)?;
    Ok(p)
}

fn method_name(m: UniformMethod) -> String {
    match m {
        UniformMethod::Auto => "auto".into(),
        UniformMethod::Rejection { max_tries } => format!("rejection(max_tries={max_tries})"),
        UniformMethod::SwitchingChain { moves: Some(k) } => format!("chain(moves={k})"),
        UniformMethod::SwitchingChain { moves: None } => "chain(moves=10nd)".into(),
    }
}

fn sample(cfg: &ExperimentConfig, o: &mut Out) -> Result<(), CliError> {
    let params = model_params(cfg)?;
    let seed = cfg.seed();
    let g = params.sample(seed, 0)?;
    o.write("graph.edges", write_edge_list(&g, params.model, seed).as_bytes())?;
    o.note("edges", g.edges().iter().map(|e| e.2 as u64).sum::<u64>());
    o.note("simple", g.is_simple());
    if params.model == ModelKind::Uniform {
        o.note("uniform_method", method_name(params.uniform_method.resolve(params.n, params.d)));
    }
    Ok(())
}

#[derive(Serialize)]
struct InvarianceReport {
    model: String,
    n: usize,
    d: Option<usize>,
    method: &'static str,
    states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_equal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    count_min: u64,
    count_max: u64,
    count_total: u64,
}

fn tv_to_uniform<K>(counts: &BTreeMap<K, u64>, states: usize, samples: u64) -> f64 {
    let u = 1.0 / states as f64;
    let seen: f64 = counts.values().map(|&c| (c as f64 / samples as f64 - u).abs()).sum();
    0.5 * (seen + (states - counts.len()) as f64 * u)
}

fn embedded_permutation(rest: &Permutation) -> Permutation {
    let mut map = vec![1, 0];
    map.extend(rest.as_slice().iter().map(|&x| x + 2));
    Permutation::new(map).expect("valid embedding")
}

fn invariance(cfg: &ExperimentConfig, o: &mut Out) -> Result<(), CliError> {
    let model = cfg.model()?;
    let n = cfg.n()?;
    let exact = cfg.invariance.exact.unwrap_or(false);
    let samples = cfg.invariance.samples.unwrap_or(100_000);
    let mut rng = trial_rng(cfg.seed(), 0);

    // per-state counts after one step from the uniform law
    let states: usize;
    let counts: Vec<u64>;
    let mut tv = None;
    match model {
        ModelKind::Matching => {
            let all = enumerate_matchings(n)?;
            states = all.len();
            if exact {
                counts = mm_exact_step_counts(n)?.into_values().collect();
            } else {
                let mut c: BTreeMap<Matching, u64> = BTreeMap::new();
                for _ in 0..samples {
                    let pi = Matching::uniform(n, &mut rng)?;
                    *c.entry(mm_resample(&pi, &mut rng)?.0).or_default() += 1;
                }
                tv = Some(tv_to_uniform(&c, states, samples));
                counts = c.into_values().collect();
            }
        }
        ModelKind::Permutation => {
            if n < 2 {
                return Err(usage("permutation invariance needs n >= 2"));
            }
            states = regg_core::graph_models::enumerate_permutations(n)?.len();
            if exact {
                counts = pm_exact_step_counts(n)?.into_values().collect();
            } else {
                let mut c: BTreeMap<Permutation, u64> = BTreeMap::new();
                for _ in 0..samples {
                    let pi = embedded_permutation(&Permutation::uniform(n - 2, &mut rng));
                    let ap = rng.gen_range(0..n);
                    let [am, bp, bm] = [(); 3].map(|_| rng.gen_range(1..n));
                    *c.entry(pm_switch(&pi, ap, am, bp, bm)?).or_default() += 1;
                }
                tv = Some(tv_to_uniform(&c, states, samples));
                counts = c.into_values().collect();
            }
        }
        ModelKind::Uniform => {
            let d = cfg.d()?;
            let all = enumerate_simple_regular(n, d)?;
            states = all.len();
            let mut c: BTreeMap<u128, u64> = BTreeMap::new();
            if exact {
                for g in &all {
                    for (k, w) in um_exact_transitions(g)? {
                        *c.entry(k).or_default() += w;
                    }
                }
            } else {
                for _ in 0..samples {
                    let g = &all[rng.gen_range(0..states)];
                    *c.entry(edge_key(&um_resample(g, &mut rng)?.graph)?).or_default() += 1;
                }
                tv = Some(tv_to_uniform(&c, states, samples));
            }
            counts = c.into_values().collect();
        }
        ModelKind::Configuration => {
            return Err(CliError::precondition(
                "the configuration model has no local resampling step to check",
            ))
        }
    }

    let count_min = if counts.len() < states { 0 } else { counts.iter().copied().min().unwrap_or(0) };
    let count_max = counts.iter().copied().max().unwrap_or(0);
    let report = InvarianceReport {
        model: model.name().into(),
        n,
        d: cfg.graph.d,
        method: if exact { "exact" } else { "monte-carlo" },
        states,
        exact_equal: exact.then_some(count_min == count_max && count_max > 0),
        tv_distance: tv,
        samples: (!exact).then_some(samples),
        count_min,
        count_max,
        count_total: counts.iter().sum(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    o.write("invariance.json", text.as_bytes())?;
    if exact {
        o.check(CheckResult::at_most("count_spread", (count_max - count_min) as f64, 0.0));
    } else {
        let tol = cfg.invariance.tv_tolerance.unwrap_or(0.05);
        o.manifest.tolerances.insert("tv_tolerance".into(), tol);
        o.check(CheckResult::at_most("tv_distance", tv.unwrap_or(f64::MAX), tol));
    }
    Ok(())
}

/// Dyadic heights `eta_max · 2^{-k}` that stay at or above `eta_min`.
pub fn dyadic_etas(eta_max: f64, eta_min: f64) -> Vec<f64> {
    let k_max = ((eta_max / eta_min).log2() + 1e-9).floor().max(0.0) as u32;
    dyadic_grid(k_max).into_iter().map(|t| t * eta_max).collect()
}

pub fn sweep_plan(cfg: &ExperimentConfig) -> Result<SweepPlan, CliError> {
    let l = &cfg.lawsweep;
    let req = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("lawsweep.{name} is unset")));
    let envelope = l.envelope.as_deref().unwrap_or("phi");
    Ok(SweepPlan {
        energies: linear_grid(req(l.e_min, "e_min")?, req(l.e_max, "e_max")?, req(l.e_step, "e_step")?),
        etas: dyadic_etas(req(l.eta_max, "eta_max")?, req(l.eta_min, "eta_min")?),
        samples: l.samples.unwrap_or(1),
        envelope: EnvelopeChoice::parse(envelope)
            .ok_or_else(|| usage(format!("unknown envelope {envelope:?}")))?,
        xi: req(l.xi, "xi")?,
        pair_count: l.pair_count.unwrap_or(regg_core::spectral_core::DEFAULT_PAIR_COUNT),
        eta_floor: req(l.eta_floor, "eta_floor")?,
    })
}

pub fn flag_policy(cfg: &ExperimentConfig) -> Result<FlagPolicy, CliError> {
    match cfg.lawsweep.flag_policy.as_deref().unwrap_or("exclude") {
        "exclude" => Ok(FlagPolicy::ExcludeFlagged),
        "include" => Ok(FlagPolicy::IncludeFlagged),
        other => Err(usage(format!("unknown flag policy {other:?}"))),
    }
}

/// Law records of every trial, merged in trial order.
pub fn sweep_records(
    plan: &SweepPlan,
    params: &ModelParams,
    seed: u64,
    workers: usize,
) -> Result<Vec<LawRecord>, CliError> {
    plan.validate()?;
    let per = map_trials(workers, plan.samples, |t| Ok(law_sweep_trial(plan, params, seed, t)?))?;
    Ok(per.into_iter().flatten().collect())
}

fn lawsweep(cfg: &ExperimentConfig, o: &mut Out) -> Result<(), CliError> {
    let params = model_params(cfg)?;
    let plan = sweep_plan(cfg)?;
    let policy = flag_policy(cfg)?;
    let records = sweep_records(&plan, &params, cfg.seed(), cfg.workers())?;
    o.write("lawsweep.csv", &law_table(&records).to_bytes())?;

    o.manifest.grid = Some(GridSpec { energies: plan.energies.clone(), etas: plan.etas.clone() });
    o.manifest.xi = Some(plan.xi);
    let limit = cfg.acceptance.law_constant.unwrap_or(10.0);
    o.manifest.acceptance_constants.insert("law_constant".into(), limit);

    let flagged = records.iter().filter(|r| r.flags.any()).count();
    let c = cfg.lawsweep.domain_constant.unwrap_or(100.0);
    let floor = c * plan.xi * plan.xi / params.n as f64;
    o.note("records", records.len());
    o.note("flagged", flagged);
    o.note("in_domain", records.iter().filter(|r| r.eta >= floor).count());
    o.note("flag_policy", cfg.lawsweep.flag_policy.as_deref().unwrap_or("exclude"));

    match fit_envelope_constant(&records, plan.xi, policy) {
        Ok(k) => {
            o.note("records_used", k.records_used);
            o.check(CheckResult::at_most("c_diag", k.c_diag, limit));
            o.check(CheckResult::at_most("c_offdiag", k.c_offdiag, limit));
            o.check(CheckResult::at_most("c_s", k.c_s, limit));
        }
        Err(e) => {
            o.note("fit_error", e);
            o.check(CheckResult { name: "fit".into(), value: 0.0, limit, pass: false });
        }
    }
    let (checked, bad) = ladder_violations(&records);
    o.note("ladder_pairs", checked);
    o.check(CheckResult::at_most("ladder_violations", bad as f64, 0.0));

    if cfg.lawsweep.svg.unwrap_or(false) {
        o.write("lawsweep.svg", law_plot(&plan, &records).render().as_bytes())?;
    }
    Ok(())
}

/// Worst diagonal error over trials against its envelope, one curve pair
/// per `η`.
fn law_plot(plan: &SweepPlan, records: &[LawRecord]) -> Plot {
    let mut series = Vec::new();
    for &eta in &plan.etas {
        let at = |e: f64| records.iter().filter(move |r| r.eta == eta && r.e == e);
        let err = plan
            .energies
            .iter()
            .map(|&e| (e, at(e).map(|r| r.max_diag_err).fold(0.0, f64::max)))
            .collect();
        let env = plan
            .energies
            .iter()
            .map(|&e| (e, at(e).map(|r| r.diag_envelope()).fold(0.0, f64::max)))
            .collect();
        series.push(Series { name: format!("err η={}", fmt_f64(eta)), points: err });
        series.push(Series { name: format!("env η={}", fmt_f64(eta)), points: env });
    }
    Plot {
        title: format!("max |G_ii - m| vs envelope ({})", plan.envelope.name()),
        x_label: "E".into(),
        y_label: "error".into(),
        log_x: false,
        log_y: true,
        series,
    }
}

struct EigenTrial {
    intervals: Vec<Vec<String>>,
    km_l1: f64,
    deloc: Option<(f64, f64)>,
    que: Vec<Vec<String>>,
    que_max: f64,
    iso: Vec<Vec<String>>,
    iso_max: f64,
}

fn eigen_trial(cfg: &ExperimentConfig, params: &ModelParams, trial: u64) -> Result<EigenTrial, CliError> {
    let e = &cfg.eigen;
    let (n, d, seed) = (params.n, params.d, cfg.seed());
    let xi = e.xi.unwrap_or_else(|| regg_core::spectral_core::xi_default(n));
    let g = params.sample(seed, trial)?;
    let h = build_h(&g)?;
    let need_vectors = e.deloc.unwrap_or(false) || e.que.unwrap_or(false) || e.isotropic.unwrap_or(false);
    let view = if need_vectors { Some(ResolventView::from_hamiltonian(&h)?) } else { None };
    let mut t = EigenTrial {
        intervals: Vec::new(),
        km_l1: 0.0,
        deloc: None,
        que: Vec::new(),
        que_max: 0.0,
        iso: Vec::new(),
        iso_max: 0.0,
    };

    if e.intervals.unwrap_or(false) {
        let spectrum = match e.spectrum.as_deref().unwrap_or("h") {
            "h" => match &view {
                Some(v) => v.eigenvalues().to_vec(),
                None => symmetric_eigenvalues(h.data(), n)?,
            },
            "a" => {
                let s = 1.0 / ((d - 1) as f64).sqrt();
                let a: Vec<f64> = g.adjacency().iter().map(|&x| x as f64 * s).collect();
                symmetric_eigenvalues(&a, n)?
            }
            other => return Err(usage(format!("unknown spectrum {other:?}"))),
        };
        let env = EnvelopeParams::for_model(params.model, n, d, xi)?;
        let edges = linear_grid(e.bin_lo.unwrap_or(-2.2), e.bin_hi.unwrap_or(2.2), e.bin_width.unwrap_or(0.1));
        let nu = binned_fractions(&spectrum, &edges);
        let k = e.window.unwrap_or(regg_core::eigen_observables::DEFAULT_K);
        for (w, &frac) in edges.windows(2).zip(&nu) {
            let ic = interval_count(&spectrum, w[0], w[1], &env, k)?;
            let km = kesten_mckay_mass(w[0], w[1], d)?;
            t.km_l1 += (frac - km).abs();
            t.intervals.push(vec![
                trial.to_string(),
                fmt_f64(w[0]),
                fmt_f64(w[1]),
                fmt_f64(frac),
                fmt_f64(ic.rho),
                fmt_f64(km),
                fmt_f64(ic.kappa),
                fmt_f64(ic.bound_bulk),
                fmt_f64(ic.bound_edge),
            ]);
        }
    }

    let Some(view) = view else { return Ok(t) };
    if e.deloc.unwrap_or(false) {
        let s = delocalization_stats(&view);
        t.deloc = Some((s.max_inf_norm, s.normalized));
    }
    if e.que.unwrap_or(false) {
        let size = e.interval_size.unwrap_or((n / 10).max(1));
        if size == 0 || size > n {
            return Err(usage(format!("interval size {size} must lie in 1..={n}")));
        }
        let set: Vec<usize> = (0..size).collect();
        let a = TestVector::indicator(n, &set)?;
        for alpha in 0..n {
            let q = que_statistic(&view, &a, alpha)?;
            t.que_max = t.que_max.max(q.abs());
            t.que.push(vec![
                trial.to_string(),
                alpha.to_string(),
                fmt_f64(view.eigenvalues()[alpha]),
                fmt_f64(q),
            ]);
        }
    }
    if e.isotropic.unwrap_or(false) {
        let zeta = e.zeta.unwrap_or_else(|| regg_core::spectral_core::zeta_default(xi));
        let pt = SpectralPoint::new(e.iso_e.unwrap_or(0.5), e.iso_eta.unwrap_or(0.05))?;
        let env = EnvelopeParams::for_model(params.model, n, d, xi)?;
        let bound = isotropic_envelope(pt, &env, zeta);
        let mut rng = aux_rng(seed, trial, ISO_STREAM);
        let count = e.iso_vectors.unwrap_or(20).max(1);
        let vs: Vec<TestVector> = (0..count).map(|_| TestVector::random_unit_perp(n, &mut rng)).collect();
        for k in 0..count {
            for (l, kind) in [(k, "same"), ((k + 1) % count, "next")] {
                let err = isotropic_error(&view, pt.z(), &vs[k], &vs[l])?;
                t.iso_max = t.iso_max.max(err.norm() / bound);
                t.iso.push(vec![
                    trial.to_string(),
                    k.to_string(),
                    kind.into(),
                    fmt_f64(err.re),
                    fmt_f64(err.im),
                    fmt_f64(err.norm()),
                    fmt_f64(bound),
                ]);
            }
        }
    }
    Ok(t)
}

fn eigen(cfg: &ExperimentConfig, o: &mut Out) -> Result<(), CliError> {
    let params = model_params(cfg)?;
    let e = &cfg.eigen;
    let n = params.n;
    let trials = e.samples.unwrap_or(1);
    let results = map_trials(cfg.workers(), trials, |t| eigen_trial(cfg, &params, t))?;
    let ln = (n as f64).ln();
    let acc = &cfg.acceptance;
    o.manifest.xi = e.xi;
    o.manifest.zeta = e.zeta;

    if e.intervals.unwrap_or(false) {
        let mut t = Table::new(
            "eigen-intervals",
            &["trial", "a", "b", "nu", "rho_sc", "rho_km", "kappa", "bound_bulk", "bound_edge"],
        );
        results.iter().flat_map(|r| r.intervals.iter().cloned()).for_each(|row| t.push(row));
        o.write("eigen_intervals.csv", &t.to_bytes())?;
        let tol = acc.km_tolerance.unwrap_or(0.03);
        let mean = results.iter().map(|r| r.km_l1).sum::<f64>() / results.len().max(1) as f64;
        o.manifest.tolerances.insert("km_tolerance".into(), tol);
        o.note("spectrum", e.spectrum.as_deref().unwrap_or("h"));
        o.check(CheckResult::at_most("km_l1_mean", mean, tol));
    }
    if e.deloc.unwrap_or(false) {
        let c = acc.deloc_constant.unwrap_or(10.0);
        let limit = c * ln * ln;
        let mut t = Table::new("eigen-deloc", &["trial", "max_abs_entry", "n_max_sq", "limit"]);
        let mut worst: f64 = 0.0;
        for (k, r) in results.iter().enumerate() {
            let (inf, norm) = r.deloc.expect("deloc computed");
            worst = worst.max(norm);
            t.push(vec![k.to_string(), fmt_f64(inf), fmt_f64(norm), fmt_f64(limit)]);
        }
        o.write("eigen_deloc.csv", &t.to_bytes())?;
        o.manifest.acceptance_constants.insert("deloc_constant".into(), c);
        o.check(CheckResult::at_most("deloc_n_max_sq", worst, limit));
    }
    if e.que.unwrap_or(false) {
        let c = acc.que_constant.unwrap_or(10.0);
        let size = e.interval_size.unwrap_or((n / 10).max(1)) as f64;
        let limit = c * ln.powi(4) * size.sqrt() / n as f64;
        let mut t = Table::new("eigen-que", &["trial", "alpha", "lambda", "stat"]);
        results.iter().flat_map(|r| r.que.iter().cloned()).for_each(|row| t.push(row));
        o.write("eigen_que.csv", &t.to_bytes())?;
        o.manifest.acceptance_constants.insert("que_constant".into(), c);
        let worst = results.iter().map(|r| r.que_max).fold(0.0, f64::max);
        o.check(CheckResult::at_most("que_max_abs", worst, limit));
    }
    if e.isotropic.unwrap_or(false) {
        let c = acc.iso_constant.unwrap_or(10.0);
        let mut t = Table::new("eigen-isotropic", &["trial", "k", "pair", "re", "im", "abs", "envelope"]);
        results.iter().flat_map(|r| r.iso.iter().cloned()).for_each(|row| t.push(row));
        o.write("eigen_isotropic.csv", &t.to_bytes())?;
        o.manifest.acceptance_constants.insert("iso_constant".into(), c);
        let worst = results.iter().map(|r| r.iso_max).fold(0.0, f64::max);
        o.check(CheckResult::at_most("isotropic_ratio", worst, c));
    }
    Ok(())
}

#[derive(Serialize)]
struct StabilityRow {
    check: String,
    params: Value,
    lhs: f64,
    rhs: f64,
    pass: bool,
    seed: u64,
}

/// Random `(z, R, r)` with `|R| ≤ (1+|z|) r`.
pub fn random_stability_point<R: Rng + ?Sized>(rng: &mut R) -> (Complex64, Complex64, f64) {
    let e = rng.gen_range(-5.0..=5.0);
    let eta = 10f64.powf(rng.gen_range(-4.0..=3f64.log10()));
    let z = Complex64::new(e, eta);
    let r: f64 = rng.gen_range(0.0..=1.0);
    let rad = (1.0 + z.norm()) * r * rng.gen::<f64>().sqrt();
    let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    (z, Complex64::from_polar(rad, phase), r)
}

/// Centered unit coefficients and base values for test ensemble `j`:
/// even `j` gives a vector ensemble, odd `j` a matrix ensemble.
pub fn test_ensemble(n: usize, seed: u64, j: u64) -> ExchangeableEnsemble {
    let mut rng = aux_rng(seed, j, MOMENT_STREAM);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a: Vec<f64> = centered.iter().map(|x| x / norm).collect();
    if j.is_multiple_of(2) {
        ExchangeableEnsemble::Vector { a, y: (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect() }
    } else {
        ExchangeableEnsemble::Matrix { a, y: (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect() }
    }
}

fn stability(cfg: &ExperimentConfig, o: &mut Out) -> Result<(), CliError> {
    let s = &cfg.stability;
    let seed = cfg.seed();
    let checks = s.checks.clone().unwrap_or_default();
    for c in &checks {
        if !["quadratic", "ladder", "arcsinh", "exchangeable"].contains(&c.as_str()) {
            return Err(usage(format!("unknown stability check {c:?}")));
        }
    }
    let wants = |name: &str| checks.iter().any(|c| c == name);
    let mut rows = Vec::new();
    let mut row = |check: &str, params: Value, lhs: f64, rhs: f64, pass: bool| {
        rows.push(StabilityRow { check: check.into(), params, lhs, rhs, pass, seed });
    };

    if wants("quadratic") {
        let points = s.points.unwrap_or(10_000);
        let mut rng = aux_rng(seed, 0, QUAD_STREAM);
        let (mut worst, mut fails) = (0.0f64, 0usize);
        for _ in 0..points {
            let (z, big_r, r) = random_stability_point(&mut rng);
            let res = stability_check(z, big_r, r)?;
            if res.rhs > 0.0 {
                worst = worst.max(res.lhs / res.rhs);
            }
            fails += usize::from(!res.pass);
        }
        row("quadratic", json!({ "points": points, "failures": fails }), worst, 1.0, fails == 0);
        o.check(CheckResult::at_most("quadratic_failures", fails as f64, 0.0));
    }

    if wants("ladder") {
        let eta_min = s.ladder_eta_min.unwrap_or(1e-4);
        let spd = s.ladder_steps_per_decade.unwrap_or(20);
        let c = cfg.acceptance.ladder_constant.unwrap_or(10.0);
        let mut worst: f64 = 0.0;
        for &e in &LADDER_ENERGIES {
            for &phase in &LADDER_PHASES {
                let r = |eta: f64| (0.02 / eta.sqrt()).min(1.0);
                let big_r = |eta: f64| {
                    let z = Complex64::new(e, eta);
                    Complex64::from_polar((1.0 + z.norm()) * r(eta), phase + eta)
                };
                let rep = branch_ladder_check(e, eta_min, spd, r, big_r, c)?;
                worst = worst.max(rep.worst_ratio);
                row(
                    "ladder",
                    json!({ "E": e, "phase": phase, "eta_min": eta_min, "steps": rep.steps, "stayed_upper": rep.stayed_upper }),
                    rep.worst_ratio,
                    c,
                    rep.pass,
                );
            }
        }
        o.manifest.acceptance_constants.insert("ladder_constant".into(), c);
        o.check(CheckResult::at_most("ladder_worst_ratio", worst, c));
    }

    if wants("arcsinh") {
        let m = s.martingale_m.unwrap_or(1.0);
        let steps = s.martingale_steps.unwrap_or(50);
        let p = s.martingale_p.unwrap_or(0.3);
        let runs = s.martingale_runs.unwrap_or(1_000_000);
        let spec = MartingaleSpec::new(m, vec![p; steps])?;
        let var = spec.total_variance();
        let xis: Vec<f64> = (1..=20).map(|k| k as f64 * m).collect();
        let tails = spec.empirical_tails(&xis, runs, &mut aux_rng(seed, 0, MART_STREAM));
        let mut excess = f64::NEG_INFINITY;
        for (&xi, &tail) in xis.iter().zip(&tails) {
            let bound = arcsinh_tail_bound(xi, m, var)?;
            excess = excess.max(tail - bound);
            row("arcsinh", json!({ "xi": xi, "M": m, "S": var, "runs": runs }), tail, bound, tail <= bound);
        }
        o.check(CheckResult::at_most("arcsinh_excess", excess, 0.0));
    }

    if wants("exchangeable") {
        let n = s.moment_n.unwrap_or(7);
        let samples = s.moment_samples.unwrap_or(1_000_000);
        let c = cfg.acceptance.moment_constant.unwrap_or(16.0);
        let k_se = cfg.acceptance.moment_se.unwrap_or(4.0);
        let (mut worst_z, mut worst_bound) = (0.0f64, 0.0f64);
        for j in 0..s.moment_ensembles.unwrap_or(4) as u64 {
            let ens = test_ensemble(n, seed, j);
            let kind = if j.is_multiple_of(2) { "vector" } else { "matrix" };
            let mut rng = trial_rng(seed ^ MOMENT_STREAM, j);
            for p in MOMENT_ORDERS {
                let exact = exchangeable_moment_exact(&ens, p)?;
                let (mean, se) = exchangeable_moment_mc(&ens, p, samples, &mut rng)?;
                let dev = (mean - exact).abs();
                worst_z = worst_z.max(if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::MAX });
                let prm = json!({ "ensemble": j, "kind": kind, "n": n, "p": p, "exact": exact, "mean": mean, "se": se });
                row("moment_mc", prm, dev, k_se * se, dev <= k_se * se);
                let b = if j.is_multiple_of(2) { vector_bound_check(&ens, p, c)? } else { matrix_bound_check(&ens, p, c)? };
                worst_bound = worst_bound.max(b.ratio);
                row(&format!("{kind}_bound"), json!({ "ensemble": j, "n": n, "p": p, "C": c }), b.lhs_norm, b.rhs, b.pass);
            }
        }
        o.manifest.acceptance_constants.insert("moment_constant".into(), c);
        o.manifest.tolerances.insert("moment_se".into(), k_se);
        o.check(CheckResult::at_most("moment_mc_z", worst_z, k_se));
        o.check(CheckResult::at_most("moment_bound_ratio", worst_bound, 1.0));
    }

    let text = serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n";
    o.write("stability.json", text.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub file: String,
    pub command: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub runs: Vec<ReportEntry>,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Collects every `*.manifest.json` in `dir`, sorted by file name.
pub fn report(dir: &Path) -> Result<Report, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|f| f.to_str()).is_some_and(|f| f.ends_with(".manifest.json")))
        .collect();
    files.sort();
    let mut runs = Vec::new();
    for f in files {
        let m = RunManifest::load(&f)?;
        runs.push(ReportEntry {
            file: f.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            command: m.command.clone(),
            passed: m.passed(),
            checks: m.checks,
        });
    }
    let passed = runs.iter().filter(|r| r.passed).count();
    Ok(Report { total: runs.len(), failed: runs.len() - passed, passed, runs })
}

/// Re-executes the run recorded in `manifest_path` into `out`. With `verify`,
/// every data file must match the original next to the manifest byte for byte.
pub fn rerun(manifest_path: &Path, out: &Path, verify: bool) -> Result<RunManifest, CliError> {
    let old = RunManifest::load(manifest_path)?;
    let src = manifest_path.parent().unwrap_or(Path::new("."));
    if verify && fs::canonicalize(src).ok() == fs::canonicalize(out).ok() {
        return Err(usage("rerun --verify needs an output directory other than the original"));
    }
    let new = execute(&old.command, &old.config, out)?;
    if verify {
        let mut differs = Vec::new();
        for name in &old.outputs {
            let (a, b) = (src.join(name), out.join(name));
            let x = fs::read(&a).map_err(|e| CliError::io(&a, e))?;
            let y = fs::read(&b).map_err(|e| CliError::io(&b, e))?;
            if x != y {
                differs.push(name.clone());
            }
        }
        if old.outputs != new.outputs {
            differs.push("output list".into());
        }
        if !differs.is_empty() {
            return Err(CliError::Acceptance(format!("rerun differs: {}", differs.join(", "))));
        }
    }
    Ok(new)
}
