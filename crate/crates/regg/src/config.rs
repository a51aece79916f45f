//! TOML experiment configuration. Every key is optional; command-line flags
//! are merged on top and `resolve` fills in the remaining defaults.

use std::path::Path;

use regg_core::graph_models::ModelKind;
use regg_core::spectral_core::{xi_default, zeta_default, DEFAULT_PAIR_COUNT};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SEED_ENV: &str = "REGG_SEED";

macro_rules! merge_fields {
    ($dst:expr, $src:expr, $($f:ident),+ $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )+
    };
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub graph: GraphSection,
    pub invariance: InvarianceSection,
    pub lawsweep: LawSection,
    pub eigen: EigenSection,
    pub stability: StabilitySection,
    pub acceptance: AcceptanceSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    pub model: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    /// `auto`, `rejection` or `chain`
    pub uniform_method: Option<String>,
    pub rejection_budget: Option<u64>,
    pub chain_moves: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvarianceSection {
    pub exact: Option<bool>,
    pub samples: Option<u64>,
    pub tv_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LawSection {
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub e_step: Option<f64>,
    pub eta_max: Option<f64>,
    pub eta_min: Option<f64>,
    pub eta_floor: Option<f64>,
    pub samples: Option<u64>,
    /// `phi` or `psi`
    pub envelope: Option<String>,
    pub xi: Option<f64>,
    pub pair_count: Option<usize>,
    /// `include` or `exclude` out-of-regime records when fitting constants
    pub flag_policy: Option<String>,
    /// Constant `C` in the domain condition `η ≥ C ξ²/N`.
    pub domain_constant: Option<f64>,
    pub svg: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSection {
    pub samples: Option<u64>,
    pub intervals: Option<bool>,
    pub deloc: Option<bool>,
    pub que: Option<bool>,
    pub isotropic: Option<bool>,
    pub window: Option<f64>,
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub bin_width: Option<f64>,
    /// `h` for the centered matrix, `a` for `A/√(d−1)`
    pub spectrum: Option<String>,
    pub interval_size: Option<usize>,
    pub iso_vectors: Option<usize>,
    pub iso_e: Option<f64>,
    pub iso_eta: Option<f64>,
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    /// Subset of `quadratic`, `ladder`, `arcsinh`, `exchangeable`.
    pub checks: Option<Vec<String>>,
    pub points: Option<usize>,
    pub ladder_eta_min: Option<f64>,
    pub ladder_steps_per_decade: Option<usize>,
    pub martingale_runs: Option<u64>,
    pub martingale_steps: Option<usize>,
    pub martingale_m: Option<f64>,
    pub martingale_p: Option<f64>,
    pub moment_n: Option<usize>,
    pub moment_samples: Option<u64>,
    pub moment_ensembles: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcceptanceSection {
    pub law_constant: Option<f64>,
    pub scaling_factor: Option<f64>,
    pub deloc_constant: Option<f64>,
    pub que_constant: Option<f64>,
    pub iso_constant: Option<f64>,
    pub km_tolerance: Option<f64>,
    pub ladder_constant: Option<f64>,
    pub moment_constant: Option<f64>,
    pub moment_se: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Overwrites every key that is set in `over`.
    pub fn merge(&mut self, over: &ExperimentConfig) {
        merge_fields!(self.run, over.run, seed, workers);
        merge_fields!(self.graph, over.graph, model, n, d, uniform_method, rejection_budget, chain_moves);
        merge_fields!(self.invariance, over.invariance, exact, samples, tv_tolerance);
        merge_fields!(
            self.lawsweep, over.lawsweep, e_min, e_max, e_step, eta_max, eta_min, eta_floor, samples,
            envelope, xi, pair_count, flag_policy, domain_constant, svg,
        );
        merge_fields!(
            self.eigen, over.eigen, samples, intervals, deloc, que, isotropic, window, bin_lo, bin_hi,
            bin_width, spectrum, interval_size, iso_vectors, iso_e, iso_eta, xi, zeta,
        );
        merge_fields!(
            self.stability, over.stability, checks, points, ladder_eta_min, ladder_steps_per_decade,
            martingale_runs, martingale_steps, martingale_m, martingale_p, moment_n, moment_samples,
            moment_ensembles,
        );
        merge_fields!(
            self.acceptance, over.acceptance, law_constant, scaling_factor, deloc_constant,
            que_constant, iso_constant, km_tolerance, ladder_constant, moment_constant, moment_se,
        );
    }

    /// Seed from the config, else `REGG_SEED`, else 0.
    pub fn seed_with_env(&mut self) -> Result<(), CliError> {
        if self.run.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                let seed = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a u64")))?;
                self.run.seed = Some(seed);
            }
        }
        Ok(())
    }

    /// Fills every unset key with its default. Defaults that depend on `N`
    /// are filled only when `N` is known.
    pub fn resolve(&mut self) {
        let r = &mut self.run;
        r.seed.get_or_insert(0);
        r.workers.get_or_insert(1);

        let g = &mut self.graph;
        g.uniform_method.get_or_insert_with(|| "auto".into());
        g.rejection_budget.get_or_insert(regg_core::graph_models::DEFAULT_REJECTION_BUDGET);
        let n = g.n;

        let i = &mut self.invariance;
        i.exact.get_or_insert(false);
        i.samples.get_or_insert(100_000);
        i.tv_tolerance.get_or_insert(0.05);

        let l = &mut self.lawsweep;
        l.e_min.get_or_insert(-2.4);
        l.e_max.get_or_insert(2.4);
        l.e_step.get_or_insert(0.2);
        l.eta_max.get_or_insert(1.0);
        l.samples.get_or_insert(5);
        l.envelope.get_or_insert_with(|| "phi".into());
        l.pair_count.get_or_insert(DEFAULT_PAIR_COUNT);
        l.flag_policy.get_or_insert_with(|| "exclude".into());
        l.domain_constant.get_or_insert(100.0);
        l.svg.get_or_insert(false);
        if let Some(n) = n {
            l.eta_min.get_or_insert(64.0 / n as f64);
            l.eta_floor.get_or_insert(1.0 / n as f64);
            l.xi.get_or_insert(xi_default(n));
        }

        let e = &mut self.eigen;
        e.samples.get_or_insert(1);
        let none = e.intervals.is_none() && e.deloc.is_none() && e.que.is_none() && e.isotropic.is_none();
        e.intervals.get_or_insert(none);
        e.deloc.get_or_insert(none);
        e.que.get_or_insert(none);
        e.isotropic.get_or_insert(none);
        e.window.get_or_insert(regg_core::eigen_observables::DEFAULT_K);
        e.bin_lo.get_or_insert(-2.2);
        e.bin_hi.get_or_insert(2.2);
        e.bin_width.get_or_insert(0.1);
        e.spectrum.get_or_insert_with(|| "h".into());
        e.iso_vectors.get_or_insert(20);
        e.iso_e.get_or_insert(0.5);
        e.iso_eta.get_or_insert(0.05);
        if let Some(n) = n {
            e.interval_size.get_or_insert((n / 10).max(1));
            let xi = *e.xi.get_or_insert(xi_default(n));
            e.zeta.get_or_insert(zeta_default(xi));
        }

        let s = &mut self.stability;
        s.checks.get_or_insert_with(|| {
            ["quadratic", "ladder", "arcsinh", "exchangeable"].iter().map(|x| x.to_string()).collect()
        });
        s.points.get_or_insert(10_000);
        s.ladder_eta_min.get_or_insert(1e-4);
        s.ladder_steps_per_decade.get_or_insert(20);
        s.martingale_runs.get_or_insert(1_000_000);
        s.martingale_steps.get_or_insert(50);
        s.martingale_m.get_or_insert(1.0);
        s.martingale_p.get_or_insert(0.3);
        s.moment_n.get_or_insert(7);
        s.moment_samples.get_or_insert(1_000_000);
        s.moment_ensembles.get_or_insert(4);

        let a = &mut self.acceptance;
        a.law_constant.get_or_insert(10.0);
        a.scaling_factor.get_or_insert(2.0);
        a.deloc_constant.get_or_insert(10.0);
        a.que_constant.get_or_insert(10.0);
        a.iso_constant.get_or_insert(10.0);
        a.km_tolerance.get_or_insert(0.03);
        a.ladder_constant.get_or_insert(10.0);
        a.moment_constant.get_or_insert(16.0);
        a.moment_se.get_or_insert(4.0);
    }

    pub fn model(&self) -> Result<ModelKind, CliError> {
        let name = self.graph.model.as_deref().ok_or_else(|| CliError::Usage("--model is required".into()))?;
        ModelKind::parse(name).ok_or_else(|| CliError::Usage(format!("unknown model {name:?}")))
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.graph.n.ok_or_else(|| CliError::Usage("--n is required".into()))
    }

    pub fn d(&self) -> Result<usize, CliError> {
        self.graph.d.ok_or_else(|| CliError::Usage("--d is required".into()))
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.run.workers.unwrap_or(1).max(1)
    }
}
