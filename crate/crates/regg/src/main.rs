use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regg::commands;
use regg::config::ExperimentConfig;
use regg::error::CliError;

#[derive(Parser)]
#[command(name = "regg", version, about = "Random regular graph local-law experiments")]
struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for independent trials.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct GraphArgs {
    /// permutation, matching, configuration or uniform
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Falls back to REGG_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw one graph and write it as an edge list.
    Sample {
        #[command(flatten)]
        graph: GraphArgs,
        /// auto, rejection or chain
        #[arg(long)]
        uniform_method: Option<String>,
        #[arg(long)]
        rejection_budget: Option<u64>,
        #[arg(long)]
        chain_moves: Option<u64>,
    },
    /// Check that one resampling step preserves the uniform law.
    Invariance {
        #[command(flatten)]
        graph: GraphArgs,
        /// Enumerate every state instead of sampling.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        tv_tolerance: Option<f64>,
    },
    /// Resolvent errors against the local-law envelopes over a grid of z.
    Lawsweep {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, allow_hyphen_values = true)]
        e_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        e_max: Option<f64>,
        #[arg(long)]
        e_step: Option<f64>,
        #[arg(long)]
        eta_max: Option<f64>,
        #[arg(long)]
        eta_min: Option<f64>,
        #[arg(long)]
        eta_floor: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        /// phi or psi
        #[arg(long)]
        envelope: Option<String>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        pairs: Option<usize>,
        /// include or exclude
        #[arg(long)]
        flag_policy: Option<String>,
        #[arg(long)]
        domain_constant: Option<f64>,
        #[arg(long)]
        svg: bool,
    },
    /// Eigenvalue counts, delocalization, QUE and isotropic errors.
    Eigen {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        intervals: bool,
        #[arg(long)]
        deloc: bool,
        #[arg(long)]
        que: bool,
        #[arg(long)]
        isotropic: bool,
        /// h or a
        #[arg(long)]
        spectrum: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        bin_lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        bin_hi: Option<f64>,
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long)]
        interval_size: Option<usize>,
        #[arg(long)]
        iso_vectors: Option<usize>,
        #[arg(long)]
        xi: Option<f64>,
    },
    /// Deterministic and simulated checks of the scalar estimates.
    Stability {
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of quadratic, ladder, arcsinh, exchangeable.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        martingale_runs: Option<u64>,
        #[arg(long)]
        moment_samples: Option<u64>,
    },
    /// Summarize every manifest in a directory.
    Report {
        /// Defaults to --out.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Exit 3 if any check failed.
        #[arg(long)]
        strict: bool,
    },
    /// Re-execute the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Require byte-identical data files.
        #[arg(long)]
        verify: bool,
    },
}

fn graph_overlay(c: &mut ExperimentConfig, g: GraphArgs) {
    c.graph.model = g.model;
    c.graph.n = g.n;
    c.graph.d = g.d;
    c.run.seed = g.seed;
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut over = ExperimentConfig::default();
    over.run.workers = cli.workers;
    let name = match cli.command {
        Cmd::Sample { graph, uniform_method, rejection_budget, chain_moves } => {
            graph_overlay(&mut over, graph);
            over.graph.uniform_method = uniform_method;
            over.graph.rejection_budget = rejection_budget;
            over.graph.chain_moves = chain_moves;
            "sample"
        }
        Cmd::Invariance { graph, exact, samples, tv_tolerance } => {
            graph_overlay(&mut over, graph);
            let i = &mut over.invariance;
            (i.exact, i.samples, i.tv_tolerance) = (flag(exact), samples, tv_tolerance);
            "invariance"
        }
        Cmd::Lawsweep {
            graph,
            e_min,
            e_max,
            e_step,
            eta_max,
            eta_min,
            eta_floor,
            samples,
            envelope,
            xi,
            pairs,
            flag_policy,
            domain_constant,
            svg,
        } => {
            graph_overlay(&mut over, graph);
            let l = &mut over.lawsweep;
            (l.e_min, l.e_max, l.e_step) = (e_min, e_max, e_step);
            (l.eta_max, l.eta_min, l.eta_floor) = (eta_max, eta_min, eta_floor);
            (l.samples, l.envelope, l.xi, l.pair_count) = (samples, envelope, xi, pairs);
            (l.flag_policy, l.domain_constant, l.svg) = (flag_policy, domain_constant, flag(svg));
            "lawsweep"
        }
        Cmd::Eigen {
            graph,
            samples,
            intervals,
            deloc,
            que,
            isotropic,
            spectrum,
            bin_lo,
            bin_hi,
            bin_width,
            interval_size,
            iso_vectors,
            xi,
        } => {
            graph_overlay(&mut over, graph);
            let e = &mut over.eigen;
            e.samples = samples;
            (e.intervals, e.deloc, e.que, e.isotropic) = (flag(intervals), flag(deloc), flag(que), flag(isotropic));
            (e.spectrum, e.bin_lo, e.bin_hi, e.bin_width) = (spectrum, bin_lo, bin_hi, bin_width);
            (e.interval_size, e.iso_vectors, e.xi) = (interval_size, iso_vectors, xi);
            "eigen"
        }
        Cmd::Stability { seed, checks, points, martingale_runs, moment_samples } => {
            over.run.seed = seed;
            let s = &mut over.stability;
            (s.checks, s.points, s.martingale_runs, s.moment_samples) = (checks, points, martingale_runs, moment_samples);
            "stability"
        }
        Cmd::Report { dir, strict } => {
            let dir = dir.unwrap_or(cli.out);
            let report = commands::report(&dir)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            print!("{text}");
            if report.total > 0 {
                let path = dir.join("report.json");
                std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
            }
            if strict && report.failed > 0 {
                return Err(CliError::Acceptance(format!("{} of {} runs failed", report.failed, report.total)));
            }
            return Ok(());
        }
        Cmd::Rerun { manifest, verify } => {
            let m = commands::rerun(&manifest, &cli.out, verify)?;
            eprintln!("{}: {} outputs in {}", m.command, m.outputs.len(), cli.out.display());
            return Ok(());
        }
    };
    cfg.merge(&over);
    cfg.seed_with_env()?;
    let m = commands::execute(name, &cfg, &cli.out)?;
    for c in &m.checks {
        eprintln!("{} {} = {} (limit {})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.limit);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
