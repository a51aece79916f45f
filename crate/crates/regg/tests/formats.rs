use regg::config::ExperimentConfig;
use regg::csvio::{fmt_f64, law_table, parse_law_table, Table, CSV_VERSION};
use regg::edgelist::{read_edge_list, write_edge_list};
use regg::manifest::{CheckResult, RunManifest};
use regg::svg::{Plot, Series};
use regg_core::graph_models::{sample, ModelKind, MultiGraph};
use regg_core::law_harness::{law_sweep, EnvelopeChoice, ModelParams, SweepPlan};
use regg_core::rng::trial_rng;

#[test]
fn config_rejects_unknown_keys() {
    assert!(ExperimentConfig::from_toml("[graph]\nn = 10\n").is_ok());
    assert!(ExperimentConfig::from_toml("[graph]\nsize = 10\n").is_err());
    assert!(ExperimentConfig::from_toml("[nonsense]\n").is_err());
    let e = ExperimentConfig::from_toml("[graph]\nn = \"ten\"\n").unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn config_merge_and_resolve() {
    let mut base = ExperimentConfig::from_toml("[graph]\nn = 500\nd = 4\n[lawsweep]\nxi = 3.0\n").unwrap();
    let over = ExperimentConfig::from_toml("[graph]\nd = 8\n").unwrap();
    base.merge(&over);
    assert_eq!((base.graph.n, base.graph.d), (Some(500), Some(8)));
    base.resolve();
    assert_eq!(base.lawsweep.xi, Some(3.0));
    assert_eq!(base.lawsweep.eta_min, Some(64.0 / 500.0));
    assert_eq!(base.eigen.interval_size, Some(50));
    assert_eq!(base.eigen.que, Some(true));
    let text = base.to_toml();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), base);
}

#[test]
fn resolve_keeps_explicit_eigen_selection() {
    let mut c = ExperimentConfig::from_toml("[eigen]\nque = true\n").unwrap();
    c.resolve();
    assert_eq!((c.eigen.que, c.eigen.deloc, c.eigen.intervals), (Some(true), Some(false), Some(false)));
}

#[test]
fn csv_version_is_checked() {
    let mut t = Table::new("demo", &["a", "b"]);
    t.push(vec!["1".into(), "x,y".into()]);
    let bytes = t.to_bytes();
    assert!(String::from_utf8_lossy(&bytes).starts_with(&format!("# regg-csv v{CSV_VERSION} demo\n")));
    assert_eq!(Table::from_bytes(&bytes).unwrap(), t);
    let future = String::from_utf8(bytes).unwrap().replacen("v1", "v2", 1);
    assert!(Table::from_bytes(future.as_bytes()).is_err());
    assert!(Table::from_bytes(b"a,b\n1,2\n").is_err());
}

#[test]
fn floats_round_trip() {
    for x in [0.0, 1.0, -2.4, 0.1 + 0.2, 1e-7, 3.5e20, f64::MIN_POSITIVE, 12345.678] {
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x, "{x}");
    }
}

#[test]
fn law_table_round_trips() {
    let plan = SweepPlan {
        energies: vec![-1.0, 0.5],
        etas: vec![0.5, 0.25],
        samples: 2,
        envelope: EnvelopeChoice::Phi,
        xi: 4.0,
        pair_count: 100,
        eta_floor: 0.01,
    };
    let recs = law_sweep(&plan, &ModelParams::new(ModelKind::Uniform, 40, 4), 3).unwrap();
    let t = law_table(&recs);
    let back = parse_law_table(&Table::from_bytes(&t.to_bytes()).unwrap(), EnvelopeChoice::Phi).unwrap();
    assert_eq!(back, recs);
}

#[test]
fn edge_list_round_trip_with_loops_and_multi_edges() {
    let mut rng = trial_rng(4, 0);
    for model in [ModelKind::Configuration, ModelKind::Permutation, ModelKind::Matching] {
        let g = sample(model, 12, 4, &mut rng).unwrap();
        let text = write_edge_list(&g, model, 4);
        let (h, back) = read_edge_list(&text).unwrap();
        assert_eq!(h.model, model);
        assert_eq!(back, g);
    }
    let loops = MultiGraph::from_edges(2, &[(0, 0), (1, 1), (0, 1), (0, 1)]).unwrap();
    assert_eq!(read_edge_list(&write_edge_list(&loops, ModelKind::Configuration, 0)).unwrap().1, loops);
}

#[test]
fn edge_list_rejects_bad_input() {
    assert!(read_edge_list("").is_err());
    assert!(read_edge_list("3 2 matching\n").is_err());
    assert!(read_edge_list("3 2 cubes 0\n0 1 1\n").is_err());
    assert!(read_edge_list("3 2 uniform 0\n0 5 1\n").is_err());
    assert!(read_edge_list("3 2 uniform 0\n0 1\n").is_err());
    // degrees do not match the header
    assert!(read_edge_list("3 2 uniform 0\n0 1 1\n").is_err());
}

#[test]
fn manifest_json_round_trip() {
    let mut cfg = ExperimentConfig::from_toml("[graph]\nmodel = \"uniform\"\nn = 10\nd = 3\n").unwrap();
    cfg.resolve();
    let mut m = RunManifest::new("sample", &cfg);
    m.checks.push(CheckResult::at_most("x", 1.0, 2.0));
    m.outputs.push("graph.edges".into());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join(RunManifest::file_name("sample"));
    std::fs::write(&p, m.to_json()).unwrap();
    let back = RunManifest::load(&p).unwrap();
    assert_eq!(back, m);
    assert!(back.passed());
    assert!(m.to_json().contains("\"N\": 10"));
}

#[test]
fn svg_has_axes_and_series() {
    let plot = Plot {
        title: "a < b".into(),
        x_label: "E".into(),
        y_label: "err".into(),
        log_x: false,
        log_y: true,
        series: vec![
            Series { name: "one".into(), points: vec![(0.0, 1e-3), (1.0, 1e-1), (2.0, 0.0)] },
            Series { name: "two".into(), points: vec![(0.0, 2e-2), (2.0, 3e-2)] },
        ],
    };
    let s = plot.render();
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    assert_eq!(s.matches("<polyline").count(), 2);
    assert!(s.contains("a &lt; b"));
    assert!(s.contains("1e-3"));
}
