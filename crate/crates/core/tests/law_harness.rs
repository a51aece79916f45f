use proptest::prelude::*;
use regg_core::graph_models::*;
use regg_core::law_harness::*;
use regg_core::rng::trial_rng;
use regg_core::spectral_core::*;

fn plan(samples: u64) -> SweepPlan {
    SweepPlan {
        energies: linear_grid(-2.4, 2.4, 0.4),
        etas: dyadic_grid(5),
        samples,
        envelope: EnvelopeChoice::Phi,
        xi: xi_default(120),
        pair_count: DEFAULT_PAIR_COUNT,
        eta_floor: 1e-6,
    }
}

fn record(err: f64, env: f64) -> LawRecord {
    LawRecord {
        model: ModelKind::Permutation,
        n: 100,
        d: 4,
        seed: 0,
        trial: 0,
        e: 0.0,
        eta: 1.0,
        max_diag_err: err,
        max_offdiag: err,
        s_minus_m: err,
        gamma: 1.0,
        phi: env,
        f_xi_phi: env,
        psi: env,
        envelope: EnvelopeChoice::Phi,
        flags: RegimeFlags::default(),
    }
}

#[test]
fn grids() {
    let g = linear_grid(-2.4, 2.4, 0.2);
    assert_eq!(g.len(), 25);
    assert_eq!(g[0], -2.4);
    assert_eq!(g[12], 0.0);
    assert_eq!(g[24], 2.4);
    assert_eq!(dyadic_grid(3), vec![1.0, 0.5, 0.25, 0.125]);
}

#[test]
fn plan_validation() {
    let mut p = plan(1);
    assert!(p.validate().is_ok());
    p.etas.clear();
    assert!(p.validate().is_err());
    let mut p = plan(1);
    p.eta_floor = 0.1;
    assert!(p.validate().is_err());
    let mut p = plan(1);
    p.etas.push(0.0);
    p.eta_floor = 0.0;
    assert!(p.validate().is_err());
    let mut p = plan(1);
    p.xi = 1.0;
    assert!(p.validate().is_err());
}

#[test]
fn zero_sample_plan_is_empty() {
    let params = ModelParams::new(ModelKind::Permutation, 120, 6);
    assert!(law_sweep(&plan(0), &params, 1).unwrap().is_empty());
}

#[test]
fn sweep_records_and_invariants() {
    let params = ModelParams::new(ModelKind::Permutation, 120, 6);
    let p = plan(2);
    let recs = law_sweep(&p, &params, 3).unwrap();
    assert_eq!(recs.len(), 2 * p.energies.len() * p.etas.len());
    for r in &recs {
        assert!(r.max_diag_err >= 0.0 && r.max_offdiag >= 0.0 && r.s_minus_m >= 0.0);
        assert!(r.max_offdiag <= 1.0 / r.eta + 1.0);
        assert!(r.max_diag_err <= 1.0 / r.eta + 1.0);
        assert!(r.s_minus_m <= r.max_diag_err + 1e-15);
        assert!(r.gamma >= 1.0);
        assert!((r.diag_envelope() - r.f_xi_phi).abs() == 0.0);
        // ξΦ > 1 is flagged, not dropped
        assert_eq!(r.flags.xi_phi_above_one, p.xi * r.phi > 1.0);
    }
    assert_eq!(recs, law_sweep(&p, &params, 3).unwrap());
    assert_ne!(recs, law_sweep(&p, &params, 4).unwrap());
    assert_eq!(recs[recs.len() / 2..], law_sweep_trial(&p, &params, 3, 1).unwrap()[..]);
}

#[test]
fn base_scale_is_trivial() {
    let n = 150;
    let params = ModelParams::new(ModelKind::Matching, n, 4);
    let mut p = plan(1);
    p.etas = vec![n as f64];
    for r in law_sweep(&p, &params, 5).unwrap() {
        assert_eq!(r.gamma, 1.0);
        let m = m_semicircle(r.z()).unwrap();
        assert!(r.max_diag_err <= m.norm() + 1.0);
        assert!(r.max_diag_err <= 2.0);
    }
}

#[test]
fn regime_flag_codes() {
    let none = RegimeFlags::default();
    assert_eq!(none.code(), "ok");
    let both = RegimeFlags { d_below_one: true, xi_phi_above_one: true };
    assert_eq!(both.code(), "d_below_one|xi_phi_above_one");
    for f in [none, both, RegimeFlags { d_below_one: true, xi_phi_above_one: false }] {
        assert_eq!(RegimeFlags::parse(&f.code()), Some(f));
    }
    assert_eq!(RegimeFlags::parse("bogus"), None);
    assert_eq!(EnvelopeChoice::parse("psi"), Some(EnvelopeChoice::Psi));
    assert_eq!(EnvelopeChoice::parse(EnvelopeChoice::Phi.name()), Some(EnvelopeChoice::Phi));
}

#[test]
fn out_of_regime_uniform_is_flagged() {
    // D = N²/d³ < 1
    let params = ModelParams::new(ModelKind::Uniform, 60, 20);
    let mut p = plan(1);
    p.energies = vec![0.0];
    let recs = law_sweep(&p, &params, 6).unwrap();
    assert!(recs.iter().all(|r| r.flags.d_below_one));
}

fn relabel(g: &MultiGraph, perm: &[usize]) -> MultiGraph {
    let n = g.n();
    let mut adj = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            adj[perm[i] * n + perm[j]] = g.get(i, j);
        }
    }
    MultiGraph::from_adjacency(n, adj).unwrap()
}

#[test]
fn statistics_invariant_under_relabeling() {
    let n = 90;
    let g = sample(ModelKind::Permutation, n, 6, &mut trial_rng(7, 0)).unwrap();
    let perm = Permutation::uniform(n, &mut trial_rng(7, 1));
    let h = relabel(&g, perm.as_slice());
    let p = plan(1);
    let pairs = PairSample::all(n);
    let meta = RecordMeta { model: ModelKind::Permutation, d: 6, seed: 0, trial: 0 };
    let a = records_for_view(&ResolventView::from_hamiltonian(&build_h(&g).unwrap()).unwrap(), &p, meta, &pairs).unwrap();
    let b = records_for_view(&ResolventView::from_hamiltonian(&build_h(&h).unwrap()).unwrap(), &p, meta, &pairs).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let tol = 1e-10 * (1.0 + 1.0 / x.eta);
        assert!((x.max_diag_err - y.max_diag_err).abs() <= tol);
        assert!((x.max_offdiag - y.max_offdiag).abs() <= tol);
        assert!((x.s_minus_m - y.s_minus_m).abs() <= tol);
    }
}

#[test]
fn dyadic_scan_zero_matrix() {
    let n = 16;
    let h = Hamiltonian::from_dense(n, 2, vec![0.0; n * n]).unwrap();
    let v = ResolventView::from_hamiltonian(&h).unwrap();
    let rep = dyadic_scan(&v, 0.0, 10, &PairSample::all(n)).unwrap();
    for s in &rep.steps {
        assert!((s.gamma - (1.0f64).max(1.0 / s.eta)).abs() < 1e-12);
    }
    for w in rep.steps.windows(2) {
        assert!(w[1].gamma <= 2.0 * w[0].gamma + 1e-12);
    }
    assert_eq!(rep.violations, 0);
    let single = dyadic_scan(&v, 0.0, 0, &PairSample::all(n)).unwrap();
    assert_eq!(single.steps.len(), 1);
    assert_eq!(single.min_slack, f64::INFINITY);
    assert!(dyadic_scan(&v, 0.0, 17, &PairSample::all(n)).is_err());
}

#[test]
fn dyadic_scan_random_instances() {
    for seed in 0..3 {
        let g = sample(ModelKind::Permutation, 200, 8, &mut trial_rng(seed, 0)).unwrap();
        let v = ResolventView::from_hamiltonian(&build_h(&g).unwrap()).unwrap();
        let k_max = (4.0 * 200f64.log2()).floor() as u32;
        for e in [-2.3, -1.0, 0.0, 1.9] {
            let rep = dyadic_scan(&v, e, k_max, &PairSample::all(200)).unwrap();
            assert_eq!(rep.violations, 0);
            assert!(rep.min_slack >= 0.0);
        }
    }
}

#[test]
fn ladder_on_sweep_records() {
    let params = ModelParams::new(ModelKind::Permutation, 120, 6);
    let recs = law_sweep(&plan(2), &params, 8).unwrap();
    let (checked, bad) = ladder_violations(&recs);
    assert_eq!(checked, 2 * 13 * 5);
    assert_eq!(bad, 0);
    let mut broken = recs.clone();
    let idx = broken.iter().position(|r| r.eta == 0.5).unwrap();
    broken[idx].gamma = 1e9;
    assert_eq!(ladder_violations(&broken).1, 1);
}

#[test]
fn fit_examples() {
    let zero: Vec<_> = (0..10).map(|_| record(0.0, 0.5)).collect();
    let c = fit_envelope_constant(&zero, 2.0, FlagPolicy::ExcludeFlagged).unwrap();
    assert_eq!((c.c_diag, c.c_offdiag, c.c_s), (0.0, 0.0, 0.0));
    let one = [record(0.02, 0.01)];
    let c = fit_envelope_constant(&one, 1.0, FlagPolicy::ExcludeFlagged).unwrap();
    assert!((c.c_diag - 2.0).abs() < 1e-15);
    assert!((c.c_offdiag - 2.0).abs() < 1e-15);
    assert_eq!(c.records_used, 1);
    let mut flagged = record(0.02, 0.01);
    flagged.flags.xi_phi_above_one = true;
    assert!(fit_envelope_constant(&[flagged.clone()], 1.0, FlagPolicy::ExcludeFlagged).is_err());
    assert!(fit_envelope_constant(&[], 1.0, FlagPolicy::IncludeFlagged).is_err());
    let c = fit_envelope_constant(&[flagged], 1.0, FlagPolicy::IncludeFlagged).unwrap();
    assert_eq!(c.records_used, 1);
}

#[test]
fn psi_choice_uses_f_of_psi() {
    let mut r = record(0.01, 0.3);
    r.envelope = EnvelopeChoice::Psi;
    assert_eq!(r.diag_envelope(), f_envelope_extended(r.z(), 0.3));
    assert_eq!(r.offdiag_envelope(100.0), 0.3);
}

proptest! {
    #[test]
    fn percentile_is_nearest_rank(mut v in prop::collection::vec(-1e3f64..1e3, 1..300), q in 0.01f64..1.0) {
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let p = percentile(&mut v, q);
        let below = sorted.iter().filter(|&&x| x <= p).count();
        let strictly = sorted.iter().filter(|&&x| x < p).count();
        // smallest value with at least a fraction q of the sample at or below it
        prop_assert!(below as f64 >= q * sorted.len() as f64 - 1e-9);
        prop_assert!((strictly as f64) < q * sorted.len() as f64 + 1e-9);
    }
}
