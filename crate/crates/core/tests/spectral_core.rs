use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use regg_core::graph_models::*;
use regg_core::rng::trial_rng;
use regg_core::spectral_core::*;
use regg_core::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complete(n: usize) -> MultiGraph {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            e.push((i, j));
        }
    }
    MultiGraph::from_edges(n, &e).unwrap()
}

fn sorted_eigs(h: &Hamiltonian) -> Vec<f64> {
    ResolventView::from_hamiltonian(h).unwrap().eigenvalues().to_vec()
}

fn random_view(n: usize, d: usize, seed: u64) -> (Hamiltonian, ResolventView) {
    let g = sample_permutation_model(n, d, &mut trial_rng(seed, 0)).unwrap();
    let h = build_h(&g).unwrap();
    let v = ResolventView::from_hamiltonian(&h).unwrap();
    (h, v)
}

/// `m` from the defining series `m = -1/(z + m)` iterated to a fixed point,
/// independent of the quadratic formula.
fn m_fixed_point(z: Complex64) -> Complex64 {
    let mut m = c(0.0, 1.0);
    for _ in 0..200_000 {
        let next = -1.0 / (z + m);
        if (next - m).norm() < 1e-15 {
            return next;
        }
        m = next;
    }
    m
}

#[test]
fn hamiltonian_examples() {
    let h = build_h(&complete(3)).unwrap();
    let eig = sorted_eigs(&h);
    for (x, y) in eig.iter().zip([-1.0, -1.0, 0.0]) {
        assert!((x - y).abs() < 1e-12);
    }
    let h = build_h(&complete(4)).unwrap();
    let s = -1.0 / 2f64.sqrt();
    for (x, y) in sorted_eigs(&h).iter().zip([s, s, s, 0.0]) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(h.perron_residual() < 1e-12);
    let one = MultiGraph::from_edges(2, &[(0, 1)]).unwrap();
    assert!(matches!(build_h(&one), Err(Error::InvalidParameter(_))));
}

#[test]
fn perron_direction_is_killed_on_large_graphs() {
    let (h, _) = random_view(400, 10, 1);
    let n = h.n() as f64;
    let he_e: f64 = h.data().iter().sum::<f64>() / n;
    assert!(he_e.abs() < 1e-10);
    assert!(h.perron_residual() <= 1e-12 * n.sqrt());
}

#[test]
fn spectral_point_requires_positive_eta() {
    assert!(SpectralPoint::new(0.0, 0.0).is_err());
    assert!(SpectralPoint::new(0.0, -1.0).is_err());
    assert!(SpectralPoint::new(0.0, 1e-300).is_ok());
}

#[test]
fn one_by_one_resolvent() {
    let h = Hamiltonian::from_dense(1, 2, vec![0.0]).unwrap();
    let v = ResolventView::from_hamiltonian(&h).unwrap();
    let g = v.entry(0, 0, c(0.0, 1.0));
    assert!((g - c(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn zero_matrix_stieltjes() {
    let h = Hamiltonian::from_dense(5, 2, vec![0.0; 25]).unwrap();
    let v = ResolventView::from_hamiltonian(&h).unwrap();
    let z = c(0.3, 0.7);
    assert!((v.stieltjes(z) + 1.0 / z).norm() < 1e-14);
}

#[test]
fn ward_identity_and_trivial_bound() {
    let (_, v) = random_view(200, 6, 2);
    for &(e, eta) in &[(0.0, 1.0), (1.5, 0.05), (-2.1, 0.01), (0.4, 1e-3)] {
        let z = c(e, eta);
        let diag = v.diagonal(z);
        for i in [0, 17, 199] {
            let row = v.row(i, z);
            let lhs: f64 = row.iter().map(|g| g.norm_sqr()).sum();
            let rhs = diag[i].im / eta;
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "Ward at i={i}: {lhs} vs {rhs}");
            assert!(row.iter().all(|g| g.norm() <= 1.0 / eta * (1.0 + 1e-12)));
        }
    }
}

#[test]
fn eigen_resolvent_matches_direct_solve() {
    let (h, v) = random_view(300, 8, 3);
    let solve = SolveResolvent::new(&h);
    let n = 300;
    for &z in &[c(0.2, 0.1), c(-1.9, 0.02), c(2.5, 1e-3)] {
        let g = solve.matrix(z).unwrap();
        let scale = g.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut rng = trial_rng(3, 1);
        for _ in 0..50 {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let diff = (v.entry(i, j, z) - g[i * n + j]).norm();
            assert!(diff <= 1e-8 * scale, "({i},{j}) at {z}: {diff}");
        }
        let trace: Complex64 = (0..n).map(|i| g[i * n + i]).sum::<Complex64>() / n as f64;
        assert!((trace - v.stieltjes(z)).norm() <= 1e-10);
    }
}

#[test]
fn stieltjes_is_herglotz() {
    let (_, v) = random_view(100, 4, 4);
    let mut e = -3.0;
    while e <= 3.0 {
        for eta in [1e-4, 1e-2, 1.0, 10.0] {
            assert!(v.stieltjes(c(e, eta)).im > 0.0);
        }
        e += 0.1;
    }
}

#[test]
fn semicircle_examples() {
    let m = m_semicircle(c(0.0, 1.0)).unwrap();
    assert!((m - c(0.0, (5f64.sqrt() - 1.0) / 2.0)).norm() < 1e-15);
    assert!((m.im - 0.618_033_988_7).abs() < 1e-10);
    let m = m_semicircle(c(0.0, 3.0)).unwrap();
    assert!((m - c(0.0, (13f64.sqrt() - 3.0) / 2.0)).norm() < 1e-15);
    let m = m_semicircle(c(0.0, 100.0)).unwrap();
    assert!((m - c(0.0, 0.01)).norm() < 1e-4);
    assert!(m_semicircle(c(1.0, 0.0)).is_err());
    assert!(m_semicircle(c(1.0, -0.1)).is_err());
    assert_eq!(m_semicircle_ext(c(0.5, -0.2)).unwrap(), m_semicircle(c(0.5, 0.2)).unwrap().conj());
}

#[test]
fn semicircle_on_dense_grid() {
    // 100 × 100 grid on [-5, 5] × [1e-6, 10]
    let mut worst_res: f64 = 0.0;
    for a in 0..100 {
        for b in 0..100 {
            let e = -5.0 + 10.0 * a as f64 / 99.0;
            let eta = 10f64.powf(-6.0 + 7.0 * b as f64 / 99.0);
            let z = c(e, eta);
            let m = m_semicircle(z).unwrap();
            worst_res = worst_res.max((m * m + z * m + 1.0).norm());
            assert!(m.im > 0.0 && m.norm() <= 1.0 + 1e-12, "z={z} m={m}");
        }
    }
    assert!(worst_res <= 1e-12, "residual {worst_res}");
}

#[test]
fn semicircle_matches_fixed_point_oracle() {
    for &z in &[c(0.0, 0.5), c(1.0, 0.3), c(-1.7, 0.4), c(3.0, 0.2), c(-2.0, 1.0)] {
        let m = m_semicircle(z).unwrap();
        let oracle = m_fixed_point(z);
        assert!((m - oracle).norm() < 1e-9, "z={z}: {m} vs {oracle}");
    }
}

#[test]
#[allow(clippy::approx_constant)]
fn density_examples() {
    assert!((semicircle_density(0.0) - 1.0 / PI).abs() < 1e-15);
    assert!((semicircle_density(0.0) - 0.318_309_9).abs() < 1e-7);
    assert!((kesten_mckay_density(0.0, 3).unwrap() - 0.212_206_6).abs() < 1e-7);
    assert_eq!(semicircle_density(2.5), 0.0);
    assert!(kesten_mckay_density(0.0, 1).is_err());
    let diff = (kesten_mckay_density(1.0, 1_000_000).unwrap() - semicircle_density(1.0)).abs();
    assert!(diff <= 1e-5);
}

/// Composite Simpson in `x = 2 sin θ`, independent of the adaptive rule.
fn simpson_mass(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (t0, t1) = ((a / 2.0).asin(), (b / 2.0).asin());
    let g = |t: f64| f(2.0 * t.sin()) * 2.0 * t.cos();
    let k = 20_000;
    let h = (t1 - t0) / k as f64;
    let mut s = g(t0) + g(t1);
    for i in 1..k {
        s += g(t0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn densities_integrate_to_one() {
    assert!((semicircle_mass(-2.0, 2.0) - 1.0).abs() < 1e-14);
    assert!((semicircle_mass(-10.0, 10.0) - 1.0).abs() < 1e-14);
    for d in [3usize, 10, 100] {
        let mass = kesten_mckay_mass(-2.0, 2.0, d).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "d={d}: {mass}");
        let oracle = simpson_mass(|x| kesten_mckay_density(x, d).unwrap(), -2.0, 2.0);
        assert!((oracle - 1.0).abs() < 1e-8);
        let part = kesten_mckay_mass(-0.3, 1.1, d).unwrap();
        let part_oracle = simpson_mass(|x| kesten_mckay_density(x, d).unwrap(), -0.3, 1.1);
        assert!((part - part_oracle).abs() < 1e-10);
    }
    let part = semicircle_mass(0.5, 1.7);
    assert!((part - simpson_mass(semicircle_density, 0.5, 1.7)).abs() < 1e-10);
}

#[test]
fn phi_examples() {
    let p = EnvelopeParams::from_parts(100, 25.0, 2.0);
    let v = phi_envelope(SpectralPoint::new(0.0, 1.0).unwrap(), &p);
    assert!((v.value - 0.3).abs() < 1e-15);
    assert_eq!(v.warning, None);
    let far = phi_envelope(SpectralPoint::new(0.0, 1e30).unwrap(), &p);
    assert!((far.value - 0.2).abs() < 1e-12);
    let u = EnvelopeParams::for_model(ModelKind::Uniform, 1000, 200, 2.0).unwrap();
    assert!((u.big_d - 0.125).abs() < 1e-15);
    let w = phi_envelope(SpectralPoint::new(0.0, 1.0).unwrap(), &u);
    assert_eq!(w.warning, Some(RegimeWarning::DBelowOne));
    assert!(EnvelopeParams::for_model(ModelKind::Uniform, 1000, 20, 1.0).is_err());
    let pm = EnvelopeParams::for_model(ModelKind::Permutation, 1000, 20, 2.0).unwrap();
    assert_eq!(pm.big_d, 20.0);
}

#[test]
fn f_examples() {
    let r = f_envelope(c(2.0, 1e-8), 0.04).unwrap();
    assert!((r - 0.2).abs() < 1e-12);
    // |z² - 4| at z = 10 + 0.1i, by hand: z² - 4 = 95.99 + 2i
    let w = (95.99f64 * 95.99 + 4.0).sqrt();
    let want = (1.0 + 1.0 / w.sqrt()) * 0.01;
    let got = f_envelope(c(10.0, 0.1), 0.01).unwrap();
    assert!((got - want).abs() < 1e-15);
    assert!((got - 0.011_021).abs() < 5e-7);
    assert_eq!(f_envelope(c(0.0, 1.0), 0.0).unwrap(), 0.0);
    assert!(f_envelope(c(0.0, 1.0), 1.5).is_err());
    assert!(f_envelope(c(0.0, 1.0), -0.1).is_err());
    assert_eq!(f_envelope(c(2.0, 0.0), 0.25).unwrap(), 0.5);
}

#[test]
fn psi_examples() {
    let pt = SpectralPoint::new(0.0, 0.01).unwrap();
    let p = EnvelopeParams::from_parts(10_000, 100.0, 10.0);
    let m = m_semicircle(c(0.0, 1.0)).unwrap();
    let v = psi_envelope(pt, &p, m);
    assert!((v - 2.786).abs() < 1e-3, "Ψ = {v}");
    let zero = EnvelopeParams::from_parts(10_000, 100.0, 0.0);
    assert_eq!(psi_envelope(pt, &zero, m), 0.0);
    // bulk comparison with ξΦ
    let pt = SpectralPoint::new(0.0, 1.0).unwrap();
    let m = m_semicircle(pt.z()).unwrap();
    let ratio = |n: usize| {
        let p = EnvelopeParams::from_parts(n, 1e4, 10.0);
        psi_envelope(pt, &p, m) / (p.xi * phi_envelope(pt, &p).value)
    };
    assert!(ratio(100_000_000) <= 1.01);
    assert!(ratio(100_000_000) < ratio(10_000));
}

#[test]
fn gamma_examples() {
    let (_, v) = random_view(100, 4, 5);
    let pairs = PairSample::all(100);
    assert!(pairs.exhaustive);
    assert_eq!(gamma(&v, SpectralPoint::new(0.0, 100.0).unwrap(), &pairs), 1.0);
    assert!(gamma(&v, SpectralPoint::new(0.1, 1e-3).unwrap(), &pairs) > 1.0);
    let etas = dyadic_etas(100, 0.5);
    assert_eq!(etas.first(), Some(&100.0));
    assert!(etas.last().copied().unwrap() >= 0.5 && etas.last().copied().unwrap() < 1.0);
    let gs = gamma_star(&v, 0.1, 1e-2, &pairs).unwrap();
    for eta in etas {
        assert!(gs >= gamma(&v, SpectralPoint::new(0.1, eta).unwrap(), &pairs));
    }
    assert!(gamma_star(&v, 0.1, 0.0, &pairs).is_err());
}

#[test]
fn pair_sample_shapes() {
    let mut rng = trial_rng(6, 0);
    assert!(PairSample::new(50, 10, &mut rng).exhaustive);
    let s = PairSample::new(400, 1000, &mut rng);
    assert!(!s.exhaustive);
    assert_eq!(s.pairs.len(), 1000);
    assert!(s.pairs.iter().all(|&(i, j)| i != j && i < 400 && j < 400));
}

#[test]
fn gamma_lipschitz_in_eta() {
    for seed in 0..3 {
        let (_, v) = random_view(150, 6, 10 + seed);
        let pairs = PairSample::all(150);
        for e in [-2.2, -1.0, 0.0, 0.7, 2.05] {
            for eta in [1.0, 0.1, 0.02] {
                let base = gamma(&v, SpectralPoint::new(e, eta).unwrap(), &pairs);
                for m in [2.0, 4.0, 10.0] {
                    let g = gamma(&v, SpectralPoint::new(e, eta / m).unwrap(), &pairs);
                    assert!(g <= m * base * (1.0 + 1e-12));
                }
            }
        }
    }
}

#[test]
fn eta_gamma_nondecreasing() {
    let (_, v) = random_view(120, 6, 7);
    let pairs = PairSample::all(120);
    for e in [-1.5, 0.0, 1.99] {
        let mut prev = 0.0;
        let mut eta = 1e-3;
        while eta < 200.0 {
            let cur = eta * gamma(&v, SpectralPoint::new(e, eta).unwrap(), &pairs);
            assert!(cur >= prev * (1.0 - 1e-12));
            prev = cur;
            eta *= 1.3;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn m_invariants(e in -10.0f64..10.0, eta in 1e-8f64..50.0) {
        let z = c(e, eta);
        let m = m_semicircle(z).unwrap();
        prop_assert!((m * m + z * m + 1.0).norm() <= 1e-12);
        prop_assert!(m.im > 0.0);
        prop_assert!(m.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn f_monotone_and_bounded(e in -4.0f64..4.0, eta in 1e-6f64..2.0, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
        let z = c(e, eta);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (a, b) = (f_envelope(z, lo).unwrap(), f_envelope(z, hi).unwrap());
        prop_assert!(a <= b);
        prop_assert!(b <= hi.sqrt() + 1e-15);
    }

    #[test]
    fn gamma_at_least_one(seed in 0u64..1000, e in -3.0f64..3.0, eta in 1e-3f64..10.0) {
        let (_, v) = random_view(40, 4, seed);
        prop_assert!(gamma(&v, SpectralPoint::new(e, eta).unwrap(), &PairSample::all(40)) >= 1.0);
    }
}
