mod common;

use common::{c, simpson, simpson2, C};
use fvkernel::correlations::two_time_analytic;
use fvkernel::kernels::{
    bose_bilinear_kernels, bose_linear_kernels, eta_coefficients, fermi_kernels, fv_action, kernel_limits,
    mode_resolved_kernels, InfluenceTable, PathPair, Regime,
};
use fvkernel::sampling;
use fvkernel::{BathSpec, Error, LinearBoseBathSpec, Statistics};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn fermi_bath(seed: u64, m: usize) -> BathSpec {
    sampling::random_bath(&mut sampling::rng(seed), m, Statistics::Fermi, 1).unwrap()
}

fn sum_g2(bath: &BathSpec) -> f64 {
    let m = bath.num_modes();
    (0..m).flat_map(|k| (0..m).map(move |l| (k, l))).filter(|(k, l)| k != l).map(|(k, l)| bath.g(k, l).powi(2)).sum()
}

#[test]
fn kernels_are_twice_the_correlation_parts() {
    for seed in 0..5 {
        let bath = fermi_bath(seed, 4);
        for tau in [-2.0, -0.3, 0.0, 0.7, 4.1] {
            let k = fermi_kernels(&bath, tau).unwrap();
            let corr = two_time_analytic(&bath, tau, 0.0).unwrap();
            assert!((k.k_real - c(2.0 * corr.re, 0.0)).norm() < 1e-14);
            assert!((k.k_imag - c(0.0, 2.0 * corr.im)).norm() < 1e-14);
        }
    }
}

#[test]
fn two_mode_fermi_kernel_by_hand() {
    let (e1, e2, g, beta, tau) = (1.0f64, 1.5f64, 0.3f64, 0.8f64, 0.45f64);
    let bath = BathSpec::fermi(vec![e1, e2], BathSpec::antisymmetric_from_upper(2, &[(0, 1, g)]), beta).unwrap();
    let (t1, t2) = ((0.5 * beta * e1).tanh(), (0.5 * beta * e2).tanh());
    let (s1, c1) = (e1 * tau).sin_cos();
    let (s2, c2) = (e2 * tau).sin_cos();
    // both ordered pairs contribute equally
    let kr = 8.0 * g * g * (c1 * c2 - t1 * t2 * s1 * s2);
    let ki = -8.0 * g * g * (t1 * s1 * c2 + t2 * c1 * s2);
    let k = fermi_kernels(&bath, tau).unwrap();
    assert!((k.k_real - c(kr, 0.0)).norm() < 1e-15);
    assert!((k.k_imag - c(0.0, ki)).norm() < 1e-15);
}

#[test]
fn mode_resolved_substitution_recovers_bosonic_kernels() {
    for seed in 0..10 {
        let fb = fermi_bath(seed, 3);
        let bb = fb.with_statistics(Statistics::BoseBilinear, 2).unwrap();
        let tau = 0.37 * seed as f64 - 1.0;
        let f = mode_resolved_kernels(&fb, tau).unwrap();
        let b = mode_resolved_kernels(&bb, tau).unwrap();
        assert_eq!(f.len(), b.len());
        for (mf, mb) in f.iter().zip(&b) {
            assert_eq!((mf.k, mf.l), (mb.k, mb.l));
            let x = |k: usize| 0.5 * fb.beta() * fb.energies()[k];
            let ratio = 1.0 / (x(mf.k).tanh() * x(mf.l).tanh());
            let (sk, ck) = (fb.omega(mf.k) * tau).sin_cos();
            let (sl, cl) = (fb.omega(mf.l) * tau).sin_cos();
            let w = 4.0 * fb.g(mf.k, mf.l).powi(2);
            // only the tanh-free parts differ after substituting tanh -> coth
            let fixed_re = w * (ratio * ck * cl - sk * sl);
            let fixed_im = -w * (ck * sl / x(mf.k).tanh() + sk * cl / x(mf.l).tanh());
            assert!((mb.pair.k_real.re - fixed_re).abs() < 1e-12 * (1.0 + fixed_re.abs()));
            assert!((mb.pair.k_imag.im - fixed_im).abs() < 1e-12 * (1.0 + fixed_im.abs()));
        }
    }
}

#[test]
fn bosonic_kernels_match_truncated_oscillator_traces() {
    let (e, g, beta, tau) = ([1.0, 1.5], 0.05, 1.0, 0.2);
    let n_max = BathSpec::boson_truncation_for_tail(&e, beta, 1e-12).unwrap();
    let bath =
        BathSpec::bose_bilinear(e.to_vec(), BathSpec::antisymmetric_from_upper(2, &[(0, 1, g)]), beta, n_max).unwrap();
    // ⟨Q_k(τ) Q_k(0)⟩ by a single-oscillator trace
    let single = |energy: f64| {
        let d = n_max + 1;
        let mut a = DMatrix::<C>::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
        }
        let ph = C::from_polar(1.0, -energy * tau);
        let q_t = &a * ph + a.adjoint() * ph.conj();
        let q_0 = &a + a.adjoint();
        let w: Vec<f64> = (0..d).map(|n| (-beta * energy * n as f64).exp()).collect();
        let z: f64 = w.iter().sum();
        let prod = q_t * q_0;
        (0..d).map(|n| prod[(n, n)] * w[n] / z).sum::<C>()
    };
    // B = 2g Q_1 Q_2 for two commuting modes
    let corr = 4.0 * g * g * single(e[0]) * single(e[1]);
    let k = bose_bilinear_kernels(&bath, tau).unwrap();
    assert!((k.k_real - c(2.0 * corr.re, 0.0)).norm() < 1e-8);
    assert!((k.k_imag - c(0.0, 2.0 * corr.im)).norm() < 1e-8);
}

#[test]
fn linear_bosonic_kernels_match_oscillator() {
    let spec = LinearBoseBathSpec::new(vec![0.8, 1.6], vec![0.4, 0.9], vec![1.0, 2.0], 1.2).unwrap();
    let d = 41;
    for tau in [0.0, 0.5, 2.3] {
        let mut corr = c(0.0, 0.0);
        for k in 0..2 {
            let (w, cc, m) = (spec.omega()[k], spec.c()[k], spec.m()[k]);
            let mut a = DMatrix::<C>::zeros(d, d);
            for n in 1..d {
                a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
            }
            let scale = (1.0 / (2.0 * m * w)).sqrt();
            let ph = C::from_polar(1.0, -w * tau);
            let x_t = (&a * ph + a.adjoint() * ph.conj()) * c(scale, 0.0);
            let x_0 = (&a + a.adjoint()) * c(scale, 0.0);
            let pops: Vec<f64> = (0..d).map(|n| (-spec.beta() * w * n as f64).exp()).collect();
            let z: f64 = pops.iter().sum();
            let prod = x_t * x_0;
            corr += cc * cc * (0..d).map(|n| prod[(n, n)] * pops[n] / z).sum::<C>();
        }
        let k = bose_linear_kernels(&spec, tau).unwrap();
        assert!((k.k_real.re - corr.re).abs() < 1e-9, "tau {tau}");
        assert!((k.k_imag - c(0.0, -corr.im)).norm() < 1e-9, "tau {tau}");
    }
}

#[test]
fn divergent_bosonic_kernels_are_errors() {
    let spec = LinearBoseBathSpec::new(vec![1.0], vec![1.0], vec![1.0], 0.0).unwrap();
    assert!(matches!(bose_linear_kernels(&spec, 0.1), Err(Error::Divergence(_))));
    let bb = BathSpec::bose_bilinear(vec![1.0, 2.0], BathSpec::antisymmetric_from_upper(2, &[(0, 1, 0.1)]), 0.0, 2);
    if let Ok(b) = bb {
        assert!(matches!(bose_bilinear_kernels(&b, 0.1), Err(Error::Divergence(_))));
    }
}

#[test]
fn temperature_limits_converge_monotonically() {
    let taus: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
    for seed in 0..5 {
        let base = fermi_bath(seed, 4);
        let mut low_err = Vec::new();
        let mut high_err = Vec::new();
        for beta in [0.1, 1.0, 10.0, 100.0] {
            let bath = base.with_beta(beta).unwrap();
            let (mut lo, mut hi) = (0.0f64, 0.0f64);
            for &tau in &taus {
                let k = fermi_kernels(&bath, tau).unwrap();
                let l = kernel_limits(&bath, tau, Regime::LowT).unwrap();
                let h = kernel_limits(&bath, tau, Regime::HighT).unwrap();
                lo = lo.max((k.k_real - l.k_real).norm()).max((k.k_imag - l.k_imag).norm());
                hi = hi.max((k.k_real - h.k_real).norm()).max((k.k_imag - h.k_imag).norm());
            }
            low_err.push(lo);
            high_err.push(hi);
        }
        assert!(low_err.windows(2).all(|w| w[1] <= w[0]), "{low_err:?}");
        assert!(high_err.windows(2).all(|w| w[1] >= w[0]), "{high_err:?}");
        assert!(low_err[3] < 1e-12);
    }
}

#[test]
fn high_temperature_dissipation_bound() {
    for seed in 0..10 {
        let bath = fermi_bath(seed, 4).with_beta(0.1).unwrap();
        let e_max = bath.energies().iter().cloned().fold(0.0, f64::max);
        let bound = 4.0 * sum_g2(&bath) * bath.beta() * e_max / 2.0;
        for i in 0..=400 {
            let k = fermi_kernels(&bath, i as f64 * 0.025).unwrap();
            assert!(k.k_imag.norm() <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn limits_reject_bosons() {
    let b = fermi_bath(1, 2).with_statistics(Statistics::BoseBilinear, 2).unwrap();
    assert!(kernel_limits(&b, 0.1, Regime::LowT).is_err());
}

fn eta_oracle(bath: &BathSpec, i: usize, j: usize, dt: f64) -> C {
    let corr = |t1: f64, t2: f64| two_time_analytic(bath, t1, t2).unwrap();
    let (a, b) = (i as f64 * dt, (i + 1) as f64 * dt);
    let lo = j as f64 * dt;
    if i == j {
        simpson2(&corr, a, b, &|_| lo, &|t1| t1, 1e-14)
    } else {
        simpson2(&corr, a, b, &|_| lo, &|_| lo + dt, 1e-14)
    }
}

#[test]
fn eta_matches_quadrature() {
    for (seed, dt) in [(1, 0.1), (2, 0.37), (3, 0.01), (4, 1.3)] {
        let bath = fermi_bath(seed, 3);
        let table = eta_coefficients(&bath, 6, dt).unwrap();
        for (i, j) in [(0, 0), (3, 3), (1, 0), (5, 2), (5, 0)] {
            let oracle = eta_oracle(&bath, i, j, dt);
            let eta = table.eta(i, j);
            assert!(
                (eta - oracle).norm() < 1e-11 * (1.0 + oracle.norm()),
                "seed {seed} dt {dt} ({i},{j}): {eta} vs {oracle}"
            );
        }
    }
}

#[test]
fn eta_at_resonance() {
    // equal energies give a zero-frequency line
    let bath =
        BathSpec::fermi(vec![1.2, 1.2, 0.9], BathSpec::antisymmetric_from_upper(3, &[(0, 1, 0.2), (1, 2, 0.1)]), 1.0)
            .unwrap();
    for dt in [0.05, 0.5] {
        let table = eta_coefficients(&bath, 4, dt).unwrap();
        for (i, j) in [(0, 0), (2, 1), (3, 0)] {
            let oracle = eta_oracle(&bath, i, j, dt);
            assert!((table.eta(i, j) - oracle).norm() < 1e-11 * (1.0 + oracle.norm()));
        }
    }
}

#[test]
fn diagonal_series_and_closed_form_agree_at_threshold() {
    let lines = |nu: f64| vec![fvkernel::correlations::SpectralLine { weight: 1.0, frequency: nu }];
    let dt = 1.0;
    for nu in [0.1 - 1e-9, 0.1 + 1e-9, 0.05, 0.3] {
        let eta = InfluenceTable::from_spectrum(lines(nu), 1, dt).unwrap().eta(0, 0);
        let direct =
            simpson(&|t1: f64| simpson(&|t2: f64| C::from_polar(1.0, -nu * (t1 - t2)), 0.0, t1, 1e-16), 0.0, dt, 1e-15);
        assert!((eta - direct).norm() < 1e-13, "nu {nu}: {eta} vs {direct}");
    }
}

/// `i S` from the double integral of the piecewise-constant histories.
fn action_oracle(bath: &BathSpec, x: &[i8], y: &[i8], dt: f64) -> C {
    let mut total = c(0.0, 0.0);
    for i in 0..x.len() {
        let xi = f64::from(x[i] - y[i]);
        if xi == 0.0 {
            continue;
        }
        for j in 0..=i {
            let (xj, yj) = (f64::from(x[j]), f64::from(y[j]));
            let f = |t1: f64, t2: f64| {
                let cc = two_time_analytic(bath, t1, t2).unwrap();
                xi * (xj * cc - yj * cc.conj())
            };
            let (a, b, lo) = (i as f64 * dt, (i + 1) as f64 * dt, j as f64 * dt);
            total += if i == j {
                simpson2(&f, a, b, &|_| lo, &|t1| t1, 1e-14)
            } else {
                simpson2(&f, a, b, &|_| lo, &|_| lo + dt, 1e-14)
            };
        }
    }
    -total
}

#[test]
fn action_matches_double_integral() {
    let bath = fermi_bath(9, 3);
    let dt = 0.4;
    let table = eta_coefficients(&bath, 2, dt).unwrap();
    for (x, y) in [(vec![1, 1], vec![-1, 1]), (vec![1, -1], vec![-1, -1]), (vec![-1, 1], vec![1, 1])] {
        let s = fv_action(&PathPair::new(x.clone(), y.clone()).unwrap(), &table).unwrap();
        let oracle = action_oracle(&bath, &x, &y, dt);
        assert!((C::i() * s - oracle).norm() < 1e-12, "{x:?} {y:?}: {} vs {oracle}", C::i() * s);
    }
}

#[test]
fn influence_weight_is_bounded() {
    let mut rng = sampling::rng(77);
    for _ in 0..1000 {
        let bath = fermi_bath(rng.gen(), 3);
        let n = rng.gen_range(1..=12);
        let table = eta_coefficients(&bath, n, rng.gen_range(0.01..0.5)).unwrap();
        let s = fv_action(&sampling::random_path(&mut rng, n), &table).unwrap();
        assert!((C::i() * s).re <= 1e-15);
    }
}

#[test]
fn path_validation() {
    assert!(PathPair::new(vec![1, 0], vec![1, 1]).is_err());
    assert!(PathPair::new(vec![1], vec![1, 1]).is_err());
    let table = InfluenceTable::zeros(3, 0.1).unwrap();
    assert!(fv_action(&PathPair::new(vec![1], vec![1]).unwrap(), &table).is_err());
    assert!(InfluenceTable::zeros(0, 0.1).is_err());
    assert!(InfluenceTable::zeros(2, -0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_parity(seed in any::<u64>(), tau in -10.0f64..10.0) {
        let bath = fermi_bath(seed, 4);
        let a = fermi_kernels(&bath, tau).unwrap();
        let b = fermi_kernels(&bath, -tau).unwrap();
        prop_assert!((a.k_real - b.k_real).norm() < 1e-13);
        prop_assert!((a.k_imag + b.k_imag).norm() < 1e-13);
        prop_assert!(a.k_real.im == 0.0 && a.k_imag.re == 0.0);
    }

    #[test]
    fn bosonic_kernel_parity(seed in any::<u64>(), tau in -10.0f64..10.0) {
        let bath = sampling::random_bath(&mut sampling::rng(seed), 3, Statistics::BoseBilinear, 2).unwrap();
        let a = bose_bilinear_kernels(&bath, tau).unwrap();
        let b = bose_bilinear_kernels(&bath, -tau).unwrap();
        prop_assert!((a.k_real - b.k_real).norm() < 1e-12 * (1.0 + a.k_real.norm()));
        prop_assert!((a.k_imag + b.k_imag).norm() < 1e-12 * (1.0 + a.k_imag.norm()));
    }

    #[test]
    fn mode_sums_equal_totals(seed in any::<u64>(), tau in -5.0f64..5.0) {
        let bath = fermi_bath(seed, 4);
        let parts = mode_resolved_kernels(&bath, tau).unwrap();
        let total = fermi_kernels(&bath, tau).unwrap();
        let re: C = parts.iter().map(|p| p.pair.k_real).sum();
        let im: C = parts.iter().map(|p| p.pair.k_imag).sum();
        prop_assert!((re - total.k_real).norm() < 1e-15);
        prop_assert!((im - total.k_imag).norm() < 1e-15);
    }

    #[test]
    fn diagonal_paths_have_zero_action(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = sampling::rng(seed);
        let bath = fermi_bath(seed, 3);
        let table = eta_coefficients(&bath, n, 0.1).unwrap();
        let p = sampling::random_path(&mut rng, n);
        let same = PathPair::new(p.x().to_vec(), p.x().to_vec()).unwrap();
        prop_assert!(fv_action(&same, &table).unwrap().norm() <= 1e-14);
    }
}
