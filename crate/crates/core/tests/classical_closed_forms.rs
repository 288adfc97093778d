mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use sensit_core::classical::{
    contrast_analytic, decoherence_gaussian, kernel_w2, sigma_functional, OuParams,
};
use sensit_core::control::{
    make_cpmg, make_hahn, make_sdr, max_asymmetry, Kernel, ModulationFunction, SdrParams,
};

const TS: f64 = 750e-6;

fn sdr(x: f64) -> ModulationFunction {
    make_sdr(SdrParams::new(12, x, TS).unwrap()).unwrap()
}

#[test]
fn hahn_stationary_matches_quadrature() {
    let p = OuParams::stationary(200e-6, 3e7).unwrap();
    let m = make_hahn(TS).unwrap();
    let oracle = common::half_double_integral(&m, |a, b| kernel_w2(&p, a, b).unwrap(), 8);
    assert_relative_eq!(decoherence_gaussian(&m, &p), oracle, max_relative = 1e-10);
}

#[test]
fn quenched_sdr_matches_quadrature() {
    for (x, tau) in [(0.2, 80e-6), (0.5, 150e-6), (0.8, 400e-6)] {
        let p = OuParams::new(tau, 2e7, 9e7).unwrap();
        let m = sdr(x);
        let oracle = common::half_double_integral(&m, |a, b| kernel_w2(&p, a, b).unwrap(), 4);
        assert_relative_eq!(decoherence_gaussian(&m, &p), oracle, max_relative = 1e-10);
    }
}

#[test]
fn exponential_kernel_matches_quadrature() {
    let m = make_hahn(1.0).unwrap();
    let exact = m.integrate_against(Kernel::DecayFromStart { tau: 1.0 }).unwrap();
    let oracle = common::integrate(|t| (-t).exp(), 0.0, 0.5, 4)
        - common::integrate(|t| (-t).exp(), 0.5, 1.0, 4);
    assert!((exact - oracle).abs() < 1e-12);
}

#[test]
fn contrast_equals_difference_of_exponents() {
    let m = sdr(0.5);
    let p = OuParams::new(TS / 5.0, 1.0, 2.0).unwrap();
    let direct = decoherence_gaussian(&m, &p) - decoherence_gaussian(&m.time_reverse(), &p);
    let closed = contrast_analytic(&m, &p);
    assert_relative_eq!(closed, direct, max_relative = 1e-10);
    assert!(closed.abs() > 0.0);
}

#[test]
fn symmetric_sequences_have_no_sigma() {
    let tau: f64 = 100e-6;
    let scale = tau * tau;
    for n in 1..=16 {
        assert!(sigma_functional(&make_cpmg(n, TS).unwrap(), tau).unwrap().abs() < 1e-12 * scale);
    }
    assert!(sigma_functional(&make_hahn(TS).unwrap(), tau).unwrap().abs() < 1e-12 * scale);
    assert!(sigma_functional(&sdr(0.5), tau).unwrap().abs() > 1e-3 * scale);
}

#[test]
fn independent_noises_add() {
    let a = OuParams::stationary(50e-6, 1e7).unwrap();
    let b = OuParams::new(300e-6, 4e6, 2e7).unwrap();
    let m = sdr(0.4);
    let oracle = common::half_double_integral(
        &m,
        |s, t| kernel_w2(&a, s, t).unwrap() + kernel_w2(&b, s, t).unwrap(),
        4,
    );
    let sum = decoherence_gaussian(&m, &a) + decoherence_gaussian(&m, &b);
    assert_relative_eq!(sum, oracle, max_relative = 1e-10);
}

#[test]
fn quench_depth_scales_contrast() {
    let m = sdr(0.6);
    let base = OuParams::stationary(120e-6, 1e7).unwrap();
    let one = contrast_analytic(&m, &base.with_sigma_init(2e7).unwrap());
    let two = contrast_analytic(&m, &base.with_sigma_init(3e7).unwrap());
    assert_relative_eq!(two, 2.0 * one, max_relative = 1e-12);
}

fn sdr_strategy() -> impl Strategy<Value = ModulationFunction> {
    (2usize..=16, 0.0f64..=1.0, 10e-6f64..2e-3).prop_map(|(n, frac, ts)| {
        make_sdr(SdrParams::new(n, frac * max_asymmetry(n), ts).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stationary_noise_is_filtered_out(m in sdr_strategy(), tau in 1e-6f64..1e-2, s0 in 0.0f64..1e9) {
        let p = OuParams::stationary(tau, s0).unwrap();
        let j = decoherence_gaussian(&m, &p);
        let jt = decoherence_gaussian(&m.time_reverse(), &p);
        prop_assert!((j - jt).abs() <= 1e-12 * j.abs().max(1.0));
    }

    #[test]
    fn stationary_component_leaves_contrast(m in sdr_strategy(), tau in 1e-5f64..1e-3, extra in 0.0f64..1e8) {
        let q = OuParams::new(tau, 1e7, 5e7).unwrap();
        let shifted = OuParams::new(tau, 1e7 + extra, 5e7 + extra).unwrap();
        let a = contrast_analytic(&m, &q);
        let b = contrast_analytic(&m, &shifted);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn exponent_is_non_negative(m in sdr_strategy(), tau in 1e-6f64..1e-2, s0 in 0.0f64..1e9, s in 0.0f64..1e9) {
        let p = OuParams::new(tau, s0, s).unwrap();
        prop_assert!(decoherence_gaussian(&m, &p) >= -1e-12 * (s0 + s) * m.sensing_time().powi(2));
    }
}
