use proptest::prelude::*;
use sensit_core::control::{
    make_cpmg, make_hahn, make_sdr, make_tsdr, max_asymmetry, Kernel, ModulationFunction,
    SdrParams, Sign,
};

fn arbitrary_modulation() -> impl Strategy<Value = ModulationFunction> {
    (
        1e-6f64..1e-2,
        prop::collection::vec(0.0f64..=1.0, 0..20),
        any::<bool>(),
    )
        .prop_map(|(ts, fracs, plus)| {
            let sign = if plus { Sign::Plus } else { Sign::Minus };
            ModulationFunction::new(ts, fracs.into_iter().map(|f| f * ts), sign).unwrap()
        })
}

#[test]
fn sdr_limits_recover_hahn_and_cpmg() {
    let ts = 750e-6;
    for n in 2..=14 {
        let top = make_sdr(SdrParams::new(n, max_asymmetry(n), ts).unwrap()).unwrap();
        assert!(top.approx_eq(&make_cpmg(n, ts).unwrap(), 1e-15 * ts));
        let bottom = make_sdr(SdrParams::new(n, 0.0, ts).unwrap()).unwrap();
        assert_eq!(bottom.pulse_times(), make_hahn(ts).unwrap().pulse_times());
    }
}

#[test]
fn cpmg_reverse_has_same_pulses() {
    for n in 1..=15 {
        let c = make_cpmg(n, 1.0).unwrap();
        let r = c.time_reverse();
        for (a, b) in c.pulse_times().iter().zip(r.pulse_times()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

proptest! {
    #[test]
    fn reversal_is_pointwise_mirror(m in arbitrary_modulation(), fracs in prop::collection::vec(0.0f64..1.0, 64)) {
        let r = m.time_reverse();
        let ts = m.sensing_time();
        for f in fracs {
            let t = f * ts;
            let near_pulse = m.pulse_times().iter().any(|p| (p - (ts - t)).abs() < 1e-12 * ts)
                || r.pulse_times().iter().any(|p| (p - t).abs() < 1e-12 * ts);
            if !near_pulse {
                prop_assert_eq!(r.evaluate(t).unwrap(), m.evaluate(ts - t).unwrap());
            }
        }
        prop_assert!(r.time_reverse().approx_eq(&m, 4.0 * f64::EPSILON * ts));
    }

    #[test]
    fn sign_changes_equal_pulse_count(m in arbitrary_modulation()) {
        let segs = m.segments();
        prop_assert_eq!(segs.len(), m.n_pulses() + 1);
        for w in segs.windows(2) {
            prop_assert_eq!(w[1].sign, w[0].sign.flip());
            prop_assert_eq!(w[0].end, w[1].start);
        }
        prop_assert!(m.pulse_times().iter().all(|&p| p > 0.0 && p < m.sensing_time()));
        prop_assert!(m.pulse_times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn kernel_change_of_variables(m in arbitrary_modulation(), tau_frac in 0.01f64..10.0) {
        let tau = tau_frac * m.sensing_time();
        let a = m.integrate_against(Kernel::DecayFromStart { tau }).unwrap();
        let b = m.time_reverse().integrate_against(Kernel::DecayToEnd { tau }).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * tau);
        let c = m.integrate_against(Kernel::Constant).unwrap();
        let d = m.time_reverse().integrate_against(Kernel::Constant).unwrap();
        prop_assert!((c - d).abs() <= 1e-12 * m.sensing_time());
    }

    #[test]
    fn sdr_pulses_are_continuous_in_x(n in 2usize..16, frac in 0.001f64..0.999) {
        let ts = 1.0;
        let x = frac * max_asymmetry(n);
        let dx = 1e-9;
        let a = make_sdr(SdrParams::new(n, x, ts).unwrap()).unwrap();
        let b = make_sdr(SdrParams::new(n, x + dx, ts).unwrap()).unwrap();
        prop_assert_eq!(a.n_pulses(), b.n_pulses());
        for (p, q) in a.pulse_times().iter().zip(b.pulse_times()) {
            prop_assert!((p - q).abs() <= dx * ts);
        }
        let t = make_tsdr(SdrParams::new(n, x, ts).unwrap()).unwrap();
        prop_assert_eq!(t, a.time_reverse());
    }
}
