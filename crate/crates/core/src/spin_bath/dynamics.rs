use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::EnvState;
use super::system::SpinBathSystem;
use super::{propagator, sub_block, trace};
use crate::control::{ModulationFunction, Sign};
use crate::error::Result;

/// Sector blocks of `B(t) = e^{iH_E t} B e^{−iH_E t}`.
pub(crate) fn heisenberg_blocks(sys: &SpinBathSystem, t: f64) -> Vec<DMatrix<Complex64>> {
    sys.env_eigen()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let w = propagator(e, -t);
            let b = sys.field_block(k);
            let mut wb = w.clone();
            for (col, bv) in b.iter().enumerate() {
                wb.column_mut(col).iter_mut().for_each(|z| *z *= *bv);
            }
            wb * w.adjoint()
        })
        .collect()
}

/// Dense `B(t)`; `t` may be negative.
pub fn heisenberg_b(sys: &SpinBathSystem, t: f64) -> DMatrix<Complex64> {
    let blocks = heisenberg_blocks(sys, t);
    let mut out = DMatrix::zeros(sys.dim(), sys.dim());
    for (sec, block) in sys.sectors().iter().zip(&blocks) {
        for (a, &ia) in sec.indices.iter().enumerate() {
            for (b, &ib) in sec.indices.iter().enumerate() {
                out[(ia, ib)] = block[(a, b)];
            }
        }
    }
    out
}

/// Probe coherence `M = Tr[U₋ ρ U₊†]` after the control `m`.
///
/// `U_±` evolves the bath under `H_E ± ½ f(t) B` segment by segment, so the
/// result is exact for piecewise-constant control. With this ordering a
/// static classical field `b` gives `M = e^{+ib∫f}`.
pub fn signal_exact(m: &ModulationFunction, sys: &SpinBathSystem, rho: &EnvState) -> Result<Complex64> {
    rho.check_compatible(sys)?;
    let branches = sys.branch_eigen();
    let segments = m.segments();
    // (branch, sector, duration bits) → propagator
    let mut cache: HashMap<(usize, usize, u64), DMatrix<Complex64>> = HashMap::new();
    let mut total = Complex64::default();
    for (k, sec) in sys.sectors().iter().enumerate() {
        let mut x = sub_block(rho.matrix(), &sec.indices, &sec.indices);
        if x.iter().all(|z| *z == Complex64::default()) {
            continue;
        }
        for seg in &segments {
            let dt = seg.duration();
            if dt <= 0.0 {
                continue;
            }
            // branch 0 is H_E + B/2, branch 1 is H_E − B/2
            let (left, right) = match seg.sign {
                Sign::Plus => (1, 0),
                Sign::Minus => (0, 1),
            };
            for branch in [left, right] {
                cache
                    .entry((branch, k, dt.to_bits()))
                    .or_insert_with(|| propagator(&branches[branch][k], dt));
            }
            let pl = &cache[&(left, k, dt.to_bits())];
            let pr = &cache[&(right, k, dt.to_bits())];
            x = pl * x * pr.adjoint();
        }
        total += trace(&x);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{make_cpmg, make_hahn, ModulationFunction};
    use crate::spin_bath::system::{sphere_couplings, NoiseClass};
    use crate::spin_bath::state::prepare_quenched_state;

    fn bath(n: usize) -> SpinBathSystem {
        let (c, d) = sphere_couplings(n, 5, 2e3).unwrap();
        SpinBathSystem::from_couplings(c, d, NoiseClass::Magnetic).unwrap()
    }

    #[test]
    fn b_at_zero_is_b() {
        let sys = bath(4);
        let b0 = heisenberg_b(&sys, 0.0);
        let b = sys.noise_operator_dense().map(Complex64::from);
        assert!((b0 - &b).camax() < 1e-13 * b.camax());
    }

    #[test]
    fn heisenberg_b_is_traceless_and_hermitian() {
        let sys = bath(5);
        let bt = heisenberg_b(&sys, 3.7e-4);
        assert!(bt.trace().norm() < 1e-9);
        assert!((&bt - bt.adjoint()).camax() < 1e-9);
    }

    #[test]
    fn uncoupled_probe_keeps_full_signal() {
        let sys = bath(4).with_probe_scale(0.0).unwrap();
        let rho = prepare_quenched_state(&bath(4), 1e-4).unwrap();
        let m = make_cpmg(3, 5e-4).unwrap();
        let s = signal_exact(&m, &sys, &rho).unwrap();
        assert!((s - Complex64::from(1.0)).norm() < 1e-12);
    }

    #[test]
    fn echo_refocuses_static_field() {
        let sys = bath(4).without_dipolar();
        let rho = EnvState::maximally_mixed(4).unwrap();
        let s = signal_exact(&make_hahn(7e-4).unwrap(), &sys, &rho).unwrap();
        assert!((s - Complex64::from(1.0)).norm() < 1e-12);
    }

    #[test]
    fn free_evolution_of_static_field() {
        let d = 3e3;
        let sys = SpinBathSystem::from_couplings(vec![d], DMatrix::zeros(1, 1), NoiseClass::Magnetic)
            .unwrap();
        let rho = EnvState::from_diagonal(&[0.8, 0.2]).unwrap();
        let t = 2e-4;
        let free = ModulationFunction::new(t, [], Sign::Plus).unwrap();
        let s = signal_exact(&free, &sys, &rho).unwrap();
        let expected = Complex64::from_polar(0.8, d * t / 2.0) + Complex64::from_polar(0.2, -d * t / 2.0);
        assert!((s - expected).norm() < 1e-13);
    }
}
