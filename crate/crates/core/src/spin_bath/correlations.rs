use nalgebra::DMatrix;
use num_complex::Complex64;

use super::dynamics::heisenberg_blocks;
use super::state::EnvState;
use super::system::SpinBathSystem;
use super::{sub_block, trace, trace_product};
use crate::control::ModulationFunction;
use crate::error::{Error, Result};

pub const MAX_CUMULANT_ORDER: usize = 6;

/// Symmetrized moment
/// `G_n = 2^{−(n−1)} ⟨{B(t₁),{B(t₂),{…,B(t_n)}}}⟩` with the times sorted.
pub fn correlation_g(sys: &SpinBathSystem, rho: &EnvState, times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptyInput("correlation times"));
    }
    rho.check_compatible(sys)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let per_time: Vec<Vec<DMatrix<Complex64>>> =
        sorted.iter().map(|&t| heisenberg_blocks(sys, t)).collect();
    let mut total = Complex64::default();
    for (k, sec) in sys.sectors().iter().enumerate() {
        let r = sub_block(rho.matrix(), &sec.indices, &sec.indices);
        let mut nested = per_time[sorted.len() - 1][k].clone();
        for bt in per_time[..sorted.len() - 1].iter().rev() {
            nested = &bt[k] * &nested + &nested * &bt[k];
        }
        total += trace_product(&nested, &r);
    }
    Ok(total.re / 2f64.powi(sorted.len() as i32 - 1))
}

/// Moments `G` and cumulants `W` on every subset of a time tuple of length
/// at most [`MAX_CUMULANT_ORDER`]. Subsets are bitmasks over the tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    times: Vec<f64>,
    g: Vec<Option<f64>>,
    w: Vec<Option<f64>>,
}

impl CumulantSet {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyInput("cumulant times"));
        }
        if times.len() > MAX_CUMULANT_ORDER {
            return Err(Error::OrderTooLarge { order: times.len(), max: MAX_CUMULANT_ORDER });
        }
        let n = 1usize << times.len();
        Ok(Self { times, g: vec![None; n], w: vec![None; n] })
    }

    /// All moments of `times` evaluated on the bath.
    pub fn from_system(sys: &SpinBathSystem, rho: &EnvState, times: Vec<f64>) -> Result<Self> {
        let mut set = Self::new(times)?;
        for mask in 1..set.g.len() {
            let g = correlation_g(sys, rho, &set.subset_times(mask))?;
            set.g[mask] = Some(g);
        }
        Ok(set)
    }

    pub fn order(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn subset_times(&self, mask: usize) -> Vec<f64> {
        let mut t: Vec<f64> =
            (0..self.order()).filter(|i| mask >> i & 1 == 1).map(|i| self.times[i]).collect();
        t.sort_by(f64::total_cmp);
        t
    }

    pub fn set_g(&mut self, mask: usize, value: f64) {
        self.g[mask] = Some(value);
    }

    pub fn g(&self, mask: usize) -> Option<f64> {
        self.g.get(mask).copied().flatten()
    }

    pub fn w(&self, mask: usize) -> Option<f64> {
        self.w.get(mask).copied().flatten()
    }

    pub fn full_mask(&self) -> usize {
        (1 << self.order()) - 1
    }

    /// `G_n` on the full tuple.
    pub fn g_full(&self) -> Option<f64> {
        self.g(self.full_mask())
    }

    /// `W_n` on the full tuple.
    pub fn w_full(&self) -> Option<f64> {
        self.w(self.full_mask())
    }

    fn mask_indices(&self, mask: usize) -> Vec<usize> {
        (0..self.order()).filter(|i| mask >> i & 1 == 1).collect()
    }
}

/// Connected parts by the set-partition recursion
/// `W(S) = G(S) − Σ_{B ∋ min S, B ⊊ S} W(B) G(S∖B)`.
pub fn cumulants_from_correlations(set: &CumulantSet) -> Result<CumulantSet> {
    let mut out = set.clone();
    for mask in 1..=set.full_mask() {
        if set.g(mask).is_none() {
            return Err(Error::MissingOrder { subset: set.mask_indices(mask) });
        }
    }
    // masks in increasing order visit every proper subset first
    for mask in 1..=set.full_mask() {
        let lowest = mask & mask.wrapping_neg();
        let rest = mask ^ lowest;
        let mut w = set.g[mask].unwrap();
        // proper sub-blocks containing the lowest element
        let mut sub = rest;
        loop {
            sub = sub.wrapping_sub(1) & rest;
            let block = sub | lowest;
            if block != mask {
                w -= out.w[block].unwrap() * set.g[mask ^ block].unwrap();
            }
            if sub == 0 {
                break;
            }
        }
        out.w[mask] = Some(w);
    }
    Ok(out)
}

/// `ΔW_n = W_n(t) − (±1)^n W_n(T_s − t)` with the sign set by the noise class.
pub fn delta_w(
    sys: &SpinBathSystem,
    rho: &EnvState,
    times: &[f64],
    sensing_time: f64,
) -> Result<f64> {
    let forward = CumulantSet::from_system(sys, rho, times.to_vec())?;
    let reflected =
        CumulantSet::from_system(sys, rho, times.iter().map(|t| sensing_time - t).collect())?;
    let w_f = cumulants_from_correlations(&forward)?.w_full().unwrap();
    let w_r = cumulants_from_correlations(&reflected)?.w_full().unwrap();
    let sign = sys.noise_class().parity().powi(times.len() as i32);
    Ok(w_f - sign * w_r)
}

/// Cumulant series for `J = −ln M` truncated after the second order:
/// `−i Tr[Fρ] + ½(Tr[F²ρ] − Tr[Fρ]²)` with `F = ∫ f(t) B(t) dt`.
///
/// `F` is built exactly in the eigenbasis of `H_E`, where each matrix element
/// of `B(t)` is a single oscillating exponential.
pub fn second_order_decoherence(
    m: &ModulationFunction,
    sys: &SpinBathSystem,
    rho: &EnvState,
) -> Result<Complex64> {
    rho.check_compatible(sys)?;
    let segments = m.segments();
    let mut first = Complex64::default();
    let mut second = Complex64::default();
    for (k, (sec, e)) in sys.sectors().iter().zip(sys.env_eigen()).enumerate() {
        let r = sub_block(rho.matrix(), &sec.indices, &sec.indices);
        let v = &e.vectors;
        let b_eig = v.transpose() * DMatrix::from_diagonal(&sys.field_block(k)) * v;
        let dim = sec.dim();
        let f_eig = DMatrix::from_fn(dim, dim, |a, b| {
            let omega = e.values[a] - e.values[b];
            let weight: Complex64 = segments
                .iter()
                .map(|s| s.sign.value() * oscillating_integral(omega, s.start, s.duration()))
                .sum();
            weight * b_eig[(a, b)]
        });
        let vc = v.map(Complex64::from);
        let f = &vc * f_eig * vc.transpose();
        first += trace_product(&f, &r);
        second += trace(&(&f * &f * &r));
    }
    Ok(Complex64::new(0.0, -1.0) * first + 0.5 * (second - first * first))
}

/// `∫_{t₀}^{t₀+Δ} e^{iωt} dt` without cancellation at small `ωΔ`.
fn oscillating_integral(omega: f64, t0: f64, dt: f64) -> Complex64 {
    let half = 0.5 * omega * dt;
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    Complex64::from_polar(dt * sinc, omega * (t0 + 0.5 * dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_bath::system::{sphere_couplings, NoiseClass};

    #[test]
    fn second_order_cumulant_relation() {
        let mut set = CumulantSet::new(vec![0.1, 0.2]).unwrap();
        set.set_g(0b01, 0.3);
        set.set_g(0b10, -0.5);
        set.set_g(0b11, 2.0);
        let w = cumulants_from_correlations(&set).unwrap();
        assert_eq!(w.w(0b01), Some(0.3));
        assert!((w.w_full().unwrap() - (2.0 + 0.15)).abs() < 1e-15);
    }

    #[test]
    fn missing_moment_is_reported() {
        let mut set = CumulantSet::new(vec![0.1, 0.2]).unwrap();
        set.set_g(0b01, 0.3);
        set.set_g(0b11, 2.0);
        assert!(matches!(
            cumulants_from_correlations(&set),
            Err(Error::MissingOrder { subset }) if subset == vec![1]
        ));
        assert!(matches!(CumulantSet::new(vec![0.0; 7]), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn single_spin_second_moment() {
        let d = 4.0;
        let sys = SpinBathSystem::from_couplings(vec![d], DMatrix::zeros(1, 1), NoiseClass::Magnetic)
            .unwrap();
        let rho = EnvState::maximally_mixed(1).unwrap();
        let g = correlation_g(&sys, &rho, &[0.3, 1.7]).unwrap();
        assert!((g - d * d / 4.0).abs() < 1e-14);
        assert!(correlation_g(&sys, &rho, &[0.3]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn moments_are_permutation_symmetric() {
        let (c, d) = sphere_couplings(4, 2, 1e3).unwrap();
        let sys = SpinBathSystem::from_couplings(c, d, NoiseClass::Magnetic).unwrap();
        let rho = crate::spin_bath::prepare_quenched_state(&sys, 5e-4).unwrap();
        let a = correlation_g(&sys, &rho, &[1e-4, 3e-4, 2e-4]).unwrap();
        let b = correlation_g(&sys, &rho, &[3e-4, 2e-4, 1e-4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oscillating_integral_limits() {
        let z = oscillating_integral(0.0, 1.0, 2.0);
        assert_eq!(z, Complex64::from(2.0));
        let z = oscillating_integral(3.0, 0.5, 0.25);
        let exact = (Complex64::new(0.0, 3.0 * 0.75).exp() - Complex64::new(0.0, 1.5).exp())
            / Complex64::new(0.0, 3.0);
        assert!((z - exact).norm() < 1e-15);
    }
}
