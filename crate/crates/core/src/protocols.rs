//! SENSIT measurements: forward/time-reversed signal pairs, SDR sweeps and
//! the three experiment drivers.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::{decoherence_gaussian, OuParams};
use crate::control::{make_sdr, max_asymmetry, ModulationFunction, SdrParams, SequenceKind};
use crate::error::{invalid, Error, Result};
use crate::spin_bath::{
    otoc_k, otoc_k_commutator, prepare_quenched_state, scramble, signal_exact, EnvState,
    NoiseClass, SpinBathSystem,
};

/// Signals below this magnitude are not logged.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-12;

pub const DEFAULT_N_PULSES: usize = 12;
pub const DEFAULT_SENSING_TIME: f64 = 750e-6;
pub const DEFAULT_X_POINTS: usize = 12;

#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    /// Gaussian OU field, evaluated through the exact second cumulant.
    Classical { params: OuParams, noise_class: NoiseClass },
    /// Exact two-branch propagation of a spin bath.
    Quantum { system: &'a SpinBathSystem, state: &'a EnvState },
}

impl Backend<'_> {
    pub fn noise_class(&self) -> NoiseClass {
        match self {
            Backend::Classical { noise_class, .. } => *noise_class,
            Backend::Quantum { system, .. } => system.noise_class(),
        }
    }

    /// `J = −ln M` for one control.
    fn decoherence(&self, m: &ModulationFunction) -> Result<(Complex64, Complex64)> {
        match self {
            Backend::Classical { params, .. } => {
                let j = decoherence_gaussian(m, params);
                Ok((Complex64::from((-j).exp()), Complex64::from(j)))
            }
            Backend::Quantum { system, state } => {
                let signal = signal_exact(m, system, state)?;
                let magnitude = signal.norm();
                if !(magnitude >= UNDERFLOW_THRESHOLD) {
                    return Err(Error::SignalUnderflow { magnitude, threshold: UNDERFLOW_THRESHOLD });
                }
                Ok((signal, -signal.ln()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitContrast {
    pub m_f: Complex64,
    pub m_ft: Complex64,
    pub re_delta_j: f64,
    pub im_delta_j: f64,
}

/// `ΔJ = J_f − J_{f_T}`, with `J_{f_T}` conjugated for magnetic noise.
pub fn sensit_contrast(m: &ModulationFunction, backend: &Backend) -> Result<SensitContrast> {
    let rev = m.time_reverse();
    let (m_f, j_f) = backend.decoherence(m)?;
    let (m_ft, j_ft) = backend.decoherence(&rev)?;
    let j_ft = match backend.noise_class() {
        NoiseClass::Magnetic => j_ft.conj(),
        NoiseClass::Electric => j_ft,
    };
    let delta = j_f - j_ft;
    Ok(SensitContrast { m_f, m_ft, re_delta_j: delta.re, im_delta_j: delta.im })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastPoint {
    pub x: f64,
    pub m_f: Complex64,
    pub m_ft: Complex64,
    pub re_delta_j: f64,
    pub im_delta_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastCurve {
    pub points: Vec<ContrastPoint>,
    /// Trapezoidal `∫ Re ΔJ(x) dx` over the grid.
    pub integrated: f64,
}

/// `points` uniformly spaced asymmetries spanning `[0, (N−1)/N]`.
pub fn default_x_grid(n_pulses: usize, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(invalid("x_points", "need at least two grid points"));
    }
    let top = max_asymmetry(n_pulses);
    Ok((0..points).map(|i| top * i as f64 / (points - 1) as f64).collect())
}

fn check_x_grid(n_pulses: usize, x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::EmptyInput("x grid"));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("x_grid", "must be strictly increasing"));
    }
    let top = max_asymmetry(n_pulses);
    if x_grid[0] < 0.0 || *x_grid.last().unwrap() > top + 1e-12 {
        return Err(invalid("x_grid", format!("values must lie in [0, {top}]")));
    }
    Ok(())
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Contrast of SDR(N, x) against its time reverse for each `x`.
pub fn sdr_sweep(
    n_pulses: usize,
    sensing_time: f64,
    x_grid: &[f64],
    backend: &Backend,
) -> Result<ContrastCurve> {
    check_x_grid(n_pulses, x_grid)?;
    let points = x_grid
        .par_iter()
        .map(|&x| {
            let m = make_sdr(SdrParams::new(n_pulses, x, sensing_time)?)?;
            let c = sensit_contrast(&m, backend)?;
            Ok(ContrastPoint {
                x,
                m_f: c.m_f,
                m_ft: c.m_ft,
                re_delta_j: c.re_delta_j,
                im_delta_j: c.im_delta_j,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let re: Vec<f64> = points.iter().map(|p| p.re_delta_j).collect();
    let integrated = trapezoid(x_grid, &re);
    Ok(ContrastCurve { points, integrated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchDecay {
    pub sensing_times: Vec<f64>,
    /// `σ = 0`, `σ = σ₀` and `σ > σ₀`, in that order.
    pub sigma_init: [f64; 3],
    pub signals: [Vec<f64>; 3],
    /// `−d ln M / dT_s` between the last two grid points, per curve.
    pub final_rates: [f64; 3],
}

/// Signal decay `M(T_s)` after a quench from a frozen field, from
/// equilibrium, and from an over-excited field (`p.sigma_init() > σ₀`).
pub fn experiment_quench_decay(
    p: &OuParams,
    ts_grid: &[f64],
    sequence: &SequenceKind,
) -> Result<QuenchDecay> {
    if ts_grid.len() < 2 {
        return Err(invalid("ts_grid", "need at least two sensing times"));
    }
    if ts_grid.windows(2).any(|w| !(w[1] > w[0])) || ts_grid[0] <= 0.0 {
        return Err(invalid("ts_grid", "must be positive and strictly increasing"));
    }
    if !(p.sigma_init() > p.sigma0()) {
        return Err(invalid("sigma_init", "must exceed sigma0 for the over-excited curve"));
    }
    let sigma_init = [0.0, p.sigma0(), p.sigma_init()];
    let exponents = sigma_init
        .iter()
        .map(|&s| {
            let q = p.with_sigma_init(s)?;
            ts_grid
                .par_iter()
                .map(|&ts| Ok(decoherence_gaussian(&sequence.build(ts)?, &q)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let last = ts_grid.len() - 1;
    let dt = ts_grid[last] - ts_grid[last - 1];
    let final_rates = std::array::from_fn(|k| (exponents[k][last] - exponents[k][last - 1]) / dt);
    let signals = std::array::from_fn(|k| exponents[k].iter().map(|j| (-j).exp()).collect());
    Ok(QuenchDecay { sensing_times: ts_grid.to_vec(), sigma_init, signals, final_rates })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparationPoint {
    pub tp: f64,
    pub integrated_contrast: f64,
    pub k_value: f64,
    pub k_commutator: f64,
}

/// Integrated contrast and correlated-spin count versus preparation time.
pub fn experiment_preparation_scan(
    sys: &SpinBathSystem,
    tp_grid: &[f64],
    n_pulses: usize,
    sensing_time: f64,
    x_grid: &[f64],
    phi_points: usize,
) -> Result<Vec<PreparationPoint>> {
    if tp_grid.is_empty() {
        return Err(Error::EmptyInput("preparation times"));
    }
    tp_grid
        .iter()
        .map(|&tp| {
            let state = prepare_quenched_state(sys, tp)?;
            let curve = sdr_sweep(n_pulses, sensing_time, x_grid, &Backend::Quantum { system: sys, state: &state })?;
            let otoc = otoc_k(sys, tp, phi_points)?;
            Ok(PreparationPoint {
                tp,
                integrated_contrast: curve.integrated,
                k_value: otoc.k_value,
                k_commutator: otoc_k_commutator(sys, tp)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScramblingPoint {
    pub te: f64,
    pub integrated_contrast: f64,
}

/// Integrated contrast of the prepared state after bath evolution for `T_E`.
pub fn experiment_scrambling_scan(
    sys: &SpinBathSystem,
    tp: f64,
    te_grid: &[f64],
    n_pulses: usize,
    sensing_time: f64,
    x_grid: &[f64],
) -> Result<Vec<ScramblingPoint>> {
    if te_grid.is_empty() {
        return Err(Error::EmptyInput("scrambling times"));
    }
    let prepared = prepare_quenched_state(sys, tp)?;
    te_grid
        .iter()
        .map(|&te| {
            let state = scramble(sys, &prepared, te)?;
            let curve = sdr_sweep(n_pulses, sensing_time, x_grid, &Backend::Quantum { system: sys, state: &state })?;
            Ok(ScramblingPoint { te, integrated_contrast: curve.integrated })
        })
        .collect()
}
