//! Multiple-quantum coherence spectrum of the probe–bath state
//! `S_x ⊗ cos(B T_p) + S_y ⊗ sin(B T_p)` under collective `I_x` rotations.
//!
//! The qubit trace is done analytically: `Tr_q[S_x S_x] = Tr_q[S_y S_y] = ½`
//! and the cross terms are traceless, so every bath-space quantity is the
//! average of the cosine and sine parts.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::system::SpinBathSystem;
use super::trace_product;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OtocResult {
    /// Normalized intensity per coherence order; sums to 1.
    pub mqc_spectrum: BTreeMap<i32, f64>,
    /// Second moment `Σ M² I_M`.
    pub k_value: f64,
}

fn correlated_parts(sys: &SpinBathSystem, tp: f64) -> Result<[Vec<f64>; 2]> {
    if !tp.is_finite() || tp < 0.0 {
        return Err(invalid("tp", format!("preparation time must be ≥ 0, got {tp}")));
    }
    let b = sys.field_diagonal();
    Ok([b.iter().map(|x| (x * tp).cos()).collect(), b.iter().map(|x| (x * tp).sin()).collect()])
}

/// `e^{iφI_x} X e^{−iφI_x}` applied one spin at a time on rows and columns.
fn rotate_x(x: &DMatrix<Complex64>, n_env: usize, phi: f64) -> DMatrix<Complex64> {
    let c = Complex64::from((0.5 * phi).cos());
    let s = Complex64::new(0.0, (0.5 * phi).sin());
    let mut out = x.clone();
    let dim = out.nrows();
    for i in 0..n_env {
        let bit = 1usize << i;
        // left: rows mix through [[c, s], [s, c]]
        for a in (0..dim).filter(|a| a & bit == 0) {
            for col in 0..dim {
                let (u, d) = (out[(a, col)], out[(a | bit, col)]);
                out[(a, col)] = c * u + s * d;
                out[(a | bit, col)] = s * u + c * d;
            }
        }
        // right: columns mix through the adjoint [[c, −s], [−s, c]]
        for b in (0..dim).filter(|b| b & bit == 0) {
            for row in 0..dim {
                let (l, r) = (out[(row, b)], out[(row, b | bit)]);
                out[(row, b)] = l * c - r * s;
                out[(row, b | bit)] = -l * s + r * c;
            }
        }
    }
    out
}

/// `K` from the Fourier spectrum of the echo `S(φ) = Tr[ρ e^{iφI_x} ρ e^{−iφI_x}]`
/// sampled on `phi_points` uniform phases, normalized by `S(0) = Tr ρ²`.
pub fn otoc_k(sys: &SpinBathSystem, tp: f64, phi_points: usize) -> Result<OtocResult> {
    let n = sys.n_env();
    let required = 2 * n + 2;
    if phi_points < required {
        return Err(Error::InsufficientPhiPoints { required, got: phi_points });
    }
    let parts = correlated_parts(sys, tp)?;
    let dim = sys.dim();
    let mats: Vec<DMatrix<Complex64>> = parts
        .iter()
        .map(|p| DMatrix::from_fn(dim, dim, |a, b| if a == b { Complex64::from(p[a]) } else { Complex64::default() }))
        .collect();
    let echo: Vec<f64> = (0..phi_points)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / phi_points as f64;
            0.5 * mats.iter().map(|r| trace_product(r, &rotate_x(r, n, phi)).re).sum::<f64>()
        })
        .collect();
    let norm = echo[0];
    let orders = n as i32;
    let mut spectrum = BTreeMap::new();
    for order in -orders..=orders {
        let amp: f64 = echo
            .iter()
            .enumerate()
            .map(|(j, s)| s * (2.0 * PI * (order as f64) * j as f64 / phi_points as f64).cos())
            .sum::<f64>()
            / phi_points as f64;
        spectrum.insert(order, amp / norm);
    }
    let k_value = spectrum.iter().map(|(m, i)| f64::from(m * m) * i).sum();
    Ok(OtocResult { mqc_spectrum: spectrum, k_value })
}

/// `K = Tr([ρ, I_x]†[ρ, I_x]) / Tr ρ²` evaluated directly.
///
/// `I_x` links states that differ by one spin flip with amplitude ½, and `ρ`
/// is diagonal in each qubit component.
pub fn otoc_k_commutator(sys: &SpinBathSystem, tp: f64) -> Result<f64> {
    let parts = correlated_parts(sys, tp)?;
    let dim = sys.dim();
    let mut comm = 0.0;
    let mut purity = 0.0;
    for p in &parts {
        for a in 0..dim {
            purity += p[a] * p[a];
            for i in 0..sys.n_env() {
                let diff = p[a] - p[a ^ (1 << i)];
                comm += 0.25 * diff * diff;
            }
        }
    }
    Ok(comm / purity)
}
