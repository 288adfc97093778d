use nalgebra::DMatrix;
use num_complex::Complex64;

use super::system::{SpinBathSystem, MAX_ENV_SPINS};
use super::{propagator, sub_block};
use crate::error::{invalid, Error, Result};

const HERMITICITY_TOLERANCE: f64 = 1e-12;
const TRACE_TOLERANCE: f64 = 1e-12;

/// Unit-trace Hermitian operator on the bath (not necessarily positive).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    rho: DMatrix<Complex64>,
    n_env: usize,
}

impl EnvState {
    /// `𝕀 / 2^{n_env}`.
    pub fn maximally_mixed(n_env: usize) -> Result<Self> {
        check_n(n_env)?;
        let dim = 1usize << n_env;
        Ok(Self {
            rho: DMatrix::from_diagonal_element(dim, dim, Complex64::from(1.0 / dim as f64)),
            n_env,
        })
    }

    pub fn from_matrix(rho: DMatrix<Complex64>) -> Result<Self> {
        let dim = rho.nrows();
        if rho.ncols() != dim {
            return Err(Error::InvalidState(format!("{}×{} is not square", dim, rho.ncols())));
        }
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidState(format!("dimension {dim} is not 2^n with n ≥ 1")));
        }
        let n_env = dim.trailing_zeros() as usize;
        check_n(n_env)?;
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let skew = (&rho - rho.adjoint()).camax();
        if skew > HERMITICITY_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {skew:e})")));
        }
        let tr = rho.trace();
        if (tr - Complex64::from(1.0)).norm() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(Self { rho, n_env })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        Self::from_matrix(DMatrix::from_fn(dim, dim, |a, b| {
            if a == b {
                Complex64::from(diag[a])
            } else {
                Complex64::default()
            }
        }))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|a| (0..dim).all(|b| a == b || self.rho[(a, b)] == Complex64::default()))
    }

    /// `(1 − ε)·self + ε·other`.
    pub fn mix(&self, other: &EnvState, epsilon: f64) -> Result<EnvState> {
        if other.dim() != self.dim() {
            return Err(Error::InvalidState(format!(
                "cannot mix dimension {} with {}",
                self.dim(),
                other.dim()
            )));
        }
        if !epsilon.is_finite() {
            return Err(invalid("epsilon", "must be finite"));
        }
        Ok(Self { rho: &self.rho * Complex64::from(1.0 - epsilon) + &other.rho * Complex64::from(epsilon), n_env: self.n_env })
    }

    /// Frobenius norm of `[ρ, H_E]`.
    pub fn commutator_norm(&self, sys: &SpinBathSystem) -> f64 {
        let h = sys.hamiltonian_dense().map(Complex64::from);
        (&self.rho * &h - &h * &self.rho).norm()
    }

    pub(crate) fn check_compatible(&self, sys: &SpinBathSystem) -> Result<()> {
        if self.n_env != sys.n_env() {
            return Err(Error::InvalidState(format!(
                "state has {} spins, bath has {}",
                self.n_env,
                sys.n_env()
            )));
        }
        Ok(())
    }
}

fn check_n(n_env: usize) -> Result<()> {
    if n_env == 0 {
        return Err(invalid("n_env", "need at least one environment spin"));
    }
    if n_env > MAX_ENV_SPINS {
        return Err(Error::DimensionTooLarge { n_env, max: MAX_ENV_SPINS });
    }
    Ok(())
}

/// `Y ρ* Y†` with `Y = ∏ σ_y^i`.
///
/// `Y|b⟩ = i^n (−1)^{|b|} |b̄⟩`, so the phases cancel up to the parity of the
/// two flipped labels.
pub fn time_reversal_conjugate(rho: &EnvState) -> EnvState {
    let dim = rho.dim();
    let mask = dim - 1;
    let out = DMatrix::from_fn(dim, dim, |a, b| {
        let (fa, fb) = (a ^ mask, b ^ mask);
        let v = rho.rho[(fa, fb)].conj();
        if (fa.count_ones() + fb.count_ones()) % 2 == 1 {
            -v
        } else {
            v
        }
    });
    EnvState { rho: out, n_env: rho.n_env }
}

/// `cos(B T_p) / Tr cos(B T_p)`: the bath state left after a probe–bath
/// evolution of length `T_p` (bath dynamics suppressed) and removal of the
/// probe coherence.
pub fn prepare_quenched_state(sys: &SpinBathSystem, tp: f64) -> Result<EnvState> {
    if !tp.is_finite() || tp < 0.0 {
        return Err(invalid("tp", format!("preparation time must be ≥ 0, got {tp}")));
    }
    let diag: Vec<f64> = sys.field_diagonal().iter().map(|b| (b * tp).cos()).collect();
    let trace: f64 = diag.iter().sum();
    if trace.abs() <= 1e-9 * sys.dim() as f64 {
        return Err(Error::DegenerateNormalization { trace });
    }
    let dim = sys.dim();
    let rho = DMatrix::from_fn(dim, dim, |a, b| {
        if a == b {
            Complex64::from(diag[a] / trace)
        } else {
            Complex64::default()
        }
    });
    Ok(EnvState { rho, n_env: sys.n_env() })
}

/// `e^{−iH_E T_E} ρ e^{iH_E T_E}`, applied sector block by sector block.
pub fn scramble(sys: &SpinBathSystem, rho: &EnvState, te: f64) -> Result<EnvState> {
    if !te.is_finite() || te < 0.0 {
        return Err(invalid("te", format!("scrambling time must be ≥ 0, got {te}")));
    }
    rho.check_compatible(sys)?;
    if te == 0.0 {
        return Ok(rho.clone());
    }
    let sectors = sys.sectors();
    let props: Vec<DMatrix<Complex64>> =
        sys.env_eigen().iter().map(|e| propagator(e, te)).collect();
    let mut out = DMatrix::zeros(rho.dim(), rho.dim());
    for (k, sk) in sectors.iter().enumerate() {
        for (l, sl) in sectors.iter().enumerate() {
            let block = sub_block(&rho.rho, &sk.indices, &sl.indices);
            if block.iter().all(|z| *z == Complex64::default()) {
                continue;
            }
            let evolved = &props[k] * block * props[l].adjoint();
            for (a, &ia) in sk.indices.iter().enumerate() {
                for (b, &ib) in sl.indices.iter().enumerate() {
                    out[(ia, ib)] = evolved[(a, b)];
                }
            }
        }
    }
    // restore exact Hermiticity lost to rounding
    let out = (&out + out.adjoint()) * Complex64::from(0.5);
    Ok(EnvState { rho: out, n_env: rho.n_env })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_bath::system::{sphere_couplings, NoiseClass};

    fn bath(n: usize) -> SpinBathSystem {
        let (c, d) = sphere_couplings(n, 11, 1e3).unwrap();
        SpinBathSystem::from_couplings(c, d, NoiseClass::Magnetic).unwrap()
    }

    #[test]
    fn validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.5].map(Complex64::from));
        assert!(matches!(EnvState::from_matrix(bad), Err(Error::InvalidState(_))));
        assert!(EnvState::from_diagonal(&[0.6, 0.6]).is_err());
        assert!(EnvState::from_diagonal(&[1.2, -0.2]).is_ok());
        assert!(EnvState::from_diagonal(&[0.5, 0.25, 0.25]).is_err());
    }

    #[test]
    fn quenched_state_at_zero_is_identity() {
        let sys = bath(4);
        let rho = prepare_quenched_state(&sys, 0.0).unwrap();
        assert_eq!(rho, EnvState::maximally_mixed(4).unwrap());
    }

    #[test]
    fn single_spin_quench_is_trivial() {
        let sys = SpinBathSystem::from_couplings(vec![2e3], DMatrix::zeros(1, 1), NoiseClass::Magnetic)
            .unwrap();
        let rho = prepare_quenched_state(&sys, 1e-4).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_normalization_is_reported() {
        let sys = SpinBathSystem::from_couplings(vec![1.0], DMatrix::zeros(1, 1), NoiseClass::Magnetic)
            .unwrap();
        assert!(matches!(
            prepare_quenched_state(&sys, std::f64::consts::PI),
            Err(Error::DegenerateNormalization { .. })
        ));
    }

    #[test]
    fn scrambling_preserves_purity_and_trace() {
        let sys = bath(5);
        let rho = prepare_quenched_state(&sys, 3e-4).unwrap();
        let s = scramble(&sys, &rho, 7e-4).unwrap();
        assert!((s.purity() - rho.purity()).abs() < 1e-12);
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(rho.commutator_norm(&sys) > 1e-6);
    }

    #[test]
    fn conjugation_is_an_involution() {
        let sys = bath(3);
        let rho = scramble(&sys, &prepare_quenched_state(&sys, 4e-4).unwrap(), 2e-4).unwrap();
        let twice = time_reversal_conjugate(&time_reversal_conjugate(&rho));
        assert!((twice.matrix() - rho.matrix()).camax() < 1e-14);
    }
}
