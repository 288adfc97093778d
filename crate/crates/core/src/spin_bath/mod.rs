//! Exact dynamics of a probe qubit dephasing against a small dipolar spin bath.

mod correlations;
mod dynamics;
mod otoc;
mod state;
mod system;

pub use correlations::{
    correlation_g, cumulants_from_correlations, delta_w, second_order_decoherence, CumulantSet,
    MAX_CUMULANT_ORDER,
};
pub use dynamics::{heisenberg_b, signal_exact};
pub use otoc::{otoc_k, otoc_k_commutator, OtocResult};
pub use state::{prepare_quenched_state, scramble, time_reversal_conjugate, EnvState};
pub use system::{
    build_system, sphere_couplings, BathGeometry, BathSpec, NoiseClass, SpinBathSystem,
    MAX_ENV_SPINS, SPHERE_HOMONUCLEAR_RATIO, SPHERE_MIN_SEPARATION,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use system::Eigen;

/// `V diag(e^{−iλt}) Vᵀ`.
pub(crate) fn propagator(e: &Eigen, t: f64) -> DMatrix<Complex64> {
    let v = e.vectors.map(Complex64::from);
    let mut scaled = v.clone();
    for (k, lambda) in e.values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    scaled * v.transpose()
}

pub(crate) fn sub_block(
    m: &DMatrix<Complex64>,
    rows: &[usize],
    cols: &[usize],
) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

pub(crate) fn trace(m: &DMatrix<Complex64>) -> Complex64 {
    m.diagonal().sum()
}

/// `Tr[A B]` without forming the product.
pub(crate) fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    a.transpose().component_mul(b).sum()
}
