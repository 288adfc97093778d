//! Probe–bath Hamiltonian assembly.
//!
//! Basis states are labelled by an integer whose bit `i` is set when
//! environment spin `i` points down (`m_i = −½`). `B = Σ d_i I_z^i` is
//! diagonal in this basis and the secular dipolar Hamiltonian
//! `H_E = Σ_{i≠j} d_ij (2 I_z^i I_z^j − I_x^i I_x^j − I_y^i I_y^j)` conserves
//! the number of down spins, so both are stored as one dense real block per
//! magnetization sector.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

pub const MAX_ENV_SPINS: usize = 12;

/// Minimum chord distance between two bath spins on the unit sphere.
pub const SPHERE_MIN_SEPARATION: f64 = 0.5;
/// Ratio of the bath–bath dipolar prefactor to the probe–bath prefactor.
pub const SPHERE_HOMONUCLEAR_RATIO: f64 = 0.25;

/// Behaviour of `B` under the time-reversal operator `∏ σ_y K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseClass {
    /// `B` anticommutes with time reversal (fields, magnetizations, currents).
    Magnetic,
    /// `B` commutes with time reversal (charges, potentials).
    Electric,
}

impl NoiseClass {
    /// `±1` in `W_n(t) = (±1)^n W_n(−t)`.
    pub fn parity(self) -> f64 {
        match self {
            NoiseClass::Magnetic => -1.0,
            NoiseClass::Electric => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathGeometry {
    /// Bath spins at random points of the unit sphere around the probe,
    /// couplings `∝ (1 − 3cos²θ)/r³`.
    Sphere { seed: u64, coupling_scale: f64 },
    /// Couplings given verbatim, rad/s.
    Explicit { couplings: Vec<f64>, dipolar: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub n_env: usize,
    pub geometry: BathGeometry,
    pub noise_class: NoiseClass,
}

/// Basis indices sharing one value of the total `I_z`.
#[derive(Debug, Clone)]
pub(crate) struct Sector {
    pub indices: Vec<usize>,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Real symmetric eigendecomposition `A = V diag(λ) Vᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    fn of(a: &DMatrix<f64>) -> Self {
        let e = SymmetricEigen::new(a.clone());
        Self { values: e.eigenvalues, vectors: e.eigenvectors }
    }
}

#[derive(Debug)]
pub struct SpinBathSystem {
    n_env: usize,
    couplings: Vec<f64>,
    dipolar: DMatrix<f64>,
    noise_class: NoiseClass,
    sectors: Vec<Sector>,
    field: Vec<f64>,
    hamiltonian: Vec<DMatrix<f64>>,
    env_eigen: OnceLock<Vec<Eigen>>,
    branch_eigen: OnceLock<[Vec<Eigen>; 2]>,
}

impl Clone for SpinBathSystem {
    fn clone(&self) -> Self {
        Self::assemble(self.couplings.clone(), self.dipolar.clone(), self.noise_class)
    }
}

pub fn build_system(spec: &BathSpec) -> Result<SpinBathSystem> {
    check_size(spec.n_env)?;
    match &spec.geometry {
        BathGeometry::Sphere { seed, coupling_scale } => {
            let (couplings, dipolar) = sphere_couplings(spec.n_env, *seed, *coupling_scale)?;
            SpinBathSystem::from_couplings(couplings, dipolar, spec.noise_class)
        }
        BathGeometry::Explicit { couplings, dipolar } => {
            if couplings.len() != spec.n_env {
                return Err(Error::MalformedCouplings(format!(
                    "expected {} probe couplings, got {}",
                    spec.n_env,
                    couplings.len()
                )));
            }
            if dipolar.len() != spec.n_env || dipolar.iter().any(|r| r.len() != spec.n_env) {
                return Err(Error::MalformedCouplings(format!(
                    "dipolar matrix must be {0}×{0}",
                    spec.n_env
                )));
            }
            let d = DMatrix::from_fn(spec.n_env, spec.n_env, |i, j| dipolar[i][j]);
            SpinBathSystem::from_couplings(couplings.clone(), d, spec.noise_class)
        }
    }
}

fn check_size(n_env: usize) -> Result<()> {
    if n_env == 0 {
        return Err(invalid("n_env", "need at least one environment spin"));
    }
    if n_env > MAX_ENV_SPINS {
        return Err(Error::DimensionTooLarge { n_env, max: MAX_ENV_SPINS });
    }
    Ok(())
}

/// Deterministic synthetic bath: `n_env` points drawn uniformly on the unit
/// sphere (rejecting any closer than [`SPHERE_MIN_SEPARATION`]),
/// `d_i = κ(1 − 3z_i²)` and `d_ij = ρκ(1 − 3cos²θ_ij)/r_ij³` with `ρ` the
/// [`SPHERE_HOMONUCLEAR_RATIO`] and `θ_ij` measured from the field axis.
pub fn sphere_couplings(
    n_env: usize,
    seed: u64,
    coupling_scale: f64,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_size(n_env)?;
    if !coupling_scale.is_finite() {
        return Err(invalid("coupling_scale", "must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<[f64; 3]> = Vec::with_capacity(n_env);
    while points.len() < n_env {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-9 {
            continue;
        }
        let p = v.map(|c| c / norm);
        if points.iter().all(|q| dist(&p, q) >= SPHERE_MIN_SEPARATION) {
            points.push(p);
        }
    }
    let couplings = points.iter().map(|p| coupling_scale * (1.0 - 3.0 * p[2] * p[2])).collect();
    let dipolar = DMatrix::from_fn(n_env, n_env, |i, j| {
        if i == j {
            return 0.0;
        }
        let r = dist(&points[i], &points[j]);
        let cos = (points[i][2] - points[j][2]) / r;
        SPHERE_HOMONUCLEAR_RATIO * coupling_scale * (1.0 - 3.0 * cos * cos) / (r * r * r)
    });
    Ok((couplings, dipolar))
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `m_i` of basis state `state`.
pub(crate) fn spin_z(state: usize, i: usize) -> f64 {
    if state >> i & 1 == 1 {
        -0.5
    } else {
        0.5
    }
}

impl SpinBathSystem {
    pub fn from_couplings(
        couplings: Vec<f64>,
        dipolar: DMatrix<f64>,
        noise_class: NoiseClass,
    ) -> Result<Self> {
        let n = couplings.len();
        check_size(n)?;
        if dipolar.nrows() != n || dipolar.ncols() != n {
            return Err(Error::MalformedCouplings(format!("dipolar matrix must be {n}×{n}")));
        }
        if couplings.iter().chain(dipolar.iter()).any(|c| !c.is_finite()) {
            return Err(Error::MalformedCouplings("couplings must be finite".into()));
        }
        let scale = dipolar.amax().max(1.0);
        for i in 0..n {
            if dipolar[(i, i)] != 0.0 {
                return Err(Error::MalformedCouplings(format!("nonzero diagonal at ({i}, {i})")));
            }
            for j in i + 1..n {
                if (dipolar[(i, j)] - dipolar[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::AsymmetricCoupling { i, j });
                }
            }
        }
        Ok(Self::assemble(couplings, dipolar, noise_class))
    }

    fn assemble(couplings: Vec<f64>, dipolar: DMatrix<f64>, noise_class: NoiseClass) -> Self {
        let n = couplings.len();
        let dim = 1usize << n;
        let mut sectors: Vec<Sector> = (0..=n).map(|_| Sector { indices: Vec::new() }).collect();
        let mut local = vec![0usize; dim];
        for s in 0..dim {
            let k = s.count_ones() as usize;
            local[s] = sectors[k].indices.len();
            sectors[k].indices.push(s);
        }
        let field: Vec<f64> = (0..dim)
            .map(|s| (0..n).map(|i| couplings[i] * spin_z(s, i)).sum())
            .collect();

        let hamiltonian = sectors
            .iter()
            .map(|sec| {
                let mut h = DMatrix::zeros(sec.dim(), sec.dim());
                for (a, &s) in sec.indices.iter().enumerate() {
                    let mut diag = 0.0;
                    for i in 0..n {
                        for j in i + 1..n {
                            let d = dipolar[(i, j)];
                            if d == 0.0 {
                                continue;
                            }
                            // both orderings (i, j), (j, i) of the pair sum
                            diag += 4.0 * d * spin_z(s, i) * spin_z(s, j);
                            if (s >> i & 1) != (s >> j & 1) {
                                let t = s ^ (1 << i) ^ (1 << j);
                                h[(local[t], a)] -= d;
                            }
                        }
                    }
                    h[(a, a)] = diag;
                }
                h
            })
            .collect();

        Self {
            n_env: n,
            couplings,
            dipolar,
            noise_class,
            sectors,
            field,
            hamiltonian,
            env_eigen: OnceLock::new(),
            branch_eigen: OnceLock::new(),
        }
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn dim(&self) -> usize {
        1 << self.n_env
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn dipolar(&self) -> &DMatrix<f64> {
        &self.dipolar
    }

    pub fn noise_class(&self) -> NoiseClass {
        self.noise_class
    }

    /// Diagonal of `B` in the product basis.
    pub fn field_diagonal(&self) -> &[f64] {
        &self.field
    }

    pub fn has_dipolar(&self) -> bool {
        self.dipolar.iter().any(|&d| d != 0.0)
    }

    /// Same bath with every probe coupling `d_i` multiplied by `factor`.
    pub fn with_probe_scale(&self, factor: f64) -> Result<Self> {
        Self::from_couplings(
            self.couplings.iter().map(|d| d * factor).collect(),
            self.dipolar.clone(),
            self.noise_class,
        )
    }

    /// Same probe couplings, all `d_ij = 0`.
    pub fn without_dipolar(&self) -> Self {
        Self::assemble(
            self.couplings.clone(),
            DMatrix::zeros(self.n_env, self.n_env),
            self.noise_class,
        )
    }

    pub fn with_noise_class(&self, noise_class: NoiseClass) -> Self {
        Self::assemble(self.couplings.clone(), self.dipolar.clone(), noise_class)
    }

    /// Dense `H_E`.
    pub fn hamiltonian_dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for (sec, block) in self.sectors.iter().zip(&self.hamiltonian) {
            for (a, &sa) in sec.indices.iter().enumerate() {
                for (b, &sb) in sec.indices.iter().enumerate() {
                    h[(sa, sb)] = block[(a, b)];
                }
            }
        }
        h
    }

    /// Dense `B = Σ d_i I_z^i`.
    pub fn noise_operator_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.field))
    }

    pub(crate) fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Sector restriction of `B`.
    pub(crate) fn field_block(&self, k: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.sectors[k].dim(),
            self.sectors[k].indices.iter().map(|&s| self.field[s]),
        )
    }

    /// Eigendecomposition of `H_E`, one entry per sector.
    pub(crate) fn env_eigen(&self) -> &[Eigen] {
        self.env_eigen.get_or_init(|| self.hamiltonian.iter().map(Eigen::of).collect())
    }

    /// Eigendecompositions of `H_E + B/2` (index 0) and `H_E − B/2` (index 1).
    pub(crate) fn branch_eigen(&self) -> &[Vec<Eigen>; 2] {
        self.branch_eigen.get_or_init(|| {
            let shifted = |sign: f64| -> Vec<Eigen> {
                self.hamiltonian
                    .iter()
                    .enumerate()
                    .map(|(k, h)| {
                        let mut g = h.clone();
                        for (a, b) in self.field_block(k).iter().enumerate() {
                            g[(a, a)] += 0.5 * sign * b;
                        }
                        Eigen::of(&g)
                    })
                    .collect()
            };
            [shifted(1.0), shifted(-1.0)]
        })
    }
}
