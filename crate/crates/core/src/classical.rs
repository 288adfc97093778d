//! Classical Gaussian environment: a quenched Ornstein–Uhlenbeck field.
//!
//! The field starts from `B(0) ~ N(0, σ)` and relaxes towards the stationary
//! variance `σ₀` with correlation time `τ`. Its covariance is
//!
//! ```text
//! W₂(t₁, t₂) = σ₀ e^{−|t₁−t₂|/τ} + (σ − σ₀) e^{−(t₁+t₂)/τ}
//! ```
//!
//! `σ` and `σ₀` are variances (rad²/s²). Being zero-mean Gaussian, only the
//! second cumulant survives and `J = ½ ∫∫ f f W₂` is exact.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::control::{Kernel, ModulationFunction, Segment};
use crate::error::{invalid, Error, Result};

/// Global sign of the contrast functional `Σ[f] = s·½(A² − B²)`.
///
/// Fixed by expanding `J_f − J_{f_T}` for the quench kernel and confirmed
/// against the paired Monte Carlo estimator (see `tests/classical_mc.rs`):
/// a quench with `σ < σ₀` and an SDR sequence yields a positive `Re ΔJ`.
pub const SIGMA_FUNCTIONAL_SIGN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    tau: f64,
    sigma0: f64,
    sigma_init: f64,
}

impl OuParams {
    pub fn new(tau: f64, sigma0: f64, sigma_init: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("correlation time must be positive, got {tau}")));
        }
        if !(sigma0.is_finite() && sigma0 >= 0.0) {
            return Err(invalid("sigma0", format!("variance must be non-negative, got {sigma0}")));
        }
        if !(sigma_init.is_finite() && sigma_init >= 0.0) {
            return Err(invalid(
                "sigma_init",
                format!("variance must be non-negative, got {sigma_init}"),
            ));
        }
        Ok(Self { tau, sigma0, sigma_init })
    }

    pub fn stationary(tau: f64, sigma0: f64) -> Result<Self> {
        Self::new(tau, sigma0, sigma0)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn sigma_init(&self) -> f64 {
        self.sigma_init
    }

    pub fn is_stationary(&self) -> bool {
        self.sigma_init == self.sigma0
    }

    /// `σ − σ₀`.
    pub fn quench_depth(&self) -> f64 {
        self.sigma_init - self.sigma0
    }

    pub fn with_sigma_init(&self, sigma_init: f64) -> Result<Self> {
        Self::new(self.tau, self.sigma0, sigma_init)
    }
}

pub fn kernel_w2(p: &OuParams, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(invalid("t", format!("kernel times must be non-negative, got ({t1}, {t2})")));
    }
    Ok(p.sigma0 * (-(t1 - t2).abs() / p.tau).exp()
        + p.quench_depth() * (-(t1 + t2) / p.tau).exp())
}

/// `u − 1 + e^{−u}`, accurate for small `u`.
fn exp_remainder2(u: f64) -> f64 {
    if u < 1e-2 {
        let mut term = u * u / 2.0;
        let mut sum = term;
        for k in 3..12 {
            term *= -u / k as f64;
            sum += term;
        }
        sum
    } else {
        u + (-u).exp_m1()
    }
}

/// `∫_a ∫_b e^{−|t₁−t₂|/τ}` for two constant-sign segments.
fn stationary_block(a: &Segment, b: &Segment, tau: f64) -> f64 {
    if a.start == b.start {
        let u = a.duration() / tau;
        return 2.0 * tau * tau * exp_remainder2(u);
    }
    let (first, second) = if a.start < b.start { (a, b) } else { (b, a) };
    let gap = second.start - first.end;
    tau * tau
        * (-gap / tau).exp()
        * (-first.duration() / tau).exp_m1()
        * (-second.duration() / tau).exp_m1()
}

/// `∫_seg e^{−t/τ} dt`.
fn quench_factor(s: &Segment, tau: f64) -> f64 {
    -tau * (-s.start / tau).exp() * (-s.duration() / tau).exp_m1()
}

/// `∫∫ f(t₁) f(t₂) e^{−|t₁−t₂|/τ}` over the sensing window.
pub fn stationary_filter(m: &ModulationFunction, tau: f64) -> f64 {
    let segs = m.segments();
    let mut acc = 0.0;
    for a in &segs {
        for b in &segs {
            acc += a.sign.value() * b.sign.value() * stationary_block(a, b, tau);
        }
    }
    acc
}

/// `∫∫ f(t₁) f(t₂) e^{−(t₁+t₂)/τ}`, accumulated pairwise over segments.
pub fn quench_filter(m: &ModulationFunction, tau: f64) -> f64 {
    let segs = m.segments();
    let mut acc = 0.0;
    for a in &segs {
        for b in &segs {
            acc += a.sign.value() * b.sign.value() * quench_factor(a, tau) * quench_factor(b, tau);
        }
    }
    acc
}

/// Decoherence exponent `J = ½ ∫∫ f f W₂` (real, exact).
pub fn decoherence_gaussian(m: &ModulationFunction, p: &OuParams) -> f64 {
    let mut j = 0.0;
    if p.sigma0 != 0.0 {
        j += p.sigma0 * stationary_filter(m, p.tau);
    }
    if p.quench_depth() != 0.0 {
        j += p.quench_depth() * quench_filter(m, p.tau);
    }
    0.5 * j
}

/// Contrast functional `Σ[f]` so that `Re ΔJ = (σ − σ₀) Σ[f]`.
pub fn sigma_functional(m: &ModulationFunction, tau: f64) -> Result<f64> {
    let a = m.integrate_against(Kernel::DecayFromStart { tau })?;
    let b = m.integrate_against(Kernel::DecayToEnd { tau })?;
    Ok(SIGMA_FUNCTIONAL_SIGN * 0.5 * (a * a - b * b))
}

/// Closed-form SENSIT contrast `Re ΔJ = J_f − J_{f_T}` of the quenched process.
pub fn contrast_analytic(m: &ModulationFunction, p: &OuParams) -> f64 {
    let quench = p.quench_depth();
    if quench == 0.0 {
        return 0.0;
    }
    quench * sigma_functional(m, p.tau).expect("OuParams guarantees τ > 0")
}

/// Monte Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_traj: usize,
    pub seed: u64,
    /// Steps per `min(τ, shortest segment)`.
    pub grid_factor: usize,
}

impl McConfig {
    pub const DEFAULT_GRID_FACTOR: usize = 50;

    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self { n_traj, seed, grid_factor: Self::DEFAULT_GRID_FACTOR }
    }

    fn validate(&self) -> Result<()> {
        if self.n_traj < 1 {
            return Err(invalid("n_traj", "need at least one trajectory"));
        }
        if self.grid_factor < 1 {
            return Err(invalid("grid_factor", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: Complex64,
    /// Standard error of the complex mean, `sqrt((Var Re + Var Im)/n)`.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Paired estimate of `M_f`, `M_{f_T}` and `Re ΔJ` from shared trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McContrast {
    pub forward: McEstimate,
    pub reversed: McEstimate,
    pub re_delta_j: f64,
    /// Delta-method standard error of `re_delta_j`.
    pub std_error: f64,
}

/// Exact OU transition over a step `h` including the time-integral of the
/// field, sampled jointly.
/// Variance of `∫B` over a step of `u = h/τ` correlation times given both
/// endpoint values, in units of `σ₀τ²`.
fn conditional_integral_variance(u: f64) -> f64 {
    if u < 2e-2 {
        conditional_variance_series(u)
    } else {
        conditional_variance_closed(u)
    }
}

fn conditional_variance_series(u: f64) -> f64 {
    let u2 = u * u;
    u * u2 * (1.0 / 6.0 - u2 / 60.0 + 17.0 * u2 * u2 / 10080.0 - 31.0 * u2 * u2 * u2 / 181440.0)
}

fn conditional_variance_closed(u: f64) -> f64 {
    let a = (-u).exp();
    2.0 * u - 3.0 + 4.0 * a - a * a + (-u).exp_m1().powi(3) / (1.0 + a)
}

#[derive(Debug, Clone, Copy)]
struct OuStep {
    decay: f64,
    integral_mean: f64,
    field_sd: f64,
    integral_coupling: f64,
    integral_sd: f64,
}

impl OuStep {
    fn new(h: f64, tau: f64, sigma0: f64) -> Self {
        let u = h / tau;
        let decay = (-u).exp();
        let var_b = -sigma0 * (-2.0 * u).exp_m1();
        let cov = sigma0 * tau * (-u).exp_m1().powi(2);
        let cond = conditional_integral_variance(u);
        let field_sd = var_b.sqrt();
        Self {
            decay,
            integral_mean: -tau * (-u).exp_m1(),
            field_sd,
            integral_coupling: if field_sd > 0.0 { cov / field_sd } else { 0.0 },
            integral_sd: (sigma0 * tau * tau * cond.max(0.0)).sqrt(),
        }
    }

    /// Returns `(B(t+h), ∫_t^{t+h} B)`.
    fn advance(&self, b: f64, z1: f64, z2: f64) -> (f64, f64) {
        let next = self.decay * b + self.field_sd * z1;
        let integral = self.integral_mean * b + self.integral_coupling * z1 + self.integral_sd * z2;
        (next, integral)
    }
}

/// Grid shared by `f` and `f_T`: every breakpoint of both, each interval
/// subdivided so no step exceeds `min(τ, shortest segment)/grid_factor`.
struct PairedGrid {
    steps: Vec<(OuStep, f64, f64)>,
}

impl PairedGrid {
    fn new(m: &ModulationFunction, p: &OuParams, grid_factor: usize) -> Self {
        let rev = m.time_reverse();
        let mut marks: Vec<f64> = m
            .pulse_times()
            .iter()
            .chain(rev.pulse_times())
            .copied()
            .chain([0.0, m.sensing_time()])
            .collect();
        marks.sort_by(f64::total_cmp);
        marks.dedup();
        let shortest = m
            .segments()
            .iter()
            .map(Segment::duration)
            .fold(f64::INFINITY, f64::min);
        let h_max = p.tau.min(shortest) / grid_factor as f64;

        let mut steps = Vec::new();
        for w in marks.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let f = m.evaluate(mid).expect("inside window");
            let ft = rev.evaluate(mid).expect("inside window");
            let k = (len / h_max).ceil().max(1.0) as usize;
            let step = OuStep::new(len / k as f64, p.tau, p.sigma0);
            steps.extend(std::iter::repeat_n((step, f, ft), k));
        }
        Self { steps }
    }

    /// Accumulated phases `(∫ f B, ∫ f_T B)` along one trajectory.
    fn phases(&self, p: &OuParams, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let z0: f64 = StandardNormal.sample(rng);
        let mut b = p.sigma_init.sqrt() * z0;
        let (mut phi, mut phi_t) = (0.0, 0.0);
        for (step, f, ft) in &self.steps {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            let (next, integral) = step.advance(b, z1, z2);
            phi += f * integral;
            phi_t += ft * integral;
            b = next;
        }
        (phi, phi_t)
    }
}

/// Independent stream for trajectory `index`.
fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    cf: f64,
    sf: f64,
    ct: f64,
    st: f64,
    cf2: f64,
    sf2: f64,
    ct2: f64,
    st2: f64,
    cfct: f64,
}

impl Moments {
    fn push(&mut self, phi: f64, phi_t: f64) {
        let (sf, cf) = phi.sin_cos();
        let (st, ct) = phi_t.sin_cos();
        self.cf += cf;
        self.sf += sf;
        self.ct += ct;
        self.st += st;
        self.cf2 += cf * cf;
        self.sf2 += sf * sf;
        self.ct2 += ct * ct;
        self.st2 += st * st;
        self.cfct += cf * ct;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.cf += o.cf;
        self.sf += o.sf;
        self.ct += o.ct;
        self.st += o.st;
        self.cf2 += o.cf2;
        self.sf2 += o.sf2;
        self.ct2 += o.ct2;
        self.st2 += o.st2;
        self.cfct += o.cfct;
        self
    }
}

fn run_paired(m: &ModulationFunction, p: &OuParams, cfg: &McConfig) -> Result<Moments> {
    cfg.validate()?;
    let grid = PairedGrid::new(m, p, cfg.grid_factor);
    let n_chunks = cfg.n_traj.div_ceil(CHUNK);
    // chunk partials are reduced in index order, so the result does not
    // depend on how rayon schedules the chunks
    let partials: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.n_traj) {
                let mut rng = trajectory_rng(cfg.seed, i);
                let (phi, phi_t) = grid.phases(p, &mut rng);
                acc.push(phi, phi_t);
            }
            acc
        })
        .collect();
    Ok(partials.into_iter().fold(Moments::default(), Moments::merge))
}

fn estimate(n: f64, c: f64, s: f64, c2: f64, s2: f64, cfg: &McConfig) -> McEstimate {
    let mean = Complex64::new(c / n, s / n);
    let var = (c2 / n - mean.re * mean.re) + (s2 / n - mean.im * mean.im);
    let var = if n > 1.0 { var * n / (n - 1.0) } else { 0.0 };
    McEstimate {
        mean,
        std_error: (var.max(0.0) / n).sqrt(),
        n_samples: cfg.n_traj,
        seed: cfg.seed,
    }
}

/// Monte Carlo estimate of `M = E[exp(i ∫ f B dt)]` over exact OU paths.
pub fn simulate_signal_mc(
    m: &ModulationFunction,
    p: &OuParams,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let mo = run_paired(m, p, cfg)?;
    let n = cfg.n_traj as f64;
    Ok(estimate(n, mo.cf, mo.sf, mo.cf2, mo.sf2, cfg))
}

/// Monte Carlo estimate of `Re ΔJ = ln|M_{f_T}| − ln|M_f|` using the same
/// trajectories for both sequences.
pub fn simulate_contrast_mc(
    m: &ModulationFunction,
    p: &OuParams,
    cfg: &McConfig,
) -> Result<McContrast> {
    let mo = run_paired(m, p, cfg)?;
    let n = cfg.n_traj as f64;
    let forward = estimate(n, mo.cf, mo.sf, mo.cf2, mo.sf2, cfg);
    let reversed = estimate(n, mo.ct, mo.st, mo.ct2, mo.st2, cfg);
    let (mf, mt) = (forward.mean.re, reversed.mean.re);
    if mf.abs() < 1e-12 || mt.abs() < 1e-12 {
        return Err(Error::SignalUnderflow { magnitude: mf.abs().min(mt.abs()), threshold: 1e-12 });
    }
    let var_f = mo.cf2 / n - mf * mf;
    let var_t = mo.ct2 / n - mt * mt;
    let cov = mo.cfct / n - mf * mt;
    let var_g = var_t / (mt * mt) + var_f / (mf * mf) - 2.0 * cov / (mf * mt);
    Ok(McContrast {
        forward,
        reversed,
        re_delta_j: reversed.mean.norm().ln() - forward.mean.norm().ln(),
        std_error: (var_g.max(0.0) / (n - 1.0).max(1.0)).sqrt(),
    })
}

/// Draws `n_paths` exact OU paths sampled at the sorted instants `times`.
pub fn sample_paths(p: &OuParams, times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if times.is_empty() {
        return Err(Error::EmptyInput("times"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be non-negative and sorted"));
    }
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let z0: f64 = StandardNormal.sample(&mut rng);
            let mut b = p.sigma_init.sqrt() * z0;
            let mut t = 0.0;
            times
                .iter()
                .map(|&ti| {
                    let step = OuStep::new(ti - t, p.tau, p.sigma0);
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    b = step.advance(b, z1, z2).0;
                    t = ti;
                    b
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{make_cpmg, make_hahn, make_sdr, SdrParams};
    use approx::assert_relative_eq;

    #[test]
    fn kernel_values() {
        let st = OuParams::stationary(1.0, 2.5).unwrap();
        assert_eq!(kernel_w2(&st, 0.3, 0.3).unwrap(), 2.5);
        let frozen = OuParams::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(kernel_w2(&frozen, 0.0, 0.0).unwrap(), 0.0);
        let q = OuParams::new(1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(kernel_w2(&q, 0.0, 1.0).unwrap(), 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert!(kernel_w2(&q, -0.1, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(OuParams::new(0.0, 1.0, 1.0).is_err());
        assert!(OuParams::new(1.0, -1.0, 1.0).is_err());
        assert!(OuParams::new(1.0, 1.0, -1.0).is_err());
        assert!(OuParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn no_noise_no_decay() {
        let p = OuParams::new(1.0, 0.0, 0.0).unwrap();
        let m = make_cpmg(4, 1.0).unwrap();
        assert_eq!(decoherence_gaussian(&m, &p), 0.0);
        let est = simulate_signal_mc(&m, &p, &McConfig::new(100, 3)).unwrap();
        assert_eq!(est.mean, Complex64::new(1.0, 0.0));
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn symmetric_sequences_have_zero_sigma() {
        for m in [make_hahn(1.0).unwrap(), make_cpmg(5, 1.0).unwrap()] {
            assert!(sigma_functional(&m, 0.3).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn contrast_proportional_to_quench_depth() {
        let m = make_sdr(SdrParams::new(12, 0.5, 1.0).unwrap()).unwrap();
        let p1 = OuParams::new(0.2, 1.0, 2.0).unwrap();
        let p2 = OuParams::new(0.2, 1.0, 3.0).unwrap();
        assert_relative_eq!(contrast_analytic(&m, &p2), 2.0 * contrast_analytic(&m, &p1), max_relative = 1e-14);
        assert_eq!(contrast_analytic(&m, &OuParams::stationary(0.2, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn small_step_series_is_continuous() {
        let u = 2e-2;
        assert_relative_eq!(conditional_variance_series(u), conditional_variance_closed(u), max_relative = 1e-8);
        assert_relative_eq!(conditional_variance_series(0.2), conditional_variance_closed(0.2), max_relative = 1e-9);
    }

    #[test]
    fn mc_rejects_zero_trajectories() {
        let m = make_hahn(1.0).unwrap();
        let p = OuParams::stationary(1.0, 1.0).unwrap();
        assert!(simulate_signal_mc(&m, &p, &McConfig::new(0, 1)).is_err());
    }
}
