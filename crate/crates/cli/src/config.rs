//! TOML run configuration.
//!
//! Times are given in microseconds, noise variances in rad²/s² and bath
//! couplings in krad/s. Everything else is converted to SI on the way into
//! the core crate.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sensit_core::classical::OuParams;
use sensit_core::control::{max_asymmetry, SequenceKind};
use sensit_core::protocols::{default_x_grid, DEFAULT_N_PULSES, DEFAULT_X_POINTS};
use sensit_core::spin_bath::{build_system, BathGeometry, BathSpec, NoiseClass, SpinBathSystem};

use crate::error::{CliError, Result};

const US: f64 = 1e-6;
const KRAD: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Sweep,
    QuenchDecay,
    PreparationScan,
    ScramblingScan,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Sweep,
        Experiment::QuenchDecay,
        Experiment::PreparationScan,
        Experiment::ScramblingScan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Sweep => "sweep",
            Experiment::QuenchDecay => "quench_decay",
            Experiment::PreparationScan => "preparation_scan",
            Experiment::ScramblingScan => "scrambling_scan",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == name).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|e| e.as_str()).collect();
            CliError::validation(
                "experiment",
                format!("unknown experiment `{name}`; valid selectors are {}", valid.join(", ")),
            )
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    /// `sdr` for contrast experiments; `hahn` (default) or `cpmg` for
    /// quench decay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default = "default_n_pulses")]
    pub n_pulses: usize,
    #[serde(default = "default_sensing_time_us")]
    pub sensing_time_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_noise_model")]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    /// Defaults to `sigma0` (no quench).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_init: Option<f64>,
    #[serde(default = "default_noise_class")]
    pub noise_class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub n_env: usize,
    /// `sphere` or `explicit`.
    #[serde(default = "default_geometry")]
    pub geometry: String,
    /// Sphere placement seed; falls back to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_coupling_scale")]
    pub coupling_scale_krad_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_i_krad_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_ij_krad_s: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_noise_class")]
    pub noise_class: String,
    /// Probe–bath preparation before sensing (sweep and scrambling scan).
    #[serde(default)]
    pub preparation_time_us: f64,
    /// Free bath evolution after preparation (sweep only).
    #[serde(default)]
    pub scrambling_time_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Explicit SDR asymmetries; otherwise `x_points` uniform values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default = "default_ts_us")]
    pub ts_us: Vec<f64>,
    #[serde(default = "default_tp_us")]
    pub tp_us: Vec<f64>,
    #[serde(default = "default_te_us")]
    pub te_us: Vec<f64>,
    /// Defaults to `2·n_env + 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    /// Trajectories per sweep point; 0 disables the Monte Carlo columns.
    #[serde(default)]
    pub n_traj: usize,
    #[serde(default = "default_grid_factor")]
    pub grid_factor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    /// File stem; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    #[serde(default = "default_true")]
    pub plot: bool,
}

fn default_experiment() -> String {
    Experiment::Sweep.as_str().into()
}
fn default_seed() -> u64 {
    1
}
fn default_n_pulses() -> usize {
    DEFAULT_N_PULSES
}
fn default_sensing_time_us() -> f64 {
    750.0
}
fn default_noise_model() -> String {
    "ou".into()
}
fn default_noise_class() -> String {
    "magnetic".into()
}
fn default_geometry() -> String {
    "sphere".into()
}
fn default_coupling_scale() -> f64 {
    3.0
}
fn default_x_points() -> usize {
    DEFAULT_X_POINTS
}
fn default_ts_us() -> Vec<f64> {
    (1..=40).map(|k| 25.0 * k as f64).collect()
}
fn default_tp_us() -> Vec<f64> {
    vec![0.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0]
}
fn default_te_us() -> Vec<f64> {
    vec![0.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0]
}
fn default_grid_factor() -> usize {
    sensit_core::classical::McConfig::DEFAULT_GRID_FACTOR
}
fn default_out_dir() -> String {
    "out".into()
}
fn default_true() -> bool {
    true
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            kind: None,
            n_pulses: default_n_pulses(),
            sensing_time_us: default_sensing_time_us(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x: None,
            x_points: default_x_points(),
            ts_us: default_ts_us(),
            tp_us: default_tp_us(),
            te_us: default_te_us(),
            phi_points: None,
        }
    }
}

impl Default for McSettings {
    fn default() -> Self {
        Self { n_traj: 0, grid_factor: default_grid_factor() }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), stem: None, plot: true }
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text, path)
}

/// `origin` is only used in diagnostics.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<RunConfig> {
    let cfg = load_config_str(text, origin)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses and applies defaults without validating, so that command-line
/// overrides can be applied first.
pub fn load_config_str(text: &str, origin: &Path) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| CliError::Parse { path: origin.to_path_buf(), message: e.to_string() })
}

pub fn write_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| CliError::validation("config", e.to_string()))
}

fn core_error(section: &str, e: sensit_core::Error) -> CliError {
    match e {
        sensit_core::Error::InvalidParameter { name, reason } => {
            CliError::validation(format!("{section}.{name}"), reason)
        }
        other => CliError::validation(section, other.to_string()),
    }
}

fn parse_noise_class(field: &str, name: &str) -> Result<NoiseClass> {
    match name {
        "magnetic" => Ok(NoiseClass::Magnetic),
        "electric" => Ok(NoiseClass::Electric),
        other => Err(CliError::validation(
            field,
            format!("unknown noise class `{other}`; expected magnetic or electric"),
        )),
    }
}

fn check_times(field: &str, grid: &[f64], strictly_positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(CliError::validation(field, "grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0 || (strictly_positive && *t == 0.0)) {
        let bound = if strictly_positive { "> 0" } else { "≥ 0" };
        return Err(CliError::validation(field, format!("all values must be finite and {bound}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn experiment(&self) -> Result<Experiment> {
        Experiment::parse(&self.experiment)
    }

    pub fn sensing_time(&self) -> f64 {
        self.sequence.sensing_time_us * US
    }

    /// Stem used for the CSV, JSON and SVG outputs.
    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.experiment.clone())
    }

    /// Hex SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(write_config(self)?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn x_grid(&self) -> Result<Vec<f64>> {
        let n = self.sequence.n_pulses;
        match &self.grids.x {
            None => default_x_grid(n, self.grids.x_points).map_err(|e| core_error("grids", e)),
            Some(x) => {
                if x.is_empty() {
                    return Err(CliError::validation("grids.x", "grid is empty"));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(CliError::validation("grids.x", "must be strictly increasing"));
                }
                let top = max_asymmetry(n);
                if x[0] < 0.0 || *x.last().unwrap() > top + 1e-12 {
                    return Err(CliError::validation("grids.x", format!("values must lie in [0, {top}]")));
                }
                Ok(x.clone())
            }
        }
    }

    /// The configured sequence family, or the experiment's default.
    pub fn sequence_name(&self) -> &str {
        match (&self.sequence.kind, Experiment::parse(&self.experiment)) {
            (Some(k), _) => k,
            (None, Ok(Experiment::QuenchDecay)) => "hahn",
            (None, _) => "sdr",
        }
    }

    pub fn sequence_kind(&self) -> Result<SequenceKind> {
        match self.sequence_name() {
            "hahn" => Ok(SequenceKind::Hahn),
            "cpmg" => Ok(SequenceKind::Cpmg { n_pulses: self.sequence.n_pulses }),
            other => Err(CliError::validation(
                "sequence.kind",
                format!("`{other}` cannot be used here; expected hahn or cpmg"),
            )),
        }
    }

    pub fn ou_params(&self) -> Result<(OuParams, NoiseClass)> {
        let noise = self
            .noise
            .as_ref()
            .ok_or_else(|| CliError::validation("noise", "a [noise] section is required"))?;
        if noise.model != "ou" {
            return Err(CliError::validation(
                "noise.model",
                format!("unknown model `{}`; the only model is ou", noise.model),
            ));
        }
        let tau = noise
            .tau_us
            .ok_or_else(|| CliError::validation("noise.tau_us", "required for OU noise"))?;
        let sigma0 = noise
            .sigma0
            .ok_or_else(|| CliError::validation("noise.sigma0", "required for OU noise"))?;
        let sigma_init = noise.sigma_init.unwrap_or(sigma0);
        let p = OuParams::new(tau * US, sigma0, sigma_init).map_err(|e| match e {
            sensit_core::Error::InvalidParameter { name: "tau", reason } => {
                CliError::validation("noise.tau_us", reason)
            }
            other => core_error("noise", other),
        })?;
        Ok((p, parse_noise_class("noise.noise_class", &noise.noise_class)?))
    }

    pub fn bath_spec(&self) -> Result<BathSpec> {
        let bath = self
            .bath
            .as_ref()
            .ok_or_else(|| CliError::validation("bath", "a [bath] section is required"))?;
        let noise_class = parse_noise_class("bath.noise_class", &bath.noise_class)?;
        let geometry = match bath.geometry.as_str() {
            "sphere" => {
                if !(bath.coupling_scale_krad_s.is_finite() && bath.coupling_scale_krad_s > 0.0) {
                    return Err(CliError::validation("bath.coupling_scale_krad_s", "must be positive"));
                }
                BathGeometry::Sphere {
                    seed: bath.seed.unwrap_or(self.seed),
                    coupling_scale: bath.coupling_scale_krad_s * KRAD,
                }
            }
            "explicit" => {
                let d_i = bath.d_i_krad_s.as_ref().ok_or_else(|| {
                    CliError::validation("bath.d_i_krad_s", "required for explicit geometry")
                })?;
                let d_ij = match &bath.d_ij_krad_s {
                    Some(m) => m.iter().map(|r| r.iter().map(|v| v * KRAD).collect()).collect(),
                    None => vec![vec![0.0; bath.n_env]; bath.n_env],
                };
                BathGeometry::Explicit { couplings: d_i.iter().map(|v| v * KRAD).collect(), dipolar: d_ij }
            }
            other => {
                return Err(CliError::validation(
                    "bath.geometry",
                    format!("unknown geometry `{other}`; expected sphere or explicit"),
                ))
            }
        };
        Ok(BathSpec { n_env: bath.n_env, geometry, noise_class })
    }

    pub fn bath_system(&self) -> Result<SpinBathSystem> {
        build_system(&self.bath_spec()?).map_err(|e| core_error("bath", e))
    }

    pub fn phi_points(&self) -> usize {
        let n = self.bath.as_ref().map_or(1, |b| b.n_env);
        self.grids.phi_points.unwrap_or(2 * n + 2)
    }

    /// Checks every precondition the selected experiment depends on.
    pub fn validate(&self) -> Result<()> {
        let experiment = self.experiment()?;
        // TOML integers are signed, so larger seeds could not be written back
        let seeds = [("seed", Some(self.seed)), ("bath.seed", self.bath.as_ref().and_then(|b| b.seed))];
        for (field, seed) in seeds {
            if seed.is_some_and(|s| s > i64::MAX as u64) {
                return Err(CliError::validation(field, format!("must not exceed {}", i64::MAX)));
            }
        }
        let seq = &self.sequence;
        if !(seq.sensing_time_us.is_finite() && seq.sensing_time_us > 0.0) {
            return Err(CliError::validation("sequence.sensing_time_us", "must be positive"));
        }
        if seq.n_pulses == 0 {
            return Err(CliError::validation("sequence.n_pulses", "need at least one pulse"));
        }
        if self.mc.grid_factor == 0 {
            return Err(CliError::validation("mc.grid_factor", "must be at least 1"));
        }
        let contrast = matches!(
            experiment,
            Experiment::Sweep | Experiment::PreparationScan | Experiment::ScramblingScan
        );
        if contrast {
            if self.sequence_name() != "sdr" {
                return Err(CliError::validation(
                    "sequence.kind",
                    format!("{experiment} uses SDR sequences, got `{}`", self.sequence_name()),
                ));
            }
            if seq.n_pulses < 2 {
                return Err(CliError::validation("sequence.n_pulses", "SDR needs at least two pulses"));
            }
            self.x_grid()?;
        }
        if let Some(b) = &self.bath {
            for (field, v) in [
                ("bath.preparation_time_us", b.preparation_time_us),
                ("bath.scrambling_time_us", b.scrambling_time_us),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::validation(field, "must be finite and ≥ 0"));
                }
            }
        }
        match experiment {
            Experiment::Sweep => match (&self.noise, &self.bath) {
                (Some(_), None) => {
                    self.ou_params()?;
                }
                (None, Some(_)) => {
                    self.bath_system()?;
                    if self.mc.n_traj > 0 {
                        return Err(CliError::validation(
                            "mc.n_traj",
                            "Monte Carlo applies only to classical noise",
                        ));
                    }
                }
                _ => {
                    return Err(CliError::validation(
                        "noise",
                        "a sweep needs exactly one of [noise] or [bath]",
                    ))
                }
            },
            Experiment::QuenchDecay => {
                let (p, _) = self.ou_params()?;
                if !(p.sigma_init() > p.sigma0()) {
                    return Err(CliError::validation(
                        "noise.sigma_init",
                        "quench decay needs sigma_init above sigma0",
                    ));
                }
                self.sequence_kind()?.build(1.0).map_err(|e| core_error("sequence", e))?;
                let ts = &self.grids.ts_us;
                check_times("grids.ts_us", ts, true)?;
                if ts.len() < 2 || ts.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(CliError::validation(
                        "grids.ts_us",
                        "need at least two strictly increasing sensing times",
                    ));
                }
            }
            Experiment::PreparationScan => {
                let sys = self.bath_system()?;
                check_times("grids.tp_us", &self.grids.tp_us, false)?;
                let required = 2 * sys.n_env() + 2;
                if self.phi_points() < required {
                    return Err(CliError::validation(
                        "grids.phi_points",
                        format!("need at least {required} phase points"),
                    ));
                }
            }
            Experiment::ScramblingScan => {
                self.bath_system()?;
                check_times("grids.te_us", &self.grids.te_us, false)?;
            }
        }
        Ok(())
    }
}
