use std::collections::BTreeMap;

use rayon::prelude::*;

use sensit_core::classical::{simulate_contrast_mc, McConfig};
use sensit_core::control::{make_sdr, SdrParams};
use sensit_core::protocols::{
    experiment_preparation_scan, experiment_quench_decay, experiment_scrambling_scan, sdr_sweep,
    Backend,
};
use sensit_core::spin_bath::{prepare_quenched_state, scramble};

use crate::config::{write_config, Experiment, RunConfig};
use crate::error::{CliError, Result};
use crate::table::{Metadata, ResultTable};

const US: f64 = 1e-6;

pub const SWEEP_COLUMNS: [&str; 5] = ["x", "re_dJ", "im_dJ", "abs_Mf", "abs_MfT"];
pub const SWEEP_MC_COLUMNS: [&str; 2] = ["mc_re_dJ", "mc_se"];
pub const QUENCH_COLUMNS: [&str; 4] = ["ts_us", "M_frozen", "M_equilibrium", "M_excited"];
pub const PREPARATION_COLUMNS: [&str; 4] = ["tp_us", "integrated_contrast", "K_mqc", "K_commutator"];
pub const SCRAMBLING_COLUMNS: [&str; 2] = ["te_us", "integrated_contrast"];

fn compute(experiment: Experiment) -> impl Fn(sensit_core::Error) -> CliError {
    move |source| CliError::Compute { context: format!("{experiment} failed"), source }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Validates the config, runs the selected experiment and returns its table.
pub fn run(cfg: &RunConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let experiment = cfg.experiment()?;
    let fail = compute(experiment);
    let ts = cfg.sensing_time();
    let n = cfg.sequence.n_pulses;
    let mut summary = BTreeMap::new();

    let (columns, rows) = match experiment {
        Experiment::Sweep => {
            let x = cfg.x_grid()?;
            let curve = if cfg.noise.is_some() {
                let (params, noise_class) = cfg.ou_params()?;
                sdr_sweep(n, ts, &x, &Backend::Classical { params, noise_class })
            } else {
                let sys = cfg.bath_system()?;
                let bath = cfg.bath.as_ref().expect("validated");
                let prepared = prepare_quenched_state(&sys, bath.preparation_time_us * US).map_err(&fail)?;
                let state = scramble(&sys, &prepared, bath.scrambling_time_us * US).map_err(&fail)?;
                sdr_sweep(n, ts, &x, &Backend::Quantum { system: &sys, state: &state })
            }
            .map_err(&fail)?;
            summary.insert("integrated_re_dJ".into(), curve.integrated);
            let mut rows: Vec<Vec<f64>> = curve
                .points
                .iter()
                .map(|p| vec![p.x, p.re_delta_j, p.im_delta_j, p.m_f.norm(), p.m_ft.norm()])
                .collect();
            let mut columns = names(&SWEEP_COLUMNS);
            if cfg.mc.n_traj > 0 {
                let (params, _) = cfg.ou_params()?;
                let mc = McConfig { n_traj: cfg.mc.n_traj, seed: cfg.seed, grid_factor: cfg.mc.grid_factor };
                // every point reuses the run seed, so points share trajectories
                let estimates = x
                    .par_iter()
                    .map(|&xv| {
                        let m = make_sdr(SdrParams::new(n, xv, ts)?)?;
                        simulate_contrast_mc(&m, &params, &mc)
                    })
                    .collect::<sensit_core::Result<Vec<_>>>()
                    .map_err(&fail)?;
                for (row, e) in rows.iter_mut().zip(&estimates) {
                    row.extend([e.re_delta_j, e.std_error]);
                }
                columns.extend(names(&SWEEP_MC_COLUMNS));
            }
            (columns, rows)
        }
        Experiment::QuenchDecay => {
            let (p, _) = cfg.ou_params()?;
            let grid: Vec<f64> = cfg.grids.ts_us.iter().map(|t| t * US).collect();
            let r = experiment_quench_decay(&p, &grid, &cfg.sequence_kind()?).map_err(&fail)?;
            for (label, k) in [("frozen", 0), ("equilibrium", 1), ("excited", 2)] {
                summary.insert(format!("sigma_init_{label}"), r.sigma_init[k]);
                summary.insert(format!("final_rate_{label}"), r.final_rates[k]);
            }
            let rows = cfg
                .grids
                .ts_us
                .iter()
                .enumerate()
                .map(|(i, &t)| vec![t, r.signals[0][i], r.signals[1][i], r.signals[2][i]])
                .collect();
            (names(&QUENCH_COLUMNS), rows)
        }
        Experiment::PreparationScan => {
            let sys = cfg.bath_system()?;
            let grid: Vec<f64> = cfg.grids.tp_us.iter().map(|t| t * US).collect();
            let pts = experiment_preparation_scan(&sys, &grid, n, ts, &cfg.x_grid()?, cfg.phi_points())
                .map_err(&fail)?;
            let rows = pts
                .iter()
                .zip(&cfg.grids.tp_us)
                .map(|(p, &t)| vec![t, p.integrated_contrast, p.k_value, p.k_commutator])
                .collect();
            (names(&PREPARATION_COLUMNS), rows)
        }
        Experiment::ScramblingScan => {
            let sys = cfg.bath_system()?;
            let tp = cfg.bath.as_ref().expect("validated").preparation_time_us;
            summary.insert("preparation_time_us".into(), tp);
            let grid: Vec<f64> = cfg.grids.te_us.iter().map(|t| t * US).collect();
            let pts = experiment_scrambling_scan(&sys, tp * US, &grid, n, ts, &cfg.x_grid()?).map_err(&fail)?;
            let rows = pts
                .iter()
                .zip(&cfg.grids.te_us)
                .map(|(p, &t)| vec![t, p.integrated_contrast])
                .collect();
            (names(&SCRAMBLING_COLUMNS), rows)
        }
    };

    let metadata = Metadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.as_str().into(),
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        columns: Vec::new(),
        summary,
        config: write_config(cfg)?,
    };
    ResultTable::new(columns, rows, metadata)
}
