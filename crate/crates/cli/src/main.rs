use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sensit_cli::config::load_config_str;
use sensit_cli::{plot, run, CliError, Experiment, PlotKind, Result, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "sensit", version, about = "Time-reversal contrast simulations from a TOML config")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Skip the SVG.
    #[arg(long, global = true)]
    no_plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Contrast against SDR asymmetry.
    Sweep,
    /// Signal decay after a classical quench.
    QuenchDecay,
    /// Contrast and correlated-spin count against preparation time.
    PrepScan,
    /// Contrast against scrambling time.
    ScrambleScan,
    /// Parse and validate the config without running it.
    Validate,
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        match self {
            Command::Sweep => Some(Experiment::Sweep),
            Command::QuenchDecay => Some(Experiment::QuenchDecay),
            Command::PrepScan => Some(Experiment::PreparationScan),
            Command::ScrambleScan => Some(Experiment::ScramblingScan),
            Command::Validate => None,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation { field: "--config".into(), reason: "no config file given".into() })?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let mut cfg = load_config_str(&text, path)?;
    if let Some(wanted) = cli.command.experiment() {
        let explicit = text
            .parse::<toml::Table>()
            .map(|t| t.contains_key("experiment"))
            .unwrap_or(false);
        if explicit && cfg.experiment != wanted.as_str() {
            return Err(CliError::Validation {
                field: "experiment".into(),
                reason: format!("config selects `{}` but the command runs `{wanted}`", cfg.experiment),
            });
        }
        cfg.experiment = wanted.as_str().into();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if cli.no_plot {
        cfg.output.plot = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation { field: "--threads".into(), reason: "must be at least 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation { field: "--threads".into(), reason: e.to_string() })?;
    }
    let cfg = load(cli)?;
    if matches!(cli.command, Command::Validate) {
        println!("ok experiment={} hash={}", cfg.experiment, cfg.hash()?);
        return Ok(());
    }
    let table = run(&cfg)?;
    let dir = Path::new(&cfg.output.dir);
    let stem = cfg.stem();
    let (csv, json) = table.write(dir, &stem)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    if cfg.output.plot {
        let svg = dir.join(format!("{stem}.svg"));
        plot(&table, PlotKind::from(cfg.experiment()?), &svg)?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
