//! Configuration-driven runner: TOML in, CSV + JSON metadata + SVG out.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod table;

pub use config::{parse_config, parse_config_str, write_config, Experiment, RunConfig};
pub use error::{CliError, Result};
pub use plot::{plot, PlotKind};
pub use run::run;
pub use table::{read_csv, Metadata, ResultTable};
