//! Command-line front end: strict TOML configs, CSV/JSON/SVG report
//! emission and the `relstable` binary's command runner.

pub mod config;
pub mod emit;
pub mod error;
pub mod plot;
pub mod run;

pub use config::{parse_config_file, parse_config_str, Command, Overrides, RunConfig};
pub use emit::{emit_csv, emit_report_json, parse_csv};
pub use error::CliError;
pub use plot::{emit_plot_svg, PlotAxis};
pub use run::{execute, Outcome};

/// Environment variable setting the worker-thread count.
pub const WORKERS_ENV: &str = "RELSTABLE_WORKERS";

/// Sizes the global rayon pool from [`WORKERS_ENV`] when it is set.
pub fn configure_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} = {v:?}: expected a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{WORKERS_ENV}: {e}")))
}
