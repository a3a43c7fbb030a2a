use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use relstable_cli::{configure_workers, execute, parse_config_file, parse_config_str, Overrides};

/// Simulate, estimate and verify kernels of relativistic stable processes.
///
/// Exit status: 0 on success or a passing verdict, 2 on a failing verdict,
/// 1 on any error.
#[derive(Parser, Debug)]
#[command(name = "relstable", version)]
struct Args {
    /// Command to run; overrides `command` in the config file.
    #[arg(value_parser = ["levy", "kernel", "simulate", "estimate", "sweep", "exit-check", "report"])]
    command: Option<String>,
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        command: args.command,
        seed: args.seed,
        d: args.d,
        alpha: args.alpha,
        m: args.m,
        out_dir: args.out,
    };
    let run = || -> anyhow::Result<i32> {
        configure_workers()?;
        let cfg = match &args.config {
            Some(path) => parse_config_file(path, &overrides)?,
            None => parse_config_str("", &overrides)?,
        };
        let outcome = execute(&cfg)?;
        println!("{}", outcome.summary);
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
        Ok(outcome.exit_code())
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("relstable: {e:#}");
            ExitCode::from(1)
        }
    }
}
