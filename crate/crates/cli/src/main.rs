use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};

use nvsim_cli::config::Format;
use nvsim_cli::{run_config, run_preset, RunOptions, EXIT_OK, PRESETS};

/// Engineered-decoherence simulator for NV-center qudits.
#[derive(Debug, Parser)]
#[command(name = "nvsim", version, about)]
#[command(group(ArgGroup::new("input").required(true).args(["config", "preset", "list_presets"])))]
struct Args {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in figure preset.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed of the trajectory ensemble.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    trajectories: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_presets {
        for p in PRESETS {
            println!("{p}");
        }
        return ExitCode::from(EXIT_OK);
    }
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
        trajectories: args.trajectories,
        workers: args.workers,
        format: args.format,
    };
    let result = match (&args.config, &args.preset) {
        (Some(path), _) => run_config(path, &opts),
        (None, Some(name)) => run_preset(name, &opts),
        (None, None) => unreachable!("clap requires an input"),
    };
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("{}", report.dir.join(f).display());
            }
            println!("{}", report.manifest.display());
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("nvsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
