//! Command-line front end for `nvsim`: JSON-configured runs, the figure
//! presets, and CSV/JSON output with a re-runnable manifest.
//!
//! Exit codes: 0 on success, 2 when the configuration (or preset name) is
//! invalid, 3 when a run fails at runtime or an output cannot be written.

pub mod config;
pub mod output;
pub mod presets;
mod runs;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use nvsim::engine::EngineError;
use nvsim::filterfn::FilterError;

use config::{ExperimentConfig, Format, Mode};
use output::{Manifest, OutputDir, Timing};

pub use presets::PRESETS;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Default output directory when neither `--out` nor `output.dir` is given.
pub const DEFAULT_OUT_DIR: &str = "nvsim-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("unknown preset `{0}` (available: {list})", list = PRESETS.join(", "))]
    UnknownPreset(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::UnknownPreset(_) => EXIT_INVALID,
            CliError::Engine(EngineError::InvalidSpec(_)) => EXIT_INVALID,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    /// Worker threads; affects speed only, never results.
    pub workers: usize,
    pub format: Option<Format>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub manifest: PathBuf,
}

/// Shared state of one run: where outputs go and how long each step took.
pub struct Context {
    pub out: OutputDir,
    pub workers: usize,
    timings: Vec<Timing>,
}

impl Context {
    pub fn timed<T>(&mut self, label: impl Into<String>, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let r = f(self);
        self.timings.push(Timing {
            label: label.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        r
    }
}

/// Loads a configuration file and runs it. Relative paths inside the file
/// (`output.dir`, a schedule program `path`) resolve against its directory.
pub fn run_config(path: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_experiment(cfg, base, opts)
}

pub fn run_preset(name: &str, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = presets::preset_config(name)?;
    run_experiment(cfg, Path::new("."), opts)
}

pub fn run_experiment(mut cfg: ExperimentConfig, base: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    if let Some(seed) = opts.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = opts.trajectories {
        cfg.trajectories = Some(n);
    }
    if let Some(f) = opts.format {
        cfg.output.format = f;
    }
    if cfg.mode == Mode::Preset {
        let name = cfg.preset.clone().unwrap_or_default();
        presets::check_name(&name)?;
        cfg.trajectories.get_or_insert(presets::default_trajectories(&name));
    } else {
        cfg.trajectories.get_or_insert(config::DEFAULT_TRAJECTORIES);
    }
    cfg.check()?;
    let workers = opts.workers.max(1);
    let dir = match (&opts.out, &cfg.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => PathBuf::from(DEFAULT_OUT_DIR),
    };
    let start = Instant::now();
    let mut ctx = Context {
        out: OutputDir::create(&dir, cfg.output.format)?,
        workers,
        timings: Vec::new(),
    };
    let result = match cfg.mode {
        Mode::Simulate => runs::simulate(&cfg, base, &mut ctx),
        Mode::Analytic => runs::analytic(&cfg, base, &mut ctx),
        Mode::Filter => runs::filter(&cfg, base, &mut ctx),
        Mode::Sweep => runs::sweep(&cfg, base, &mut ctx),
        Mode::Preset => presets::run(&cfg, &mut ctx),
    };
    let mut echo = cfg.clone();
    echo.output.dir = Some(dir.clone());
    let manifest = Manifest {
        program: "nvsim",
        version: env!("CARGO_PKG_VERSION"),
        status: if result.is_ok() { "ok" } else { "failed" },
        error: result.as_ref().err().map(ToString::to_string),
        config: serde_json::to_value(&echo).expect("config serializes"),
        master_seed: cfg.master_seed,
        workers,
        outputs: ctx.out.written.clone(),
        timings: ctx.timings,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest_path = manifest.write(&dir)?;
    result?;
    Ok(RunReport {
        dir,
        files: manifest.outputs.iter().map(|o| o.file.clone()).collect(),
        manifest: manifest_path,
    })
}
