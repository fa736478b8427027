//! JSON experiment configuration. Every dimensional field carries its unit in
//! its name; frequencies given in MHz or GHz are ordinary frequencies and are
//! converted to rad/us internally.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use nvsim::engine::{SimulationSpec, SystemSpec, DEFAULT_FLOOR};
use nvsim::model::{effective_qudit_model, Coupling, NVParams, QuditModel};
use nvsim::noise::NoiseModel;
use nvsim::schedule::dsl::parse_schedule;
use nvsim::schedule::{GeneralWaits, Offset, PulseSchedule, ScheduleError, ScheduleKind, ScheduleRecipe};
use nvsim::units::{gauss_to_rate, ghz, mhz};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Analytic,
    Filter,
    Sweep,
    Preset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub preset_options: PresetOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(default = "one")]
    pub sample_stride: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_floor")]
    pub fit_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
    /// Simulate mode with OU noise: also write the field sampled on a grid
    /// from the seed of trajectory 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_path: Option<NoisePathConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisePathConfig {
    pub step_us: f64,
    pub points: usize,
}

fn one() -> usize {
    1
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

pub const DEFAULT_TRAJECTORIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetOptions {
    /// Overrides the preset's amplification factor where it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Number of periods `m` of the window pattern (fig2cd spectrum).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// 1-based level labels.
    pub i: usize,
    pub j: usize,
    pub j_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NvConfig {
    #[serde(default = "default_d_ghz", alias = "D_ghz")]
    pub d_ghz: f64,
    #[serde(default = "default_bz")]
    pub bz_gauss: f64,
    #[serde(default = "default_gamma")]
    pub gamma_mhz_per_gauss: f64,
    #[serde(default)]
    pub b1_gauss: f64,
    #[serde(default)]
    pub b2_gauss: f64,
    /// Red detuning of each drive from its transition.
    #[serde(default)]
    pub detuning1_mhz: f64,
    #[serde(default)]
    pub detuning2_mhz: f64,
    /// Divide both detunings by `1 + lambda` of the schedule.
    #[serde(default)]
    pub detuning_over_one_plus_lambda: bool,
}

fn default_d_ghz() -> f64 {
    2.87
}

fn default_bz() -> f64 {
    100.0
}

fn default_gamma() -> f64 {
    2.8025
}

impl NvConfig {
    pub fn params(&self, lambda: f64) -> NVParams {
        let base = NVParams {
            zero_field_splitting: ghz(self.d_ghz),
            bz_gauss: self.bz_gauss,
            gamma: TAU * self.gamma_mhz_per_gauss,
            b1_gauss: self.b1_gauss,
            b2_gauss: self.b2_gauss,
            omega1: 0.0,
            omega2: 0.0,
        };
        let scale = if self.detuning_over_one_plus_lambda {
            1.0 / (1.0 + lambda)
        } else {
            1.0
        };
        NVParams {
            omega1: base.upper_resonance() - mhz(self.detuning1_mhz) * scale,
            omega2: base.lower_resonance() - mhz(self.detuning2_mhz) * scale,
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Qubit on the `{+1, -1}` levels, dephasing weights `(1, -1)`.
    QubitPlusMinus,
    /// Qubit on the `{+1, 0}` levels, dephasing weights `(1, 0)`.
    QubitPlusZero,
    /// Spin-1 with no system Hamiltonian.
    Qutrit,
    Qudit {
        eps_mhz: Vec<f64>,
        #[serde(default)]
        couplings: Vec<CouplingConfig>,
        dephase: Vec<f64>,
    },
    /// Rotating-wave qutrit derived from NV parameters.
    NvRwa(NvConfig),
    /// Full NV Hamiltonian integrated in the lab frame.
    NvLab(NvConfig),
}

impl SystemConfig {
    pub fn dim(&self) -> usize {
        match self {
            SystemConfig::QubitPlusMinus | SystemConfig::QubitPlusZero => 2,
            SystemConfig::Qutrit | SystemConfig::NvRwa(_) | SystemConfig::NvLab(_) => 3,
            SystemConfig::Qudit { eps_mhz, .. } => eps_mhz.len(),
        }
    }

    pub fn build(&self, lambda: f64) -> Result<SystemSpec, CliError> {
        let model = |r: Result<QuditModel, nvsim::model::ModelError>| r.map_err(|e| CliError::config("system", e));
        Ok(match self {
            SystemConfig::QubitPlusMinus => SystemSpec::Rotating {
                model: QuditModel::qubit_plus_minus(),
            },
            SystemConfig::QubitPlusZero => SystemSpec::Rotating {
                model: QuditModel::qubit_plus_zero(),
            },
            SystemConfig::Qutrit => SystemSpec::Rotating {
                model: QuditModel::qutrit(),
            },
            SystemConfig::Qudit {
                eps_mhz,
                couplings,
                dephase,
            } => {
                let mut cs = Vec::with_capacity(couplings.len());
                for c in couplings {
                    if c.i == 0 || c.j == 0 {
                        return Err(CliError::config("system.couplings", "levels are 1-based"));
                    }
                    cs.push(Coupling {
                        i: c.i - 1,
                        j: c.j - 1,
                        value: mhz(c.j_mhz),
                    });
                }
                SystemSpec::Rotating {
                    model: model(QuditModel::new(
                        eps_mhz.iter().map(|&e| mhz(e)).collect(),
                        cs,
                        dephase.clone(),
                    ))?,
                }
            }
            SystemConfig::NvRwa(nv) => SystemSpec::Rotating {
                model: model(effective_qudit_model(&nv.params(lambda)))?,
            },
            SystemConfig::NvLab(nv) => {
                let params = nv.params(lambda);
                params.validate().map_err(|e| CliError::config("system", e))?;
                SystemSpec::LabFrame { params }
            }
        })
    }
}

/// Either `mu` directly or the fraction `tau` with `mu = tau lambda / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl OffsetConfig {
    fn resolve(&self, field: &str) -> Result<Offset, CliError> {
        match (self.mu, self.tau) {
            (Some(mu), None) => Ok(Offset::Mu(mu)),
            (None, Some(tau)) => Ok(Offset::Tau(tau)),
            (None, None) => Err(CliError::config(field, "needs one of mu or tau")),
            (Some(_), Some(_)) => Err(CliError::config(field, "give mu or tau, not both")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaitConfig {
    /// 1-based level labels.
    pub i: usize,
    pub j: usize,
    pub t_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Amplify {
        lambda: f64,
        dt_us: f64,
        repeats: usize,
    },
    OneChannel {
        lambda: f64,
        #[serde(flatten)]
        offset: OffsetConfig,
        dt_us: f64,
        repeats: usize,
    },
    TwoChannel {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau2: Option<f64>,
        dt_us: f64,
        repeats: usize,
    },
    General {
        lambda: f64,
        t0_us: f64,
        #[serde(default)]
        waits: Vec<WaitConfig>,
        dt_us: f64,
        repeats: usize,
    },
    /// Sequence program, inline or from a file relative to the config.
    Dsl {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        program: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

/// A buildable schedule: a rebuildable recipe, or a fixed parsed program.
#[derive(Debug, Clone)]
pub enum ScheduleSource {
    Recipe(ScheduleRecipe),
    Program(PulseSchedule),
}

impl ScheduleSource {
    pub fn lambda(&self) -> f64 {
        match self {
            ScheduleSource::Recipe(r) => r.lambda,
            ScheduleSource::Program(s) => s.param("lambda").unwrap_or(0.0),
        }
    }

    pub fn build(&self) -> Result<PulseSchedule, CliError> {
        match self {
            ScheduleSource::Recipe(r) => r.build().map_err(schedule_error),
            ScheduleSource::Program(s) => Ok(s.clone()),
        }
    }
}

pub fn schedule_error(e: ScheduleError) -> CliError {
    match e {
        ScheduleError::InvalidParam { ref name, .. } => CliError::config(format!("schedule.{name}"), &e),
        other => CliError::config("schedule", other),
    }
}

impl ScheduleConfig {
    pub fn source(&self, dim: usize, base_dir: &Path) -> Result<ScheduleSource, CliError> {
        let recipe = |kind, lambda: f64, dt: f64, repeats: usize| {
            ScheduleSource::Recipe(ScheduleRecipe {
                kind,
                lambda,
                dt,
                repeats,
                dim,
            })
        };
        Ok(match self {
            ScheduleConfig::Amplify { lambda, dt_us, repeats } => {
                recipe(ScheduleKind::Amplify, *lambda, *dt_us, *repeats)
            }
            ScheduleConfig::OneChannel {
                lambda,
                offset,
                dt_us,
                repeats,
            } => recipe(
                ScheduleKind::OneChannel {
                    offset: offset.resolve("schedule")?,
                },
                *lambda,
                *dt_us,
                *repeats,
            ),
            ScheduleConfig::TwoChannel {
                lambda,
                mu1,
                tau1,
                mu2,
                tau2,
                dt_us,
                repeats,
            } => {
                let o1 = OffsetConfig { mu: *mu1, tau: *tau1 }.resolve("schedule.mu1")?;
                let o2 = OffsetConfig { mu: *mu2, tau: *tau2 }.resolve("schedule.mu2")?;
                recipe(
                    ScheduleKind::TwoChannel {
                        offset1: o1,
                        offset2: o2,
                    },
                    *lambda,
                    *dt_us,
                    *repeats,
                )
            }
            ScheduleConfig::General {
                lambda,
                t0_us,
                waits,
                dt_us,
                repeats,
            } => {
                let mut pairs = BTreeMap::new();
                for w in waits {
                    if w.i == 0 || w.j == 0 {
                        return Err(CliError::config("schedule.waits", "levels are 1-based"));
                    }
                    pairs.insert((w.i - 1, w.j - 1), w.t_us);
                }
                recipe(
                    ScheduleKind::General {
                        waits: GeneralWaits { t0: *t0_us, pairs },
                    },
                    *lambda,
                    *dt_us,
                    *repeats,
                )
            }
            ScheduleConfig::Dsl { program, path } => {
                let text = match (program, path) {
                    (Some(p), None) => p.clone(),
                    (None, Some(p)) => {
                        let full = base_dir.join(p);
                        std::fs::read_to_string(&full)
                            .map_err(|e| CliError::config("schedule.path", format!("{}: {e}", full.display())))?
                    }
                    _ => return Err(CliError::config("schedule", "dsl needs exactly one of program or path")),
                };
                let s = parse_schedule(&text).map_err(|e| CliError::config("schedule.program", e))?;
                ScheduleSource::Program(s)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Static {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_b_gauss: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_b_rad_per_us: Option<f64>,
    },
    Ou {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l_gauss: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l_rad_per_us: Option<f64>,
        rate_per_us: f64,
    },
}

fn field_amplitude(gauss: Option<f64>, rate: Option<f64>, field: &str, gamma: f64) -> Result<f64, CliError> {
    match (gauss, rate) {
        (Some(g), None) => Ok(gauss_to_rate(g, gamma)),
        (None, Some(r)) => Ok(r),
        _ => Err(CliError::config(field, "give exactly one of the _gauss or _rad_per_us forms")),
    }
}

impl NoiseConfig {
    pub fn build(&self, gamma: f64) -> Result<NoiseModel, CliError> {
        let model = match self {
            NoiseConfig::Static {
                sigma_b_gauss,
                sigma_b_rad_per_us,
            } => NoiseModel::StaticGaussian {
                sigma_b: field_amplitude(*sigma_b_gauss, *sigma_b_rad_per_us, "noise.sigma_b", gamma)?,
            },
            NoiseConfig::Ou {
                l_gauss,
                l_rad_per_us,
                rate_per_us,
            } => NoiseModel::OrnsteinUhlenbeck {
                l: field_amplitude(*l_gauss, *l_rad_per_us, "noise.l", gamma)?,
                rate: *rate_per_us,
            },
        };
        model.validate().map_err(|e| CliError::config("noise", e))?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Equal superposition of the listed 1-based levels.
    Superpose(Vec<usize>),
    /// A single 1-based level.
    Level(usize),
    /// Explicit `[re, im]` amplitudes, normalized to one.
    Amplitudes(Vec<[f64; 2]>),
}

impl InitialState {
    pub fn build(&self, dim: usize) -> Result<Vec<Complex64>, CliError> {
        let zero = Complex64::new(0.0, 0.0);
        let level = |l: usize| {
            if l == 0 || l > dim {
                Err(CliError::config("initial_state", format!("level {l} outside 1..={dim}")))
            } else {
                Ok(l - 1)
            }
        };
        match self {
            InitialState::Superpose(levels) => {
                if levels.is_empty() {
                    return Err(CliError::config("initial_state", "no levels given"));
                }
                let mut v = vec![zero; dim];
                let a = 1.0 / (levels.len() as f64).sqrt();
                for &l in levels {
                    let k = level(l)?;
                    if v[k] != zero {
                        return Err(CliError::config("initial_state", format!("level {l} listed twice")));
                    }
                    v[k] = Complex64::new(a, 0.0);
                }
                Ok(v)
            }
            InitialState::Level(l) => {
                let mut v = vec![zero; dim];
                v[level(*l)?] = Complex64::new(1.0, 0.0);
                Ok(v)
            }
            InitialState::Amplitudes(a) => {
                if a.len() != dim {
                    return Err(CliError::config(
                        "initial_state",
                        format!("{} amplitudes for dimension {dim}", a.len()),
                    ));
                }
                let norm: f64 = a.iter().map(|[re, im]| re * re + im * im).sum::<f64>().sqrt();
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(CliError::config("initial_state", "amplitudes must have a positive finite norm"));
                }
                Ok(a.iter().map(|[re, im]| Complex64::new(re / norm, im / norm)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `lambda`, `mu`, `tau`, `mu1`, `mu2`, `tau1` or `tau2`.
    pub param: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub scale_dt_with_lambda: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    /// 1-based level pair whose phase weight defines the filter.
    #[serde(default = "first_pair")]
    pub pair: [usize; 2],
    /// Periods `m` of the window pattern for the spectrum; defaults to the
    /// schedule's repeats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max_rad_per_us: Option<f64>,
    /// Upper end of the tabulated spectrum; defaults to `8 pi / delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_stop_rad_per_us: Option<f64>,
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    /// Number of `chi` evaluations, spread over whole periods.
    #[serde(default = "default_time_points")]
    pub time_points: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            pair: first_pair(),
            periods: None,
            omega_max_rad_per_us: None,
            omega_stop_rad_per_us: None,
            omega_points: default_omega_points(),
            time_points: default_time_points(),
        }
    }
}

fn first_pair() -> [usize; 2] {
    [1, 2]
}

fn default_omega_points() -> usize {
    400
}

fn default_time_points() -> usize {
    50
}

/// The resolved inputs of a simulation-type run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: SimulationSpec,
    pub source: ScheduleSource,
    pub system: SystemConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(json_field(&e), e))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn trajectories(&self) -> usize {
        self.trajectories.unwrap_or(DEFAULT_TRAJECTORIES)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.trajectories == Some(0) {
            return Err(CliError::config("trajectories", "must be at least 1"));
        }
        if self.sample_stride == 0 {
            return Err(CliError::config("sample_stride", "must be at least 1"));
        }
        if !(self.fit_floor > 0.0 && self.fit_floor < 1.0) {
            return Err(CliError::config("fit_floor", "must lie in (0, 1)"));
        }
        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::config(field, format!("required in {:?} mode", self.mode).to_lowercase()))
            }
        };
        match self.mode {
            Mode::Preset => need(self.preset.is_some(), "preset"),
            Mode::Simulate | Mode::Sweep => {
                need(self.system.is_some(), "system")?;
                need(self.schedule.is_some(), "schedule")?;
                need(self.noise.is_some(), "noise")?;
                if self.mode == Mode::Sweep {
                    need(self.sweep.is_some(), "sweep")?;
                }
                Ok(())
            }
            Mode::Analytic | Mode::Filter => {
                need(self.schedule.is_some(), "schedule")?;
                need(self.noise.is_some(), "noise")
            }
        }
    }

    fn gamma(&self) -> f64 {
        match &self.system {
            Some(SystemConfig::NvRwa(nv) | SystemConfig::NvLab(nv)) => TAU * nv.gamma_mhz_per_gauss,
            _ => nvsim::units::GAMMA_E,
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        self.noise
            .as_ref()
            .ok_or_else(|| CliError::config("noise", "missing"))?
            .build(self.gamma())
    }

    /// Dimension of the system; a `{+1, -1}` qubit when none is given.
    pub fn dim(&self) -> usize {
        self.system.as_ref().map_or(2, SystemConfig::dim)
    }

    /// Level weights of the dephasing coupling.
    pub fn dephase_weights(&self) -> Result<Vec<f64>, CliError> {
        let system = self.system.clone().unwrap_or(SystemConfig::QubitPlusMinus);
        Ok(match system.build(0.0)? {
            SystemSpec::Rotating { model } => model.dephase_weights().to_vec(),
            SystemSpec::LabFrame { .. } => vec![1.0, 0.0, -1.0],
        })
    }

    pub fn schedule_source(&self, base_dir: &Path) -> Result<ScheduleSource, CliError> {
        self.schedule
            .as_ref()
            .ok_or_else(|| CliError::config("schedule", "missing"))?
            .source(self.dim(), base_dir)
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<Resolved, CliError> {
        let system = self.system.clone().ok_or_else(|| CliError::config("system", "missing"))?;
        let source = self.schedule_source(base_dir)?;
        let schedule = source.build()?;
        let dim = system.dim();
        if schedule.dim() != dim {
            return Err(CliError::config(
                "schedule",
                format!("schedule dimension {} does not match system dimension {dim}", schedule.dim()),
            ));
        }
        let initial_state = match &self.initial_state {
            Some(s) => s.build(dim)?,
            None => vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim],
        };
        let spec = SimulationSpec {
            system: system.build(source.lambda())?,
            schedule,
            noise: self.noise_model()?,
            initial_state,
            trajectories: self.trajectories(),
            sample_stride: self.sample_stride,
            master_seed: self.master_seed,
        };
        spec.validate().map_err(|e| CliError::config("config", e))?;
        Ok(Resolved { spec, source, system })
    }
}

/// Best-effort field name from a serde error message (`unknown field `x``,
/// `missing field `x``).
fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`').nth(1).map_or_else(|| "config".to_string(), str::to_string)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn parse(v: serde_json::Value) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_json(&v.to_string())
    }

    fn field(e: CliError) -> String {
        match e {
            CliError::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "mode": "simulate",
            "system": { "kind": "qubit_plus_minus" },
            "schedule": { "kind": "amplify", "lambda": 1.0, "dt_us": 0.01, "repeats": 10 },
            "noise": { "kind": "static", "sigma_b_gauss": 0.2 }
        })
    }

    #[test]
    fn gauss_fields_convert_once() {
        let cfg = parse(minimal()).unwrap();
        let NoiseModel::StaticGaussian { sigma_b } = cfg.noise_model().unwrap() else {
            panic!()
        };
        assert!((sigma_b - 3.5217).abs() < 1e-4);
        assert_eq!(cfg.trajectories(), DEFAULT_TRAJECTORIES);
    }

    #[test]
    fn zero_trajectories_names_the_field() {
        let mut v = minimal();
        v["trajectories"] = 0.into();
        assert_eq!(field(parse(v).unwrap_err()), "trajectories");
    }

    #[test]
    fn unknown_field_is_named() {
        let mut v = minimal();
        v["sigma_b"] = 0.2.into();
        assert_eq!(field(parse(v).unwrap_err()), "sigma_b");
    }

    #[test]
    fn both_unit_forms_rejected() {
        let mut v = minimal();
        v["noise"]["sigma_b_rad_per_us"] = 1.0.into();
        let cfg = parse(v).unwrap();
        assert_eq!(field(cfg.noise_model().unwrap_err()), "noise.sigma_b");
    }

    #[test]
    fn offset_needs_exactly_one_form() {
        let mut v = minimal();
        v["schedule"] = serde_json::json!({ "kind": "one_channel", "lambda": 1.0, "mu": 0.2, "tau": 0.4, "dt_us": 0.01, "repeats": 1 });
        assert!(parse(v.clone()).unwrap().schedule_source(Path::new(".")).is_err());
        v["schedule"]["tau"] = serde_json::Value::Null;
        let src = parse(v).unwrap().schedule_source(Path::new(".")).unwrap();
        assert_eq!(src.build().unwrap().param("mu"), Some(0.2));
    }

    #[test]
    fn initial_states() {
        let s = InitialState::Superpose(vec![1, 3]).build(3).unwrap();
        assert!((s[0].re - s[2].re).abs() < 1e-15 && s[1].norm() == 0.0);
        assert!((s[0].norm_sqr() + s[2].norm_sqr() - 1.0).abs() < 1e-15);
        assert!(InitialState::Superpose(vec![0]).build(3).is_err());
        assert!(InitialState::Superpose(vec![2, 2]).build(3).is_err());
        let a = InitialState::Amplitudes(vec![[3.0, 0.0], [0.0, 4.0]]).build(2).unwrap();
        assert!((a[1].im - 0.8).abs() < 1e-15);
        assert!(InitialState::Amplitudes(vec![[0.0, 0.0], [0.0, 0.0]]).build(2).is_err());
    }

    #[test]
    fn nv_detuning_rule() {
        let nv: NvConfig = serde_json::from_value(serde_json::json!({
            "D_ghz": 2.87, "b1_gauss": 1.717, "detuning1_mhz": 1.9, "detuning_over_one_plus_lambda": true
        }))
        .unwrap();
        let p = nv.params(1.0);
        assert!((p.upper_resonance() - p.omega1 - mhz(0.95)).abs() < 1e-9);
        assert_eq!(p.bz_gauss, 100.0);
    }

    #[test]
    fn schedule_dimension_must_match_system() {
        let mut v = minimal();
        v["schedule"] = serde_json::json!({ "kind": "two_channel", "lambda": 1.0, "tau1": 0.0, "tau2": 0.0, "dt_us": 0.01, "repeats": 1 });
        assert!(parse(v).unwrap().resolve(Path::new(".")).is_err());
    }

    #[test]
    fn dsl_program_inline() {
        let mut v = minimal();
        v["schedule"] = serde_json::json!({ "kind": "dsl", "program": program() });
        let r = parse(v).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(r.spec.schedule.repeats(), 4);
    }

    fn program() -> String {
        let s = nvsim::schedule::build_amplify_schedule(1.0, 0.01, 4, 2).unwrap();
        nvsim::schedule::dsl::emit_schedule(&s)
    }
}
