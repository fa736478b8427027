//! Monte Carlo propagation of pure-state trajectories under a pulse schedule
//! and classical noise, with ensemble averaging and coherence fits.
//!
//! Each trajectory is a pure state driven by one noise realization, so the
//! per-trajectory density matrix is `|psi><psi|`; ensemble means are formed at
//! the recorded points only.
//!
//! Determinism: trajectories are grouped into fixed blocks of
//! [`BLOCK_SIZE`] indices, each block is accumulated sequentially, and block
//! results are merged by a fixed pairwise tree. None of this depends on the
//! number of worker threads.

mod export;
mod fit;
mod lab;
mod sweep;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, NVParams, QuditModel};
use crate::noise::{sample_static, seed_for, NoiseError, NoiseModel, OuStepper};
use crate::qmat::{expm_hermitian, ComplexMatrix, DensityMatrix, QmatError};
use crate::schedule::{cycle_unitary, CycleItem, PulseSchedule, ScheduleError};

pub use export::{to_csv, to_json, CSV_META_PREFIX};
pub use fit::{fit_damped_oscillation, fit_gaussian_decay, FitError, OscillationFit, T2Fit, DEFAULT_FLOOR};
pub use lab::{detuned_single_drive, MAX_SUBSTEP_PHASE, MIN_SUBSTEP};
pub use sweep::{sweep, PairFit, SweepOptions, SweepRow};

/// Trajectories per reduction block.
pub const BLOCK_SIZE: usize = 64;
/// Number of contiguous trajectory batches kept for jackknife errors.
pub const JACKKNIFE_BATCHES: usize = 20;
/// Allowed deviation of `<psi|psi>` from one for the initial state.
pub const TOL_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid simulation: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Matrix(#[from] QmatError),
    #[error("lab-frame substep {required:e} us is below the {MIN_SUBSTEP:e} us floor")]
    SubstepUnderflow { required: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// The system being propagated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum SystemSpec {
    /// Time-independent qudit model (rotating frame or pure dephasing).
    Rotating { model: QuditModel },
    /// Full NV Hamiltonian with microwave drives, integrated in the lab
    /// frame; `S_z` dephasing. "System off" segments switch the drives off
    /// while `H_NV` keeps acting.
    LabFrame { params: NVParams },
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Rotating { model } => model.dim(),
            SystemSpec::LabFrame { .. } => 3,
        }
    }

    pub fn has_system_dynamics(&self) -> bool {
        match self {
            SystemSpec::Rotating { model } => model.has_system_dynamics(),
            SystemSpec::LabFrame { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub system: SystemSpec,
    pub schedule: PulseSchedule,
    pub noise: NoiseModel,
    pub initial_state: Vec<Complex64>,
    pub trajectories: usize,
    /// Cycles between recorded points.
    pub sample_stride: usize,
    pub master_seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<(), EngineError> {
        let d = self.system.dim();
        if let SystemSpec::LabFrame { params } = &self.system {
            params.validate()?;
        }
        self.noise.validate()?;
        if self.schedule.dim() != d {
            return Err(EngineError::InvalidSpec(format!(
                "schedule dim {} does not match system dim {d}",
                self.schedule.dim()
            )));
        }
        if self.initial_state.len() != d {
            return Err(EngineError::InvalidSpec(format!(
                "initial state has {} amplitudes, expected {d}",
                self.initial_state.len()
            )));
        }
        if self.initial_state.iter().any(|z| !z.is_finite()) {
            return Err(EngineError::InvalidSpec("initial state is not finite".into()));
        }
        let norm: f64 = self.initial_state.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(EngineError::InvalidSpec(format!("initial state norm^2 = {norm}, expected 1")));
        }
        if self.trajectories == 0 {
            return Err(EngineError::InvalidSpec("trajectories must be >= 1".into()));
        }
        if self.sample_stride == 0 || self.sample_stride > self.schedule.repeats() {
            return Err(EngineError::InvalidSpec(format!(
                "sample_stride must lie in 1..={}",
                self.schedule.repeats()
            )));
        }
        Ok(())
    }

    /// Number of recorded points, including `t = 0`.
    pub fn record_count(&self) -> usize {
        self.schedule.repeats() / self.sample_stride + 1
    }

    /// System-on times of the recorded points, us.
    pub fn record_times(&self) -> Vec<f64> {
        let per = self.schedule.system_time_per_cycle() * self.sample_stride as f64;
        (0..self.record_count()).map(|k| k as f64 * per).collect()
    }

    /// Wall-clock times of the recorded points, us.
    pub fn record_wall_times(&self) -> Vec<f64> {
        let per = self.schedule.cycle_duration() * self.sample_stride as f64;
        (0..self.record_count()).map(|k| k as f64 * per).collect()
    }
}

enum NoiseSource {
    Static(f64),
    Ou(OuStepper),
}

impl NoiseSource {
    fn new(noise: &NoiseModel, seed: u64) -> Self {
        match *noise {
            NoiseModel::StaticGaussian { sigma_b } => NoiseSource::Static(sample_static(sigma_b, seed)),
            NoiseModel::OrnsteinUhlenbeck { l, rate } => NoiseSource::Ou(OuStepper::new(l, rate, seed)),
        }
    }

    /// Field to hold during a segment of length `tau`.
    fn segment(&mut self, tau: f64) -> f64 {
        match self {
            NoiseSource::Static(b) => *b,
            NoiseSource::Ou(s) => s.advance(tau),
        }
    }
}

fn apply_phases(psi: &mut [Complex64], diag: &[f64], tau: f64) {
    for (z, &e) in psi.iter_mut().zip(diag) {
        *z *= Complex64::from_polar(1.0, -e * tau);
    }
}

/// Runs one trajectory and calls `record(k, psi)` at each recorded point.
fn run_trajectory(
    spec: &SimulationSpec,
    index: u64,
    mut record: impl FnMut(usize, &[Complex64]),
) -> Result<(), EngineError> {
    let schedule = &spec.schedule;
    let d = spec.system.dim();
    let mut noise = NoiseSource::new(&spec.noise, seed_for(spec.master_seed, index));
    let mut psi = spec.initial_state.clone();
    let mut scratch = vec![Complex64::new(0.0, 0.0); d];
    record(0, &psi);

    match (&spec.system, &mut noise) {
        (SystemSpec::Rotating { model }, NoiseSource::Static(b)) => {
            let u = cycle_unitary(schedule, model, *b)?;
            for cycle in 1..=schedule.repeats() {
                u.matrix().apply_in_place(&mut psi, &mut scratch);
                if cycle % spec.sample_stride == 0 {
                    record(cycle / spec.sample_stride, &psi);
                }
            }
        }
        (SystemSpec::Rotating { model }, noise) => {
            let h_s = model.system_hamiltonian();
            let dephase = model.dephase_weights();
            let diagonal_system = h_s.is_diagonal();
            for cycle in 1..=schedule.repeats() {
                for item in schedule.cycle() {
                    match item {
                        CycleItem::Gate(g) => psi.swap(g.i, g.j),
                        CycleItem::Segment(s) => {
                            let b = if s.noise_on { noise.segment(s.duration) } else { 0.0 };
                            if !s.system_on || diagonal_system {
                                let diag: Vec<f64> = (0..d)
                                    .map(|m| b * dephase[m] + if s.system_on { h_s[(m, m)].re } else { 0.0 })
                                    .collect();
                                apply_phases(&mut psi, &diag, s.duration);
                            } else {
                                let mut h = h_s.clone();
                                for (m, &w) in dephase.iter().enumerate() {
                                    h[(m, m)] += b * w;
                                }
                                let u = expm_hermitian(&h, s.duration)?;
                                u.matrix().apply_in_place(&mut psi, &mut scratch);
                            }
                        }
                    }
                }
                if cycle % spec.sample_stride == 0 {
                    record(cycle / spec.sample_stride, &psi);
                }
            }
        }
        (SystemSpec::LabFrame { params }, noise) => {
            let mut t = 0.0;
            for cycle in 1..=schedule.repeats() {
                for item in schedule.cycle() {
                    match item {
                        CycleItem::Gate(g) => psi.swap(g.i, g.j),
                        CycleItem::Segment(s) => {
                            let b = if s.noise_on { noise.segment(s.duration) } else { 0.0 };
                            lab::propagate_segment(params, &mut psi, b, t, s.duration, s.system_on)?;
                            t += s.duration;
                        }
                    }
                }
                if cycle % spec.sample_stride == 0 {
                    record(cycle / spec.sample_stride, &psi);
                }
            }
        }
    }
    Ok(())
}

/// Density matrices of a single trajectory at every recorded point.
pub fn evolve_trajectory(spec: &SimulationSpec, trajectory_index: u64) -> Result<Vec<DensityMatrix>, EngineError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.record_count());
    run_trajectory(spec, trajectory_index, |_, psi| out.push(DensityMatrix::from_pure(psi)))?;
    Ok(out)
}

/// Running sums over trajectories at each recorded point.
#[derive(Clone)]
struct Accumulator {
    dim: usize,
    count: usize,
    rho: Vec<Complex64>,
    // per point and pair: sum Re^2, Im^2, Re*Im
    second: Vec<[f64; 3]>,
}

fn pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|i| (i + 1..dim).map(move |j| (i, j))).collect()
}

impl Accumulator {
    fn new(dim: usize, points: usize) -> Self {
        let n_pairs = dim * (dim - 1) / 2;
        Self {
            dim,
            count: 0,
            rho: vec![Complex64::new(0.0, 0.0); points * dim * dim],
            second: vec![[0.0; 3]; points * n_pairs],
        }
    }

    fn add(&mut self, point: usize, psi: &[Complex64]) {
        let d = self.dim;
        let base = point * d * d;
        for i in 0..d {
            for j in 0..d {
                self.rho[base + i * d + j] += psi[i] * psi[j].conj();
            }
        }
        let n_pairs = d * (d - 1) / 2;
        let mut p = point * n_pairs;
        for i in 0..d {
            for j in i + 1..d {
                let z = psi[i] * psi[j].conj();
                let s = &mut self.second[p];
                s[0] += z.re * z.re;
                s[1] += z.im * z.im;
                s[2] += z.re * z.im;
                p += 1;
            }
        }
    }

    fn merge(mut self, other: &Accumulator) -> Self {
        self.count += other.count;
        for (a, b) in self.rho.iter_mut().zip(&other.rho) {
            *a += b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
        self
    }
}

fn tree_reduce(mut parts: Vec<Accumulator>) -> Accumulator {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(&b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().expect("at least one block")
}

/// Ensemble-mean coherence `rho_ij(t)` for one level pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSeries {
    pub pair: (usize, usize),
    /// System-on time, us.
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Standard error of `|rho_ij|`.
    pub stderr: Vec<f64>,
    /// `batch_means[g][k]`: mean of `rho_ij` at point `k` over the `g`-th
    /// contiguous batch of trajectories. Empty when fewer than two batches
    /// exist.
    #[serde(skip)]
    pub batch_means: Vec<Vec<Complex64>>,
    #[serde(skip)]
    pub batch_counts: Vec<usize>,
}

impl CoherenceSeries {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub dim: usize,
    pub trajectories: usize,
    /// System-on time of each recorded point, us.
    pub times: Vec<f64>,
    /// Wall-clock time of each recorded point, us.
    pub wall_times: Vec<f64>,
    /// All pairs `i < j` in lexicographic order.
    pub coherences: Vec<CoherenceSeries>,
    /// `populations[m][k]`: mean population of level `m` at point `k`.
    pub populations: Vec<Vec<f64>>,
    #[serde(skip)]
    mean_rho: Vec<ComplexMatrix>,
}

impl EnsembleResult {
    pub fn coherence(&self, i: usize, j: usize) -> Option<&CoherenceSeries> {
        self.coherences.iter().find(|c| c.pair == (i, j))
    }

    /// Ensemble-mean density matrix at recorded point `k`.
    pub fn mean_density(&self, k: usize) -> &ComplexMatrix {
        &self.mean_rho[k]
    }
}

/// Per-pair batch means over `JACKKNIFE_BATCHES` contiguous groups of blocks:
/// `[pair][batch][point]`, with the trajectory count of each batch.
fn batch_means(parts: &[Accumulator], points: usize) -> (Vec<Vec<Vec<Complex64>>>, Vec<usize>) {
    let groups = JACKKNIFE_BATCHES.min(parts.len());
    let d = parts[0].dim;
    let pair_list = pairs(d);
    if groups < 2 {
        return (vec![Vec::new(); pair_list.len()], Vec::new());
    }
    let mut means = vec![vec![vec![Complex64::new(0.0, 0.0); points]; groups]; pair_list.len()];
    let mut counts = vec![0; groups];
    for g in 0..groups {
        let members = &parts[g * parts.len() / groups..(g + 1) * parts.len() / groups];
        counts[g] = members.iter().map(|a| a.count).sum();
        for (p, &(i, j)) in pair_list.iter().enumerate() {
            for k in 0..points {
                let sum: Complex64 = members.iter().map(|a| a.rho[k * d * d + i * d + j]).sum();
                means[p][g][k] = sum / counts[g] as f64;
            }
        }
    }
    (means, counts)
}

fn finish(spec: &SimulationSpec, acc: Accumulator, batches: (Vec<Vec<Vec<Complex64>>>, Vec<usize>)) -> EnsembleResult {
    let d = acc.dim;
    let n = acc.count as f64;
    let points = spec.record_count();
    let times = spec.record_times();
    let pair_list = pairs(d);
    let mean_rho: Vec<ComplexMatrix> = (0..points)
        .map(|k| ComplexMatrix::from_fn(d, |i, j| acc.rho[k * d * d + i * d + j] / n))
        .collect();

    let coherences = pair_list
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| {
            let mut values = Vec::with_capacity(points);
            let mut stderr = Vec::with_capacity(points);
            for k in 0..points {
                let mean = mean_rho[k][(i, j)];
                let s = acc.second[k * pair_list.len() + p];
                values.push(mean);
                stderr.push(magnitude_stderr(mean, s, acc.count));
            }
            CoherenceSeries {
                pair: (i, j),
                times: times.clone(),
                values,
                stderr,
                batch_means: batches.0[p].clone(),
                batch_counts: batches.1.clone(),
            }
        })
        .collect();

    let populations = (0..d).map(|m| mean_rho.iter().map(|r| r[(m, m)].re).collect()).collect();

    EnsembleResult {
        dim: d,
        trajectories: acc.count,
        times,
        wall_times: spec.record_wall_times(),
        coherences,
        populations,
        mean_rho,
    }
}

/// Delta-method standard error of `|mean|` from the sample covariance of
/// `(Re, Im)`; falls back to the total spread when the mean is too small to
/// define a direction.
fn magnitude_stderr(mean: Complex64, s: [f64; 3], count: usize) -> f64 {
    if count < 2 {
        return 0.0;
    }
    let n = count as f64;
    let var = |sum_sq: f64, m1: f64, m2: f64| ((sum_sq - n * m1 * m2) / (n - 1.0)).max(0.0);
    let v_rr = var(s[0], mean.re, mean.re);
    let v_ii = var(s[1], mean.im, mean.im);
    let v_ri = (s[2] - n * mean.re * mean.im) / (n - 1.0);
    let total = ((v_rr + v_ii) / n).sqrt();
    let r = mean.norm();
    if r <= total {
        return total;
    }
    let (ur, ui) = (mean.re / r, mean.im / r);
    ((ur * ur * v_rr + 2.0 * ur * ui * v_ri + ui * ui * v_ii).max(0.0) / n).sqrt()
}

/// Ensemble average over `spec.trajectories` realizations using `workers`
/// threads. Results are bit-identical for any `workers >= 1`.
pub fn run_ensemble(spec: &SimulationSpec, workers: usize) -> Result<EnsembleResult, EngineError> {
    spec.validate()?;
    let d = spec.system.dim();
    let points = spec.record_count();
    let blocks: Vec<(usize, usize)> = (0..spec.trajectories)
        .step_by(BLOCK_SIZE)
        .map(|start| (start, (start + BLOCK_SIZE).min(spec.trajectories)))
        .collect();

    let run_block = |&(start, end): &(usize, usize)| -> Result<Accumulator, EngineError> {
        let mut acc = Accumulator::new(d, points);
        for idx in start..end {
            run_trajectory(spec, idx as u64, |k, psi| acc.add(k, psi))?;
            acc.count += 1;
        }
        Ok(acc)
    };

    let parts: Vec<Accumulator> = if workers <= 1 {
        blocks.iter().map(run_block).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
        pool.install(|| blocks.par_iter().map(run_block).collect::<Result<_, _>>())?
    };
    let batches = batch_means(&parts, points);
    Ok(finish(spec, tree_reduce(parts), batches))
}
