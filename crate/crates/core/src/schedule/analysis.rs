use serde::{Deserialize, Serialize};

use super::{apply_swap, CycleItem, PulseSchedule, ScheduleError};
use crate::model::QuditModel;
use crate::qmat::{expm_hermitian, ComplexMatrix, UnitaryMatrix};

fn check_dim(schedule: &PulseSchedule, dim: usize) -> Result<(), ScheduleError> {
    if schedule.dim() != dim {
        return Err(ScheduleError::UnsupportedSchedule(format!(
            "schedule has dim {} but the model has dim {dim}",
            schedule.dim()
        )));
    }
    Ok(())
}

fn check_balanced(schedule: &PulseSchedule) -> Result<(), ScheduleError> {
    if !schedule.is_balanced() {
        return Err(ScheduleError::UnsupportedSchedule(
            "the cycle does not return every level to its slot".into(),
        ));
    }
    Ok(())
}

/// Per-level accumulated dephasing weight over one cycle, in units of `Δt`:
/// `w_m = (1/Δt) Σ_segments duration · dephase[slot of m]`.
pub fn level_weights(schedule: &PulseSchedule, dephase: &[f64]) -> Result<Vec<f64>, ScheduleError> {
    check_dim(schedule, dephase.len())?;
    let mut slot: Vec<usize> = (0..schedule.dim()).collect();
    let mut w = vec![0.0; schedule.dim()];
    for item in schedule.cycle() {
        match item {
            CycleItem::Gate(g) => apply_swap(&mut slot, *g),
            CycleItem::Segment(s) if s.noise_on => {
                for (m, wm) in w.iter_mut().enumerate() {
                    *wm += s.duration * dephase[slot[m]];
                }
            }
            CycleItem::Segment(_) => {}
        }
    }
    Ok(w.into_iter().map(|x| x / schedule.dt()).collect())
}

/// Effective dephasing coefficients `c_ij = w_i - w_j` of a balanced cycle:
/// pair `(i, j)` accumulates the phase `c_ij · b · t` over system-on time `t`
/// in static noise `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCoefficients {
    weights: Vec<f64>,
}

impl PairCoefficients {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i] - self.weights[j]
    }

    /// All pairs `i < j` in lexicographic order.
    pub fn pairs(&self) -> Vec<((usize, usize), f64)> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .map(|(i, j)| ((i, j), self.get(i, j)))
            .collect()
    }
}

pub fn pair_coefficients(schedule: &PulseSchedule, dephase: &[f64]) -> Result<PairCoefficients, ScheduleError> {
    check_balanced(schedule)?;
    Ok(PairCoefficients {
        weights: level_weights(schedule, dephase)?,
    })
}

/// `T2 = sqrt(2) / (σ |c|)`; infinite when `c = 0`.
pub fn analytic_t2(c: f64, sigma: f64) -> f64 {
    let rate = sigma * c.abs();
    if rate == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::SQRT_2 / rate
    }
}

/// Static-Gaussian coherence envelope `exp(-σ² c² t² / 2)` at system time `t`.
pub fn analytic_coherence(c: f64, sigma: f64, t: f64) -> f64 {
    (-0.5 * (sigma * c * t).powi(2)).exp()
}

fn segment_hamiltonian(model: &QuditModel, h_s: &ComplexMatrix, system_on: bool, noise_on: bool, b: f64) -> ComplexMatrix {
    let mut h = if system_on {
        h_s.clone()
    } else {
        ComplexMatrix::zeros(model.dim())
    };
    if noise_on {
        for (m, &d) in model.dephase_weights().iter().enumerate() {
            h[(m, m)] += b * d;
        }
    }
    h
}

/// First-order average Hamiltonian of one cycle in static noise `b`,
/// normalized per system-on step:
/// `(1/Δt) Σ_segments duration · P† H_segment P`, with `P` the permutation
/// accumulated before the segment.
pub fn effective_hamiltonian(schedule: &PulseSchedule, model: &QuditModel, b: f64) -> Result<ComplexMatrix, ScheduleError> {
    check_dim(schedule, model.dim())?;
    check_balanced(schedule)?;
    let d = model.dim();
    let h_s = model.system_hamiltonian();
    let mut slot: Vec<usize> = (0..d).collect();
    let mut acc = ComplexMatrix::zeros(d);
    for item in schedule.cycle() {
        match item {
            CycleItem::Gate(g) => apply_swap(&mut slot, *g),
            CycleItem::Segment(s) => {
                let h = segment_hamiltonian(model, &h_s, s.system_on, s.noise_on, b);
                for m in 0..d {
                    for n in 0..d {
                        acc[(m, n)] += h[(slot[m], slot[n])] * s.duration;
                    }
                }
            }
        }
    }
    Ok(acc.scale_real(1.0 / schedule.dt()))
}

/// Exact propagator of one cycle in static noise `b`.
pub fn cycle_unitary(schedule: &PulseSchedule, model: &QuditModel, b: f64) -> Result<UnitaryMatrix, ScheduleError> {
    check_dim(schedule, model.dim())?;
    let d = model.dim();
    let h_s = model.system_hamiltonian();
    let mut u = UnitaryMatrix::identity(d);
    for item in schedule.cycle() {
        let step = match item {
            CycleItem::Gate(g) => UnitaryMatrix::swap(d, g.i, g.j),
            CycleItem::Segment(s) => {
                let h = segment_hamiltonian(model, &h_s, s.system_on, s.noise_on, b);
                expm_hermitian(&h, s.duration).map_err(|e| ScheduleError::UnsupportedSchedule(e.to_string()))?
            }
        };
        u = step.then_after(&u);
    }
    Ok(u)
}

/// Exact propagator of all repeats in static noise `b`.
pub fn schedule_propagator(schedule: &PulseSchedule, model: &QuditModel, b: f64) -> Result<UnitaryMatrix, ScheduleError> {
    let mut base = cycle_unitary(schedule, model, b)?;
    let mut k = schedule.repeats();
    let mut out = UnitaryMatrix::identity(model.dim());
    while k > 0 {
        if k & 1 == 1 {
            out = base.then_after(&out);
        }
        base = base.then_after(&base);
        k >>= 1;
    }
    Ok(out)
}
