//! Trotterized amplification and decoupling schedules.
//!
//! A [`PulseSchedule`] is one cycle of items executed in time order (first
//! element first) and repeated `repeats` times. Operator products in the
//! literature are written right-to-left; a cycle `[A, B, C]` here is the
//! operator `C B A`.
//!
//! Every builder places the system-on slice `Δt` first, followed by the
//! decoupling window `λΔt` during which only the noise acts, possibly
//! interrupted by ideal instantaneous level swaps.

mod analysis;
pub mod dsl;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmat::{MAX_DIM, MIN_DIM};

pub use analysis::{
    analytic_coherence, analytic_t2, cycle_unitary, effective_hamiltonian, level_weights, pair_coefficients,
    schedule_propagator, PairCoefficients,
};

/// Absolute slack allowed when checking that waits fill the decoupling window.
pub const WINDOW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid schedule parameter `{name}` = {value}: {reason}")]
    InvalidParam { name: String, value: f64, reason: String },
    #[error("unsupported schedule: {0}")]
    UnsupportedSchedule(String),
    #[error(transparent)]
    Dsl(#[from] dsl::DslError),
}

fn invalid(name: &str, value: f64, reason: impl Into<String>) -> ScheduleError {
    ScheduleError::InvalidParam {
        name: name.to_string(),
        value,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Duration in us.
    pub duration: f64,
    /// Whether `H_S` acts during the segment.
    pub system_on: bool,
    /// Whether the environment couples during the segment (always true for
    /// the schedules built here).
    pub noise_on: bool,
}

impl Segment {
    pub fn on(duration: f64) -> Self {
        Self {
            duration,
            system_on: true,
            noise_on: true,
        }
    }

    pub fn off(duration: f64) -> Self {
        Self {
            duration,
            system_on: false,
            noise_on: true,
        }
    }
}

/// Ideal swap of levels `i < j` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateEvent {
    pub i: usize,
    pub j: usize,
}

impl GateEvent {
    pub fn new(i: usize, j: usize) -> Self {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        Self { i, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleItem {
    Segment(Segment),
    Gate(GateEvent),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleWarning {
    /// The cycle does not return every level to its slot.
    UnbalancedGates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    dim: usize,
    dt: f64,
    cycle: Vec<CycleItem>,
    repeats: usize,
    params: BTreeMap<String, f64>,
    warnings: Vec<ScheduleWarning>,
}

impl PulseSchedule {
    /// Validates shape and durations. Unbalanced gates are recorded as a
    /// warning rather than rejected.
    pub fn new(dim: usize, dt: f64, cycle: Vec<CycleItem>, repeats: usize) -> Result<Self, ScheduleError> {
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(invalid("dim", dim as f64, format!("must lie in {MIN_DIM}..={MAX_DIM}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", dt, "must be finite and positive"));
        }
        if repeats == 0 {
            return Err(invalid("repeats", 0.0, "must be at least 1"));
        }
        for item in &cycle {
            match item {
                CycleItem::Segment(s) => {
                    if !(s.duration.is_finite() && s.duration >= 0.0) {
                        return Err(invalid("duration", s.duration, "segment durations must be finite and >= 0"));
                    }
                }
                CycleItem::Gate(g) => {
                    if g.i >= g.j || g.j >= dim {
                        return Err(invalid(
                            "gate",
                            g.j as f64,
                            format!("gate ({}, {}) must satisfy i < j < {dim}", g.i, g.j),
                        ));
                    }
                }
            }
        }
        let mut s = Self {
            dim,
            dt,
            cycle,
            repeats,
            params: BTreeMap::new(),
            warnings: Vec::new(),
        };
        if !s.is_balanced() {
            s.warnings.push(ScheduleWarning::UnbalancedGates);
        }
        Ok(s)
    }

    pub fn with_params(mut self, params: impl IntoIterator<Item = (String, f64)>) -> Self {
        self.params.extend(params);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cycle(&self) -> &[CycleItem] {
        &self.cycle
    }

    pub fn repeats(&self) -> usize {
        self.repeats
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn warnings(&self) -> &[ScheduleWarning] {
        &self.warnings
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        assert!(repeats > 0);
        self.repeats = repeats;
        self
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.cycle.iter().filter_map(|c| match c {
            CycleItem::Segment(s) => Some(s),
            CycleItem::Gate(_) => None,
        })
    }

    /// Sum of all segment durations in one cycle.
    pub fn cycle_duration(&self) -> f64 {
        self.segments().map(|s| s.duration).sum()
    }

    /// Time `H_S` is on during one cycle.
    pub fn system_time_per_cycle(&self) -> f64 {
        self.segments().filter(|s| s.system_on).map(|s| s.duration).sum()
    }

    /// Total wall-clock duration of all repeats.
    pub fn wall_time(&self) -> f64 {
        self.cycle_duration() * self.repeats as f64
    }

    /// Total system-on time of all repeats.
    pub fn system_time(&self) -> f64 {
        self.system_time_per_cycle() * self.repeats as f64
    }

    /// `slot[m]`: where the amplitude that started at level `m` sits after
    /// one cycle.
    pub fn net_permutation(&self) -> Vec<usize> {
        let mut slot: Vec<usize> = (0..self.dim).collect();
        for item in &self.cycle {
            if let CycleItem::Gate(g) = item {
                apply_swap(&mut slot, *g);
            }
        }
        slot
    }

    pub fn is_balanced(&self) -> bool {
        self.net_permutation().iter().enumerate().all(|(m, &s)| m == s)
    }

    /// Drops zero-length segments and cancels adjacent identical gates.
    pub fn simplified(&self) -> Self {
        let mut out: Vec<CycleItem> = Vec::with_capacity(self.cycle.len());
        for item in &self.cycle {
            match item {
                CycleItem::Segment(s) if s.duration == 0.0 => {}
                CycleItem::Gate(g) => {
                    if out.last() == Some(&CycleItem::Gate(*g)) {
                        out.pop();
                    } else {
                        out.push(*item);
                    }
                }
                _ => out.push(*item),
            }
        }
        Self {
            cycle: out,
            ..self.clone()
        }
    }

    /// Same dimension, step, repeats and cycle (durations compared with a
    /// relative tolerance). Parameters and warnings are not compared.
    pub fn approx_eq(&self, other: &Self, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        self.dim == other.dim
            && self.repeats == other.repeats
            && close(self.dt, other.dt)
            && self.cycle.len() == other.cycle.len()
            && self.cycle.iter().zip(&other.cycle).all(|(a, b)| match (a, b) {
                (CycleItem::Gate(x), CycleItem::Gate(y)) => x == y,
                (CycleItem::Segment(x), CycleItem::Segment(y)) => {
                    x.system_on == y.system_on && x.noise_on == y.noise_on && close(x.duration, y.duration)
                }
                _ => false,
            })
    }
}

pub(crate) fn apply_swap(slot: &mut [usize], g: GateEvent) {
    for s in slot.iter_mut() {
        if *s == g.i {
            *s = g.j;
        } else if *s == g.j {
            *s = g.i;
        }
    }
}

fn check_common(lambda: f64, dt: f64, n: usize) -> Result<(), ScheduleError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", lambda, "must be finite and >= 0"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", dt, "must be finite and positive"));
    }
    if n == 0 {
        return Err(invalid("repeats", 0.0, "must be at least 1"));
    }
    Ok(())
}

/// `[Δt system on, λΔt system off] × n`.
pub fn build_amplify_schedule(lambda: f64, dt: f64, n: usize, dim: usize) -> Result<PulseSchedule, ScheduleError> {
    check_common(lambda, dt, n)?;
    let cycle = vec![
        CycleItem::Segment(Segment::on(dt)),
        CycleItem::Segment(Segment::off(lambda * dt)),
    ];
    Ok(PulseSchedule::new(dim, dt, cycle, n)?.with_params([("lambda".to_string(), lambda)]))
}

/// One swapped channel between the first two levels:
/// `[Δt on, (λ-μ)Δt off, u_12, μΔt off, u_12] × n`.
///
/// For `dim = 2` the swap is the `σ_x` exchange of the two encoded levels.
pub fn build_one_channel_schedule(
    lambda: f64,
    mu: f64,
    dt: f64,
    n: usize,
    dim: usize,
) -> Result<PulseSchedule, ScheduleError> {
    check_common(lambda, dt, n)?;
    if dim != 2 && dim != 3 {
        return Err(invalid("dim", dim as f64, "one-channel schedules are defined for dim 2 or 3"));
    }
    if !(mu.is_finite() && (0.0..=lambda).contains(&mu)) {
        return Err(invalid("mu", mu, format!("must lie in [0, lambda = {lambda}]")));
    }
    let g = CycleItem::Gate(GateEvent::new(0, 1));
    let cycle = vec![
        CycleItem::Segment(Segment::on(dt)),
        CycleItem::Segment(Segment::off((lambda - mu) * dt)),
        g,
        CycleItem::Segment(Segment::off(mu * dt)),
        g,
    ];
    Ok(PulseSchedule::new(dim, dt, cycle, n)?.with_params([("lambda".to_string(), lambda), ("mu".to_string(), mu)]))
}

/// Two swapped channels on a qutrit:
/// `[Δt on, (λ-μ2)Δt, u_23, (μ2-μ1)Δt, u_12, μ1Δt, u_12, u_23] × n`.
///
/// Requires `0 <= μ1 <= μ2 <= λ`; points with `μ1 > μ2` would need a negative
/// middle wait and are rejected as infeasible.
pub fn build_two_channel_schedule(
    lambda: f64,
    mu1: f64,
    mu2: f64,
    dt: f64,
    n: usize,
) -> Result<PulseSchedule, ScheduleError> {
    check_common(lambda, dt, n)?;
    if !(mu1.is_finite() && mu1 >= 0.0) {
        return Err(invalid("mu1", mu1, "must be finite and >= 0"));
    }
    if !(mu2.is_finite() && mu2 <= lambda) {
        return Err(invalid("mu2", mu2, format!("must be <= lambda = {lambda}")));
    }
    if mu1 > mu2 {
        return Err(invalid("mu1", mu1, format!("infeasible: mu1 > mu2 = {mu2} gives a negative wait")));
    }
    let u12 = CycleItem::Gate(GateEvent::new(0, 1));
    let u23 = CycleItem::Gate(GateEvent::new(1, 2));
    let cycle = vec![
        CycleItem::Segment(Segment::on(dt)),
        CycleItem::Segment(Segment::off((lambda - mu2) * dt)),
        u23,
        CycleItem::Segment(Segment::off((mu2 - mu1) * dt)),
        u12,
        CycleItem::Segment(Segment::off(mu1 * dt)),
        u12,
        u23,
    ];
    Ok(PulseSchedule::new(3, dt, cycle, n)?.with_params([
        ("lambda".to_string(), lambda),
        ("mu1".to_string(), mu1),
        ("mu2".to_string(), mu2),
    ]))
}

/// Waits (us) for the general d-level sequence: `t0` before the first swap
/// and one wait per level pair. Pairs absent from the map wait zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneralWaits {
    pub t0: f64,
    pub pairs: BTreeMap<(usize, usize), f64>,
}

/// General d-level sequence.
///
/// Time order: `Δt` with the system on, wait `t0`, then for every pair
/// `(i, j)` in lexicographic order the swap `u_ij` followed by its wait
/// `t_ij`, then the closing block of swaps in reverse lexicographic order,
/// which undoes the accumulated permutation. Requires
/// `t0 + Σ t_ij = λΔt`.
pub fn build_general_schedule(
    dim: usize,
    lambda: f64,
    waits: &GeneralWaits,
    dt: f64,
    n: usize,
) -> Result<PulseSchedule, ScheduleError> {
    check_common(lambda, dt, n)?;
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(invalid("dim", dim as f64, format!("must lie in {MIN_DIM}..={MAX_DIM}")));
    }
    for (&(i, j), &w) in &waits.pairs {
        if i >= j || j >= dim {
            return Err(invalid("wait pair", j as f64, format!("pair ({i}, {j}) must satisfy i < j < {dim}")));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(invalid("wait", w, format!("wait for pair ({i}, {j}) must be >= 0")));
        }
    }
    if !(waits.t0.is_finite() && waits.t0 >= 0.0) {
        return Err(invalid("t0", waits.t0, "must be >= 0"));
    }
    let total: f64 = waits.t0 + waits.pairs.values().sum::<f64>();
    if (total - lambda * dt).abs() > WINDOW_TOL * (1.0 + lambda * dt) {
        return Err(invalid(
            "waits",
            total,
            format!("waits must sum to lambda*dt = {}", lambda * dt),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i + 1..dim).map(move |j| (i, j))).collect();
    let mut cycle = vec![
        CycleItem::Segment(Segment::on(dt)),
        CycleItem::Segment(Segment::off(waits.t0)),
    ];
    for &(i, j) in &pairs {
        cycle.push(CycleItem::Gate(GateEvent::new(i, j)));
        cycle.push(CycleItem::Segment(Segment::off(waits.pairs.get(&(i, j)).copied().unwrap_or(0.0))));
    }
    for &(i, j) in pairs.iter().rev() {
        cycle.push(CycleItem::Gate(GateEvent::new(i, j)));
    }
    Ok(PulseSchedule::new(dim, dt, cycle, n)?.with_params([("lambda".to_string(), lambda)]))
}

/// Swap offset inside the decoupling window, either directly as `μ` or as
/// the fraction `τ` with `μ = τλ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Offset {
    Mu(f64),
    Tau(f64),
}

impl Offset {
    pub fn resolve(self, lambda: f64) -> f64 {
        match self {
            Offset::Mu(mu) => mu,
            Offset::Tau(tau) => tau * lambda / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Amplify,
    OneChannel { offset: Offset },
    TwoChannel { offset1: Offset, offset2: Offset },
    General { waits: GeneralWaits },
}

/// A parameterized schedule that can be rebuilt for new parameter values;
/// what sweeps vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecipe {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub lambda: f64,
    pub dt: f64,
    pub repeats: usize,
    pub dim: usize,
}

impl ScheduleRecipe {
    pub fn build(&self) -> Result<PulseSchedule, ScheduleError> {
        match &self.kind {
            ScheduleKind::Amplify => build_amplify_schedule(self.lambda, self.dt, self.repeats, self.dim),
            ScheduleKind::OneChannel { offset } => {
                let s = build_one_channel_schedule(self.lambda, offset.resolve(self.lambda), self.dt, self.repeats, self.dim)?;
                Ok(match offset {
                    Offset::Tau(t) => s.with_params([("tau".to_string(), *t)]),
                    Offset::Mu(_) => s,
                })
            }
            ScheduleKind::TwoChannel { offset1, offset2 } => {
                if self.dim != 3 {
                    return Err(invalid("dim", self.dim as f64, "two-channel schedules need dim 3"));
                }
                let mut s = build_two_channel_schedule(
                    self.lambda,
                    offset1.resolve(self.lambda),
                    offset2.resolve(self.lambda),
                    self.dt,
                    self.repeats,
                )?;
                if let Offset::Tau(t) = offset1 {
                    s = s.with_params([("tau1".to_string(), *t)]);
                }
                if let Offset::Tau(t) = offset2 {
                    s = s.with_params([("tau2".to_string(), *t)]);
                }
                Ok(s)
            }
            ScheduleKind::General { waits } => build_general_schedule(self.dim, self.lambda, waits, self.dt, self.repeats),
        }
    }

    /// Returns a copy with one named parameter replaced. Accepted names:
    /// `lambda`, `mu`, `tau` (one-channel), `mu1`, `mu2`, `tau1`, `tau2`
    /// (two-channel).
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, ScheduleError> {
        let mut r = self.clone();
        match (name, &mut r.kind) {
            ("lambda", _) => r.lambda = value,
            ("mu", ScheduleKind::OneChannel { offset }) => *offset = Offset::Mu(value),
            ("tau", ScheduleKind::OneChannel { offset }) => *offset = Offset::Tau(value),
            ("mu1", ScheduleKind::TwoChannel { offset1, .. }) => *offset1 = Offset::Mu(value),
            ("tau1", ScheduleKind::TwoChannel { offset1, .. }) => *offset1 = Offset::Tau(value),
            ("mu2", ScheduleKind::TwoChannel { offset2, .. }) => *offset2 = Offset::Mu(value),
            ("tau2", ScheduleKind::TwoChannel { offset2, .. }) => *offset2 = Offset::Tau(value),
            _ => {
                return Err(invalid(
                    name,
                    value,
                    "not a sweepable parameter of this schedule kind",
                ))
            }
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplify_times() {
        let s = build_amplify_schedule(2.0, 0.01, 100, 2).unwrap();
        assert!((s.wall_time() - 3.0).abs() < 1e-12);
        assert!((s.system_time() - 1.0).abs() < 1e-12);
        assert!((s.cycle_duration() - 3.0 * 0.01).abs() < 1e-15);
        let plain = build_amplify_schedule(0.0, 0.01, 10, 2).unwrap();
        assert!((plain.wall_time() - 0.1).abs() < 1e-15);
        assert!(build_amplify_schedule(-1.0, 0.01, 10, 2).is_err());
        assert!(build_amplify_schedule(1.0, -0.01, 10, 2).is_err());
    }

    #[test]
    fn one_channel_shape() {
        let s = build_one_channel_schedule(2.0, 0.5, 0.01, 10, 3).unwrap();
        assert!(s.is_balanced());
        assert!((s.cycle_duration() - 3.0 * 0.01).abs() < 1e-15);
        assert!(build_one_channel_schedule(2.0, 2.5, 0.01, 10, 3).is_err());
        assert!(build_one_channel_schedule(2.0, -0.1, 0.01, 10, 3).is_err());
        assert!(build_one_channel_schedule(2.0, 0.5, 0.01, 10, 4).is_err());
    }

    #[test]
    fn mu_zero_reduces_to_amplify() {
        let one = build_one_channel_schedule(1.5, 0.0, 0.02, 7, 3).unwrap().simplified();
        let amp = build_amplify_schedule(1.5, 0.02, 7, 3).unwrap().simplified();
        assert!(one.approx_eq(&amp, 0.0));
    }

    #[test]
    fn two_channel_reductions() {
        let two = build_two_channel_schedule(1.0, 0.0, 0.0, 0.01, 5).unwrap().simplified();
        let amp = build_amplify_schedule(1.0, 0.01, 5, 3).unwrap().simplified();
        assert!(two.approx_eq(&amp, 0.0));

        // equal offsets: middle wait vanishes, leaving the one-channel echo
        // wrapped in a cancelling u_23 pair
        let two = build_two_channel_schedule(1.0, 0.3, 0.3, 0.01, 5).unwrap().simplified();
        let cycle = two.cycle();
        assert_eq!(cycle.len(), 7);
        assert_eq!(cycle[2], CycleItem::Gate(GateEvent::new(1, 2)));
        assert_eq!(cycle[3], CycleItem::Gate(GateEvent::new(0, 1)));
        assert_eq!(cycle[5], CycleItem::Gate(GateEvent::new(0, 1)));
        assert_eq!(cycle[6], CycleItem::Gate(GateEvent::new(1, 2)));

        assert!(build_two_channel_schedule(1.0, 0.6, 0.4, 0.01, 5).is_err());
        assert!(build_two_channel_schedule(1.0, 0.2, 1.4, 0.01, 5).is_err());
    }

    #[test]
    fn general_reductions() {
        let zero = GeneralWaits {
            t0: 0.02,
            pairs: BTreeMap::new(),
        };
        let g = build_general_schedule(3, 2.0, &zero, 0.01, 4).unwrap().simplified();
        assert!(g.approx_eq(&build_amplify_schedule(2.0, 0.01, 4, 3).unwrap(), 0.0));

        let (lambda, mu, dt) = (2.0, 0.5, 0.01);
        let waits = GeneralWaits {
            t0: (lambda - mu) * dt,
            pairs: BTreeMap::from([((0, 1), mu * dt)]),
        };
        let g = build_general_schedule(3, lambda, &waits, dt, 4).unwrap().simplified();
        let one = build_one_channel_schedule(lambda, mu, dt, 4, 3).unwrap();
        assert!(g.approx_eq(&one, 1e-15), "{g:?}");

        let bad = GeneralWaits {
            t0: 0.0,
            pairs: BTreeMap::from([((0, 1), 0.5)]),
        };
        assert!(build_general_schedule(3, 2.0, &bad, 0.01, 4).is_err());
    }

    #[test]
    fn general_dim4_is_balanced() {
        let dt = 0.01;
        let waits = GeneralWaits {
            t0: 0.1 * dt,
            pairs: BTreeMap::from([
                ((0, 1), 0.3 * dt),
                ((0, 3), 0.7 * dt),
                ((1, 2), 0.2 * dt),
                ((2, 3), 0.7 * dt),
            ]),
        };
        let g = build_general_schedule(4, 2.0, &waits, dt, 3).unwrap();
        assert!(g.is_balanced());
        assert!(g.warnings().is_empty());
    }

    #[test]
    fn unbalanced_is_a_warning() {
        let s = PulseSchedule::new(
            3,
            0.01,
            vec![CycleItem::Segment(Segment::on(0.01)), CycleItem::Gate(GateEvent::new(0, 1))],
            2,
        )
        .unwrap();
        assert_eq!(s.warnings(), &[ScheduleWarning::UnbalancedGates]);
    }

    #[test]
    fn recipe_params() {
        let r = ScheduleRecipe {
            kind: ScheduleKind::OneChannel { offset: Offset::Tau(1.0) },
            lambda: 2.0,
            dt: 0.01,
            repeats: 3,
            dim: 2,
        };
        let s = r.build().unwrap();
        assert_eq!(s.param("mu"), Some(1.0));
        assert_eq!(s.param("tau"), Some(1.0));
        let r2 = r.with_param("lambda", 3.0).unwrap();
        assert_eq!(r2.build().unwrap().param("mu"), Some(1.5));
        assert!(r.with_param("mu1", 0.1).is_err());
        let json = serde_json::to_string(&r).unwrap();
        let back: ScheduleRecipe = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
