//! Filter-function analytics for pulsed dephasing under Ornstein-Uhlenbeck
//! noise.
//!
//! A pulse pattern is described by a piecewise-constant weight `w(t')` on
//! `[0, t]`: the sign function switched by ideal pulses (`±1`), or more
//! generally the per-pair phase weight of a schedule. With
//! `F(w) = ∫ e^{iwt'} w(t') dt'` the Gaussian attenuation exponent is
//! `chi(t) = ∫_0^∞ dw/2pi C(w) |F(w)|^2` with `C(w) = 2 R l^2 / (R^2 + w^2)`,
//! and the coherence envelope is `W(t) = exp(-chi(t))`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{spectral_density, NoiseModel};
use crate::schedule::{CycleItem, PulseSchedule};

/// Relative tolerance requested from the quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;
/// Integrand evaluation budget of the quadrature.
pub const QUAD_MAX_EVALS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("t' = {t} outside [0, {total}]")]
    OutOfRange { t: f64, total: f64 },
    #[error("invalid filter: {0}")]
    Invalid(String),
    #[error("quadrature reached {evaluations} evaluations with error estimate {error:e} (value {value:e})")]
    QuadratureNotConverged { value: f64, error: f64, evaluations: usize },
}

fn invalid(msg: impl Into<String>) -> FilterError {
    FilterError::Invalid(msg.into())
}

/// One constant piece of a weight profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub weight: f64,
}

/// Piecewise-constant weight on `[0, total_time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    intervals: Vec<Interval>,
}

impl WeightProfile {
    /// Intervals must be contiguous from 0, each with `end >= start`.
    pub fn new(intervals: Vec<Interval>) -> Result<Self, FilterError> {
        let mut t = 0.0;
        for iv in &intervals {
            if !(iv.start.is_finite() && iv.end.is_finite() && iv.weight.is_finite()) {
                return Err(invalid("non-finite interval"));
            }
            if iv.start != t || iv.end < iv.start {
                return Err(invalid(format!("interval [{}, {}] breaks contiguity at {t}", iv.start, iv.end)));
            }
            t = iv.end;
        }
        Ok(Self { intervals })
    }

    /// Phase weight of level pair `(i, j)` over the whole schedule on the
    /// wall-clock axis: during each segment the pair accrues
    /// `dephase[slot_i] - dephase[slot_j]` per unit `b`.
    pub fn from_schedule(schedule: &PulseSchedule, dephase: &[f64], pair: (usize, usize)) -> Result<Self, FilterError> {
        if dephase.len() != schedule.dim() || pair.0 >= schedule.dim() || pair.1 >= schedule.dim() {
            return Err(invalid("pair or dephasing weights do not match the schedule dimension"));
        }
        let mut slot: Vec<usize> = (0..schedule.dim()).collect();
        let mut out: Vec<Interval> = Vec::new();
        let mut t = 0.0;
        for _ in 0..schedule.repeats() {
            for item in schedule.cycle() {
                match item {
                    CycleItem::Gate(g) => {
                        for s in slot.iter_mut() {
                            if *s == g.i {
                                *s = g.j;
                            } else if *s == g.j {
                                *s = g.i;
                            }
                        }
                    }
                    CycleItem::Segment(seg) => {
                        if seg.duration == 0.0 {
                            continue;
                        }
                        let w = if seg.noise_on {
                            dephase[slot[pair.0]] - dephase[slot[pair.1]]
                        } else {
                            0.0
                        };
                        let end = t + seg.duration;
                        match out.last_mut() {
                            Some(last) if last.weight == w => last.end = end,
                            _ => out.push(Interval { start: t, end, weight: w }),
                        }
                        t = end;
                    }
                }
            }
        }
        Self::new(out)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn total_time(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.end)
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.weight.abs()).fold(0.0, f64::max)
    }

    /// The profile restricted to `[0, t]`.
    pub fn truncated(&self, t: f64) -> Self {
        let intervals = self
            .intervals
            .iter()
            .filter(|iv| iv.start < t)
            .map(|iv| Interval {
                end: iv.end.min(t),
                ..*iv
            })
            .collect();
        Self { intervals }
    }
}

/// Ideal instantaneous pulses flipping the sign of the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pulse_times: Vec<f64>,
    total_time: f64,
}

impl FilterSpec {
    /// Requires `0 < t_1 < ... < t_n < total_time`.
    pub fn new(pulse_times: Vec<f64>, total_time: f64) -> Result<Self, FilterError> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(invalid(format!("total time {total_time} must be positive")));
        }
        let mut prev = 0.0;
        for &p in &pulse_times {
            if !(p.is_finite() && p > prev && p < total_time) {
                return Err(invalid(format!("pulse times must satisfy 0 < t1 < ... < tn < {total_time}")));
            }
            prev = p;
        }
        Ok(Self { pulse_times, total_time })
    }

    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn profile(&self) -> WeightProfile {
        let mut edges = vec![0.0];
        edges.extend_from_slice(&self.pulse_times);
        edges.push(self.total_time);
        let intervals = edges
            .windows(2)
            .enumerate()
            .map(|(k, w)| Interval {
                start: w[0],
                end: w[1],
                weight: if k % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect();
        WeightProfile { intervals }
    }
}

/// `f(t; t')`: +1 before the first pulse, flipping sign at each pulse. At an
/// exact pulse time the value of the interval to the left is returned.
pub fn filter_value(spec: &FilterSpec, t_prime: f64) -> Result<f64, FilterError> {
    if !(0.0..=spec.total_time).contains(&t_prime) {
        return Err(FilterError::OutOfRange {
            t: t_prime,
            total: spec.total_time,
        });
    }
    let flips = spec.pulse_times.iter().filter(|&&p| p < t_prime).count();
    Ok(if flips % 2 == 0 { 1.0 } else { -1.0 })
}

/// `m` periods of length `delta`: weight +1 for `delta1`, then -1 for
/// `delta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWindowSpec {
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub periods: usize,
}

impl PeriodicWindowSpec {
    pub fn new(delta1: f64, delta2: f64, periods: usize) -> Result<Self, FilterError> {
        if !(delta1.is_finite() && delta2.is_finite() && delta1 >= 0.0 && delta2 >= 0.0 && delta1 + delta2 > 0.0) {
            return Err(invalid("window lengths must be finite, non-negative and not both zero"));
        }
        if periods == 0 {
            return Err(invalid("at least one period required"));
        }
        Ok(Self {
            delta: delta1 + delta2,
            delta1,
            delta2,
            periods,
        })
    }

    /// Window of a one-channel schedule: `delta = lambda dt`,
    /// `delta1 = (lambda - mu) dt`, `delta2 = mu dt`.
    pub fn from_schedule_params(lambda: f64, mu: f64, dt: f64, periods: usize) -> Result<Self, FilterError> {
        Self::new((lambda - mu) * dt, mu * dt, periods)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let s = Self::new(self.delta1, self.delta2, self.periods)?;
        if (s.delta - self.delta).abs() > 1e-12 {
            return Err(invalid("delta1 + delta2 must equal delta"));
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.periods as f64 * self.delta
    }

    pub fn profile(&self) -> WeightProfile {
        let mut intervals = Vec::with_capacity(2 * self.periods);
        for k in 0..self.periods {
            let t0 = k as f64 * self.delta;
            let mid = t0 + self.delta1;
            for (start, end, weight) in [(t0, mid, 1.0), (mid, t0 + self.delta, -1.0)] {
                if end > start {
                    intervals.push(Interval { start, end, weight });
                }
            }
        }
        WeightProfile { intervals }
    }
}

/// `sin(x)/x`, with its series near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Fourier transform `∫ e^{iwt'} w(t') dt'`, summed interval by interval in
/// closed form.
pub fn filter_ft(profile: &WeightProfile, omega: f64) -> Complex64 {
    profile
        .intervals
        .iter()
        .map(|iv| {
            let len = iv.end - iv.start;
            Complex64::from_polar(iv.weight * len * sinc(0.5 * omega * len), 0.5 * omega * (iv.start + iv.end))
        })
        .sum()
}

/// `|F(w)|^2` of a weight profile, exact up to rounding.
pub fn filter_ft_sq_numeric(profile: &WeightProfile, omega: f64) -> f64 {
    filter_ft(profile, omega).norm_sqr()
}

/// `sin^2(m x/2) / sin^2(x/2) = (1 - cos m x)/(1 - cos x)`, with the `m^2`
/// limit at `x = 2 pi k`.
pub fn periodic_sum_factor(x: f64, m: usize) -> f64 {
    let mf = m as f64;
    let y = x - TAU * (x / TAU).round();
    if y.abs() * mf < 1e-5 {
        return mf * mf * (1.0 - (mf * mf - 1.0) * y * y / 12.0);
    }
    let num = (0.5 * mf * y).sin();
    let den = (0.5 * y).sin();
    (num / den).powi(2)
}

/// One-period factor `(6 + 2 cos wd - 4 cos wd1 - 4 cos wd2) / w^2`; its
/// Taylor series is used when `w delta < 0.5`.
fn period_factor(spec: &PeriodicWindowSpec, omega: f64) -> f64 {
    let (d, d1, d2) = (spec.delta, spec.delta1, spec.delta2);
    if (omega * d).abs() < 0.5 {
        // sum_k (-1)^k w^(2k-2)/(2k)! (2 d^2k - 4 d1^2k - 4 d2^2k)
        let w2 = omega * omega;
        let (mut p, mut p1, mut p2) = (d * d, d1 * d1, d2 * d2);
        let mut wpow = 1.0;
        let mut fact = 2.0;
        let mut sum = 0.0;
        for k in 1..=12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * wpow / fact * (2.0 * p - 4.0 * p1 - 4.0 * p2);
            p *= d * d;
            p1 *= d1 * d1;
            p2 *= d2 * d2;
            wpow *= w2;
            fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
        }
        return sum;
    }
    (6.0 + 2.0 * (omega * d).cos() - 4.0 * (omega * d1).cos() - 4.0 * (omega * d2).cos()) / (omega * omega)
}

/// `|F(w)|^2 = (1/w^2) (1 - cos wt)/(1 - cos wd) (6 + 2 cos wd - 4 cos wd1 -
/// 4 cos wd2)` with `t = m d`, and its limits at the removable singular
/// points.
pub fn filter_ft_sq_closed(spec: &PeriodicWindowSpec, omega: f64) -> f64 {
    periodic_sum_factor(omega * spec.delta, spec.periods) * period_factor(spec, omega)
}

/// Default cutoff `200 max(R, 2 pi / delta)`.
pub fn default_omega_max(rate: f64, delta: f64) -> f64 {
    200.0 * rate.max(TAU / delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiResult {
    pub value: f64,
    /// Quadrature error estimate on `[0, omega_max]`.
    pub abs_error: f64,
    /// Bound on the neglected tail `∫_{omega_max}^∞`:
    /// `l^2 2R t max|w|^2 / (pi omega_max)`.
    pub truncation_bound: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature on `[a, b]`, starting
/// from `panels` equal panels.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rel_tol: f64,
    max_evals: usize,
) -> Result<(f64, f64, usize), FilterError> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap: BinaryHeap<Panel> = (0..panels)
        .map(|k| {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == panels { b } else { lo + width };
            gauss_kronrod(&f, lo, hi)
        })
        .collect();
    let mut evals = 15 * panels;
    let totals = |heap: &BinaryHeap<Panel>| heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    let (mut value, mut error) = totals(&heap);
    loop {
        if error <= rel_tol * value.abs() {
            // guard against drift in the running sums
            let (v, e) = totals(&heap);
            value = v;
            error = e;
            if error <= rel_tol * value.abs() {
                return Ok((value, error, evals));
            }
        }
        if evals + 30 > max_evals {
            return Err(FilterError::QuadratureNotConverged {
                value,
                error,
                evaluations: evals,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        evals += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

fn ou_params(noise: &NoiseModel) -> Result<(f64, f64), FilterError> {
    noise.validate().map_err(|e| invalid(e.to_string()))?;
    match *noise {
        NoiseModel::OrnsteinUhlenbeck { l, rate } => Ok((l, rate)),
        NoiseModel::StaticGaussian { .. } => Err(invalid("the filter-function exponent needs Ornstein-Uhlenbeck noise")),
    }
}

/// `chi(t) = ∫_0^{omega_max} dw/2pi C(w) |F(w)|^2` for the profile on
/// `[0, t]` with `t = profile.total_time()`.
pub fn chi(profile: &WeightProfile, noise: &NoiseModel, omega_max: f64) -> Result<ChiResult, FilterError> {
    chi_with(noise, profile.total_time(), profile.max_abs_weight(), omega_max, |w| {
        filter_ft_sq_numeric(profile, w)
    })
}

/// [`chi`] for the periodic window pattern, integrating the closed-form
/// spectrum; `t = spec.total_time()`.
pub fn chi_periodic(spec: &PeriodicWindowSpec, noise: &NoiseModel, omega_max: f64) -> Result<ChiResult, FilterError> {
    spec.validate()?;
    chi_with(noise, spec.total_time(), 1.0, omega_max, |w| filter_ft_sq_closed(spec, w))
}

fn chi_with(
    noise: &NoiseModel,
    t: f64,
    w_max: f64,
    omega_max: f64,
    ft_sq: impl Fn(f64) -> f64,
) -> Result<ChiResult, FilterError> {
    let (l, rate) = ou_params(noise)?;
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(invalid(format!("omega_max = {omega_max} must be positive")));
    }
    let truncation_bound = l * l * 2.0 * rate * t * w_max * w_max / (PI * omega_max);
    if l == 0.0 || t == 0.0 || w_max == 0.0 {
        return Ok(ChiResult {
            value: 0.0,
            abs_error: 0.0,
            truncation_bound,
            evaluations: 0,
        });
    }
    let panels = ((omega_max * t / TAU).ceil() as usize).clamp(1, QUAD_MAX_EVALS / 60);
    let integrand = |w: f64| spectral_density(l, rate, w) * ft_sq(w) / TAU;
    let (value, abs_error, evaluations) = integrate(integrand, 0.0, omega_max, panels, QUAD_REL_TOL, QUAD_MAX_EVALS)?;
    Ok(ChiResult {
        value,
        abs_error,
        truncation_bound,
        evaluations,
    })
}

/// Closed-form free-induction exponent `(l^2/R^2)(e^{-Rt} + Rt - 1)`.
pub fn free_induction_chi(l: f64, rate: f64, t: f64) -> f64 {
    let x = rate * t;
    // e^{-x} + x - 1 without cancellation for small x
    let core = if x < 1e-3 {
        x * x / 2.0 - x * x * x / 6.0 + x.powi(4) / 24.0
    } else {
        (-x).exp_m1() + x
    };
    l * l / (rate * rate) * core
}

/// `W(t) = exp(-chi(t))`.
pub fn coherence_envelope(profile: &WeightProfile, noise: &NoiseModel, omega_max: f64) -> Result<f64, FilterError> {
    Ok((-chi(profile, noise, omega_max)?.value).exp())
}
