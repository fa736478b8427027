//! Classical dephasing noise `b(t)`.
//!
//! Two models: a static Gaussian field drawn once per realization, and a
//! stationary Ornstein-Uhlenbeck process with correlation `l^2 exp(-R |t|)`.
//!
//! Reproducibility contract: every realization is driven by a
//! [`ChaCha8Rng`] seeded with [`seed_for`]`(master, index)`, and normal
//! deviates come from `rand_distr::StandardNormal` (ziggurat). Both are pinned
//! through `Cargo.lock`, so equal seeds give bit-identical paths on every
//! platform and for any worker count.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("invalid noise parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Noise model. Amplitudes are in rad/us (`gamma * B`), rates in 1/us.
///
/// Zero amplitudes are accepted and describe a noiseless environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    StaticGaussian { sigma_b: f64 },
    OrnsteinUhlenbeck { l: f64, rate: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |name, value, reason| Err(NoiseError::InvalidParam { name, value, reason });
        match *self {
            NoiseModel::StaticGaussian { sigma_b } => {
                if !(sigma_b.is_finite() && sigma_b >= 0.0) {
                    return bad("sigma_b", sigma_b, "must be finite and non-negative");
                }
            }
            NoiseModel::OrnsteinUhlenbeck { l, rate } => {
                if !(l.is_finite() && l >= 0.0) {
                    return bad("l", l, "must be finite and non-negative");
                }
                if !(rate.is_finite() && rate > 0.0) {
                    return bad("rate", rate, "must be finite and positive");
                }
            }
        }
        Ok(())
    }

    /// Stationary standard deviation of `b`.
    pub fn amplitude(&self) -> f64 {
        match *self {
            NoiseModel::StaticGaussian { sigma_b } => sigma_b,
            NoiseModel::OrnsteinUhlenbeck { l, .. } => l,
        }
    }

    /// Correlation time `1/R`; infinite for static noise.
    pub fn correlation_time(&self) -> f64 {
        match *self {
            NoiseModel::StaticGaussian { .. } => f64::INFINITY,
            NoiseModel::OrnsteinUhlenbeck { rate, .. } => 1.0 / rate,
        }
    }
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-realization seed: `splitmix64(master ^ splitmix64(index))`.
///
/// Depends only on `(master, index)`, never on scheduling.
pub fn seed_for(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// One draw `b ~ N(0, sigma_b^2)`, deterministic in `seed`.
pub fn sample_static(sigma_b: f64, seed: u64) -> f64 {
    sigma_b * standard_normal(&mut rng_for(seed))
}

/// Power spectral density `C(w) = l^2 2R / (R^2 + w^2)` (two-sided).
pub fn spectral_density(l: f64, rate: f64, omega: f64) -> f64 {
    l * l * 2.0 * rate / (rate * rate + omega * omega)
}

/// Correlation `C(t) = l^2 exp(-R |t|)`.
pub fn correlation(l: f64, rate: f64, t: f64) -> f64 {
    l * l * (-rate * t.abs()).exp()
}

/// A sampled realization of `b(t)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl NoisePath {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_us,b_rad_per_us\n");
        for (t, b) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:.12e},{b:.12e}");
        }
        out
    }
}

/// Exact stationary OU samples on the uniform grid `t_k = t0 + k step`.
///
/// `b_0 ~ N(0, l^2)`, `b_{k+1} = b_k e^{-R step} + l sqrt(1 - e^{-2 R step}) xi_k`.
pub fn sample_ou_path(l: f64, rate: f64, t0: f64, step: f64, len: usize, seed: u64) -> Result<NoisePath, NoiseError> {
    NoiseModel::OrnsteinUhlenbeck { l, rate }.validate()?;
    if !(step.is_finite() && step > 0.0) {
        return Err(NoiseError::InvalidParam {
            name: "step",
            value: step,
            reason: "grid step must be positive",
        });
    }
    let mut rng = rng_for(seed);
    let decay = (-rate * step).exp();
    let kick = l * (-(-2.0 * rate * step).exp_m1()).sqrt();
    let mut values = Vec::with_capacity(len);
    let mut b = l * standard_normal(&mut rng);
    for k in 0..len {
        if k > 0 {
            b = b * decay + kick * standard_normal(&mut rng);
        }
        values.push(b);
    }
    let times = (0..len).map(|k| t0 + k as f64 * step).collect();
    Ok(NoisePath { times, values, seed })
}

/// `2x - 3 + 4 e^{-x} - e^{-2x}`, the scaled conditional variance of the OU
/// time integral, with a series branch for small `x`.
fn integral_variance_shape(x: f64) -> f64 {
    if x < 0.05 {
        // sum_{k>=3} (4 (-1)^k - (-2)^k) x^k / k!
        let mut sum = 0.0;
        let mut xk_over_fact = x * x / 2.0; // x^2/2!
        for k in 3..24 {
            xk_over_fact *= x / k as f64;
            let sign_one = if k % 2 == 0 { 1.0 } else { -1.0 };
            let coeff = 4.0 * sign_one - sign_one * 2f64.powi(k);
            sum += coeff * xk_over_fact;
        }
        sum
    } else {
        2.0 * x - 3.0 + 4.0 * (-x).exp() - (-2.0 * x).exp()
    }
}

/// Exact joint stepping of an OU process and its time integral.
///
/// [`OuStepper::advance`] moves the process forward by `tau` and returns the
/// mean of `b` over that interval, drawn jointly with the end value from their
/// conditional Gaussian law. A segment driven by this mean accrues exactly the
/// phase the continuous path would.
#[derive(Debug, Clone)]
pub struct OuStepper {
    l: f64,
    rate: f64,
    b: f64,
    rng: ChaCha8Rng,
}

impl OuStepper {
    /// Starts from a stationary draw `b(0) ~ N(0, l^2)`.
    pub fn new(l: f64, rate: f64, seed: u64) -> Self {
        let mut rng = rng_for(seed);
        let b = l * standard_normal(&mut rng);
        Self { l, rate, b, rng }
    }

    pub fn current(&self) -> f64 {
        self.b
    }

    pub fn advance(&mut self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return self.b;
        }
        let x = self.rate * tau;
        let l2 = self.l * self.l;
        let e = (-x).exp();
        let var_end = l2 * (-(-2.0 * x).exp_m1());
        let var_int = l2 / (self.rate * self.rate) * integral_variance_shape(x);
        let one_minus_e = -(-x).exp_m1();
        let cov = l2 / self.rate * one_minus_e * one_minus_e;

        let mean_end = self.b * e;
        let mean_int = self.b * one_minus_e / self.rate;

        // Cholesky of [[var_int, cov], [cov, var_end]]
        let z1 = standard_normal(&mut self.rng);
        let z2 = standard_normal(&mut self.rng);
        let a11 = var_int.max(0.0).sqrt();
        let (a21, a22) = if a11 > 0.0 {
            let a21 = cov / a11;
            (a21, (var_end - a21 * a21).max(0.0).sqrt())
        } else {
            (0.0, var_end.max(0.0).sqrt())
        };
        let integral = mean_int + a11 * z1;
        self.b = mean_end + a21 * z1 + a22 * z2;
        integral / tau
    }
}
