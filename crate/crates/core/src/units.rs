//! Unit conventions.
//!
//! Internally time is in microseconds, angular frequency (and energy, with
//! hbar = 1) in rad/us, and magnetic fields in Gauss. Laboratory quantities
//! given in GHz, MHz or Hz are converted once, through these helpers.

use std::f64::consts::TAU;

/// Electron gyromagnetic ratio, rad/(us Gauss): 2 pi x 2.8025 MHz/G.
pub const GAMMA_E: f64 = TAU * 2.8025;

/// Cycles per microsecond (MHz) to rad/us.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// GHz to rad/us.
pub fn ghz(f: f64) -> f64 {
    TAU * 1e3 * f
}

/// Hz to rad/us.
pub fn hz(f: f64) -> f64 {
    TAU * 1e-6 * f
}

/// A field amplitude in Gauss expressed as a Zeeman rate, rad/us.
pub fn gauss_to_rate(b_gauss: f64, gamma: f64) -> f64 {
    gamma * b_gauss
}
