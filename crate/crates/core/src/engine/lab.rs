//! Lab-frame integration of the driven NV Hamiltonian.
//!
//! Within a substep of length `h` the propagator is the symmetric split
//! `e^{-i E h/2} e^{-i v(t_mid) h S_x} e^{-i E h/2}`, where `E` is the diagonal
//! `H_NV + b S_z` and `v` the drive envelope at the substep midpoint. The
//! `S_x` factor has the closed form `I - i sin(th) S_x + (cos(th) - 1) S_x^2`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::EngineError;
use crate::model::{drive_amplitude, nv_levels, NVParams};

/// Bound on `||H - shift|| * h` per substep, rad.
pub const MAX_SUBSTEP_PHASE: f64 = 0.05;
/// Smallest substep accepted, us.
pub const MIN_SUBSTEP: f64 = 1e-9;

const SZ: [f64; 3] = [1.0, 0.0, -1.0];

/// Parameters for a single drive on the `(+1, 0)` transition, red-detuned by
/// `detuning` (rad/us) from resonance, with amplitude `b1_gauss`.
pub fn detuned_single_drive(base: &NVParams, b1_gauss: f64, detuning: f64) -> NVParams {
    NVParams {
        b1_gauss,
        b2_gauss: 0.0,
        omega1: base.upper_resonance() - detuning,
        omega2: 0.0,
        ..*base
    }
}

fn rotate_sx(psi: &mut [Complex64], theta: f64) {
    let (s, c) = theta.sin_cos();
    let (a, b, d) = (psi[0], psi[1], psi[2]);
    let sx = [b * FRAC_1_SQRT_2, (a + d) * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2];
    let outer = (a + d) * 0.5;
    let sx2 = [outer, b, outer];
    let i_sin = Complex64::new(0.0, s);
    for k in 0..3 {
        psi[k] += -i_sin * sx[k] + (c - 1.0) * sx2[k];
    }
}

fn scale(psi: &mut [Complex64], phases: &[Complex64; 3]) {
    for k in 0..3 {
        psi[k] *= phases[k];
    }
}

/// Propagates `psi` through one segment starting at wall time `t0`.
pub(super) fn propagate_segment(
    p: &NVParams,
    psi: &mut [Complex64],
    b: f64,
    t0: f64,
    duration: f64,
    drive_on: bool,
) -> Result<(), EngineError> {
    let base = nv_levels(p.zero_field_splitting, p.gamma * p.bz_gauss);
    let e: [f64; 3] = std::array::from_fn(|k| base[k] + b * SZ[k]);
    let v_max = p.gamma * (p.b1_gauss + p.b2_gauss);
    if !drive_on || v_max == 0.0 || duration == 0.0 {
        for k in 0..3 {
            psi[k] *= Complex64::from_polar(1.0, -e[k] * duration);
        }
        return Ok(());
    }
    let e_max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = 0.5 * (e_max + e_min);
    // ||S_x|| = 1 for spin 1
    let norm = 0.5 * (e_max - e_min) + v_max;
    let n = (duration * norm / MAX_SUBSTEP_PHASE).ceil().max(1.0);
    let h = duration / n;
    if h < MIN_SUBSTEP {
        return Err(EngineError::SubstepUnderflow { required: h });
    }
    let n = n as usize;
    let half: [Complex64; 3] = std::array::from_fn(|k| Complex64::from_polar(1.0, -(e[k] - shift) * 0.5 * h));
    let full: [Complex64; 3] = std::array::from_fn(|k| half[k] * half[k]);

    scale(psi, &half);
    for k in 0..n {
        let t_mid = t0 + (k as f64 + 0.5) * h;
        rotate_sx(psi, drive_amplitude(p, t_mid) * h);
        scale(psi, if k + 1 < n { &full } else { &half });
    }
    // restore the global phase removed by the shift
    let g = Complex64::from_polar(1.0, -shift * duration);
    for z in psi.iter_mut() {
        *z *= g;
    }
    Ok(())
}
