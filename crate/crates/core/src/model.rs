//! NV-center Hamiltonians and the effective qudit model.
//!
//! Basis ordering is fixed everywhere as `(m = +1, m = 0, m = -1)`, i.e.
//! level index 0 is `|+1>`, 1 is `|0>`, 2 is `|-1>`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmat::{ComplexMatrix, QmatError, MAX_DIM, MIN_DIM};
use crate::units;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid model: {0}")]
    Shape(String),
    #[error(transparent)]
    Matrix(#[from] QmatError),
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::InvalidParam { name, value, reason }
}

/// Physical NV parameters in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NVParams {
    /// Zero-field splitting D, rad/us.
    pub zero_field_splitting: f64,
    /// Static field along the NV axis, Gauss.
    pub bz_gauss: f64,
    /// Gyromagnetic ratio, rad/(us Gauss).
    pub gamma: f64,
    /// Drive amplitudes, Gauss.
    pub b1_gauss: f64,
    pub b2_gauss: f64,
    /// Drive angular frequencies, rad/us.
    pub omega1: f64,
    pub omega2: f64,
}

impl NVParams {
    /// D = 2.87 GHz, Bz = 100 G, no drives.
    pub fn standard() -> Self {
        Self {
            zero_field_splitting: units::ghz(2.87),
            bz_gauss: 100.0,
            gamma: units::GAMMA_E,
            b1_gauss: 0.0,
            b2_gauss: 0.0,
            omega1: 0.0,
            omega2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [
            ("zero_field_splitting", self.zero_field_splitting),
            ("bz_gauss", self.bz_gauss),
            ("gamma", self.gamma),
            ("b1_gauss", self.b1_gauss),
            ("b2_gauss", self.b2_gauss),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, v, "must be finite"));
            }
        }
        if self.zero_field_splitting <= 0.0 {
            return Err(invalid("zero_field_splitting", self.zero_field_splitting, "must be positive"));
        }
        if self.gamma <= 0.0 {
            return Err(invalid("gamma", self.gamma, "must be positive"));
        }
        for (name, v) in [("bz_gauss", self.bz_gauss), ("b1_gauss", self.b1_gauss), ("b2_gauss", self.b2_gauss)] {
            if v < 0.0 {
                return Err(invalid(name, v, "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Energy of `|+1>` relative to `|0>`, the resonance of the (+1, 0) channel.
    pub fn upper_resonance(&self) -> f64 {
        self.zero_field_splitting + self.gamma * self.bz_gauss
    }

    /// Energy of `|-1>` relative to `|0>`.
    pub fn lower_resonance(&self) -> f64 {
        self.zero_field_splitting - self.gamma * self.bz_gauss
    }
}

/// Spin-1 `S_z = diag(1, 0, -1)`.
pub fn spin1_sz() -> ComplexMatrix {
    ComplexMatrix::from_diag(&[1.0, 0.0, -1.0])
}

/// Spin-1 `S_x`, off-diagonal entries `1/sqrt(2)` between adjacent levels.
pub fn spin1_sx() -> ComplexMatrix {
    let h = Complex64::new(1.0 / SQRT_2, 0.0);
    let mut m = ComplexMatrix::zeros(3);
    m[(0, 1)] = h;
    m[(1, 0)] = h;
    m[(1, 2)] = h;
    m[(2, 1)] = h;
    m
}

/// Diagonal of `D S_z^2 + gamma Bz S_z` for a given Zeeman term `gamma Bz`.
pub fn nv_levels(zero_field_splitting: f64, zeeman: f64) -> [f64; 3] {
    [zero_field_splitting + zeeman, 0.0, zero_field_splitting - zeeman]
}

/// `H_NV = D S_z^2 + gamma Bz S_z`.
pub fn nv_hamiltonian(p: &NVParams) -> Result<ComplexMatrix, ModelError> {
    p.validate()?;
    Ok(ComplexMatrix::from_diag(&nv_levels(p.zero_field_splitting, p.gamma * p.bz_gauss)))
}

/// Scalar drive envelope `gamma (B1 cos w1 t + B2 cos w2 t)` multiplying `S_x`.
pub fn drive_amplitude(p: &NVParams, t: f64) -> f64 {
    p.gamma * (p.b1_gauss * (p.omega1 * t).cos() + p.b2_gauss * (p.omega2 * t).cos())
}

/// Lab-frame Hamiltonian under two microwave drives.
pub fn driven_hamiltonian(p: &NVParams, t: f64) -> Result<ComplexMatrix, ModelError> {
    let h0 = nv_hamiltonian(p)?;
    Ok(&h0 + &spin1_sx().scale_real(drive_amplitude(p, t)))
}

/// Rotating-frame generator `U^dagger H U - A` with `U = exp(-i A t)` for a
/// diagonal frame `A = diag(frame)`.
///
/// No rotating-wave approximation is applied; off-diagonal entries keep their
/// `exp(i (a_m - a_n) t)` time dependence.
pub fn rotating_frame(h: &ComplexMatrix, frame: &[f64], t: f64) -> Result<ComplexMatrix, ModelError> {
    if frame.len() != h.dim() {
        return Err(QmatError::DimensionMismatch {
            expected: h.dim(),
            found: frame.len(),
        }
        .into());
    }
    Ok(ComplexMatrix::from_fn(h.dim(), |m, n| {
        let rotated = h[(m, n)] * Complex64::from_polar(1.0, (frame[m] - frame[n]) * t);
        if m == n {
            rotated - frame[m]
        } else {
            rotated
        }
    }))
}

/// The frame `A = w1 |+1><+1| + w2 |-1><-1|` used for the effective model.
pub fn drive_frame(p: &NVParams) -> [f64; 3] {
    [p.omega1, 0.0, p.omega2]
}

/// Real, non-negative coupling `J_ij` between levels `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// A d-level system Hamiltonian `H_S = sum eps_m |m><m| + sum J_mn (|m><n| + h.c.)`
/// together with the diagonal dephasing coupling `H_SB = b(t) diag(dephase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuditModelRepr")]
pub struct QuditModel {
    eps: Vec<f64>,
    couplings: Vec<Coupling>,
    dephase: Vec<f64>,
}

#[derive(Deserialize)]
struct QuditModelRepr {
    eps: Vec<f64>,
    couplings: Vec<Coupling>,
    dephase: Vec<f64>,
}

impl TryFrom<QuditModelRepr> for QuditModel {
    type Error = ModelError;
    fn try_from(r: QuditModelRepr) -> Result<Self, ModelError> {
        QuditModel::new(r.eps, r.couplings, r.dephase)
    }
}

impl QuditModel {
    pub fn new(eps: Vec<f64>, couplings: Vec<Coupling>, dephase: Vec<f64>) -> Result<Self, ModelError> {
        let dim = eps.len();
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(ModelError::Shape(format!("dimension {dim} outside {MIN_DIM}..={MAX_DIM}")));
        }
        if dephase.len() != dim {
            return Err(ModelError::Shape(format!(
                "dephasing weights have length {}, expected {dim}",
                dephase.len()
            )));
        }
        if let Some(&e) = eps.iter().chain(&dephase).find(|v| !v.is_finite()) {
            return Err(invalid("eps/dephase", e, "must be finite"));
        }
        for c in &couplings {
            if c.i >= c.j || c.j >= dim {
                return Err(ModelError::Shape(format!("coupling ({}, {}) must satisfy i < j < {dim}", c.i, c.j)));
            }
            if !c.value.is_finite() || c.value < 0.0 {
                return Err(invalid("coupling", c.value, "must be real, finite and non-negative"));
            }
        }
        Ok(Self { eps, couplings, dephase })
    }

    /// `H_S = 0` with the given dephasing weights.
    pub fn pure_dephasing(dephase: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(vec![0.0; dephase.len()], Vec::new(), dephase)
    }

    /// Qubit encoded in `{|+1>, |-1>}`: dephasing weights `(1, -1)`.
    pub fn qubit_plus_minus() -> Self {
        Self::pure_dephasing(vec![1.0, -1.0]).expect("valid")
    }

    /// Qubit encoded in `{|+1>, |0>}`: dephasing weights `(1, 0)`.
    pub fn qubit_plus_zero() -> Self {
        Self::pure_dephasing(vec![1.0, 0.0]).expect("valid")
    }

    /// Full spin-1 qutrit with `S_z` dephasing and `H_S = 0`.
    pub fn qutrit() -> Self {
        Self::pure_dephasing(vec![1.0, 0.0, -1.0]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.couplings
            .iter()
            .filter(|c| c.i == i && c.j == j)
            .map(|c| c.value)
            .sum()
    }

    pub fn dephase_weights(&self) -> &[f64] {
        &self.dephase
    }

    pub fn system_hamiltonian(&self) -> ComplexMatrix {
        let mut h = ComplexMatrix::from_diag(&self.eps);
        for c in &self.couplings {
            h[(c.i, c.j)] += c.value;
            h[(c.j, c.i)] += c.value;
        }
        h
    }

    pub fn has_system_dynamics(&self) -> bool {
        self.eps.iter().any(|&e| e != 0.0) || self.couplings.iter().any(|c| c.value != 0.0)
    }

    pub fn dephase_op(&self) -> ComplexMatrix {
        ComplexMatrix::from_diag(&self.dephase)
    }

    /// `H_SB = b * dephase_op`.
    pub fn coupling_operator(&self, b: f64) -> ComplexMatrix {
        self.dephase_op().scale_real(b)
    }
}

/// Rotating-wave effective qutrit model of the doubly driven NV center.
///
/// `eps = (D + gamma Bz - w1, 0, D - gamma Bz - w2)`,
/// `J_12 = gamma B1 / (2 sqrt 2)`, `J_23 = gamma B2 / (2 sqrt 2)`, `J_13 = 0`,
/// dephasing through `S_z`.
pub fn effective_qudit_model(p: &NVParams) -> Result<QuditModel, ModelError> {
    p.validate()?;
    let eps = vec![p.upper_resonance() - p.omega1, 0.0, p.lower_resonance() - p.omega2];
    let j = |b: f64| p.gamma * b / (2.0 * SQRT_2);
    let mut couplings = Vec::new();
    if p.b1_gauss > 0.0 {
        couplings.push(Coupling { i: 0, j: 1, value: j(p.b1_gauss) });
    }
    if p.b2_gauss > 0.0 {
        couplings.push(Coupling { i: 1, j: 2, value: j(p.b2_gauss) });
    }
    QuditModel::new(eps, couplings, vec![1.0, 0.0, -1.0])
}
