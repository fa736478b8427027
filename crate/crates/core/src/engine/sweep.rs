use serde::{Deserialize, Serialize};

use super::{fit_gaussian_decay, run_ensemble, EngineError, FitError, SimulationSpec, SystemSpec, T2Fit, DEFAULT_FLOOR};
use crate::noise::NoiseModel;
use crate::schedule::{analytic_t2, pair_coefficients, ScheduleError, ScheduleRecipe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub workers: usize,
    pub floor: f64,
    /// Rebuild each point with `dt / (1 + lambda)` so the observation window
    /// follows the expected `1/(1+lambda)` shrinkage of T2.
    pub scale_dt_with_lambda: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            floor: DEFAULT_FLOOR,
            scale_dt_with_lambda: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub pair: (usize, usize),
    pub fit: Result<T2Fit, FitError>,
    /// `sqrt(2) / (sigma_b |c_ij|)`, for static noise on a pure-dephasing
    /// model.
    pub analytic_t2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// False when the schedule cannot be built at this value (for instance a
    /// negative wait); `fits` is then empty.
    pub feasible: bool,
    pub note: Option<String>,
    pub fits: Vec<PairFit>,
}

/// Runs the ensemble and fits every pair for each value of `param`, rebuilding
/// the schedule from `recipe`. Rows follow the order of `values`.
pub fn sweep(
    spec: &SimulationSpec,
    recipe: &ScheduleRecipe,
    param: &str,
    values: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>, EngineError> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        if !value.is_finite() {
            return Err(EngineError::InvalidSpec(format!("sweep value {value} is not finite")));
        }
        let mut r = recipe.with_param(param, value)?;
        if opts.scale_dt_with_lambda {
            r.dt = recipe.dt / (1.0 + r.lambda);
        }
        let schedule = match r.build() {
            Ok(s) => s,
            Err(ScheduleError::InvalidParam { reason, .. }) => {
                rows.push(SweepRow {
                    value,
                    feasible: false,
                    note: Some(reason),
                    fits: Vec::new(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let point = SimulationSpec {
            schedule,
            ..spec.clone()
        };
        let result = run_ensemble(&point, opts.workers)?;
        let coefficients = match (&point.system, point.noise) {
            (SystemSpec::Rotating { model }, NoiseModel::StaticGaussian { sigma_b }) if !model.has_system_dynamics() => {
                pair_coefficients(&point.schedule, model.dephase_weights())
                    .ok()
                    .map(|c| (c, sigma_b))
            }
            _ => None,
        };
        let fits = result
            .coherences
            .iter()
            .map(|c| PairFit {
                pair: c.pair,
                fit: fit_gaussian_decay(c, opts.floor),
                analytic_t2: coefficients
                    .as_ref()
                    .map(|(pc, sigma)| analytic_t2(pc.get(c.pair.0, c.pair.1), *sigma)),
            })
            .collect();
        rows.push(SweepRow {
            value,
            feasible: true,
            note: None,
            fits,
        });
    }
    Ok(rows)
}
