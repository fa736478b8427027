use std::path::Path;

use nvsim::engine::{
    fit_gaussian_decay, run_ensemble, sweep as run_sweep, to_csv, to_json, EnsembleResult, SimulationSpec, SweepOptions,
    SystemSpec,
};
use nvsim::filterfn::{
    chi, default_omega_max, filter_ft_sq_closed, filter_ft_sq_numeric, PeriodicWindowSpec, WeightProfile,
};
use nvsim::noise::{sample_ou_path, seed_for, spectral_density, NoiseModel};
use nvsim::schedule::{analytic_t2, pair_coefficients, Offset, PulseSchedule, ScheduleKind};

use crate::config::{ExperimentConfig, Format, ScheduleSource};
use crate::output::Table;
use crate::{CliError, Context};

/// `sqrt(2)/(sigma |c|)` when it describes the run: static noise on a model
/// without system dynamics.
pub(crate) fn analytic_for(spec: &SimulationSpec, schedule: &PulseSchedule, pair: (usize, usize)) -> f64 {
    let (NoiseModel::StaticGaussian { sigma_b }, SystemSpec::Rotating { model }) = (&spec.noise, &spec.system) else {
        return f64::NAN;
    };
    if model.has_system_dynamics() {
        return f64::NAN;
    }
    pair_coefficients(schedule, model.dephase_weights()).map_or(f64::NAN, |c| analytic_t2(c.get(pair.0, pair.1), *sigma_b))
}

/// Gaussian fit of one pair as `(t2, stderr)`, `nan` when the fit fails.
pub(crate) fn fit_pair(result: &EnsembleResult, pair: (usize, usize), floor: f64) -> (f64, f64, Option<String>) {
    match result.coherence(pair.0, pair.1).map(|s| fit_gaussian_decay(s, floor)) {
        Some(Ok(f)) => (f.t2, f.t2_stderr, None),
        Some(Err(e)) => (f64::NAN, f64::NAN, Some(e.to_string())),
        None => (f64::NAN, f64::NAN, Some("pair not recorded".to_string())),
    }
}

pub(crate) fn label(pair: (usize, usize)) -> String {
    format!("{}{}", pair.0 + 1, pair.1 + 1)
}

pub(crate) fn pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|i| (i + 1..dim).map(move |j| (i, j))).collect()
}

pub fn simulate(cfg: &ExperimentConfig, base: &Path, ctx: &mut Context) -> Result<(), CliError> {
    let r = cfg.resolve(base)?;
    let result = ctx.timed("ensemble", |c| Ok(run_ensemble(&r.spec, c.workers)?))?;
    let rows = result.times.len();
    match ctx.out.format {
        Format::Csv => ctx.out.raw("coherence.csv", &to_csv(&r.spec, &result), rows)?,
        Format::Json => ctx.out.raw("coherence.json", &to_json(&r.spec, &result), rows)?,
    }
    let mut fits = Table::new(&["i", "j", "t2_fit_us", "t2_stderr_us", "t2_analytic_us"]);
    fits.comment(format!(
        "Gaussian fits of |rho_ij(t)| over the points above {} of the initial magnitude",
        cfg.fit_floor
    ));
    for c in &result.coherences {
        let (t2, se, note) = fit_pair(&result, c.pair, cfg.fit_floor);
        if let Some(n) = note {
            fits.comment(format!("pair {}: {n}", label(c.pair)));
        }
        let analytic = analytic_for(&r.spec, &r.spec.schedule, c.pair);
        fits.push(vec![(c.pair.0 + 1).into(), (c.pair.1 + 1).into(), t2.into(), se.into(), analytic.into()]);
    }
    ctx.out.table("fits", &fits)?;
    if let Some(np) = &cfg.noise_path {
        let NoiseModel::OrnsteinUhlenbeck { l, rate } = r.spec.noise else {
            return Err(CliError::config("noise_path", "needs ou noise"));
        };
        let path = sample_ou_path(l, rate, 0.0, np.step_us, np.points, seed_for(cfg.master_seed, 0))
            .map_err(|e| CliError::config("noise_path", e))?;
        ctx.out.raw("noise_path.csv", &path.to_csv(), np.points)?;
    }
    Ok(())
}

pub fn analytic(cfg: &ExperimentConfig, base: &Path, ctx: &mut Context) -> Result<(), CliError> {
    let schedule = cfg.schedule_source(base)?.build()?;
    let dephase = cfg.dephase_weights()?;
    if dephase.len() != schedule.dim() {
        return Err(CliError::config("schedule", "dimension does not match the system"));
    }
    let sigma = match cfg.noise_model()? {
        NoiseModel::StaticGaussian { sigma_b } => sigma_b,
        NoiseModel::OrnsteinUhlenbeck { .. } => f64::NAN,
    };
    let coeffs = pair_coefficients(&schedule, &dephase).map_err(crate::config::schedule_error)?;
    let mut t = Table::new(&["i", "j", "c_ij", "t2_analytic_us"]);
    t.comment("|rho_ij(t)| = exp(-(sigma c_ij t)^2 / 2) under static noise; t2 = sqrt(2)/(sigma |c_ij|)");
    t.comment(format!("level weights after one cycle: {:?}", coeffs.weights()));
    for (pair, c) in coeffs.pairs() {
        t.push(vec![(pair.0 + 1).into(), (pair.1 + 1).into(), c.into(), analytic_t2(c, sigma).into()]);
    }
    ctx.out.table("coefficients", &t)
}

/// Closed-form window spectrum for a one-channel recipe.
fn window_spec(source: &ScheduleSource, periods: usize) -> Option<PeriodicWindowSpec> {
    let ScheduleSource::Recipe(r) = source else {
        return None;
    };
    let ScheduleKind::OneChannel { offset } = r.kind else {
        return None;
    };
    let mu = match offset {
        Offset::Mu(m) => m,
        Offset::Tau(t) => t * r.lambda / 2.0,
    };
    PeriodicWindowSpec::from_schedule_params(r.lambda, mu, r.dt, periods).ok()
}

pub fn filter(cfg: &ExperimentConfig, base: &Path, ctx: &mut Context) -> Result<(), CliError> {
    let noise = cfg.noise_model()?;
    let NoiseModel::OrnsteinUhlenbeck { l, rate } = noise else {
        return Err(CliError::config("noise", "filter mode needs ou noise"));
    };
    let fc = cfg.filter.clone().unwrap_or_default();
    let source = cfg.schedule_source(base)?;
    let schedule = source.build()?;
    let dephase = cfg.dephase_weights()?;
    let [i, j] = fc.pair;
    if i == 0 || j == 0 || i > schedule.dim() || j > schedule.dim() || i == j {
        return Err(CliError::config("filter.pair", "needs two distinct 1-based levels of the schedule"));
    }
    let profile = WeightProfile::from_schedule(&schedule, &dephase, (i - 1, j - 1))
        .map_err(|e| CliError::config("filter", e))?;
    let cycle = schedule.cycle_duration();
    let omega_max = fc.omega_max_rad_per_us.unwrap_or_else(|| default_omega_max(rate, cycle));
    if fc.time_points == 0 || fc.omega_points < 2 {
        return Err(CliError::config("filter", "needs time_points >= 1 and omega_points >= 2"));
    }

    let mut chi_table = Table::new(&["time_us", "chi", "chi_abs_error", "w"]);
    chi_table.comment(format!(
        "W(t) = exp(-chi(t)) for pair {i}{j}, OU noise l = {l} rad/us, R = {rate} 1/us, omega_max = {omega_max} rad/us"
    ));
    chi_table.comment("t is wall-clock time at whole cycles");
    ctx.timed("chi", |c| {
        let n = schedule.repeats();
        let mut last = 0;
        for k in 1..=fc.time_points {
            let cycles = ((k * n) as f64 / fc.time_points as f64).round().max(1.0) as usize;
            if cycles == last {
                continue;
            }
            last = cycles;
            let t = cycles as f64 * cycle;
            let r = chi(&profile.truncated(t), &noise, omega_max)?;
            chi_table.push(vec![t.into(), r.value.into(), r.abs_error.into(), (-r.value).exp().into()]);
        }
        c.out.table("filter_chi", &chi_table)
    })?;

    let periods = fc.periods.unwrap_or(schedule.repeats());
    let window = window_spec(&source, periods);
    let stop = fc.omega_stop_rad_per_us.unwrap_or(4.0 * std::f64::consts::TAU / cycle);
    let mut spec_table = Table::new(&["omega_rad_per_us", "ft_sq", "ft_sq_window", "spectral_density"]);
    spec_table.comment("ft_sq: |F(omega)|^2 of the full schedule weight over all repeats");
    match &window {
        Some(w) => spec_table.comment(format!(
            "ft_sq_window: closed form for {} decoupling windows alone (delta1 = {}, delta2 = {} us)",
            w.periods, w.delta1, w.delta2
        )),
        None => spec_table.comment("ft_sq_window: only defined for one-channel schedules"),
    }
    for k in 0..fc.omega_points {
        let w = stop * k as f64 / (fc.omega_points - 1) as f64;
        let closed = window.as_ref().map_or(f64::NAN, |s| filter_ft_sq_closed(s, w));
        spec_table.push(vec![
            w.into(),
            filter_ft_sq_numeric(&profile, w).into(),
            closed.into(),
            spectral_density(l, rate, w).into(),
        ]);
    }
    ctx.out.table("filter_spectrum", &spec_table)
}

pub fn sweep(cfg: &ExperimentConfig, base: &Path, ctx: &mut Context) -> Result<(), CliError> {
    let sc = cfg.sweep.clone().ok_or_else(|| CliError::config("sweep", "missing"))?;
    if sc.values.is_empty() {
        return Err(CliError::config("sweep.values", "no values"));
    }
    let r = cfg.resolve(base)?;
    let ScheduleSource::Recipe(recipe) = &r.source else {
        return Err(CliError::config("schedule", "sweeps need a built-in schedule kind, not a program"));
    };
    recipe
        .with_param(&sc.param, sc.values[0])
        .map_err(|e| CliError::config("sweep.param", e))?;
    if let Some(v) = sc.values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::config("sweep.values", format!("{v} is not finite")));
    }
    let opts = SweepOptions {
        workers: ctx.workers,
        floor: cfg.fit_floor,
        scale_dt_with_lambda: sc.scale_dt_with_lambda,
    };
    let rows = ctx.timed("sweep", |_| Ok(run_sweep(&r.spec, recipe, &sc.param, &sc.values, &opts)?))?;
    let mut t = Table::new(&["value", "feasible", "i", "j", "t2_fit_us", "t2_stderr_us", "t2_analytic_us"]);
    t.comment(format!("sweep over `{}`; infeasible points have feasible = 0 and nan fits", sc.param));
    for row in &rows {
        if let Some(note) = &row.note {
            t.comment(format!("{} = {}: {note}", sc.param, row.value));
        }
        if !row.feasible {
            for p in pairs(r.spec.schedule.dim()) {
                t.push(vec![row.value.into(), false.into(), (p.0 + 1).into(), (p.1 + 1).into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]);
            }
            continue;
        }
        for pf in &row.fits {
            let (t2, se) = match &pf.fit {
                Ok(f) => (f.t2, f.t2_stderr),
                Err(e) => {
                    t.comment(format!("{} = {}, pair {}: {e}", sc.param, row.value, label(pf.pair)));
                    (f64::NAN, f64::NAN)
                }
            };
            t.push(vec![
                row.value.into(),
                true.into(),
                (pf.pair.0 + 1).into(),
                (pf.pair.1 + 1).into(),
                t2.into(),
                se.into(),
                pf.analytic_t2.unwrap_or(f64::NAN).into(),
            ]);
        }
    }
    ctx.out.table("sweep", &t)
}

