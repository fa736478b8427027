//! Figure presets: fixed parameter sets and grids with laptop-scale defaults.
//!
//! Every grid point of a preset runs with the same master seed, so a curve
//! shared between presets (fig2ab at `tau = 0` and fig1a at the same
//! `lambda`) is reproduced exactly.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;

use nvsim::engine::{
    detuned_single_drive, fit_damped_oscillation, run_ensemble, EnsembleResult, SimulationSpec, SystemSpec,
};
use nvsim::filterfn::{chi_periodic, default_omega_max, filter_ft_sq_closed, PeriodicWindowSpec};
use nvsim::model::{NVParams, QuditModel};
use nvsim::noise::{spectral_density, NoiseModel};
use nvsim::schedule::{analytic_coherence, analytic_t2, pair_coefficients, Offset, ScheduleKind, ScheduleRecipe};
use nvsim::units::{gauss_to_rate, mhz, GAMMA_E};

use crate::config::{ExperimentConfig, PresetOptions};
use crate::output::Table;
use crate::runs::{fit_pair, label, pairs};
use crate::{CliError, Context};

pub const PRESETS: [&str; 7] = ["fig1a", "fig1b", "fig1cd", "fig2ab", "fig2cd", "fig3a", "fig3bcd"];

pub const SIGMA_B_GAUSS: f64 = 0.2;
pub const LAMBDA_GRID: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0];
/// Cycles per run; the step is chosen so they span three expected decay times.
pub const REPEATS: usize = 100;
pub const DRIVE_GAUSS: f64 = 1.717;
pub const DETUNING_MHZ: f64 = 1.9;
pub const FILTER_DT_US: f64 = 0.01;
pub const FILTER_RATE_PER_US: f64 = 1.0;

pub fn check_name(name: &str) -> Result<(), CliError> {
    if PRESETS.contains(&name) {
        Ok(())
    } else {
        Err(CliError::UnknownPreset(name.to_string()))
    }
}

pub fn preset_config(name: &str) -> Result<ExperimentConfig, CliError> {
    check_name(name)?;
    ExperimentConfig::from_json(&serde_json::json!({ "mode": "preset", "preset": name }).to_string())
}

pub fn default_trajectories(name: &str) -> usize {
    match name {
        "fig1cd" => 1000,
        _ => 10_000,
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &mut Context) -> Result<(), CliError> {
    let name = cfg.preset.as_deref().unwrap_or_default();
    let p = Params {
        trajectories: cfg.trajectories(),
        seed: cfg.master_seed,
        floor: cfg.fit_floor,
        opts: cfg.preset_options.clone(),
    };
    match name {
        "fig1a" => fig1a(&p, ctx),
        "fig1b" => fig1b(&p, ctx),
        "fig1cd" => fig1cd(&p, ctx),
        "fig2ab" => fig2ab(&p, ctx),
        "fig2cd" => fig2cd(&p, ctx),
        "fig3a" => fig3a(&p, ctx),
        "fig3bcd" => fig3bcd(&p, ctx),
        other => Err(CliError::UnknownPreset(other.to_string())),
    }
}

struct Params {
    trajectories: usize,
    seed: u64,
    floor: f64,
    opts: PresetOptions,
}

impl Params {
    fn lambda(&self) -> f64 {
        self.opts.lambda.unwrap_or(1.0)
    }
}

pub fn sigma_b() -> f64 {
    gauss_to_rate(SIGMA_B_GAUSS, GAMMA_E)
}

fn superposition(dim: usize, levels: &[usize]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    let a = 1.0 / (levels.len() as f64).sqrt();
    for &k in levels {
        v[k] = Complex64::new(a, 0.0);
    }
    v
}

fn dephasing_spec(model: QuditModel, recipe: &ScheduleRecipe, p: &Params) -> Result<SimulationSpec, CliError> {
    let dim = model.dim();
    Ok(SimulationSpec {
        system: SystemSpec::Rotating { model },
        schedule: recipe.build().map_err(crate::config::schedule_error)?,
        noise: NoiseModel::StaticGaussian { sigma_b: sigma_b() },
        initial_state: superposition(dim, &(0..dim).collect::<Vec<_>>()),
        trajectories: p.trajectories,
        sample_stride: 1,
        master_seed: p.seed,
    })
}

/// Qubit on `{+1, -1}`; the amplified T2 is `1/(sqrt(2) sigma (1 + lambda))`.
fn qubit_dt(lambda: f64) -> f64 {
    3.0 / (SQRT_2 * sigma_b() * (1.0 + lambda)) / REPEATS as f64
}

struct Curve {
    param: f64,
    c: f64,
    result: EnsembleResult,
}

fn qubit_runs(recipes: Vec<(f64, ScheduleRecipe)>, p: &Params, ctx: &mut Context) -> Result<Vec<Curve>, CliError> {
    let mut out = Vec::new();
    for (param, recipe) in recipes {
        let spec = dephasing_spec(QuditModel::qubit_plus_minus(), &recipe, p)?;
        let c = pair_coefficients(&spec.schedule, &[1.0, -1.0])
            .map_err(crate::config::schedule_error)?
            .get(0, 1);
        let result = ctx.timed(format!("ensemble {param}"), |ctx| Ok(run_ensemble(&spec, ctx.workers)?))?;
        out.push(Curve { param, c, result });
    }
    Ok(out)
}

fn amplify_recipes() -> Vec<(f64, ScheduleRecipe)> {
    LAMBDA_GRID
        .iter()
        .map(|&lambda| {
            (
                lambda,
                ScheduleRecipe {
                    kind: ScheduleKind::Amplify,
                    lambda,
                    dt: qubit_dt(lambda),
                    repeats: REPEATS,
                    dim: 2,
                },
            )
        })
        .collect()
}

fn curve_table(first: &'static str, curves: &[Curve]) -> Table {
    let mut t = Table::new(&[first, "time_us", "abs_rho_12", "stderr_12", "analytic_12"]);
    t.comment(format!(
        "qubit on levels +1 and -1, initial (|+1> + |-1>)/sqrt(2), static noise sigma_b = {SIGMA_B_GAUSS} G"
    ));
    t.comment("time_us is system-on time");
    for c in curves {
        let s = c.result.coherence(0, 1).expect("qubit pair");
        for (k, &time) in s.times.iter().enumerate() {
            t.push(vec![
                c.param.into(),
                time.into(),
                (2.0 * s.values[k].norm()).into(),
                (2.0 * s.stderr[k]).into(),
                analytic_coherence(c.c, sigma_b(), time).into(),
            ]);
        }
    }
    t
}

fn t2_table(first: &'static str, curves: &[Curve], floor: f64) -> Table {
    let mut t = Table::new(&[first, "t2_fit_us", "t2_stderr_us", "t2_analytic_us"]);
    t.comment(format!("Gaussian fits of |rho_12|, static noise sigma_b = {SIGMA_B_GAUSS} G"));
    for c in curves {
        let (t2, se, note) = fit_pair(&c.result, (0, 1), floor);
        if let Some(n) = note {
            t.comment(format!("{first} = {}: {n}", c.param));
        }
        t.push(vec![c.param.into(), t2.into(), se.into(), analytic_t2(c.c, sigma_b()).into()]);
    }
    t
}

fn fig1a(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let curves = qubit_runs(amplify_recipes(), p, ctx)?;
    let mut t = curve_table("lambda", &curves);
    t.comment("abs_rho_12 is normalized to 1 at t = 0");
    ctx.out.table("fig1a_coherence", &t)
}

fn fig1b(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let curves = qubit_runs(amplify_recipes(), p, ctx)?;
    ctx.out.table("fig1b_t2", &t2_table("lambda", &curves, p.floor))
}

fn fig2ab(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let lambda = p.lambda();
    let recipes = (0..=10)
        .map(|k| {
            let tau = k as f64 / 10.0;
            let recipe = ScheduleRecipe {
                kind: ScheduleKind::OneChannel { offset: Offset::Tau(tau) },
                lambda,
                dt: qubit_dt(lambda),
                repeats: REPEATS,
                dim: 2,
            };
            (tau, recipe)
        })
        .collect();
    let curves = qubit_runs(recipes, p, ctx)?;
    let mut a = curve_table("tau", &curves);
    a.comment(format!("one swapped channel, lambda = {lambda}, mu = tau lambda / 2"));
    ctx.out.table("fig2a_coherence", &a)?;
    let mut b = t2_table("tau", &curves, p.floor);
    b.comment(format!("lambda = {lambda}; at tau = 1 the windows cancel and only the system-on slices dephase"));
    ctx.out.table("fig2b_t2", &b)
}

fn fig1cd(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let detuning = mhz(DETUNING_MHZ);
    let j = GAMMA_E * DRIVE_GAUSS / (2.0 * SQRT_2);
    // dressed frequency of the (+1, 0) pair in system time
    let omega = (detuning * detuning + 4.0 * j * j).sqrt();
    let dt = 0.005;
    let mut pops = Table::new(&["lambda", "time_us", "pop_1", "pop_2", "pop_3", "pop_1_fit"]);
    pops.comment(format!(
        "lab-frame NV, Bz = 100 G, D = 2.87 GHz, one drive of {DRIVE_GAUSS} G red-detuned by {DETUNING_MHZ} MHz / (1 + lambda)"
    ));
    pops.comment("initial (|+1> + |0>)/sqrt(2), static noise sigma_b = 0.2 G; time_us is system-on time");
    let mut t2s = Table::new(&["lambda", "t2_fit_us", "omega_rad_per_us", "offset", "cos_amp", "sin_amp", "residual"]);
    t2s.comment("fit of pop_1 to offset + exp(-(t/T2)^2) (cos_amp cos(omega t) + sin_amp sin(omega t))");
    for &lambda in &LAMBDA_GRID {
        let params = detuned_single_drive(&NVParams::standard(), DRIVE_GAUSS, detuning / (1.0 + lambda));
        let n = (2.5 / (1.0 + lambda) / dt).round() as usize;
        let recipe = ScheduleRecipe {
            kind: ScheduleKind::Amplify,
            lambda,
            dt,
            repeats: n,
            dim: 3,
        };
        let spec = SimulationSpec {
            system: SystemSpec::LabFrame { params },
            schedule: recipe.build().map_err(crate::config::schedule_error)?,
            noise: NoiseModel::StaticGaussian { sigma_b: sigma_b() },
            initial_state: superposition(3, &[0, 1]),
            trajectories: p.trajectories,
            sample_stride: (n / 125).max(1),
            master_seed: p.seed,
        };
        let r = ctx.timed(format!("ensemble {lambda}"), |ctx| Ok(run_ensemble(&spec, ctx.workers)?))?;
        let fit = fit_damped_oscillation(&r.times, &r.populations[0], omega);
        if let Err(e) = &fit {
            t2s.comment(format!("lambda = {lambda}: {e}"));
        }
        for (k, &time) in r.times.iter().enumerate() {
            let model = fit.as_ref().map_or(f64::NAN, |f| {
                let (s, c) = (omega * time).sin_cos();
                f.offset + (-(time / f.t2).powi(2)).exp() * (f.cos_amp * c + f.sin_amp * s)
            });
            pops.push(vec![
                lambda.into(),
                time.into(),
                r.populations[0][k].into(),
                r.populations[1][k].into(),
                r.populations[2][k].into(),
                model.into(),
            ]);
        }
        let row = match &fit {
            Ok(f) => [f.t2, f.offset, f.cos_amp, f.sin_amp, f.residual],
            Err(_) => [f64::NAN; 5],
        };
        t2s.push(vec![
            lambda.into(),
            row[0].into(),
            omega.into(),
            row[1].into(),
            row[2].into(),
            row[3].into(),
            row[4].into(),
        ]);
    }
    ctx.out.table("fig1c_populations", &pops)?;
    ctx.out.table("fig1d_t2", &t2s)
}

fn fig2cd(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let lambda = p.lambda();
    let periods = p.opts.periods.unwrap_or(10);
    let noise = NoiseModel::OrnsteinUhlenbeck {
        l: sigma_b(),
        rate: FILTER_RATE_PER_US,
    };
    let delta = lambda * FILTER_DT_US;
    let omega_max = default_omega_max(FILTER_RATE_PER_US, delta);
    let taus = [0.0, 0.5, 1.0];
    let (l, rate) = (sigma_b(), FILTER_RATE_PER_US);

    let mut spec_t = Table::new(&["tau", "omega_rad_per_us", "ft_sq", "spectral_density"]);
    spec_t.comment(format!(
        "|F(omega)|^2 of {periods} decoupling windows, delta = lambda dt = {delta} us, mu = tau lambda / 2"
    ));
    spec_t.comment(format!("OU noise l = {l} rad/us (0.2 G), R = {rate} 1/us"));
    let stop = 4.0 * TAU / delta;
    let points = 401;
    for &tau in &taus {
        let w = PeriodicWindowSpec::from_schedule_params(lambda, tau * lambda / 2.0, FILTER_DT_US, periods)?;
        for k in 0..points {
            let omega = stop * k as f64 / (points - 1) as f64;
            spec_t.push(vec![
                tau.into(),
                omega.into(),
                filter_ft_sq_closed(&w, omega).into(),
                spectral_density(l, rate, omega).into(),
            ]);
        }
    }
    ctx.out.table("fig2c_spectrum", &spec_t)?;

    let mut coh = Table::new(&["tau", "time_us", "chi", "chi_abs_error", "w"]);
    coh.comment("W(t) = exp(-chi(t)) over whole windows; time_us counts decoupling windows only");
    coh.comment(format!("omega_max = {omega_max} rad/us"));
    ctx.timed("chi", |_| {
        for &tau in &taus {
            for k in (5..=200).step_by(5) {
                let w = PeriodicWindowSpec::from_schedule_params(lambda, tau * lambda / 2.0, FILTER_DT_US, k)?;
                let r = chi_periodic(&w, &noise, omega_max)?;
                coh.push(vec![
                    tau.into(),
                    w.total_time().into(),
                    r.value.into(),
                    r.abs_error.into(),
                    (-r.value).exp().into(),
                ]);
            }
        }
        Ok(())
    })?;
    ctx.out.table("fig2d_coherence", &coh)
}

struct PairT2 {
    pair: (usize, usize),
    c: f64,
    fit: (f64, f64),
    analytic: f64,
    note: Option<String>,
}

/// One ensemble per level pair, each with its step chosen so that the run
/// spans three of that pair's expected decay times. A pair with `c = 0`
/// borrows the step of the slowest decaying pair.
fn qutrit_pair_t2(recipe: &ScheduleRecipe, p: &Params, ctx: &mut Context) -> Result<Vec<PairT2>, CliError> {
    let model = QuditModel::qutrit();
    let probe = recipe.build().map_err(crate::config::schedule_error)?;
    let coeffs = pair_coefficients(&probe, model.dephase_weights()).map_err(crate::config::schedule_error)?;
    let analytic: Vec<f64> = pairs(3).iter().map(|&(i, j)| analytic_t2(coeffs.get(i, j), sigma_b())).collect();
    let slowest = analytic.iter().copied().filter(|t| t.is_finite()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for (k, &pair) in pairs(3).iter().enumerate() {
        let window = if analytic[k].is_finite() { analytic[k] } else { slowest };
        let r = ScheduleRecipe {
            dt: 3.0 * window / REPEATS as f64,
            ..recipe.clone()
        };
        let spec = dephasing_spec(model.clone(), &r, p)?;
        let result = run_ensemble(&spec, ctx.workers)?;
        let (t2, se, note) = fit_pair(&result, pair, p.floor);
        out.push(PairT2 {
            pair,
            c: coeffs.get(pair.0, pair.1),
            fit: (t2, se),
            analytic: analytic[k],
            note,
        });
    }
    Ok(out)
}

fn qutrit_comment(t: &mut Table, lambda: f64) {
    t.comment(format!(
        "qutrit (+1, 0, -1), initial equal superposition, static noise sigma_b = {SIGMA_B_GAUSS} G, lambda = {lambda}"
    ));
    t.comment("mu = tau lambda / 2; each pair is fitted from its own run");
}

fn fig3a(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let lambda = p.lambda();
    let mut t = Table::new(&["tau", "i", "j", "c_ij", "t2_fit_us", "t2_stderr_us", "t2_analytic_us"]);
    qutrit_comment(&mut t, lambda);
    t.comment("one swapped channel between +1 and 0");
    for k in 0..=20 {
        let tau = k as f64 / 10.0;
        let recipe = ScheduleRecipe {
            kind: ScheduleKind::OneChannel { offset: Offset::Tau(tau) },
            lambda,
            dt: 1.0,
            repeats: REPEATS,
            dim: 3,
        };
        let rows = ctx.timed(format!("tau {tau}"), |ctx| qutrit_pair_t2(&recipe, p, ctx))?;
        for r in rows {
            if let Some(n) = &r.note {
                t.comment(format!("tau = {tau}, pair {}: {n}", label(r.pair)));
            }
            t.push(vec![
                tau.into(),
                (r.pair.0 + 1).into(),
                (r.pair.1 + 1).into(),
                r.c.into(),
                r.fit.0.into(),
                r.fit.1.into(),
                r.analytic.into(),
            ]);
        }
    }
    ctx.out.table("fig3a_t2", &t)
}

fn fig3bcd(p: &Params, ctx: &mut Context) -> Result<(), CliError> {
    let lambda = p.lambda();
    let columns = ["tau1", "tau2", "feasible", "c_ij", "t2_fit_us", "t2_stderr_us", "t2_analytic_us"];
    let mut maps: Vec<Table> = pairs(3)
        .iter()
        .map(|&pair| {
            let mut t = Table::new(&columns);
            qutrit_comment(&mut t, lambda);
            t.comment(format!(
                "T2 of pair {} (levels {} and {}); two swapped channels, mu1 <= mu2 required",
                label(pair),
                ["+1", "0", "-1"][pair.0],
                ["+1", "0", "-1"][pair.1]
            ));
            t
        })
        .collect();
    ctx.timed("grid", |ctx| {
        for a in 0..=20 {
            for b in 0..=20 {
                let (tau1, tau2) = (a as f64 / 10.0, b as f64 / 10.0);
                let recipe = ScheduleRecipe {
                    kind: ScheduleKind::TwoChannel {
                        offset1: Offset::Tau(tau1),
                        offset2: Offset::Tau(tau2),
                    },
                    lambda,
                    dt: 1.0,
                    repeats: REPEATS,
                    dim: 3,
                };
                if recipe.build().is_err() {
                    for m in maps.iter_mut() {
                        m.push(vec![tau1.into(), tau2.into(), false.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]);
                    }
                    continue;
                }
                let rows = qutrit_pair_t2(&recipe, p, ctx)?;
                for (m, r) in maps.iter_mut().zip(rows) {
                    if let Some(n) = &r.note {
                        m.comment(format!("tau1 = {tau1}, tau2 = {tau2}: {n}"));
                    }
                    m.push(vec![
                        tau1.into(),
                        tau2.into(),
                        true.into(),
                        r.c.into(),
                        r.fit.0.into(),
                        r.fit.1.into(),
                        r.analytic.into(),
                    ]);
                }
            }
        }
        Ok(())
    })?;
    for (pair, m) in pairs(3).into_iter().zip(&maps) {
        ctx.out.table(&format!("fig3bcd_t2_{}", label(pair)), m)?;
    }
    Ok(())
}
