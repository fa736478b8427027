use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CoherenceSeries;

/// Points at or below this fraction of the initial magnitude are excluded.
pub const DEFAULT_FLOOR: f64 = 0.05;
/// Fits whose decay time exceeds this multiple of the window are flagged.
const NON_DECAYING_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum FitError {
    #[error("only {points} usable points, at least 5 needed")]
    InsufficientData { points: usize },
    #[error("no decay within {window} us")]
    NonDecaying { window: f64 },
}

/// Gaussian decay `A exp(-(t/T2)^2)` fitted in the log domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Fit {
    pub amplitude: f64,
    /// us
    pub t2: f64,
    /// Standard error of `t2`: delete-one-batch jackknife over the series'
    /// trajectory batches when available, else the regression standard
    /// error (which ignores the correlation of Monte Carlo errors in time).
    pub t2_stderr: f64,
    /// RMS residual of `ln |rho|`.
    pub residual: f64,
    pub points_used: usize,
}

/// Least-squares fit of `ln|rho(t)| = ln A - (t/T2)^2` over the leading run
/// of points whose magnitude exceeds `floor * |rho(0)|`.
pub fn fit_gaussian_decay(series: &CoherenceSeries, floor: f64) -> Result<T2Fit, FitError> {
    let mut fit = fit_gaussian_points(&series.times, &series.magnitudes(), floor)?;
    if let Some(se) = jackknife_stderr(series, fit.points_used) {
        fit.t2_stderr = se;
    }
    Ok(fit)
}

/// Refits with each batch left out, on the same points as the full fit.
fn jackknife_stderr(series: &CoherenceSeries, n: usize) -> Option<f64> {
    let groups = series.batch_means.len();
    if groups < 2 {
        return None;
    }
    let total: usize = series.batch_counts.iter().sum();
    let times = &series.times[..n];
    let mut t2s = Vec::with_capacity(groups);
    for (batch, &count) in series.batch_means.iter().zip(&series.batch_counts) {
        let rest = (total - count) as f64;
        let mags: Vec<f64> = (0..n)
            .map(|k| ((series.values[k] * total as f64 - batch[k] * count as f64) / rest).norm())
            .collect();
        t2s.push(fit_gaussian_points(times, &mags, 0.0).ok()?.t2);
    }
    let g = groups as f64;
    let mean = t2s.iter().sum::<f64>() / g;
    Some(((g - 1.0) / g * t2s.iter().map(|t| (t - mean).powi(2)).sum::<f64>()).sqrt())
}

pub(crate) fn fit_gaussian_points(times: &[f64], mags: &[f64], floor: f64) -> Result<T2Fit, FitError> {
    let window = times.last().copied().unwrap_or(0.0);
    let y0 = mags.first().copied().unwrap_or(0.0);
    if y0 <= 0.0 {
        return Err(FitError::InsufficientData { points: 0 });
    }
    let n = mags.iter().take_while(|&&y| y > floor * y0).count();
    if n < 5 {
        return Err(FitError::InsufficientData { points: n });
    }
    let xs: Vec<f64> = times[..n].iter().map(|t| t * t).collect();
    let ys: Vec<f64> = mags[..n].iter().map(|y| y.ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::InsufficientData { points: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let k = -slope;
    if k <= 0.0 {
        return Err(FitError::NonDecaying { window });
    }
    let t2 = 1.0 / k.sqrt();
    if t2 > NON_DECAYING_FACTOR * window {
        return Err(FitError::NonDecaying { window });
    }
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(T2Fit {
        amplitude: intercept.exp(),
        t2,
        t2_stderr: 0.5 * k.powf(-1.5) * slope_se,
        residual: (rss / nf).sqrt(),
        points_used: n,
    })
}

/// `a + exp(-(t/T)^2) (c cos wt + s sin wt)` with `w` fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationFit {
    pub t2: f64,
    pub offset: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
    /// RMS residual.
    pub residual: f64,
    pub points_used: usize,
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn oscillation_lsq(times: &[f64], values: &[f64], omega: f64, t2: f64) -> Option<([f64; 3], f64)> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    let rows: Vec<[f64; 3]> = times
        .iter()
        .map(|&t| {
            let env = (-(t / t2).powi(2)).exp();
            [1.0, env * (omega * t).cos(), env * (omega * t).sin()]
        })
        .collect();
    for (r, &y) in rows.iter().zip(values) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += r[i] * r[j];
            }
            atb[i] += r[i] * y;
        }
    }
    let c = solve3(ata, atb)?;
    let rss = rows
        .iter()
        .zip(values)
        .map(|(r, &y)| (y - c[0] * r[0] - c[1] * r[1] - c[2] * r[2]).powi(2))
        .sum();
    Some((c, rss))
}

/// Fits a Gaussian-damped oscillation of known angular frequency `omega`
/// by variable projection: the linear coefficients are solved exactly for
/// each trial `T`, and `T` is found by a log-grid scan refined with a
/// golden-section search.
pub fn fit_damped_oscillation(times: &[f64], values: &[f64], omega: f64) -> Result<OscillationFit, FitError> {
    let n = times.len().min(values.len());
    if n < 5 {
        return Err(FitError::InsufficientData { points: n });
    }
    let window = times[n - 1];
    if window <= 0.0 {
        return Err(FitError::InsufficientData { points: 1 });
    }
    let (times, values) = (&times[..n], &values[..n]);
    let cost = |log_t: f64| oscillation_lsq(times, values, omega, log_t.exp()).map_or(f64::INFINITY, |(_, r)| r);

    let (lo, hi) = ((window / 200.0).ln(), (NON_DECAYING_FACTOR * window).ln());
    let steps = 240;
    let grid: Vec<f64> = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    let best = (0..=steps)
        .min_by(|&a, &b| cost(grid[a]).total_cmp(&cost(grid[b])))
        .expect("non-empty grid");
    if best == steps {
        return Err(FitError::NonDecaying { window });
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..100 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    let t2 = (0.5 * (a + b)).exp();
    let (c, rss) = oscillation_lsq(times, values, omega, t2).ok_or(FitError::InsufficientData { points: n })?;
    Ok(OscillationFit {
        t2,
        offset: c[0],
        cos_amp: c[1],
        sin_amp: c[2],
        residual: (rss / n as f64).sqrt(),
        points_used: n,
    })
}
