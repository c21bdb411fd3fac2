use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;

/// Samples at or below this level are excluded from decay fits.
pub const DEFAULT_FLOOR: f64 = 0.05;
/// Minimum number of admissible samples for a decay fit.
pub const DEFAULT_MIN_POINTS: usize = 8;
/// A fitted log-drop smaller than this over the whole window counts as no decay.
pub const NON_DECAY_LOG_DROP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum FitError {
    #[error("only {available} admissible samples, need {required}")]
    InsufficientPoints { available: usize, required: usize },

    #[error("signal does not decay (slope {slope:e} over {span:e} s)")]
    NonDecaying { slope: f64, span: f64 },

    #[error("fit produced a non-finite result")]
    NonFinite,
}

/// Single-exponential fit `A·e^{-t/T2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpFit<T: Real> {
    pub t2: T,
    pub amplitude: T,
    /// Coefficient of determination of the log-linear regression.
    pub r_squared: T,
    pub n_points_used: usize,
    /// Standard error of `T2` propagated from the slope uncertainty.
    pub t2_stderr: T,
}

/// Log-linear least squares of `ln(values)` against `times`, over the
/// leading run of samples above `floor`.
pub fn fit_log_linear<T: Real>(
    times: &[T],
    values: &[T],
    floor: T,
    min_points: usize,
) -> Result<ExpFit<T>, FitError> {
    let n = times
        .iter()
        .zip(values)
        .take_while(|(t, v)| **v > floor && v.is_finite() && t.is_finite())
        .count();
    if n < min_points.max(2) {
        return Err(FitError::InsufficientPoints {
            available: n,
            required: min_points.max(2),
        });
    }
    // Accumulate in f64 about the means to keep the regression well conditioned.
    let ts: Vec<f64> = times[..n].iter().map(|t| t.as_f64()).collect();
    let ys: Vec<f64> = values[..n].iter().map(|v| v.as_f64().ln()).collect();
    let nf = n as f64;
    let t_mean = ts.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(&ys) {
        let (dt, dy) = (t - t_mean, y - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt <= 0.0 {
        return Err(FitError::InsufficientPoints {
            available: 1,
            required: min_points.max(2),
        });
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let span = ts[n - 1] - ts[0];
    if !slope.is_finite() {
        return Err(FitError::NonFinite);
    }
    if slope >= 0.0 || -slope * span < NON_DECAY_LOG_DROP {
        return Err(FitError::NonDecaying { slope, span });
    }
    let ss_res = (syy - slope * sty).max(0.0);
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_se = if n > 2 { (ss_res / (nf - 2.0) / stt).sqrt() } else { 0.0 };
    let t2 = -1.0 / slope;
    Ok(ExpFit {
        t2: T::lit(t2),
        amplitude: T::lit(intercept.exp()),
        r_squared: T::lit(r_squared),
        n_points_used: n,
        t2_stderr: T::lit(slope_se / (slope * slope)),
    })
}
