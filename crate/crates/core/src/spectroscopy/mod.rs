//! Magnetisation decay under CPMG, `T2` fits and spectral-density sweeps.

mod decay;
mod fit;
mod gaussian;
mod sweep;

pub use decay::{fit_doublet, fit_exponential, simulate_decay, spectral_density, DecayConfig, DecayCurve};
pub use fit::{fit_log_linear, ExpFit, FitError, DEFAULT_FLOOR, DEFAULT_MIN_POINTS, NON_DECAY_LOG_DROP};
pub use gaussian::{fit_gaussians, fit_gaussians_xy, GaussianComponent, GaussianFit, GaussianFitError};
pub use sweep::{
    averaged_spectrum, kicks_only_profile, sweep_spectrum, Provenance, SpectralGap, SpectralPoint, SpectralProfile,
    SweepConfig, MIN_PULSES_FOR_FILTER,
};

use crate::scalar::Real;

/// Comma-joined `{:.16e}` floats with a trailing newline.
pub(crate) fn csv_row<T: Real>(values: &[T]) -> String {
    let mut row = values
        .iter()
        .map(|v| format!("{:.16e}", v.as_f64()))
        .collect::<Vec<_>>()
        .join(",");
    row.push('\n');
    row
}
