//! Decoherence rate as a function of kick rate, from the closed form.
//!
//! The fitted signal is the branch envelope `|x_m| + |y_m|` of the averaged
//! coherence, where `x` and `y` are the parts of `f01` conditioned on the
//! environment being up or down. It bounds `|f01|` from above and removes
//! the coherent `cos(πJt)` beating, which otherwise drives `|f01|` through
//! zero once per coupling period.

use rayon::prelude::*;
use serde::Serialize;

use super::closed_form::{diagonal_of, BranchMap};
use super::kick::SuperopCoeffs;
use crate::error::{invalid, Result};
use crate::qdyn::{DensityMatrix, Register, SpinSystem};
use crate::scalar::Real;
use crate::spectroscopy::{fit_log_linear, ExpFit, FitError, DEFAULT_FLOOR, DEFAULT_MIN_POINTS};

/// Horizon and admissibility rules for each rate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitWindow {
    /// Upper bound on closed-form iterations per rate.
    pub max_kicks: usize,
    /// Envelope level where the series is cut off.
    pub floor: f64,
    pub min_points: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            max_kicks: 400_000,
            floor: DEFAULT_FLOOR,
            min_points: DEFAULT_MIN_POINTS,
        }
    }
}

/// One point of the `1/T2` versus `Γ` curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint<T: Real> {
    pub gamma_rate: T,
    pub fit: std::result::Result<ExpFit<T>, FitError>,
}

impl<T: Real> RatePoint<T> {
    /// `1/T2` in 1/s, when the fit succeeded.
    pub fn inv_t2(&self) -> Option<T> {
        self.fit.as_ref().ok().map(|f| T::one() / f.t2)
    }
}

/// Branch envelope of the averaged coherence after each kick, stopping
/// once it falls below `floor` or after `max_kicks` kicks.
pub fn branch_envelope<T: Real>(
    rho_e0: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    theta: T,
    delta: T,
    window: &FitWindow,
) -> Result<(Vec<T>, Vec<T>)> {
    let map = BranchMap::new(&SuperopCoeffs::from_theta(theta)?, sys, delta);
    let mut v = diagonal_of(rho_e0)?;
    let floor = T::lit(window.floor);
    let mut times = vec![T::zero()];
    let mut env = vec![v[0].norm() + v[1].norm()];
    for k in 1..=window.max_kicks {
        v = map.apply(v);
        let e = v[0].norm() + v[1].norm();
        times.push(T::lit(k as f64) * delta);
        env.push(e);
        if e <= floor {
            break;
        }
    }
    Ok((times, env))
}

/// Fits `1/T2` at every kick rate (kicks/s, positive and ascending) with the
/// environment at `I/2`. Fit failures are reported per point.
pub fn t2_of_kick_rate<T: Real>(
    sys: &SpinSystem<T>,
    theta: T,
    gamma_rates: &[T],
    window: &FitWindow,
) -> Result<Vec<RatePoint<T>>> {
    if gamma_rates.is_empty() {
        return Err(invalid("gamma_rates", "empty grid"));
    }
    if gamma_rates.iter().any(|g| !(*g > T::zero()) || !g.is_finite()) {
        return Err(invalid("gamma_rates", "rates must be positive and finite"));
    }
    if gamma_rates.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("gamma_rates", "rates must be strictly ascending"));
    }
    SuperopCoeffs::from_theta(theta)?;
    let env = DensityMatrix::maximally_mixed(Register::Environment);
    gamma_rates
        .par_iter()
        .map(|&gamma_rate| {
            let delta = T::one() / gamma_rate;
            let (times, values) = branch_envelope(&env, sys, theta, delta, window)?;
            let fit = fit_log_linear(&times, &values, T::lit(window.floor), window.min_points);
            Ok(RatePoint { gamma_rate, fit })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::closed_form_f;
    use std::f64::consts::PI;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::on_resonance(215.0).unwrap()
    }

    #[test]
    fn envelope_bounds_coherence() {
        let env = DensityMatrix::maximally_mixed(Register::Environment);
        let window = FitWindow { max_kicks: 3000, ..FitWindow::default() };
        let (delta, theta) = (4e-5, 0.3);
        let (_, e) = branch_envelope(&env, &sys(), theta, delta, &window).unwrap();
        let f = closed_form_f(&env, &sys(), theta, delta, e.len() - 1).unwrap();
        for (ek, fk) in e.iter().zip(f.magnitudes()) {
            assert!(fk <= ek + 1e-14);
        }
    }

    #[test]
    fn vanishing_kicks_never_decay() {
        let rates: Vec<f64> = [0.1, 0.5, 2.0, 10.0].iter().map(|r| r * 215.0).collect();
        let window = FitWindow { max_kicks: 20_000, ..FitWindow::default() };
        for p in t2_of_kick_rate(&sys(), 1e-9, &rates, &window).unwrap() {
            assert!(matches!(p.fit, Err(FitError::NonDecaying { .. })), "{:?}", p);
            assert!(p.inv_t2().is_none());
        }
    }

    #[test]
    fn complex_regime_rate_is_linear_in_gamma() {
        // Below the crossover the one-step map has conjugate eigenvalues of
        // modulus √γ, so 1/T2 = -(Γ/2) ln γ; the beat between them biases the
        // short fit window by a few percent.
        let theta = PI / 4.0;
        let gamma = crate::noise::gamma_of_theta(theta).unwrap();
        let rates: Vec<f64> = (0..6).map(|k| (2.0 + k as f64) * 215.0).collect();
        let pts = t2_of_kick_rate(&sys(), theta, &rates, &FitWindow::default()).unwrap();
        for p in &pts {
            let expect = -0.5 * p.gamma_rate * gamma.ln();
            let got = p.inv_t2().unwrap();
            assert!((got / expect - 1.0).abs() < 0.07, "Γ={} got {got} expect {expect}", p.gamma_rate);
        }
    }

    #[test]
    fn grid_validation() {
        let w = FitWindow::default();
        assert!(t2_of_kick_rate(&sys(), 0.1, &[], &w).is_err());
        assert!(t2_of_kick_rate(&sys(), 0.1, &[10.0, 5.0], &w).is_err());
        assert!(t2_of_kick_rate(&sys(), 0.1, &[-1.0], &w).is_err());
        assert!(t2_of_kick_rate(&sys(), 0.0, &[1.0], &w).is_err());
    }
}
