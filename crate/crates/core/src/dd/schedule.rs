use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SequenceKind {
    Cpmg,
    Udd,
}

/// Centered equidistant placement `t_j = (2j - 1)·t_c / (2N)`, `j = 1..=N`.
pub fn cpmg_times<T: Real>(n_pulses: usize, t_c: T) -> Result<Vec<T>> {
    check(n_pulses, t_c)?;
    let two_n = T::lit(2.0 * n_pulses as f64);
    Ok((1..=n_pulses)
        .map(|j| T::lit((2 * j - 1) as f64) * t_c / two_n)
        .collect())
}

/// Uhrig placement `t_j = t_c · sin²(π j / (2(N + 1)))`, `j = 1..=N`.
///
/// The upper half is taken as `t_c - t_{N+1-j}` and an odd middle pulse
/// as `t_c / 2`, so the schedule is mirror symmetric to rounding and
/// `N = 1` is exactly the Hahn echo.
pub fn udd_times<T: Real>(n_pulses: usize, t_c: T) -> Result<Vec<T>> {
    check(n_pulses, t_c)?;
    let denom = T::lit(2.0 * (n_pulses + 1) as f64);
    let lower = |j: usize| {
        let s = (T::PI() * T::lit(j as f64) / denom).sin();
        t_c * s * s
    };
    Ok((1..=n_pulses)
        .map(|j| {
            let mirror = n_pulses + 1 - j;
            match (2 * j).cmp(&(n_pulses + 1)) {
                std::cmp::Ordering::Less => lower(j),
                std::cmp::Ordering::Equal => t_c * T::lit(0.5),
                std::cmp::Ordering::Greater => t_c - lower(mirror),
            }
        })
        .collect())
}

fn check<T: Real>(n_pulses: usize, t_c: T) -> Result<()> {
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "need at least one π pulse"));
    }
    if !(t_c > T::zero()) || !t_c.is_finite() {
        return Err(invalid("cycle_time", format!("must be positive, got {t_c}")));
    }
    Ok(())
}

/// A dynamical-decoupling π-pulse train on the system qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DDParams<T: Real> {
    kind: SequenceKind,
    n_pulses: usize,
    cycle_time: T,
    /// Rotation-axis phase in the xy plane; 0 is x.
    pulse_phase: T,
    /// Relative rotation-angle error: each pulse rotates by `π(1 + η)`.
    pulse_error: T,
}

impl<T: Real> DDParams<T> {
    pub fn new(kind: SequenceKind, n_pulses: usize, cycle_time: T) -> Result<Self> {
        check(n_pulses, cycle_time)?;
        Ok(Self {
            kind,
            n_pulses,
            cycle_time,
            pulse_phase: T::zero(),
            pulse_error: T::zero(),
        })
    }

    /// Cycle of `N` pulses with mean spacing `τ`, i.e. `t_c = N τ`.
    pub fn with_spacing(kind: SequenceKind, n_pulses: usize, tau: T) -> Result<Self> {
        Self::new(kind, n_pulses, tau * T::lit(n_pulses as f64))
    }

    pub fn with_phase(mut self, phase: T) -> Self {
        self.pulse_phase = phase;
        self
    }

    pub fn with_pulse_error(mut self, eta: T) -> Result<Self> {
        if !eta.is_finite() || eta <= -T::one() {
            return Err(invalid("pulse_error", format!("must be finite and > -1, got {eta}")));
        }
        self.pulse_error = eta;
        Ok(self)
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn cycle_time(&self) -> T {
        self.cycle_time
    }

    /// Mean inter-pulse spacing `τ = t_c / N`.
    pub fn spacing(&self) -> T {
        self.cycle_time / T::lit(self.n_pulses as f64)
    }

    pub fn pulse_phase(&self) -> T {
        self.pulse_phase
    }

    pub fn pulse_error(&self) -> T {
        self.pulse_error
    }

    pub fn pulse_angle(&self) -> T {
        T::PI() * (T::one() + self.pulse_error)
    }

    pub fn pulse_times(&self) -> Vec<T> {
        match self.kind {
            SequenceKind::Cpmg => cpmg_times(self.n_pulses, self.cycle_time),
            SequenceKind::Udd => udd_times(self.n_pulses, self.cycle_time),
        }
        .expect("validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpmg_examples() {
        assert_eq!(cpmg_times(1, 1.0f64).unwrap(), vec![0.5]);
        assert_eq!(cpmg_times(2, 1.0f64).unwrap(), vec![0.25, 0.75]);
        let t = cpmg_times(7, 22.4e-3f64).unwrap();
        for w in t.windows(2) {
            assert!((w[1] - w[0] - 3.2e-3).abs() < 1e-15);
        }
        assert!((t[0] - 1.6e-3).abs() < 1e-16);
        assert!(cpmg_times(0, 1.0f64).is_err());
    }

    #[test]
    fn udd_examples() {
        assert_eq!(udd_times(1, 1.0f64).unwrap(), cpmg_times(1, 1.0f64).unwrap());
        let t = udd_times(7, 28e-3f64).unwrap();
        let t1 = 28e-3 * (std::f64::consts::PI / 16.0).sin().powi(2);
        assert!((t[0] - t1).abs() < 1e-17);
        assert!((t[0] * 1e3 - 1.0657).abs() < 1e-4);
        for j in 0..7 {
            assert!((t[j] + t[6 - j] - 28e-3).abs() < 1e-15);
        }
        assert!(udd_times::<f64>(0, 1.0).is_err());
        assert!(udd_times(3, -1.0f64).is_err());
    }

    #[test]
    fn spacing_convention() {
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, 7, 3.2e-3f64).unwrap();
        assert!((dd.cycle_time() - 22.4e-3).abs() < 1e-15);
        assert!((dd.spacing() - 3.2e-3).abs() < 1e-15);
        assert!(dd.with_pulse_error(-1.0).is_err());
    }
}
