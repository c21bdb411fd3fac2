use rayon::prelude::*;
use serde::Serialize;

use super::decay::{mx_series, simulate_decay_stats, spectral_density, DecayConfig};
use super::fit::{fit_log_linear, ExpFit, FitError, DEFAULT_FLOOR, DEFAULT_MIN_POINTS};
use crate::dd::{averaged_coherence, build_timeline, DDParams, SequenceKind};
use crate::ensemble::derive_seed;
use crate::error::{invalid, Error, Result};
use crate::noise::{KickParams, PhaseMode};
use crate::qdyn::{DensityMatrix, Register, RelaxationParams, SpinSystem};
use crate::scalar::Real;

/// Pulse count below which the delta-filter reading of `S(π/τ)` is suspect.
pub const MIN_PULSES_FOR_FILTER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Provenance {
    Total,
    KicksOnly,
    Baseline,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Self::Total => "total",
            Self::KicksOnly => "kicks_only",
            Self::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint<T: Real> {
    /// `ω = π/τ` in rad/s.
    pub omega: T,
    pub tau: T,
    /// `S(ω)` in 1/s.
    pub s_value: T,
    /// Jackknife standard error; zero for noiseless models.
    pub stderr: T,
    pub fit: Option<ExpFit<T>>,
}

/// A τ point with no usable `T2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralGap<T: Real> {
    pub omega: T,
    pub tau: T,
    pub error: FitError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProfile<T: Real> {
    pub provenance: Provenance,
    /// Sorted by strictly increasing `ω`.
    pub points: Vec<SpectralPoint<T>>,
    pub gaps: Vec<SpectralGap<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> SpectralProfile<T> {
    pub fn omegas(&self) -> Vec<T> {
        self.points.iter().map(|p| p.omega).collect()
    }

    pub fn values(&self) -> Vec<T> {
        self.points.iter().map(|p| p.s_value).collect()
    }

    pub fn point_at(&self, omega: T) -> Option<&SpectralPoint<T>> {
        self.points.iter().find(|p| p.omega == omega)
    }

    /// `omega_rad_s,S_per_s,stderr`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_rad_s,S_per_s,stderr\n");
        for p in &self.points {
            out.push_str(&super::csv_row(&[p.omega, p.s_value, p.stderr]));
        }
        out
    }
}

/// Settings shared by every τ point of a sweep. Each point runs CPMG with
/// spacing `τ` and `pulses_per_cycle` pulses, sampled once per cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig<T: Real> {
    pub sys: SpinSystem<T>,
    pub kicks: Option<KickParams<T>>,
    pub relax: Option<RelaxationParams<T>>,
    pub pulses_per_cycle: usize,
    pub master_seed: u64,
}

impl<T: Real> SweepConfig<T> {
    pub fn new(sys: SpinSystem<T>) -> Self {
        Self {
            sys,
            kicks: None,
            relax: None,
            pulses_per_cycle: 1,
            master_seed: 0,
        }
    }

    pub fn with_kicks(mut self, kicks: KickParams<T>) -> Self {
        self.kicks = Some(kicks);
        self
    }

    pub fn with_relaxation(mut self, relax: RelaxationParams<T>) -> Self {
        self.relax = Some(relax);
        self
    }

    pub fn with_pulses_per_cycle(mut self, n: usize) -> Self {
        self.pulses_per_cycle = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// Same sweep without kicks.
    pub fn baseline(&self) -> Self {
        Self {
            kicks: None,
            ..self.clone()
        }
    }

    fn provenance(&self) -> Provenance {
        if self.kicks.is_some() {
            Provenance::Total
        } else {
            Provenance::Baseline
        }
    }

    fn decay_config(&self, tau: T, index: usize) -> Result<DecayConfig<T>> {
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, self.pulses_per_cycle, tau)?;
        let mut cfg = DecayConfig::new(self.sys, dd.cycle_time())?.with_dd(dd);
        if let Some(k) = self.kicks {
            cfg = cfg.with_kicks(k.with_seed(derive_seed(self.master_seed, index as u64)));
        }
        if let Some(r) = self.relax {
            cfg = cfg.with_relaxation(r);
        }
        Ok(cfg)
    }
}

fn check_grid<T: Real>(tau_grid: &[T]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(invalid("tau_grid", "empty grid"));
    }
    if tau_grid.iter().any(|t| !(*t > T::zero()) || !t.is_finite()) {
        return Err(invalid("tau_grid", "spacings must be positive and finite"));
    }
    let mut sorted: Vec<f64> = tau_grid.iter().map(|t| t.as_f64()).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("tau_grid", "spacings must be distinct"));
    }
    Ok(())
}

fn filter_warning(n_cycles: usize, pulses_per_cycle: usize) -> Option<String> {
    let total = n_cycles * pulses_per_cycle;
    (total < MIN_PULSES_FOR_FILTER).then(|| {
        format!(
            "only {total} π pulses per decay run; the delta-filter approximation assumes at least {MIN_PULSES_FOR_FILTER}"
        )
    })
}

fn fit_mx<T: Real>(times: &[T], mx: &[T]) -> std::result::Result<ExpFit<T>, FitError> {
    fit_log_linear(times, mx, T::lit(DEFAULT_FLOOR), DEFAULT_MIN_POINTS)
}

fn assemble<T: Real>(
    provenance: Provenance,
    tau_grid: &[T],
    results: Vec<std::result::Result<(ExpFit<T>, T, T), FitError>>,
    warnings: Vec<String>,
) -> Result<SpectralProfile<T>> {
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for (&tau, r) in tau_grid.iter().zip(results) {
        let omega = T::PI() / tau;
        match r {
            Ok((fit, s_value, stderr)) => points.push(SpectralPoint {
                omega,
                tau,
                s_value,
                stderr,
                fit: Some(fit),
            }),
            Err(error) => gaps.push(SpectralGap { omega, tau, error }),
        }
    }
    if points.is_empty() {
        return Err(Error::AllPointsFailed { n: tau_grid.len() });
    }
    points.sort_by(|a, b| a.omega.partial_cmp(&b.omega).expect("finite"));
    gaps.sort_by(|a, b| a.omega.partial_cmp(&b.omega).expect("finite"));
    Ok(SpectralProfile {
        provenance,
        points,
        gaps,
        warnings,
    })
}

/// Monte Carlo noise spectroscopy: one CPMG decay per τ, fitted for `T2`
/// and converted to `S(π/τ)`. Point `i` draws kicks from a seed derived
/// from the master seed and `i`.
pub fn sweep_spectrum<T: Real>(
    config: &SweepConfig<T>,
    tau_grid: &[T],
    n_cycles: usize,
    n_traj: usize,
) -> Result<SpectralProfile<T>> {
    check_grid(tau_grid)?;
    let configs = tau_grid
        .iter()
        .enumerate()
        .map(|(i, &tau)| config.decay_config(tau, i))
        .collect::<Result<Vec<_>>>()?;
    let runs = configs
        .par_iter()
        .map(|cfg| simulate_decay_stats(cfg, n_cycles, n_traj))
        .collect::<Result<Vec<_>>>()?;
    let results = runs
        .into_iter()
        .map(|(curve, stats)| {
            let fit = fit_mx(&curve.times, &curve.m_x)?;
            let s = spectral_density(fit.t2).map_err(|_| FitError::NonFinite)?;
            let stderr = stats
                .jackknife_stderr(|mean| {
                    let f = fit_mx(&curve.times, &mx_series(mean)).ok()?;
                    spectral_density(f.t2).ok()
                })
                .unwrap_or(T::zero());
            Ok((fit, s, stderr))
        })
        .collect();
    let warnings = filter_warning(n_cycles, config.pulses_per_cycle).into_iter().collect();
    assemble(config.provenance(), tau_grid, results, warnings)
}

/// Kick-induced part `total − baseline`, clamped at zero, with errors
/// added in quadrature. A baseline point that does not decay counts as
/// `S = 0`; other baseline gaps leave a gap.
pub fn kicks_only_profile<T: Real>(
    total: &SpectralProfile<T>,
    baseline: &SpectralProfile<T>,
) -> SpectralProfile<T> {
    let mut points = Vec::new();
    let mut gaps = total.gaps.clone();
    for p in &total.points {
        let base = baseline
            .point_at(p.omega)
            .map(|b| Ok((b.s_value, b.stderr)))
            .or_else(|| {
                baseline.gaps.iter().find(|g| g.omega == p.omega).map(|g| match g.error {
                    FitError::NonDecaying { .. } => Ok((T::zero(), T::zero())),
                    ref e => Err(e.clone()),
                })
            });
        match base {
            Some(Ok((s, se))) => points.push(SpectralPoint {
                s_value: (p.s_value - s).max(T::zero()),
                stderr: p.stderr.hypot(se),
                ..*p
            }),
            Some(Err(error)) => gaps.push(SpectralGap {
                omega: p.omega,
                tau: p.tau,
                error,
            }),
            None => gaps.push(SpectralGap {
                omega: p.omega,
                tau: p.tau,
                error: FitError::InsufficientPoints {
                    available: 0,
                    required: DEFAULT_MIN_POINTS,
                },
            }),
        }
    }
    gaps.sort_by(|a, b| a.omega.partial_cmp(&b.omega).expect("finite"));
    let mut warnings = total.warnings.clone();
    warnings.extend(baseline.warnings.iter().cloned());
    warnings.dedup();
    SpectralProfile {
        provenance: Provenance::KicksOnly,
        points,
        gaps,
        warnings,
    }
}

/// The sweep with the Monte Carlo replaced by the exact kick average
/// (fixed-axis kicks, environment at `I/2`, no relaxation).
pub fn averaged_spectrum<T: Real>(
    sys: &SpinSystem<T>,
    theta: T,
    gamma_rate: T,
    tau_grid: &[T],
    n_cycles: usize,
    pulses_per_cycle: usize,
) -> Result<SpectralProfile<T>> {
    check_grid(tau_grid)?;
    let kicks = KickParams::new(theta, gamma_rate, PhaseMode::FixedY, 0)?;
    let rho_e = DensityMatrix::maximally_mixed(Register::Environment);
    let results = tau_grid
        .par_iter()
        .map(|&tau| {
            let dd = DDParams::with_spacing(SequenceKind::Cpmg, pulses_per_cycle, tau)?;
            let tl = build_timeline(Some(&dd), Some(&kicks), dd.cycle_time(), n_cycles)?;
            let avg = averaged_coherence(&rho_e, sys, &tl)?;
            Ok(fit_mx(&avg.times, &avg.mx()).and_then(|fit| {
                let s = spectral_density(fit.t2).map_err(|_| FitError::NonFinite)?;
                Ok((fit, s, T::zero()))
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = filter_warning(n_cycles, pulses_per_cycle).into_iter().collect();
    assemble(Provenance::Total, tau_grid, results, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::on_resonance(215.0).unwrap()
    }

    #[test]
    fn relaxation_only_is_flat() {
        let cfg = SweepConfig::new(sys()).with_relaxation(RelaxationParams::pure_dephasing(0.1).unwrap());
        let grid = [1e-3, 2e-3, 4e-3, 8e-3];
        let p = sweep_spectrum(&cfg, &grid, 100, 2).unwrap();
        assert_eq!(p.provenance, Provenance::Baseline);
        let flat = std::f64::consts::PI.powi(2) / 0.4;
        for pt in &p.points {
            assert!((pt.s_value / flat - 1.0).abs() < 1e-8);
        }
        for w in p.points.windows(2) {
            assert!(w[0].omega < w[1].omega);
        }
    }

    #[test]
    fn grid_validation() {
        let cfg = SweepConfig::<f64>::new(sys());
        assert!(sweep_spectrum(&cfg, &[], 10, 1).is_err());
        assert!(sweep_spectrum(&cfg, &[1e-3, 1e-3], 10, 1).is_err());
        assert!(sweep_spectrum(&cfg, &[-1e-3], 10, 1).is_err());
        assert_eq!(
            sweep_spectrum(&cfg, &[1e-3, 2e-3], 60, 1),
            Err(Error::AllPointsFailed { n: 2 })
        );
    }

    #[test]
    fn vanishing_kicks_never_decay() {
        let p = averaged_spectrum(&sys(), 1e-9, 25_000.0, &[1e-3, 4e-3], 200, 1);
        assert_eq!(p, Err(Error::AllPointsFailed { n: 2 }));
    }

    #[test]
    fn model_grows_with_theta() {
        let grid = [1e-3, 2e-3, 3e-3, 4e-3, 6e-3];
        let one = averaged_spectrum(&sys(), 1f64.to_radians(), 25_000.0, &grid, 400, 1).unwrap();
        let two = averaged_spectrum(&sys(), 2f64.to_radians(), 25_000.0, &grid, 400, 1).unwrap();
        assert_eq!(one.points.len(), 5);
        for (a, b) in one.points.iter().zip(&two.points) {
            assert!(b.s_value > a.s_value);
        }
    }

    #[test]
    fn subtraction_clamps_and_treats_flat_baseline_as_zero() {
        let mk = |s: f64, omega: f64| SpectralPoint {
            omega,
            tau: std::f64::consts::PI / omega,
            s_value: s,
            stderr: 0.1,
            fit: None,
        };
        let total = SpectralProfile {
            provenance: Provenance::Total,
            points: vec![mk(3.0, 100.0), mk(1.0, 200.0), mk(2.0, 300.0)],
            gaps: vec![],
            warnings: vec![],
        };
        let baseline = SpectralProfile {
            provenance: Provenance::Baseline,
            points: vec![mk(1.0, 100.0), mk(1.5, 200.0)],
            gaps: vec![SpectralGap {
                omega: 300.0,
                tau: 0.0,
                error: FitError::NonDecaying { slope: 0.0, span: 1.0 },
            }],
            warnings: vec![],
        };
        let k = kicks_only_profile(&total, &baseline);
        assert_eq!(k.values(), vec![2.0, 0.0, 2.0]);
        assert!((k.points[0].stderr - 0.1f64.hypot(0.1)).abs() < 1e-15);
    }
}
