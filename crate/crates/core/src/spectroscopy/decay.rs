use serde::Serialize;

use super::fit::{fit_log_linear, ExpFit, FitError, DEFAULT_FLOOR, DEFAULT_MIN_POINTS};
use crate::dd::{build_timeline, CompiledTimeline, DDParams, Timeline};
use crate::ensemble::{run_ensemble, trajectory_rng, EnsembleStats, DEFAULT_BATCHES};
use crate::error::{invalid, Result};
use crate::noise::KickParams;
use crate::qdyn::{DensityMatrix, Register, RelaxationParams, SpinSystem};
use crate::scalar::{c, Real, C};

/// Observations recorded per cycle boundary: `ρ_{00,10}`, `ρ_{01,11}`
/// (re, im) and `M_x`.
const STRIDE: usize = 5;

/// One decay experiment: sequence, noise and readout cadence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayConfig<T: Real> {
    pub sys: SpinSystem<T>,
    pub kicks: Option<KickParams<T>>,
    pub dd: Option<DDParams<T>>,
    pub relax: Option<RelaxationParams<T>>,
    /// Sampling interval; equals the DD cycle time when DD is present.
    pub cycle_time: T,
}

impl<T: Real> DecayConfig<T> {
    /// Free evolution sampled every `cycle_time`.
    pub fn new(sys: SpinSystem<T>, cycle_time: T) -> Result<Self> {
        if !(cycle_time > T::zero()) || !cycle_time.is_finite() {
            return Err(invalid("cycle_time", format!("must be positive, got {cycle_time}")));
        }
        Ok(Self {
            sys,
            kicks: None,
            dd: None,
            relax: None,
            cycle_time,
        })
    }

    pub fn with_dd(mut self, dd: DDParams<T>) -> Self {
        self.cycle_time = dd.cycle_time();
        self.dd = Some(dd);
        self
    }

    pub fn with_kicks(mut self, kicks: KickParams<T>) -> Self {
        self.kicks = Some(kicks);
        self
    }

    pub fn with_relaxation(mut self, relax: RelaxationParams<T>) -> Self {
        self.relax = Some(relax);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(k) = self.kicks.as_mut() {
            *k = k.with_seed(seed);
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.kicks.map(|k| k.seed()).unwrap_or(0)
    }

    pub fn timeline(&self, n_cycles: usize) -> Result<Timeline<T>> {
        if self.dd.is_none() && self.kicks.is_none() {
            return Ok(Timeline::free_evolution(self.cycle_time, n_cycles));
        }
        build_timeline(self.dd.as_ref(), self.kicks.as_ref(), self.cycle_time, n_cycles)
    }
}

/// Ensemble-averaged readouts at `m·t_c`, starting from `(I + σx)/2 ⊗ I/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve<T: Real> {
    pub times: Vec<T>,
    /// `Tr[ρ̄^s σx]`.
    pub m_x: Vec<T>,
    pub stderr: Vec<T>,
    /// Summed magnitude of the two J-split coherence lines,
    /// `2(|ρ̄_{00,10}| + |ρ̄_{01,11}|)`; insensitive to the coupling beat.
    pub doublet: Vec<T>,
    pub doublet_stderr: Vec<T>,
    pub n_traj: usize,
}

impl<T: Real> DecayCurve<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `time_s,m_x,stderr,doublet,doublet_stderr`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,m_x,stderr,doublet,doublet_stderr\n");
        for k in 0..self.len() {
            out.push_str(&super::csv_row(&[
                self.times[k],
                self.m_x[k],
                self.stderr[k],
                self.doublet[k],
                self.doublet_stderr[k],
            ]));
        }
        out
    }
}

fn lines_at<T: Real>(mean: &[T], k: usize) -> (C<T>, C<T>) {
    let b = STRIDE * k;
    (c(mean[b], mean[b + 1]), c(mean[b + 2], mean[b + 3]))
}

fn doublet_at<T: Real>(mean: &[T], k: usize) -> T {
    let (a, b) = lines_at(mean, k);
    T::lit(2.0) * (a.norm() + b.norm())
}

pub(crate) fn mx_series<T: Real>(mean: &[T]) -> Vec<T> {
    mean.chunks_exact(STRIDE).map(|ch| ch[4]).collect()
}

/// Runs the ensemble and keeps the batch statistics for resampling.
pub(crate) fn simulate_decay_stats<T: Real>(
    config: &DecayConfig<T>,
    n_cycles: usize,
    n_traj: usize,
) -> Result<(DecayCurve<T>, EnsembleStats<T>)> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "need at least one trajectory"));
    }
    let timeline = config.timeline(n_cycles)?;
    let compiled = CompiledTimeline::new(&config.sys, &timeline, config.relax.as_ref());
    let rho0 = DensityMatrix::product(
        &DensityMatrix::x_polarized(Register::System),
        &DensityMatrix::maximally_mixed(Register::Environment),
    )?;
    let seed = config.seed();
    let n_points = n_cycles + 1;
    let stats = run_ensemble(n_traj, STRIDE * n_points, DEFAULT_BATCHES, |traj, out| {
        let mut rng = trajectory_rng(seed, traj);
        compiled.run(rho0.matrix(), &mut rng, |k, m| {
            let (a, b) = (m[(0, 2)], m[(1, 3)]);
            let o = &mut out[STRIDE * k..STRIDE * (k + 1)];
            o[0] = a.re;
            o[1] = a.im;
            o[2] = b.re;
            o[3] = b.im;
            o[4] = T::lit(2.0) * (a.re + b.re);
        });
    });
    let doublet: Vec<T> = (0..n_points).map(|k| doublet_at(&stats.mean, k)).collect();
    let doublet_stderr = (0..n_points)
        .map(|k| {
            stats
                .jackknife_stderr(|m| Some(doublet_at(m, k)))
                .unwrap_or(T::zero())
        })
        .collect();
    let curve = DecayCurve {
        times: (0..n_points).map(|k| T::lit(k as f64) * config.cycle_time).collect(),
        m_x: mx_series(&stats.mean),
        stderr: stats.stderr.chunks_exact(STRIDE).map(|ch| ch[4]).collect(),
        doublet,
        doublet_stderr,
        n_traj,
    };
    Ok((curve, stats))
}

/// Monte Carlo decay of the transverse magnetisation sampled at every cycle
/// boundary `m·t_c`, `m = 0..=n_cycles`.
pub fn simulate_decay<T: Real>(config: &DecayConfig<T>, n_cycles: usize, n_traj: usize) -> Result<DecayCurve<T>> {
    simulate_decay_stats(config, n_cycles, n_traj).map(|(curve, _)| curve)
}

/// Exponential fit of `M_x` with the default window.
pub fn fit_exponential<T: Real>(curve: &DecayCurve<T>) -> std::result::Result<ExpFit<T>, FitError> {
    fit_log_linear(&curve.times, &curve.m_x, T::lit(DEFAULT_FLOOR), DEFAULT_MIN_POINTS)
}

/// Exponential fit of the doublet envelope with the default window.
pub fn fit_doublet<T: Real>(curve: &DecayCurve<T>) -> std::result::Result<ExpFit<T>, FitError> {
    fit_log_linear(&curve.times, &curve.doublet, T::lit(DEFAULT_FLOOR), DEFAULT_MIN_POINTS)
}

/// `S(ω) ≃ π² / (4 T2)`; infinite `T2` maps to zero.
pub fn spectral_density<T: Real>(t2: T) -> Result<T> {
    if !(t2 > T::zero()) {
        return Err(invalid("t2", format!("must be positive, got {t2}")));
    }
    Ok(T::PI() * T::PI() / (T::lit(4.0) * t2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::SequenceKind;
    use crate::noise::PhaseMode;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::on_resonance(215.0).unwrap()
    }

    #[test]
    fn ideal_cpmg_is_flat() {
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, 7, 3.2e-3).unwrap();
        let cfg = DecayConfig::new(sys(), 1.0).unwrap().with_dd(dd);
        let curve = simulate_decay(&cfg, 10, 4).unwrap();
        for (m, d) in curve.m_x.iter().zip(&curve.doublet) {
            assert!((m - 1.0).abs() < 1e-12);
            assert!((d - 1.0).abs() < 1e-12);
        }
        assert!(matches!(fit_exponential(&curve), Err(FitError::NonDecaying { .. })));
    }

    #[test]
    fn relaxation_under_cpmg_recovers_t2() {
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, 2, 2e-3).unwrap();
        let cfg = DecayConfig::new(sys(), 1.0)
            .unwrap()
            .with_dd(dd)
            .with_relaxation(RelaxationParams::pure_dephasing(0.05).unwrap());
        let curve = simulate_decay(&cfg, 40, 2).unwrap();
        let fit = fit_exponential(&curve).unwrap();
        assert!((fit.t2 - 0.05).abs() < 1e-9);
        assert!((spectral_density(fit.t2).unwrap() - std::f64::consts::PI.powi(2) / 0.2).abs() < 1e-6);
    }

    #[test]
    fn free_coupling_beats_but_doublet_does_not() {
        let cfg = DecayConfig::new(sys(), 1e-3).unwrap();
        let curve = simulate_decay(&cfg, 10, 1).unwrap();
        for (k, (m, d)) in curve.m_x.iter().zip(&curve.doublet).enumerate() {
            let t = k as f64 * 1e-3;
            assert!((m - (std::f64::consts::PI * 215.0 * t).cos()).abs() < 1e-12);
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kicks_speed_up_decay() {
        let kicks = KickParams::new(1f64.to_radians(), 25_000.0, PhaseMode::FixedY, 1).unwrap();
        let relax = RelaxationParams::pure_dephasing(0.3).unwrap();
        let base = DecayConfig::new(sys(), 22.4e-3).unwrap().with_relaxation(relax);
        let kicked = base.clone().with_kicks(kicks);
        let b = fit_doublet(&simulate_decay(&base, 30, 64).unwrap()).unwrap();
        let k = fit_doublet(&simulate_decay(&kicked, 30, 64).unwrap()).unwrap();
        assert!(k.t2 < b.t2, "{} vs {}", k.t2, b.t2);
    }

    #[test]
    fn spectral_density_values() {
        assert!((spectral_density(1.0f64).unwrap() - 2.4674011002723395).abs() < 1e-15);
        assert_eq!(spectral_density(f64::INFINITY).unwrap(), 0.0);
        assert!(spectral_density(0.0f64).is_err());
        assert!(spectral_density(-1.0f64).is_err());
    }
}
