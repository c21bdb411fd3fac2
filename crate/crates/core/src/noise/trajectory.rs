use rand::Rng;
use serde::Serialize;

use super::kick::{kick_rotation, KickParams};
use crate::ensemble::{run_ensemble, trajectory_rng, DEFAULT_BATCHES};
use crate::error::{invalid, Error, Result};
use crate::qdyn::{ComplexMatrix, DensityMatrix, Qubit, Register, SpinSystem};
use crate::scalar::{c, Real, C};

/// Where a decoherence series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesSource {
    MonteCarlo,
    ClosedForm,
}

/// Decoherence factor `f01` sampled after each kick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceSeries<T: Real> {
    pub times: Vec<T>,
    pub f_values: Vec<C<T>>,
    /// Monte Carlo standard error of each `f` (complex modulus); `None` for
    /// the closed form.
    pub stderr: Option<Vec<T>>,
    pub source: SeriesSource,
}

impl<T: Real> DecoherenceSeries<T> {
    pub fn len(&self) -> usize {
        self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.f_values.iter().map(|f| f.norm()).collect()
    }
}

/// System coherence `2·(Tr_e ρ)_{01}` of a joint operator.
#[inline]
pub(crate) fn system_coherence<T: Real>(m: &ComplexMatrix<T>) -> C<T> {
    (m[(0, 2)] + m[(1, 3)]) * T::lit(2.0)
}

/// One random realisation of `n_kicks` steps of free evolution over `δ`
/// followed by an instantaneous kick.
pub fn trajectory_propagate<T: Real, R: Rng + ?Sized>(
    rho0: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    params: &KickParams<T>,
    n_kicks: usize,
    rng: &mut R,
) -> Result<DensityMatrix<T>> {
    if rho0.register() != Register::Joint {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho0.matrix().size(),
        });
    }
    let phases = sys.free_phases(params.interval());
    let mut m = *rho0.matrix();
    for _ in 0..n_kicks {
        step(&mut m, &phases, params, rng);
    }
    Ok(DensityMatrix::from_trusted(m, Register::Joint))
}

#[inline]
fn step<T: Real, R: Rng + ?Sized>(m: &mut ComplexMatrix<T>, phases: &[C<T>; 4], params: &KickParams<T>, rng: &mut R) {
    m.conjugate_diagonal(phases);
    let (eps, phi) = params.sample_angles(rng);
    m.conjugate_local(Qubit::Environment, &kick_rotation(eps, phi));
}

/// Monte Carlo estimate of `f01(m)` for `m = 0..=n_kicks`, starting from
/// `(I + σx)/2 ⊗ ρ_e0`. Trajectory `k` uses the RNG stream `(seed, k)`.
pub fn monte_carlo_f<T: Real>(
    rho_e0: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    params: &KickParams<T>,
    n_kicks: usize,
    n_traj: usize,
) -> Result<DecoherenceSeries<T>> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "need at least one trajectory"));
    }
    if rho_e0.register() == Register::Joint {
        return Err(Error::DimensionMismatch { expected: 2, found: 4 });
    }
    let rho0 = DensityMatrix::product(&DensityMatrix::x_polarized(Register::System), rho_e0)?;
    let phases = sys.free_phases(params.interval());
    let n_points = n_kicks + 1;
    let stats = run_ensemble(n_traj, 2 * n_points, DEFAULT_BATCHES, |traj, out| {
        let mut rng = trajectory_rng(params.seed(), traj);
        let mut m = *rho0.matrix();
        let mut record = |k: usize, m: &ComplexMatrix<T>| {
            let f = system_coherence(m);
            out[2 * k] = f.re;
            out[2 * k + 1] = f.im;
        };
        record(0, &m);
        for k in 1..n_points {
            step(&mut m, &phases, params, &mut rng);
            record(k, &m);
        }
    });
    let delta = params.interval();
    Ok(DecoherenceSeries {
        times: (0..n_points).map(|k| T::lit(k as f64) * delta).collect(),
        f_values: (0..n_points)
            .map(|k| c(stats.mean[2 * k], stats.mean[2 * k + 1]))
            .collect(),
        stderr: Some(
            (0..n_points)
                .map(|k| stats.stderr[2 * k].hypot(stats.stderr[2 * k + 1]))
                .collect(),
        ),
        source: SeriesSource::MonteCarlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::PhaseMode;
    use crate::qdyn::{evolve, free_propagator, partial_trace};
    use std::f64::consts::PI;

    fn joint_start() -> DensityMatrix<f64> {
        DensityMatrix::product(
            &DensityMatrix::from_bloch(0.7, 0.2, 0.4, Register::System).unwrap(),
            &DensityMatrix::from_bloch(0.0, 0.0, 0.3, Register::Environment).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_kicks_is_identity() {
        let sys = SpinSystem::default();
        let params = KickParams::new(0.5, 25_000.0, PhaseMode::FixedY, 1).unwrap();
        let rho = joint_start();
        let out = trajectory_propagate(&rho, &sys, &params, 0, &mut trajectory_rng(1, 0)).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn vanishing_kicks_reduce_to_free_evolution() {
        let sys = SpinSystem::new(3.0, -7.0, 215.0).unwrap();
        let params = KickParams::new(1e-300, 25_000.0, PhaseMode::FixedY, 1).unwrap();
        let rho = joint_start();
        let n = 137;
        let out = trajectory_propagate(&rho, &sys, &params, n, &mut trajectory_rng(1, 0)).unwrap();
        let u = free_propagator(&sys, n as f64 * params.interval()).unwrap();
        assert!(out.matrix().approx_eq(evolve(&rho, &u).unwrap().matrix(), 1e-12));
    }

    #[test]
    fn system_populations_never_change() {
        let sys = SpinSystem::default();
        let rho = joint_start();
        let p0 = partial_trace(&rho, Qubit::System).unwrap();
        for mode in [PhaseMode::FixedY, PhaseMode::UniformPhase] {
            let params = KickParams::new(0.9, 10_000.0, mode, 5).unwrap();
            for traj in 0..100 {
                let out =
                    trajectory_propagate(&rho, &sys, &params, 50, &mut trajectory_rng(5, traj)).unwrap();
                let p = partial_trace(&out, Qubit::System).unwrap();
                assert!((p.get(0, 0) - p0.get(0, 0)).norm() < 1e-12);
                assert!((p.get(1, 1) - p0.get(1, 1)).norm() < 1e-12);
                assert!(out.defects().is_valid(&crate::Tolerances::DEFAULT));
            }
        }
    }

    #[test]
    fn monte_carlo_edge_cases() {
        let sys = SpinSystem::default();
        let env = DensityMatrix::maximally_mixed(Register::Environment);
        let params = KickParams::new(0.5, 25_000.0, PhaseMode::FixedY, 3).unwrap();
        let s = monte_carlo_f(&env, &sys, &params, 0, 10).unwrap();
        assert_eq!(s.f_values, vec![c(1.0, 0.0)]);
        assert!(monte_carlo_f(&env, &sys, &params, 5, 0).is_err());

        // Vanishing kicks: f(m) = cos(π J m δ).
        let tiny = KickParams::new(1e-300, 25_000.0, PhaseMode::FixedY, 3).unwrap();
        let s = monte_carlo_f(&env, &sys, &tiny, 300, 4).unwrap();
        for (m, f) in s.f_values.iter().enumerate() {
            let expect = (PI * 215.0 * m as f64 * 4e-5).cos();
            assert!((f.re - expect).abs() < 1e-12 && f.im.abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let sys = SpinSystem::default();
        let env = DensityMatrix::maximally_mixed(Register::Environment);
        let params = KickParams::new(0.3, 25_000.0, PhaseMode::UniformPhase, 99).unwrap();
        let a = monte_carlo_f(&env, &sys, &params, 40, 50).unwrap();
        let b = monte_carlo_f(&env, &sys, &params, 40, 50).unwrap();
        assert_eq!(a, b);
        let other = monte_carlo_f(&env, &sys, &params.with_seed(100), 40, 50).unwrap();
        assert_ne!(a.f_values, other.f_values);
    }
}
