use rand::Rng;

use super::timeline::{Pulse, Timeline};
use crate::error::{Error, Result};
use crate::noise::{kick_rotation, KickParams};
use crate::qdyn::{relax_joint, ComplexMatrix, DensityMatrix, Qubit, Register, RelaxationParams, SpinSystem};
use crate::scalar::{Real, C};

/// `exp(-i (angle/2)(cos φ σx + sin φ σy))`.
pub fn pulse_rotation<T: Real>(angle: T, axis_phase: T) -> ComplexMatrix<T> {
    kick_rotation(angle * T::lit(0.5), axis_phase)
}

#[derive(Debug, Clone)]
enum Step<T: Real> {
    Free { phases: [C<T>; 4], dt: T },
    Rotate { target: Qubit, r: ComplexMatrix<T> },
    Kick,
}

/// A timeline lowered to a fixed step list with precomputed propagators.
#[derive(Debug, Clone)]
pub(crate) struct CompiledTimeline<T: Real> {
    steps: Vec<Step<T>>,
    kicks: Option<KickParams<T>>,
    relax: Option<RelaxationParams<T>>,
    n_cycles: usize,
}

impl<T: Real> CompiledTimeline<T> {
    pub(crate) fn new(sys: &SpinSystem<T>, timeline: &Timeline<T>, relax: Option<&RelaxationParams<T>>) -> Self {
        let mut steps = Vec::with_capacity(2 * timeline.events().len() + 1);
        let free = |steps: &mut Vec<Step<T>>, dt: T| {
            if dt > T::zero() {
                steps.push(Step::Free {
                    phases: sys.free_phases(dt),
                    dt,
                });
            }
        };
        let mut clock = T::zero();
        for e in timeline.events() {
            free(&mut steps, e.time - clock);
            clock = e.time;
            steps.push(match e.pulse {
                Pulse::Rotation { axis_phase, angle } => Step::Rotate {
                    target: e.target,
                    r: pulse_rotation(angle, axis_phase),
                },
                Pulse::Kick => Step::Kick,
            });
        }
        free(&mut steps, timeline.cycle_time() - clock);
        Self {
            steps,
            kicks: timeline.kicks().copied(),
            relax: relax.copied(),
            n_cycles: timeline.n_cycles(),
        }
    }

    pub(crate) fn run_cycle<R: Rng + ?Sized>(&self, m: &mut ComplexMatrix<T>, rng: &mut R) {
        for step in &self.steps {
            match step {
                Step::Free { phases, dt } => {
                    m.conjugate_diagonal(phases);
                    if let Some(p) = &self.relax {
                        *m = relax_joint(m, p, *dt);
                    }
                }
                Step::Rotate { target, r } => m.conjugate_local(*target, r),
                Step::Kick => {
                    let k = self.kicks.as_ref().expect("kick events imply kick params");
                    let (eps, phi) = k.sample_angles(rng);
                    m.conjugate_local(Qubit::Environment, &kick_rotation(eps, phi));
                }
            }
        }
    }

    pub(crate) fn is_unitary(&self) -> bool {
        self.relax.is_none()
    }

    /// Propagator of one realisation over all cycles; only valid without
    /// relaxation.
    pub(crate) fn unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix<T> {
        debug_assert!(self.is_unitary());
        let mut u = ComplexMatrix::identity(crate::qdyn::Dim::Four);
        for _ in 0..self.n_cycles {
            for step in &self.steps {
                match step {
                    Step::Free { phases, .. } => u.left_mul_diagonal(phases),
                    Step::Rotate { target, r } => u.left_mul_local(*target, r),
                    Step::Kick => {
                        let k = self.kicks.as_ref().expect("kick events imply kick params");
                        let (eps, phi) = k.sample_angles(rng);
                        u.left_mul_local(Qubit::Environment, &kick_rotation(eps, phi));
                    }
                }
            }
        }
        u
    }

    /// Runs all cycles, calling `on_boundary(m, state)` at `m = 0..=n_cycles`.
    pub(crate) fn run<R: Rng + ?Sized>(
        &self,
        m0: &ComplexMatrix<T>,
        rng: &mut R,
        mut on_boundary: impl FnMut(usize, &ComplexMatrix<T>),
    ) -> ComplexMatrix<T> {
        let mut m = *m0;
        on_boundary(0, &m);
        for cycle in 1..=self.n_cycles {
            self.run_cycle(&mut m, rng);
            on_boundary(cycle, &m);
        }
        m
    }
}

/// Evolves one random realisation of the joint state through the timeline,
/// returning the state at every cycle boundary `m·t_c`, `m = 0..=n_cycles`.
/// Coincident events act on different qubits and run system first.
pub fn simulate_timeline<T: Real, R: Rng + ?Sized>(
    rho0: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    timeline: &Timeline<T>,
    relax: Option<&RelaxationParams<T>>,
    rng: &mut R,
) -> Result<Vec<DensityMatrix<T>>> {
    if rho0.register() != Register::Joint {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho0.matrix().size(),
        });
    }
    let compiled = CompiledTimeline::new(sys, timeline, relax);
    let mut out = Vec::with_capacity(timeline.n_cycles() + 1);
    compiled.run(rho0.matrix(), rng, |_, m| {
        out.push(DensityMatrix::from_trusted(*m, Register::Joint))
    });
    Ok(out)
}

/// Transverse magnetisation `Tr[ρ^s σx]` of a joint state.
pub fn system_mx<T: Real>(rho: &DensityMatrix<T>) -> T {
    let m = rho.matrix();
    if m.size() == 4 {
        crate::noise::system_coherence(m).re
    } else {
        (m[(0, 1)] + m[(1, 0)]).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::{build_timeline, DDParams, SequenceKind};
    use crate::ensemble::trajectory_rng;
    use crate::noise::PhaseMode;
    use crate::qdyn::{evolve, free_propagator, pauli, tensor, Dim, Pauli};

    fn x_state() -> DensityMatrix<f64> {
        DensityMatrix::product(
            &DensityMatrix::x_polarized(Register::System),
            &DensityMatrix::maximally_mixed(Register::Environment),
        )
        .unwrap()
    }

    #[test]
    fn full_pi_rotation_is_minus_i_x() {
        let r = pulse_rotation(std::f64::consts::PI, 0.0);
        let x = pauli::<f64>(Pauli::X).scale(C::new(0.0, -1.0));
        assert!(r.approx_eq(&x, 1e-15));
    }

    #[test]
    fn cpmg_refocuses_coupling() {
        let sys = SpinSystem::new(0.0, 0.0, 137.0).unwrap();
        for n in [1, 2, 7] {
            let dd = DDParams::with_spacing(SequenceKind::Cpmg, n, 3.3e-3).unwrap();
            let tl = build_timeline(Some(&dd), None, dd.cycle_time(), 5).unwrap();
            let states = simulate_timeline(&x_state(), &sys, &tl, None, &mut trajectory_rng(0, 0)).unwrap();
            for s in &states {
                assert!((system_mx(s) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pulse_free_timeline_is_free_evolution() {
        let sys = SpinSystem::new(3.0, -7.0, 215.0).unwrap();
        let k = KickParams::new(0.5, 10.0, PhaseMode::FixedY, 0).unwrap();
        let tl = build_timeline(None, Some(&k), 0.02, 1).unwrap();
        let states = simulate_timeline(&x_state(), &sys, &tl, None, &mut trajectory_rng(0, 0)).unwrap();
        let expected = evolve(&x_state(), &free_propagator(&sys, 0.02).unwrap()).unwrap();
        assert!(states[1].matrix().approx_eq(expected.matrix(), 1e-14));
    }

    #[test]
    fn matches_kronecker_evolution() {
        let sys = SpinSystem::new(11.0, 5.0, 215.0).unwrap();
        let dd = DDParams::new(SequenceKind::Udd, 3, 0.01)
            .unwrap()
            .with_phase(0.3)
            .with_pulse_error(0.05)
            .unwrap();
        let kicks = KickParams::new(0.2, 1000.0, PhaseMode::UniformPhase, 9).unwrap();
        let tl = build_timeline(Some(&dd), Some(&kicks), 0.01, 2).unwrap();
        let got = simulate_timeline(&x_state(), &sys, &tl, None, &mut trajectory_rng(9, 3)).unwrap();

        let mut rng = trajectory_rng(9, 3);
        let id = ComplexMatrix::identity(Dim::Two);
        let mut rho = x_state();
        for _ in 0..2 {
            let mut clock = 0.0;
            for e in tl.events() {
                rho = evolve(&rho, &free_propagator(&sys, e.time - clock).unwrap()).unwrap();
                clock = e.time;
                let u = match e.pulse {
                    Pulse::Rotation { axis_phase, angle } => tensor(&pulse_rotation(angle, axis_phase), &id).unwrap(),
                    Pulse::Kick => {
                        let (eps, phi) = kicks.sample_angles(&mut rng);
                        tensor(&id, &kick_rotation(eps, phi)).unwrap()
                    }
                };
                rho = evolve(&rho, &u).unwrap();
            }
            rho = evolve(&rho, &free_propagator(&sys, 0.01 - clock).unwrap()).unwrap();
        }
        assert!(got[2].matrix().approx_eq(rho.matrix(), 1e-12));

        let compiled = CompiledTimeline::new(&sys, &tl, None);
        let u = compiled.unitary(&mut trajectory_rng(9, 3));
        assert!(u.unitarity_defect() < 1e-12);
        assert!(evolve(&x_state(), &u).unwrap().matrix().approx_eq(rho.matrix(), 1e-12));
    }

    #[test]
    fn relaxation_under_cpmg_is_pure_exponential() {
        let sys = SpinSystem::on_resonance(215.0).unwrap();
        let relax = RelaxationParams::pure_dephasing(0.1).unwrap();
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, 4, 2e-3).unwrap();
        let tl = build_timeline(Some(&dd), None, dd.cycle_time(), 10).unwrap();
        let states = simulate_timeline(&x_state(), &sys, &tl, Some(&relax), &mut trajectory_rng(0, 0)).unwrap();
        for (m, s) in states.iter().enumerate() {
            let t = m as f64 * 8e-3;
            assert!((system_mx(s) - (-t / 0.1f64).exp()).abs() < 1e-12);
        }
    }
}
