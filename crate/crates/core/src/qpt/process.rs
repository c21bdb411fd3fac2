use serde::Serialize;

use crate::dd::{build_timeline, pulse_rotation, CompiledTimeline, DDParams, Timeline};
use crate::ensemble::{run_ensemble, trajectory_rng, EnsembleStats, DEFAULT_BATCHES};
use crate::error::{invalid, Result};
use crate::noise::KickParams;
use crate::qdyn::{
    pauli, trace_out_environment, ComplexMatrix, DensityMatrix, Pauli, Qubit, Register, RelaxationParams, SpinSystem,
};
use crate::scalar::{c, cr, Real};

/// A channel produced by running a pulse/kick timeline with the
/// environment at `I/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedProcess<T: Real> {
    pub sys: SpinSystem<T>,
    pub kicks: Option<KickParams<T>>,
    pub dd: Option<DDParams<T>>,
    pub relax: Option<RelaxationParams<T>>,
    /// Total channel duration; one DD cycle when DD is present.
    pub duration: T,
    pub n_traj: usize,
}

impl<T: Real> SimulatedProcess<T> {
    pub fn new(sys: SpinSystem<T>, duration: T, n_traj: usize) -> Result<Self> {
        if !(duration > T::zero()) || !duration.is_finite() {
            return Err(invalid("duration", format!("must be positive, got {duration}")));
        }
        if n_traj == 0 {
            return Err(invalid("n_traj", "need at least one trajectory"));
        }
        Ok(Self {
            sys,
            kicks: None,
            dd: None,
            relax: None,
            duration,
            n_traj,
        })
    }

    /// Reference process: one Hahn echo over the duration, no kicks.
    pub fn noop(sys: SpinSystem<T>, duration: T) -> Result<Self> {
        let dd = DDParams::new(crate::dd::SequenceKind::Cpmg, 1, duration)?;
        Ok(Self::new(sys, duration, 1)?.with_dd(dd))
    }

    pub fn with_kicks(mut self, kicks: KickParams<T>) -> Self {
        self.kicks = Some(kicks);
        self
    }

    pub fn with_dd(mut self, dd: DDParams<T>) -> Self {
        self.dd = Some(dd);
        self
    }

    pub fn with_relaxation(mut self, relax: RelaxationParams<T>) -> Self {
        self.relax = Some(relax);
        self
    }

    pub fn timeline(&self) -> Result<Timeline<T>> {
        if self.dd.is_none() && self.kicks.is_none() {
            return Ok(Timeline::free_evolution(self.duration, 1));
        }
        build_timeline(self.dd.as_ref(), self.kicks.as_ref(), self.duration, 1)
    }

    /// Ideal π pulse appended when the sequence holds an odd number of
    /// pulses, so that ideal decoupling realises the identity.
    fn frame_correction(&self) -> Option<ComplexMatrix<T>> {
        self.dd
            .filter(|dd| dd.n_pulses() % 2 == 1)
            .map(|dd| pulse_rotation(T::PI(), dd.pulse_phase()))
    }

    /// Averaged reduced outputs for all `inputs`, every input seeing the
    /// same kick draws in trajectory `k`. Values per trajectory: for each
    /// input, the 2×2 output as `(re, im)` pairs in row-major order.
    pub(crate) fn run(&self, inputs: &[ComplexMatrix<T>]) -> Result<EnsembleStats<T>> {
        let timeline = self.timeline()?;
        let compiled = CompiledTimeline::new(&self.sys, &timeline, self.relax.as_ref());
        let correction = self.frame_correction();
        let env = DensityMatrix::maximally_mixed(Register::Environment);
        let joint = inputs
            .iter()
            .map(|m| DensityMatrix::product(&DensityMatrix::from_trusted(*m, Register::System), &env).map(|s| *s.matrix()))
            .collect::<Result<Vec<_>>>()?;
        let seed = self.kicks.map(|k| k.seed()).unwrap_or(0);
        let n_traj = if self.kicks.is_some() { self.n_traj } else { 1 };
        let unitary = compiled.is_unitary();
        Ok(run_ensemble(n_traj, 8 * inputs.len(), DEFAULT_BATCHES, |traj, out| {
            let u = unitary.then(|| compiled.unitary(&mut trajectory_rng(seed, traj)));
            for (i, m0) in joint.iter().enumerate() {
                let mut m = match &u {
                    Some(u) => m0.conjugate_by(u),
                    None => compiled.run(m0, &mut trajectory_rng(seed, traj), |_, _| {}),
                };
                if let Some(r) = &correction {
                    m.conjugate_local(Qubit::System, r);
                }
                let red = trace_out_environment(&m);
                for (slot, z) in out[8 * i..8 * (i + 1)].chunks_exact_mut(2).zip(red.as_slice()) {
                    slot[0] = z.re;
                    slot[1] = z.im;
                }
            }
        }))
    }
}

/// Closed-form single-qubit channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AnalyticChannel<T: Real> {
    Identity,
    /// `ρ → XρX`.
    Not,
    /// Coherences multiplied by `f`.
    PhaseDamping { f: T },
    /// `ρ → (1 - p)ρ + p XρX`.
    BitFlip { p: T },
    /// `ρ → (1 - p)ρ + p I/2`.
    Depolarizing { p: T },
}

impl<T: Real> AnalyticChannel<T> {
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let x = pauli::<T>(Pauli::X);
        match *self {
            Self::Identity => *rho,
            Self::Not => x * *rho * x,
            Self::PhaseDamping { f } => {
                let mut out = *rho;
                out[(0, 1)] = out[(0, 1)] * f;
                out[(1, 0)] = out[(1, 0)] * f;
                out
            }
            Self::BitFlip { p } => rho.scale(cr(T::one() - p)) + (x * *rho * x).scale(cr(p)),
            Self::Depolarizing { p } => {
                let mixed = ComplexMatrix::identity(rho.dim()).scale(rho.trace() * T::lit(0.5));
                rho.scale(cr(T::one() - p)) + mixed.scale(c(p, T::zero()))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(invalid(name, format!("must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            Self::Identity | Self::Not => Ok(()),
            Self::PhaseDamping { f } => unit("f", f),
            Self::BitFlip { p } | Self::Depolarizing { p } => unit("p", p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Channel<T: Real> {
    Analytic(AnalyticChannel<T>),
    Simulated(SimulatedProcess<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessSpec<T: Real> {
    pub label: String,
    pub channel: Channel<T>,
}

impl<T: Real> ProcessSpec<T> {
    pub fn analytic(label: impl Into<String>, channel: AnalyticChannel<T>) -> Result<Self> {
        channel.validate()?;
        Ok(Self {
            label: label.into(),
            channel: Channel::Analytic(channel),
        })
    }

    pub fn simulated(label: impl Into<String>, process: SimulatedProcess<T>) -> Result<Self> {
        process.timeline()?;
        Ok(Self {
            label: label.into(),
            channel: Channel::Simulated(process),
        })
    }
}

/// Output state of the process for one input.
pub fn apply_process<T: Real>(spec: &ProcessSpec<T>, rho_in: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    if rho_in.register() == Register::Joint {
        return Err(crate::error::Error::DimensionMismatch { expected: 2, found: 4 });
    }
    let m = match &spec.channel {
        Channel::Analytic(ch) => ch.apply(rho_in.matrix()),
        Channel::Simulated(p) => unpack(&p.run(&[*rho_in.matrix()])?.mean, 0),
    };
    Ok(DensityMatrix::from_trusted(m, Register::System))
}

/// Output `i` of a packed ensemble mean.
pub(crate) fn unpack<T: Real>(values: &[T], i: usize) -> ComplexMatrix<T> {
    let v = &values[8 * i..8 * (i + 1)];
    ComplexMatrix::from_row_major(&[c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7])]).expect("2x2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::SequenceKind;
    use crate::noise::{closed_form_f, PhaseMode};
    use crate::qpt::input_states;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::on_resonance(215.0).unwrap()
    }

    #[test]
    fn noop_is_identity() {
        let spec = ProcessSpec::simulated("NOOP", SimulatedProcess::noop(sys(), 28e-3).unwrap()).unwrap();
        for s in input_states::<f64>() {
            let out = apply_process(&spec, &s).unwrap();
            assert!(out.matrix().approx_eq(s.matrix(), 1e-12));
        }
    }

    #[test]
    fn full_dephasing_of_plus_is_mixed() {
        let spec = ProcessSpec::analytic("pd", AnalyticChannel::PhaseDamping { f: 0.0 }).unwrap();
        let out = apply_process(&spec, &input_states::<f64>()[2]).unwrap();
        assert!(out
            .matrix()
            .approx_eq(DensityMatrix::maximally_mixed(Register::System).matrix(), 1e-15));
        assert!(ProcessSpec::analytic("bad", AnalyticChannel::BitFlip { p: 1.5 }).is_err());
    }

    #[test]
    fn kicks_shrink_coherence_like_closed_form() {
        let theta = 2f64.to_radians();
        let kicks = KickParams::new(theta, 25_000.0, PhaseMode::FixedY, 5).unwrap();
        let p = SimulatedProcess::new(sys(), 28e-3, 2000).unwrap().with_kicks(kicks);
        let spec = ProcessSpec::simulated("K", p).unwrap();
        let out = apply_process(&spec, &input_states::<f64>()[2]).unwrap();
        let rho_e = DensityMatrix::maximally_mixed(Register::Environment);
        let f = closed_form_f(&rho_e, &sys(), theta, 4e-5, 700).unwrap().f_values[700];
        let shrink = out.get(0, 1) * 2.0;
        assert!((shrink - f).norm() < 0.06, "{shrink} vs {f}");
        assert!((out.get(0, 0).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn odd_sequences_get_frame_correction() {
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, 7, 4e-3).unwrap();
        let p = SimulatedProcess::new(sys(), 28e-3, 1).unwrap().with_dd(dd);
        let spec = ProcessSpec::simulated("C", p).unwrap();
        for s in input_states::<f64>() {
            let out = apply_process(&spec, &s).unwrap();
            assert!(out.matrix().approx_eq(s.matrix(), 1e-12));
        }
    }
}
