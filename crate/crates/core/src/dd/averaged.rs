//! Exact kick-averaged coherence through a timeline with ideal π pulses.
//!
//! The system coherence lives in two environment operators, `A01`
//! (attached to `|0⟩⟨1|`) and `A10`. For a σz-diagonal environment both
//! stay diagonal: free evolution multiplies each entry by a phase, the
//! averaged kick mixes the two diagonal entries with weights `c`, `d`, and
//! an ideal π pulse about phase `ϕ` swaps `A01 ↔ A10` with phases `e^{∓2iϕ}`.

use super::timeline::{Pulse, Timeline};
use crate::error::{Error, Result};
use crate::noise::{diagonal_of, SuperopCoeffs};
use crate::qdyn::{DensityMatrix, SpinSystem};
use crate::scalar::{phase, Real, C};
use crate::tolerance::Tolerances;

/// Transfer of the system coherence over cycles: after `m` cycles
/// `ρ01(m) = from_01[m]·2ρ01(0) + from_10[m]·2ρ10(0)` when averaged over kicks.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCoherence<T: Real> {
    pub times: Vec<T>,
    pub from_01: Vec<C<T>>,
    pub from_10: Vec<C<T>>,
}

impl<T: Real> AveragedCoherence<T> {
    /// `M_x(m·t_c)` for the system prepared in `(I + σx)/2`.
    pub fn mx(&self) -> Vec<T> {
        self.from_01
            .iter()
            .zip(&self.from_10)
            .map(|(a, b)| (*a + *b).re)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Op<T: Real> {
    Free { a01: [C<T>; 2], a10: [C<T>; 2] },
    Pi { to_01: C<T>, to_10: C<T> },
    Kick,
}

/// Kick-averaged evolution of the coherence through `n_cycles` cycles,
/// starting from `ρ_s ⊗ ρ_e0` with `ρ_e0` diagonal.
pub fn averaged_coherence<T: Real>(
    rho_e0: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    timeline: &Timeline<T>,
) -> Result<AveragedCoherence<T>> {
    let start = diagonal_of(rho_e0)?;
    let ops = lower(sys, timeline)?;
    let coeffs = match timeline.kicks() {
        Some(k) => SuperopCoeffs::from_theta(k.theta())?,
        None => SuperopCoeffs::from_gamma(T::one()),
    };
    let zero = [C::new(T::zero(), T::zero()); 2];
    let mut paths = [(start, zero), (zero, start)];
    let n = timeline.n_cycles();
    let mut from_01 = Vec::with_capacity(n + 1);
    let mut from_10 = Vec::with_capacity(n + 1);
    let sum = |v: &[C<T>; 2]| v[0] + v[1];
    from_01.push(sum(&paths[0].0));
    from_10.push(sum(&paths[1].0));
    for _ in 0..n {
        for (a01, a10) in paths.iter_mut() {
            for op in &ops {
                apply(op, a01, a10, &coeffs);
            }
        }
        from_01.push(sum(&paths[0].0));
        from_10.push(sum(&paths[1].0));
    }
    Ok(AveragedCoherence {
        times: (0..=n).map(|m| T::lit(m as f64) * timeline.cycle_time()).collect(),
        from_01,
        from_10,
    })
}

fn lower<T: Real>(sys: &SpinSystem<T>, timeline: &Timeline<T>) -> Result<Vec<Op<T>>> {
    let e = sys.energies();
    let free = |dt: T| {
        let w0 = (e[0] - e[2]) * dt;
        let w1 = (e[1] - e[3]) * dt;
        Op::Free {
            a01: [phase(w0), phase(w1)],
            a10: [phase(-w0), phase(-w1)],
        }
    };
    let tol = T::lit(Tolerances::for_scalar::<T>().unitarity);
    let mut ops = Vec::new();
    let mut clock = T::zero();
    for ev in timeline.events() {
        if ev.time > clock {
            ops.push(free(ev.time - clock));
        }
        clock = ev.time;
        ops.push(match ev.pulse {
            Pulse::Kick => Op::Kick,
            Pulse::Rotation { axis_phase, angle } => {
                if ev.target != crate::qdyn::Qubit::System || (angle - T::PI()).abs() > tol {
                    return Err(Error::UnsupportedPulse);
                }
                let two = T::lit(2.0);
                Op::Pi {
                    to_01: phase(two * axis_phase),
                    to_10: phase(-two * axis_phase),
                }
            }
        });
    }
    if timeline.cycle_time() > clock {
        ops.push(free(timeline.cycle_time() - clock));
    }
    Ok(ops)
}

#[inline]
fn apply<T: Real>(op: &Op<T>, a01: &mut [C<T>; 2], a10: &mut [C<T>; 2], k: &SuperopCoeffs<T>) {
    match op {
        Op::Free { a01: p01, a10: p10 } => {
            a01[0] *= p01[0];
            a01[1] *= p01[1];
            a10[0] *= p10[0];
            a10[1] *= p10[1];
        }
        Op::Pi { to_01, to_10 } => {
            let (old01, old10) = (*a01, *a10);
            *a01 = [old10[0] * *to_01, old10[1] * *to_01];
            *a10 = [old01[0] * *to_10, old01[1] * *to_10];
        }
        Op::Kick => {
            for v in [a01, a10] {
                let [x, y] = *v;
                *v = [x * k.c + y * k.d, y * k.c + x * k.d];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::{build_timeline, DDParams, SequenceKind};
    use crate::noise::{closed_form_f, KickParams, PhaseMode};
    use crate::qdyn::Register;

    #[test]
    fn kicks_only_matches_closed_form() {
        let sys = SpinSystem::on_resonance(215.0).unwrap();
        let theta = 2f64.to_radians();
        let k = KickParams::new(theta, 25_000.0, PhaseMode::FixedY, 0).unwrap();
        let tl = build_timeline(None, Some(&k), 4e-5 * 50.0, 14).unwrap();
        let rho_e = DensityMatrix::maximally_mixed(Register::Environment);
        let avg = averaged_coherence(&rho_e, &sys, &tl).unwrap();
        let cf = closed_form_f(&rho_e, &sys, theta, 4e-5, 700).unwrap();
        for m in 0..=14 {
            assert!((avg.from_01[m] - cf.f_values[50 * m]).norm() < 1e-12);
            assert!(avg.from_10[m].norm() == 0.0);
        }
    }

    #[test]
    fn ideal_cpmg_without_kicks_is_flat() {
        let sys = SpinSystem::new(13.0, 0.0, 215.0).unwrap();
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, 7, 4e-3).unwrap();
        let tl = build_timeline(Some(&dd), None, dd.cycle_time(), 6).unwrap();
        let avg = averaged_coherence(&DensityMatrix::maximally_mixed(Register::Environment), &sys, &tl).unwrap();
        for v in avg.mx() {
            assert!((v - 1.0f64).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_imperfect_pulses() {
        let sys = SpinSystem::on_resonance(215.0).unwrap();
        let dd = DDParams::new(SequenceKind::Cpmg, 2, 1e-2).unwrap().with_pulse_error(0.02).unwrap();
        let tl = build_timeline(Some(&dd), None, 1e-2, 1).unwrap();
        let r = averaged_coherence(&DensityMatrix::maximally_mixed(Register::Environment), &sys, &tl);
        assert_eq!(r, Err(Error::UnsupportedPulse));
    }
}
