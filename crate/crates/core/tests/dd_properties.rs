use engdec::dd::{
    averaged_coherence, build_timeline, cpmg_times, simulate_timeline, system_mx, udd_times, DDParams, SequenceKind,
};
use engdec::ensemble::{run_ensemble, trajectory_rng};
use engdec::noise::{kick_rotation, KickParams, PhaseMode};
use engdec::qdyn::{evolve, pauli, tensor, ComplexMatrix, DensityMatrix, Dim, Pauli, Register, SpinSystem};
use engdec::C;
use proptest::prelude::*;

fn x_state() -> DensityMatrix<f64> {
    DensityMatrix::product(
        &DensityMatrix::x_polarized(Register::System),
        &DensityMatrix::maximally_mixed(Register::Environment),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn udd_is_increasing_bounded_and_mirrored(n in 1usize..40, t_c in 1e-4..1.0f64) {
        let t = udd_times(n, t_c).unwrap();
        prop_assert_eq!(t.len(), n);
        prop_assert!(t[0] > 0.0 && t[n - 1] < t_c);
        for w in t.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        for j in 0..n {
            prop_assert!((t[j] + t[n - 1 - j] - t_c).abs() <= 1e-12 * t_c.max(1.0));
        }
    }

    #[test]
    fn cpmg_refocuses_any_coupling(n in prop::sample::select(vec![1usize, 2, 7, 16]), j in 10.0..500.0f64,
                                   tau in 1e-4..1e-2f64, nu_s in -20.0..20.0f64) {
        let sys = SpinSystem::new(nu_s, 0.0, j).unwrap();
        let dd = DDParams::with_spacing(SequenceKind::Cpmg, n, tau).unwrap();
        let tl = build_timeline(Some(&dd), None, dd.cycle_time(), 20).unwrap();
        let states = simulate_timeline(&x_state(), &sys, &tl, None, &mut trajectory_rng(0, 0)).unwrap();
        for s in &states {
            prop_assert!((system_mx(s) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn coincident_pulse_and_kick_commute(eps in -0.5..0.5f64, phi in 0.0..6.28f64, axis in 0.0..6.28f64,
                                          x in -0.5..0.5f64, z in -0.5..0.5f64) {
        let id = ComplexMatrix::identity(Dim::Two);
        let pulse = tensor(&kick_rotation(std::f64::consts::FRAC_PI_2, axis), &id).unwrap();
        let kick = tensor(&id, &kick_rotation(eps, phi)).unwrap();
        let rho = DensityMatrix::product(
            &DensityMatrix::from_bloch(x, 0.3, z, Register::System).unwrap(),
            &DensityMatrix::from_bloch(z, x, 0.1, Register::Environment).unwrap(),
        ).unwrap();
        let a = evolve(&evolve(&rho, &pulse).unwrap(), &kick).unwrap();
        let b = evolve(&evolve(&rho, &kick).unwrap(), &pulse).unwrap();
        prop_assert!(a.matrix().approx_eq(b.matrix(), 1e-12));
    }
}

#[test]
fn udd_alternating_intervals_cancel() {
    for n in 1..=12 {
        let t = udd_times(n, 1.0f64).unwrap();
        let mut edges = vec![0.0];
        edges.extend(&t);
        edges.push(1.0);
        let s: f64 = edges
            .windows(2)
            .enumerate()
            .map(|(j, w)| if j % 2 == 0 { w[1] - w[0] } else { w[0] - w[1] })
            .sum();
        assert!(s.abs() < 1e-12, "N={n}: {s}");
    }
}

#[test]
fn single_pulse_schedules_coincide() {
    for t_c in [1.0f64, 28e-3, 3.7] {
        assert_eq!(udd_times(1, t_c).unwrap(), cpmg_times(1, t_c).unwrap());
    }
}

#[test]
fn ideal_x_pulse_preserves_x_polarisation() {
    let r = kick_rotation(std::f64::consts::FRAC_PI_2, 0.0);
    let x = pauli::<f64>(Pauli::X);
    assert!((r * x * r.adjoint()).approx_eq(&x, 1e-15));
    let _ = C::new(0.0f64, 0.0);
}

#[test]
fn averaged_evaluator_matches_monte_carlo_under_decoupling() {
    let sys = SpinSystem::on_resonance(215.0).unwrap();
    let kicks = KickParams::new(0.05, 25_000.0, PhaseMode::FixedY, 77).unwrap();
    for kind in [SequenceKind::Cpmg, SequenceKind::Udd] {
        let dd = DDParams::new(kind, 7, 28e-3).unwrap().with_phase(0.4);
        let tl = build_timeline(Some(&dd), Some(&kicks), 28e-3, 3).unwrap();
        let exact = averaged_coherence(&DensityMatrix::maximally_mixed(Register::Environment), &sys, &tl)
            .unwrap()
            .mx();
        let stats = run_ensemble::<f64, _>(1500, 4, 32, |traj, out| {
            let states = simulate_timeline(&x_state(), &sys, &tl, None, &mut trajectory_rng(77, traj)).unwrap();
            for (o, s) in out.iter_mut().zip(&states) {
                *o = system_mx(s);
            }
        });
        for m in 0..4 {
            let d = (stats.mean[m] - exact[m]).abs();
            assert!(d <= 4.0 * stats.stderr[m] + 1e-12, "{kind:?} m={m}: {} vs {}", stats.mean[m], exact[m]);
        }
    }
}

#[test]
fn kicks_add_decoherence_to_free_evolution() {
    let sys = SpinSystem::on_resonance(215.0).unwrap();
    let kicks = KickParams::new(1f64.to_radians(), 25_000.0, PhaseMode::FixedY, 3).unwrap();
    let dd = DDParams::with_spacing(SequenceKind::Cpmg, 7, 3.2e-3).unwrap();
    let with = build_timeline(Some(&dd), Some(&kicks), dd.cycle_time(), 6).unwrap();
    let without = build_timeline(Some(&dd), None, dd.cycle_time(), 6).unwrap();
    let env = DensityMatrix::maximally_mixed(Register::Environment);
    let a = averaged_coherence(&env, &sys, &with).unwrap().mx();
    let b = averaged_coherence(&env, &sys, &without).unwrap().mx();
    for m in 1..=6 {
        assert!(a[m] < b[m] - 1e-3);
    }
}
