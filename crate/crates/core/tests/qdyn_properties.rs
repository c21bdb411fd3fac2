use engdec::ensemble::trajectory_rng;
use engdec::noise::{sample_kick, trajectory_propagate, KickParams, PhaseMode};
use engdec::qdyn::{
    evolve, expectation, free_propagator, partial_trace, pauli, tensor, ComplexMatrix, DensityMatrix, Dim, Pauli,
    Qubit, Register, SpinSystem,
};
use engdec::Tolerances;
use proptest::prelude::*;

fn bloch() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..=1.0f64, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(r, th, ph)| {
        (r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos())
    })
}

fn state((x, y, z): (f64, f64, f64), reg: Register) -> DensityMatrix<f64> {
    DensityMatrix::from_bloch(x, y, z, reg).unwrap()
}

proptest! {
    #[test]
    fn partial_trace_recovers_product_factors(s in bloch(), e in bloch()) {
        let (rs, re) = (state(s, Register::System), state(e, Register::Environment));
        let joint = DensityMatrix::product(&rs, &re).unwrap();
        prop_assert!(partial_trace(&joint, Qubit::System).unwrap().matrix().approx_eq(rs.matrix(), 1e-14));
        prop_assert!(partial_trace(&joint, Qubit::Environment).unwrap().matrix().approx_eq(re.matrix(), 1e-14));
    }

    #[test]
    fn free_propagator_is_a_semigroup(nu_s in -50.0..50.0f64, nu_e in -50.0..50.0f64, j in 1.0..500.0f64,
                                      t1 in 0.0..0.05f64, t2 in 0.0..0.05f64) {
        let sys = SpinSystem::new(nu_s, nu_e, j).unwrap();
        let a = free_propagator(&sys, t1).unwrap() * free_propagator(&sys, t2).unwrap();
        prop_assert!(a.approx_eq(&free_propagator(&sys, t1 + t2).unwrap(), 1e-12));
        prop_assert!(free_propagator(&sys, t1).unwrap().unitarity_defect() < 1e-13);
    }

    #[test]
    fn kicked_states_stay_valid_and_keep_populations(s in bloch(), e in bloch(), theta in 0.01..3.1f64,
                                                     seed in any::<u64>(), n in 0usize..60) {
        let sys = SpinSystem::new(7.0, -3.0, 215.0).unwrap();
        let rho0 = DensityMatrix::product(&state(s, Register::System), &state(e, Register::Environment)).unwrap();
        let mode = if seed % 2 == 0 { PhaseMode::FixedY } else { PhaseMode::UniformPhase };
        let params = KickParams::new(theta, 5_000.0, mode, seed).unwrap();
        let out = trajectory_propagate(&rho0, &sys, &params, n, &mut trajectory_rng(seed, 0)).unwrap();
        prop_assert!(out.defects().is_valid(&Tolerances::DEFAULT));
        let z = pauli::<f64>(Pauli::Z);
        let zs = tensor(&z, &ComplexMatrix::identity(Dim::Two)).unwrap();
        prop_assert!((expectation(&out, &zs).unwrap() - expectation(&rho0, &zs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn a_kick_alone_leaves_the_system_untouched(s in bloch(), e in bloch(), seed in any::<u64>()) {
        let rho = DensityMatrix::product(&state(s, Register::System), &state(e, Register::Environment)).unwrap();
        let params = KickParams::new(0.7, 1.0, PhaseMode::UniformPhase, seed).unwrap();
        let kicked = evolve(&rho, &sample_kick(&params, &mut trajectory_rng(seed, 1))).unwrap();
        let before = partial_trace(&rho, Qubit::System).unwrap();
        let after = partial_trace(&kicked, Qubit::System).unwrap();
        prop_assert!(after.matrix().approx_eq(before.matrix(), 1e-14));
    }
}

#[test]
fn system_populations_survive_random_realisations() {
    let sys = SpinSystem::on_resonance(215.0).unwrap();
    let rho0 = DensityMatrix::product(
        &DensityMatrix::from_bloch(0.3, -0.4, 0.5, Register::System).unwrap(),
        &DensityMatrix::from_bloch(0.0, 0.0, 0.2, Register::Environment).unwrap(),
    )
    .unwrap();
    let params = KickParams::new(0.3, 25_000.0, PhaseMode::FixedY, 17).unwrap();
    for traj in 0..100 {
        let out = trajectory_propagate(&rho0, &sys, &params, 200, &mut trajectory_rng(17, traj)).unwrap();
        let (a, b) = (partial_trace(&out, Qubit::System).unwrap(), partial_trace(&rho0, Qubit::System).unwrap());
        assert!((a.get(0, 0) - b.get(0, 0)).norm() < 1e-12);
        assert!((a.get(1, 1) - b.get(1, 1)).norm() < 1e-12);
    }
}

#[test]
fn single_precision_tracks_double() {
    let sys64 = SpinSystem::new(3.0, 1.0, 215.0).unwrap();
    let sys32 = SpinSystem::<f32>::new(3.0, 1.0, 215.0).unwrap();
    let u64_ = free_propagator(&sys64, 1.3e-3).unwrap();
    let u32_ = free_propagator(&sys32, 1.3e-3).unwrap();
    assert!(u32_.cast::<f64>().approx_eq(&u64_, 1e-6));
    let rho = DensityMatrix::<f32>::x_polarized(Register::System);
    assert!(rho.defects().is_valid(&Tolerances::for_scalar::<f32>()));
}
