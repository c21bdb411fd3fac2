use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::qdyn::{tensor, ComplexMatrix, Dim};
use crate::scalar::{c, Real};

/// How kick rotations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseMode {
    /// Rotation about y with `ε ~ U[-θ, θ]`.
    FixedY,
    /// Rotation about `cos φ x + sin φ y`, `φ ~ U[0, 2π)`, `ε ~ U[0, θ]`.
    UniformPhase,
}

/// Parameters of the random kick train applied to the environment qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KickParams<T: Real> {
    theta: T,
    gamma_rate: T,
    phase_mode: PhaseMode,
    seed: u64,
}

impl<T: Real> KickParams<T> {
    /// `theta` in radians, `gamma_rate` in kicks per second.
    pub fn new(theta: T, gamma_rate: T, phase_mode: PhaseMode, seed: u64) -> Result<Self> {
        if !(theta > T::zero() && theta <= T::PI()) {
            return Err(invalid("theta", format!("must lie in (0, π], got {theta}")));
        }
        if !(gamma_rate > T::zero()) || !gamma_rate.is_finite() {
            return Err(invalid("gamma_rate", format!("must be positive, got {gamma_rate}")));
        }
        Ok(Self {
            theta,
            gamma_rate,
            phase_mode,
            seed,
        })
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn gamma_rate(&self) -> T {
        self.gamma_rate
    }

    pub fn phase_mode(&self) -> PhaseMode {
        self.phase_mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Kick interval `δ = 1/Γ`.
    pub fn interval(&self) -> T {
        T::one() / self.gamma_rate
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_theta(mut self, theta: T) -> Result<Self> {
        Self::new(theta, self.gamma_rate, self.phase_mode, self.seed).map(|p| {
            self = p;
            self
        })
    }

    /// Draws one kick: `(ε, axis phase φ)`.
    pub fn sample_angles<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, T) {
        let theta = self.theta.as_f64();
        match self.phase_mode {
            PhaseMode::FixedY => (T::lit(rng.gen_range(-theta..=theta)), T::FRAC_PI_2()),
            PhaseMode::UniformPhase => {
                let eps = rng.gen_range(0.0..=theta);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                (T::lit(eps), T::lit(phi))
            }
        }
    }
}

/// `γ = sin(2θ)/(2θ)`, with the small-angle series below `θ = 1e-6`.
pub fn gamma_of_theta<T: Real>(theta: T) -> Result<T> {
    if !(theta > T::zero()) {
        return Err(invalid("theta", format!("must be positive, got {theta}")));
    }
    let x = T::lit(2.0) * theta;
    if theta < T::lit(1e-6) {
        let x2 = x * x;
        Ok(T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0))
    } else {
        Ok(x.sin() / x)
    }
}

/// Weights of the kick-averaged superoperator: `c + d = 1`, `c - d = γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperopCoeffs<T: Real> {
    pub c: T,
    pub d: T,
    pub gamma_theta: T,
}

impl<T: Real> SuperopCoeffs<T> {
    pub fn from_theta(theta: T) -> Result<Self> {
        Ok(Self::from_gamma(gamma_of_theta(theta)?))
    }

    pub fn from_gamma(gamma: T) -> Self {
        let half = T::lit(0.5);
        Self {
            c: half * (T::one() + gamma),
            d: half * (T::one() - gamma),
            gamma_theta: gamma,
        }
    }
}

/// `exp(-i ε (cos φ σx + sin φ σy))` on one qubit.
pub fn kick_rotation<T: Real>(epsilon: T, axis_phase: T) -> ComplexMatrix<T> {
    let (ce, se) = (epsilon.cos(), epsilon.sin());
    let (cp, sp) = (axis_phase.cos(), axis_phase.sin());
    // -i sin ε (cos φ X + sin φ Y) = [[0, -i sε e^{-iφ}], [-i sε e^{iφ}, 0]]
    let off_upper = c(-se * sp, -se * cp);
    let off_lower = c(se * sp, -se * cp);
    ComplexMatrix::from_row_major(&[c(ce, T::zero()), off_upper, off_lower, c(ce, T::zero())]).expect("2x2")
}

/// Samples one kick `K = 1^s ⊗ exp(-i ε n·σ^e)` as a 4×4 unitary.
pub fn sample_kick<T: Real, R: Rng + ?Sized>(params: &KickParams<T>, rng: &mut R) -> ComplexMatrix<T> {
    let (eps, phi) = params.sample_angles(rng);
    tensor(&ComplexMatrix::identity(Dim::Two), &kick_rotation(eps, phi)).expect("2x2 factors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::trajectory_rng;
    use crate::qdyn::{partial_trace, DensityMatrix, Qubit, Register};
    use crate::scalar::cr;
    use std::f64::consts::PI;

    #[test]
    fn gamma_examples() {
        assert!((gamma_of_theta(1e-9_f64).unwrap() - 1.0).abs() < 1e-15);
        assert!(gamma_of_theta(PI / 2.0).unwrap().abs() < 1e-15);
        assert!((gamma_of_theta(PI / 4.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!(gamma_of_theta(0.0_f64).is_err());
        assert!(gamma_of_theta(-0.1_f64).is_err());
        // Series and closed form agree across the switch-over.
        let a = gamma_of_theta(0.999_999e-6_f64).unwrap();
        let b = (2.0e-6_f64).sin() / 2.0e-6;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn coeff_identities() {
        for theta in [1e-8, 0.01, 0.3, 1.0, PI / 2.0, PI] {
            let k = SuperopCoeffs::<f64>::from_theta(theta).unwrap();
            assert!((k.c + k.d - 1.0).abs() < 1e-15);
            assert!((k.c - k.d - k.gamma_theta).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&k.d));
        }
    }

    #[test]
    fn kick_examples() {
        let zero = kick_rotation(0.0_f64, 0.3);
        assert!(zero.approx_eq(&ComplexMatrix::identity(Dim::Two), 0.0));
        let half_pi = kick_rotation(PI / 2.0, PI / 2.0);
        let expect = ComplexMatrix::from_row_major(&[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)]).unwrap();
        assert!(half_pi.approx_eq(&expect, 1e-15));
    }

    #[test]
    fn sampled_kicks_are_environment_local_unitaries() {
        let mut rng = trajectory_rng(42, 0);
        let rho = DensityMatrix::product(
            &DensityMatrix::<f64>::from_bloch(0.5, -0.3, 0.2, Register::System).unwrap(),
            &DensityMatrix::from_bloch(0.1, 0.4, -0.6, Register::Environment).unwrap(),
        )
        .unwrap();
        for mode in [PhaseMode::FixedY, PhaseMode::UniformPhase] {
            let params = KickParams::new(0.8, 1000.0, mode, 1).unwrap();
            for _ in 0..50 {
                let k = sample_kick(&params, &mut rng);
                assert!(k.unitarity_defect() < 1e-14);
                let out = crate::qdyn::evolve(&rho, &k).unwrap();
                let before = partial_trace(&rho, Qubit::System).unwrap();
                let after = partial_trace(&out, Qubit::System).unwrap();
                assert!(after.matrix().approx_eq(before.matrix(), 1e-15));
            }
        }
    }

    #[test]
    fn sampled_angles_respect_ranges() {
        let mut rng = trajectory_rng(9, 3);
        let theta = 0.1f64;
        let fixed = KickParams::new(theta, 1.0, PhaseMode::FixedY, 0).unwrap();
        let uni = KickParams::new(theta, 1.0, PhaseMode::UniformPhase, 0).unwrap();
        let mut saw_negative = false;
        for _ in 0..1000 {
            let (e, p) = fixed.sample_angles(&mut rng);
            assert!(e.abs() <= theta && p == PI / 2.0);
            saw_negative |= e < 0.0;
            let (e, p) = uni.sample_angles(&mut rng);
            assert!((0.0..=theta).contains(&e) && (0.0..2.0 * PI).contains(&p));
        }
        assert!(saw_negative);
    }

    #[test]
    fn param_validation() {
        assert!(KickParams::<f64>::new(0.0, 1.0, PhaseMode::FixedY, 0).is_err());
        assert!(KickParams::<f64>::new(4.0, 1.0, PhaseMode::FixedY, 0).is_err());
        assert!(KickParams::<f64>::new(0.1, 0.0, PhaseMode::FixedY, 0).is_err());
        let p = KickParams::<f64>::new(PI, 25_000.0, PhaseMode::FixedY, 0).unwrap();
        assert!((p.interval() - 4e-5).abs() < 1e-18);
    }
}
