use serde::Serialize;

use super::matrix::{ComplexMatrix, Dim};
use crate::error::{invalid, Result};
use crate::scalar::{phase, Real, C};

/// Rotating-frame offsets and scalar coupling of the two-spin register.
///
/// `H = π (ν_s σz^s + ν_e σz^e + (J/2) σz^s σz^e)`, all frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinSystem<T: Real> {
    nu_s: T,
    nu_e: T,
    j: T,
}

impl<T: Real> SpinSystem<T> {
    /// Placeholder coupling used when no value is configured.
    pub const DEFAULT_J_HZ: f64 = 215.0;

    pub fn new(nu_s: T, nu_e: T, j: T) -> Result<Self> {
        if !(j > T::zero()) || !j.is_finite() {
            return Err(invalid("J", format!("coupling must be positive and finite, got {j}")));
        }
        if !nu_s.is_finite() || !nu_e.is_finite() {
            return Err(invalid("nu", "offsets must be finite"));
        }
        Ok(Self { nu_s, nu_e, j })
    }

    /// On-resonance frame (`ν_s = ν_e = 0`) with coupling `j`.
    pub fn on_resonance(j: T) -> Result<Self> {
        Self::new(T::zero(), T::zero(), j)
    }

    pub fn nu_s(&self) -> T {
        self.nu_s
    }

    pub fn nu_e(&self) -> T {
        self.nu_e
    }

    pub fn j(&self) -> T {
        self.j
    }

    /// Diagonal energies (rad/s) in the basis `|s e⟩`, index `2s + e`.
    pub fn energies(&self) -> [T; 4] {
        let pi = T::PI();
        let half_j = self.j * T::lit(0.5);
        let mut e = [T::zero(); 4];
        for (idx, slot) in e.iter_mut().enumerate() {
            let zs = if idx / 2 == 0 { T::one() } else { -T::one() };
            let ze = if idx % 2 == 0 { T::one() } else { -T::one() };
            *slot = pi * (self.nu_s * zs + self.nu_e * ze + half_j * zs * ze);
        }
        e
    }

    /// Diagonal of `exp(-i H t)`.
    pub fn free_phases(&self, t: T) -> [C<T>; 4] {
        self.energies().map(|e| phase(e * t))
    }
}

impl<T: Real> Default for SpinSystem<T> {
    fn default() -> Self {
        Self::on_resonance(T::lit(Self::DEFAULT_J_HZ)).expect("default coupling is valid")
    }
}

/// `U(t) = exp(-i H t)`; the Hamiltonian is diagonal so the phases are exact.
pub fn free_propagator<T: Real>(sys: &SpinSystem<T>, t: T) -> Result<ComplexMatrix<T>> {
    if !(t >= T::zero()) {
        return Err(invalid("t", format!("duration must be non-negative, got {t}")));
    }
    ComplexMatrix::diagonal(&sys.free_phases(t)).map(|m| {
        debug_assert_eq!(m.dim(), Dim::Four);
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn zero_time_is_identity() {
        let sys = SpinSystem::<f64>::default();
        assert!(free_propagator(&sys, 0.0).unwrap().approx_eq(&ComplexMatrix::identity(Dim::Four), 0.0));
    }

    #[test]
    fn coupling_phase_pattern() {
        let sys = SpinSystem::on_resonance(100.0).unwrap();
        let u = free_propagator(&sys, 0.01).unwrap();
        let expect = [c(0.0, -1.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, -1.0)];
        for (i, e) in expect.iter().enumerate() {
            assert!((u[(i, i)] - e).norm() < 1e-15, "entry {i}: {:?}", u[(i, i)]);
        }
        // General J, t: signs (+1, -1, -1, +1) of -iπJt/2.
        let sys = SpinSystem::on_resonance(37.0).unwrap();
        let t = 0.0123;
        let u = free_propagator(&sys, t).unwrap();
        for (i, s) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
            let x = std::f64::consts::PI * 37.0 * t / 2.0 * s;
            assert!((u[(i, i)] - c(x.cos(), -x.sin())).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SpinSystem::<f64>::on_resonance(0.0).is_err());
        assert!(SpinSystem::<f64>::new(f64::NAN, 0.0, 1.0).is_err());
        let sys = SpinSystem::<f64>::default();
        assert!(free_propagator(&sys, -1e-9).is_err());
    }

    #[test]
    fn semigroup() {
        let sys = SpinSystem::new(12.5, -40.0, 215.0).unwrap();
        let (t1, t2) = (0.0031, 0.0172);
        let lhs = free_propagator(&sys, t1).unwrap() * free_propagator(&sys, t2).unwrap();
        assert!(lhs.approx_eq(&free_propagator(&sys, t1 + t2).unwrap(), 1e-12));
    }
}
