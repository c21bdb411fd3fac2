use super::kick::SuperopCoeffs;
use super::trajectory::{DecoherenceSeries, SeriesSource};
use crate::error::{Error, Result};
use crate::qdyn::{pauli, ComplexMatrix, DensityMatrix, Pauli, Register, SpinSystem};
use crate::scalar::{phase, Real, C};
use crate::tolerance::Tolerances;

/// One application of the kick-averaged superoperator
/// `O(ρ) = c·U_K ρ U_K + d·σy U_K ρ U_K σy`, `U_K = exp(-iπJδσz/2)`.
///
/// `U_K` multiplies from both sides with no adjoint: the coherence element
/// `⟨0|·|1⟩` picks up conditional phases of the same sign from the two
/// system branches. The map is neither Hermiticity- nor trace-preserving.
/// System offsets `ν_s` are not part of this map.
pub fn superop_step<T: Real>(
    rho_e: &ComplexMatrix<T>,
    coeffs: &SuperopCoeffs<T>,
    sys: &SpinSystem<T>,
    delta: T,
) -> Result<ComplexMatrix<T>> {
    if rho_e.size() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho_e.size(),
        });
    }
    let half_phi = T::PI() * sys.j() * delta * T::lit(0.5);
    let uk = ComplexMatrix::diagonal(&[phase(half_phi), phase(-half_phi)])?;
    let sy = pauli::<T>(Pauli::Y);
    let inner = uk * *rho_e * uk;
    let flipped = sy * inner * sy;
    Ok(inner.scale(C::new(coeffs.c, T::zero())) + flipped.scale(C::new(coeffs.d, T::zero())))
}

/// The averaged one-step map restricted to the diagonal `(x, y)` of the
/// environment operator attached to the system coherence `|0⟩⟨1|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BranchMap<T: Real> {
    c: T,
    d: T,
    px: C<T>,
    py: C<T>,
}

impl<T: Real> BranchMap<T> {
    pub(crate) fn new(coeffs: &SuperopCoeffs<T>, sys: &SpinSystem<T>, delta: T) -> Self {
        let pi = T::PI();
        let two = T::lit(2.0);
        Self {
            c: coeffs.c,
            d: coeffs.d,
            px: phase(pi * (two * sys.nu_s() + sys.j()) * delta),
            py: phase(pi * (two * sys.nu_s() - sys.j()) * delta),
        }
    }

    #[inline]
    pub(crate) fn apply(&self, [x, y]: [C<T>; 2]) -> [C<T>; 2] {
        let (xf, yf) = (x * self.px, y * self.py);
        [xf * self.c + yf * self.d, yf * self.c + xf * self.d]
    }
}

pub(crate) fn diagonal_of<T: Real>(rho_e0: &DensityMatrix<T>) -> Result<[C<T>; 2]> {
    if rho_e0.register() == Register::Joint {
        return Err(Error::DimensionMismatch { expected: 2, found: 4 });
    }
    if !rho_e0.matrix().is_diagonal(Tolerances::for_scalar::<T>().equality) {
        return Err(Error::NonDiagonalEnvironment);
    }
    Ok([rho_e0.get(0, 0), rho_e0.get(1, 1)])
}

/// Exact kick-averaged `f01(m)`, `m = 0..=n_kicks`, for an environment
/// state diagonal in the σz basis.
pub fn closed_form_f<T: Real>(
    rho_e0: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    theta: T,
    delta: T,
    n_kicks: usize,
) -> Result<DecoherenceSeries<T>> {
    let map = BranchMap::new(&SuperopCoeffs::from_theta(theta)?, sys, delta);
    let mut v = diagonal_of(rho_e0)?;
    let mut f_values = Vec::with_capacity(n_kicks + 1);
    f_values.push(v[0] + v[1]);
    for _ in 0..n_kicks {
        v = map.apply(v);
        f_values.push(v[0] + v[1]);
    }
    Ok(DecoherenceSeries {
        times: (0..=n_kicks).map(|k| T::lit(k as f64) * delta).collect(),
        f_values,
        stderr: None,
        source: SeriesSource::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, cr};
    use std::f64::consts::PI;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::on_resonance(215.0).unwrap()
    }

    #[test]
    fn no_mixing_is_two_phase_rotations() {
        let k = SuperopCoeffs::from_gamma(1.0);
        let delta = 4e-5;
        let phi = PI * 215.0 * delta;
        let (x, y) = (c(0.3, 0.1), c(0.7, -0.2));
        let out = superop_step(&ComplexMatrix::diagonal(&[x, y]).unwrap(), &k, &sys(), delta).unwrap();
        assert!((out[(0, 0)] - x * phase(phi)).norm() < 1e-15);
        assert!((out[(1, 1)] - y * phase(-phi)).norm() < 1e-15);
        assert!(out[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn diagonal_map_matches_symbolic_expansion() {
        let k = SuperopCoeffs::from_theta(0.7).unwrap();
        let delta = 1.3e-3;
        let phi = PI * 215.0 * delta;
        let (x, y) = (c(0.6, 0.0), c(0.4, 0.0));
        let out = superop_step(&ComplexMatrix::diagonal(&[x, y]).unwrap(), &k, &sys(), delta).unwrap();
        let ex = x * phase(phi) * k.c + y * phase(-phi) * k.d;
        let ey = y * phase(-phi) * k.c + x * phase(phi) * k.d;
        assert!((out[(0, 0)] - ex).norm() < 1e-15 && (out[(1, 1)] - ey).norm() < 1e-15);
        assert!(out[(0, 1)].norm() < 1e-15 && out[(1, 0)].norm() < 1e-15);
        let branch = BranchMap::new(&k, &sys(), delta).apply([x, y]);
        assert!((branch[0] - ex).norm() < 1e-15 && (branch[1] - ey).norm() < 1e-15);
    }

    #[test]
    fn trace_is_not_preserved() {
        let k = SuperopCoeffs::from_gamma(0.0);
        let delta = 0.5 / 215.0; // φ = π/2
        let half = ComplexMatrix::identity(crate::qdyn::Dim::Two).scale(cr(0.5));
        let out = superop_step(&half, &k, &sys(), delta).unwrap();
        assert!(out.trace().norm() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let env = DensityMatrix::maximally_mixed(Register::Environment);
        let delta = 4e-5;
        let phi = PI * 215.0 * delta;
        let s = closed_form_f(&env, &sys(), 1e-12, delta, 0).unwrap();
        assert_eq!(s.f_values, vec![cr(1.0)]);

        let s = closed_form_f(&env, &sys(), 1e-12, delta, 500).unwrap();
        for (m, f) in s.f_values.iter().enumerate() {
            assert!((f.re - (m as f64 * phi).cos()).abs() < 1e-12 && f.im.abs() < 1e-12);
        }

        let s = closed_form_f(&env, &sys(), PI / 2.0, delta, 200).unwrap();
        for (m, f) in s.f_values.iter().enumerate() {
            assert!((f.re - phi.cos().powi(m as i32)).abs() < 1e-12 && f.im.abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_equals_iterated_superoperator() {
        let env = DensityMatrix::from_bloch(0.0, 0.0, 0.35, Register::Environment).unwrap();
        let theta = 0.2;
        let delta = 2.1e-4;
        let k = SuperopCoeffs::from_theta(theta).unwrap();
        let s = closed_form_f(&env, &sys(), theta, delta, 60).unwrap();
        let mut rho = *env.matrix();
        for m in 1..=60 {
            rho = superop_step(&rho, &k, &sys(), delta).unwrap();
            assert!((rho.trace() - s.f_values[m]).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_coherent_environment() {
        let env = DensityMatrix::from_bloch(0.4, 0.0, 0.0, Register::Environment).unwrap();
        assert!(matches!(
            closed_form_f(&env, &sys(), 0.1, 1e-4, 3),
            Err(Error::NonDiagonalEnvironment)
        ));
    }
}
