use serde::Serialize;

use super::matrix::{pauli, tensor, ComplexMatrix, Dim, Pauli, Qubit};
use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};
use crate::tolerance::Tolerances;

/// Which part of the register a density matrix describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Register {
    System,
    Environment,
    Joint,
}

/// Hermitian, unit-trace, positive semidefinite state of one or both qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: ComplexMatrix<T>,
    register: Register,
}

/// Deviations of a candidate state from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDefects {
    pub hermitian: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl StateDefects {
    pub fn of<T: Real>(m: &ComplexMatrix<T>) -> Self {
        let tr = m.trace();
        StateDefects {
            hermitian: m.hermitian_defect(),
            trace: ((tr - cr(T::one())).norm()).as_f64(),
            min_eigenvalue: m.hermitian_eigenvalues()[0].as_f64(),
        }
    }

    pub fn is_valid(&self, tol: &Tolerances) -> bool {
        self.hermitian <= tol.hermitian && self.trace <= tol.trace && self.min_eigenvalue >= tol.psd_floor
    }
}

impl<T: Real> DensityMatrix<T> {
    /// Validates `matrix` against the density-matrix invariants.
    pub fn new(matrix: ComplexMatrix<T>, register: Register) -> Result<Self> {
        Self::check_register(&matrix, register)?;
        let tol = Tolerances::for_scalar::<T>();
        let defects = StateDefects::of(&matrix);
        if defects.hermitian > tol.hermitian {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {:e})",
                defects.hermitian
            )));
        }
        if defects.trace > tol.trace {
            return Err(Error::InvalidState(format!("trace off by {:e}", defects.trace)));
        }
        if defects.min_eigenvalue < tol.psd_floor {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                defects.min_eigenvalue
            )));
        }
        Ok(Self { matrix, register })
    }

    fn check_register(matrix: &ComplexMatrix<T>, register: Register) -> Result<()> {
        let expected = match register {
            Register::Joint => Dim::Four,
            Register::System | Register::Environment => Dim::Two,
        };
        if matrix.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: expected.size(),
                found: matrix.size(),
            })
        }
    }

    /// Wraps a matrix produced by a trace- and positivity-preserving map.
    pub(crate) fn from_trusted(matrix: ComplexMatrix<T>, register: Register) -> Self {
        debug_assert!(Self::check_register(&matrix, register).is_ok());
        Self { matrix, register }
    }

    /// Single-qubit state `(I + x σx + y σy + z σz) / 2`; requires `|r| ≤ 1`.
    pub fn from_bloch(x: T, y: T, z: T, register: Register) -> Result<Self> {
        let half = T::lit(0.5);
        let m = pauli::<T>(Pauli::I)
            + pauli::<T>(Pauli::X).scale(cr(x))
            + pauli::<T>(Pauli::Y).scale(cr(y))
            + pauli::<T>(Pauli::Z).scale(cr(z));
        Self::new(m.scale(cr(half)), register)
    }

    pub fn maximally_mixed(register: Register) -> Self {
        let dim = if register == Register::Joint { Dim::Four } else { Dim::Two };
        let n = T::lit(dim.size() as f64);
        Self::from_trusted(ComplexMatrix::identity(dim).scale(cr(T::one() / n)), register)
    }

    /// `(I + σx)/2`, the normalised deviation state of the system qubit.
    pub fn x_polarized(register: Register) -> Self {
        Self::from_bloch(T::one(), T::zero(), T::zero(), register).expect("pure state")
    }

    /// Projector onto `|0⟩` (`up = true`) or `|1⟩`.
    pub fn z_basis(up: bool, register: Register) -> Self {
        let z = if up { T::one() } else { -T::one() };
        Self::from_bloch(T::zero(), T::zero(), z, register).expect("pure state")
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    #[inline]
    pub fn register(&self) -> Register {
        self.register
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.matrix[(i, j)]
    }

    pub fn defects(&self) -> StateDefects {
        StateDefects::of(&self.matrix)
    }

    /// Product state `system ⊗ environment`.
    pub fn product(system: &Self, environment: &Self) -> Result<Self> {
        if system.register == Register::Joint || environment.register == Register::Joint {
            return Err(Error::DimensionMismatch { expected: 2, found: 4 });
        }
        Ok(Self::from_trusted(
            tensor(&system.matrix, &environment.matrix)?,
            Register::Joint,
        ))
    }
}

/// Reduced state of the kept qubit of a joint state.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: Qubit) -> Result<DensityMatrix<T>> {
    if rho.matrix.dim() != Dim::Four {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.matrix.size(),
        });
    }
    let (m, register) = match keep {
        Qubit::System => (trace_out_environment(&rho.matrix), Register::System),
        Qubit::Environment => (trace_out_system(&rho.matrix), Register::Environment),
    };
    Ok(DensityMatrix::from_trusted(m, register))
}

pub(crate) fn trace_out_environment<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(Dim::Two, |i, j| m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)])
}

pub(crate) fn trace_out_system<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(Dim::Two, |k, l| m[(k, l)] + m[(2 + k, 2 + l)])
}

/// `U ρ U†` for a unitary `U` of matching dimension.
pub fn evolve<T: Real>(rho: &DensityMatrix<T>, u: &ComplexMatrix<T>) -> Result<DensityMatrix<T>> {
    rho.matrix.check_same_dim(u)?;
    let defect = u.unitarity_defect();
    if defect > Tolerances::for_scalar::<T>().unitarity {
        return Err(Error::NotUnitary { defect });
    }
    Ok(DensityMatrix::from_trusted(rho.matrix.conjugate_by(u), rho.register))
}

/// `Tr[ρ · obs]` for a Hermitian observable.
pub fn expectation<T: Real>(rho: &DensityMatrix<T>, obs: &ComplexMatrix<T>) -> Result<T> {
    rho.matrix.check_same_dim(obs)?;
    let tol = Tolerances::for_scalar::<T>();
    let defect = obs.hermitian_defect();
    if defect > tol.hermitian {
        return Err(Error::NotHermitian { defect });
    }
    let v = rho.matrix.try_mul(obs)?.trace();
    if v.im.abs().as_f64() > tol.imaginary {
        return Err(Error::NonRealExpectation(v.im.as_f64()));
    }
    Ok(v.re)
}
