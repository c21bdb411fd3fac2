//! Phenomenological intrinsic relaxation, off unless configured.
//!
//! Each qubit is subject to a unital Pauli channel whose Bloch-vector
//! eigenvalues are `λ⊥ = e^{-dt/T2}` (x, y) and `λ∥ = e^{-dt/T1}` (z):
//! coherences decay with `T2`, populations relax toward the maximally
//! mixed state with `T1`. `T2 ≤ 2 T1` keeps the map completely positive.

use serde::Serialize;

use super::matrix::{pauli, tensor, ComplexMatrix, Dim, Pauli, Qubit};
use super::state::{DensityMatrix, Register};
use crate::error::{invalid, Error, Result};
use crate::scalar::{cr, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationParams<T: Real> {
    t1: Option<T>,
    t2_intrinsic: Option<T>,
}

impl<T: Real> RelaxationParams<T> {
    pub fn new(t1: Option<T>, t2_intrinsic: Option<T>) -> Result<Self> {
        for (name, v) in [("t1", t1), ("t2_intrinsic", t2_intrinsic)] {
            if let Some(v) = v {
                if !(v > T::zero()) || !v.is_finite() {
                    return Err(invalid(name, format!("must be positive and finite, got {v}")));
                }
            }
        }
        if let (Some(t1), Some(t2)) = (t1, t2_intrinsic) {
            if t2 > T::lit(2.0) * t1 {
                return Err(invalid("t2_intrinsic", "must not exceed 2·T1"));
            }
        }
        Ok(Self { t1, t2_intrinsic })
    }

    pub fn pure_dephasing(t2: T) -> Result<Self> {
        Self::new(None, Some(t2))
    }

    pub fn t1(&self) -> Option<T> {
        self.t1
    }

    pub fn t2_intrinsic(&self) -> Option<T> {
        self.t2_intrinsic
    }

    /// Pauli weights `(p_I, p_X, p_Y, p_Z)` of the channel over `dt`.
    ///
    /// Without an explicit `T2` the coherence decays at the `T1`-limited
    /// rate `1/(2 T1)`.
    pub fn pauli_weights(&self, dt: T) -> [T; 4] {
        let lambda_z = self.t1.map_or(T::one(), |t1| (-dt / t1).exp());
        let lambda_xy = match (self.t2_intrinsic, self.t1) {
            (Some(t2), _) => (-dt / t2).exp(),
            (None, Some(t1)) => (-dt / (T::lit(2.0) * t1)).exp(),
            (None, None) => T::one(),
        };
        let q = T::lit(0.25);
        let one = T::one();
        let two = T::lit(2.0);
        [
            q * (one + two * lambda_xy + lambda_z),
            q * (one - lambda_z),
            q * (one - lambda_z),
            q * (one - two * lambda_xy + lambda_z),
        ]
    }
}

/// Applies the single-qubit relaxation channel over `dt`; `None` is the identity map.
pub fn apply_intrinsic_relaxation<T: Real>(
    rho: &DensityMatrix<T>,
    params: Option<&RelaxationParams<T>>,
    dt: T,
) -> Result<DensityMatrix<T>> {
    if !(dt >= T::zero()) {
        return Err(invalid("dt", format!("must be non-negative, got {dt}")));
    }
    if rho.register() == Register::Joint {
        return Err(Error::DimensionMismatch { expected: 2, found: 4 });
    }
    let Some(params) = params else {
        return Ok(*rho);
    };
    let w = params.pauli_weights(dt);
    let mut out = ComplexMatrix::zeros(Dim::Two);
    for (p, weight) in Pauli::ALL.iter().zip(w) {
        out = out + rho.matrix().conjugate_by(&pauli(*p)).scale(cr(weight));
    }
    Ok(DensityMatrix::from_trusted(out, rho.register()))
}

/// Applies the channel independently to both qubits of a joint operator.
pub(crate) fn relax_joint<T: Real>(m: &ComplexMatrix<T>, params: &RelaxationParams<T>, dt: T) -> ComplexMatrix<T> {
    let w = params.pauli_weights(dt);
    let id = pauli::<T>(Pauli::I);
    let mut current = *m;
    for q in [Qubit::System, Qubit::Environment] {
        let mut acc = ComplexMatrix::zeros(Dim::Four);
        for (p, weight) in Pauli::ALL.iter().zip(w) {
            if weight == T::zero() {
                continue;
            }
            let op = match q {
                Qubit::System => tensor(&pauli(*p), &id),
                Qubit::Environment => tensor(&id, &pauli(*p)),
            }
            .expect("2x2 factors");
            acc = acc + current.conjugate_by(&op).scale(cr(weight));
        }
        current = acc;
    }
    current
}
