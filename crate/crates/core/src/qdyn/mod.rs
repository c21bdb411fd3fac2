//! Dense one- and two-qubit quantum dynamics: operators, states, partial
//! traces and the free propagator of the coupled spin pair.

mod matrix;
mod relaxation;
mod spin;
mod state;

pub use matrix::{pauli, tensor, ComplexMatrix, Dim, Pauli, Qubit};
pub(crate) use relaxation::relax_joint;
pub use relaxation::{apply_intrinsic_relaxation, RelaxationParams};
pub use spin::{free_propagator, SpinSystem};
pub(crate) use state::trace_out_environment;
pub use state::{evolve, expectation, partial_trace, DensityMatrix, Register, StateDefects};
