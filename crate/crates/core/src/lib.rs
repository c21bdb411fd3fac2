//! Simulation and analysis of engineered decoherence on a system qubit
//! coupled to a single environment qubit.
//!
//! The environment is driven by trains of small random rotations ("kicks").
//! The crate provides the exact kick-averaged dynamics, Monte Carlo
//! trajectories, CPMG/UDD decoupling of the system, noise spectroscopy
//! through `T2` fits, and single-qubit process tomography of the result.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dd;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod qdyn;
pub mod qpt;
pub mod scalar;
pub mod spectroscopy;
pub mod tolerance;

pub use error::{Error, Result};
pub use scalar::{Real, C};
pub use tolerance::Tolerances;

pub type ComplexMatrix64 = qdyn::ComplexMatrix<f64>;
pub type DensityMatrix64 = qdyn::DensityMatrix<f64>;
pub type SpinSystem64 = qdyn::SpinSystem<f64>;
pub type RelaxationParams64 = qdyn::RelaxationParams<f64>;
pub type KickParams64 = noise::KickParams<f64>;
pub type DecoherenceSeries64 = noise::DecoherenceSeries<f64>;
pub type DDParams64 = dd::DDParams<f64>;
pub type Timeline64 = dd::Timeline<f64>;
pub type DecayConfig64 = spectroscopy::DecayConfig<f64>;
pub type DecayCurve64 = spectroscopy::DecayCurve<f64>;
pub type ExpFit64 = spectroscopy::ExpFit<f64>;
pub type SpectralProfile64 = spectroscopy::SpectralProfile<f64>;
pub type SweepConfig64 = spectroscopy::SweepConfig<f64>;
pub type GaussianFit64 = spectroscopy::GaussianFit<f64>;
pub type ChiMatrix64 = qpt::ChiMatrix<f64>;
pub type ProcessSpec64 = qpt::ProcessSpec<f64>;
pub type QptResult64 = qpt::QptResult<f64>;

pub type ComplexMatrix32 = qdyn::ComplexMatrix<f32>;
pub type DensityMatrix32 = qdyn::DensityMatrix<f32>;
pub type SpinSystem32 = qdyn::SpinSystem<f32>;
