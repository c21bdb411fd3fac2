//! Random-kick decoherence: kick sampling, Monte Carlo trajectories and the
//! exact kick-averaged closed form used as their oracle.

mod closed_form;
mod kick;
mod rate;
mod trajectory;

pub(crate) use closed_form::diagonal_of;
pub use closed_form::{closed_form_f, superop_step};
pub use kick::{gamma_of_theta, kick_rotation, sample_kick, KickParams, PhaseMode, SuperopCoeffs};
pub use rate::{branch_envelope, t2_of_kick_rate, FitWindow, RatePoint};
pub(crate) use trajectory::system_coherence;
pub use trajectory::{monte_carlo_f, trajectory_propagate, DecoherenceSeries, SeriesSource};
