//! π-pulse schedules, merged pulse/kick timelines and their evolution.

mod averaged;
mod schedule;
mod simulate;
mod timeline;

pub use averaged::{averaged_coherence, AveragedCoherence};
pub use schedule::{cpmg_times, udd_times, DDParams, SequenceKind};
pub use simulate::{pulse_rotation, simulate_timeline, system_mx};
pub use timeline::{build_timeline, Pulse, PulseEvent, Timeline, TimelineWarning};

pub(crate) use simulate::CompiledTimeline;
