use std::fmt::{self, Write as _};

use serde::Serialize;

use super::schedule::DDParams;
use crate::error::{invalid, Error, Result};
use crate::noise::KickParams;
use crate::qdyn::Qubit;
use crate::scalar::Real;

/// Relative slack for the last kick landing exactly on `t_c`.
const FENCEPOST_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Pulse<T: Real> {
    /// Rotation by `angle` about `cos(axis_phase) x + sin(axis_phase) y`.
    Rotation { axis_phase: T, angle: T },
    /// Environment kick whose angles are drawn when the timeline runs.
    Kick,
}

/// One instantaneous event within a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseEvent<T: Real> {
    pub time: T,
    pub target: Qubit,
    pub pulse: Pulse<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TimelineWarning {
    /// The kick interval is longer than the cycle, so no kick fits.
    KickIntervalExceedsCycle { interval: f64, cycle_time: f64 },
}

impl fmt::Display for TimelineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::KickIntervalExceedsCycle { interval, cycle_time } => write!(
                f,
                "kick interval {interval:e} s exceeds cycle time {cycle_time:e} s; no kicks are scheduled"
            ),
        }
    }
}

/// A repeated cycle of instantaneous events separated by free evolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timeline<T: Real> {
    cycle_time: T,
    events: Vec<PulseEvent<T>>,
    n_cycles: usize,
    kicks: Option<KickParams<T>>,
    warnings: Vec<TimelineWarning>,
}

/// Merges the π-pulse train of `dd` with kicks at `k·δ` (`k ≥ 1`, `k·δ ≤ t_c`)
/// into one cycle of length `t_c`. When `dd` is given its cycle time must
/// equal `t_c`.
pub fn build_timeline<T: Real>(
    dd: Option<&DDParams<T>>,
    kicks: Option<&KickParams<T>>,
    t_c: T,
    n_cycles: usize,
) -> Result<Timeline<T>> {
    if dd.is_none() && kicks.is_none() {
        return Err(Error::EmptyTimeline);
    }
    if !(t_c > T::zero()) || !t_c.is_finite() {
        return Err(invalid("cycle_time", format!("must be positive, got {t_c}")));
    }
    let mut events = Vec::new();
    let mut warnings = Vec::new();
    if let Some(dd) = dd {
        let tol = T::lit(FENCEPOST_SLACK) * t_c;
        if (dd.cycle_time() - t_c).abs() > tol {
            return Err(invalid(
                "cycle_time",
                format!("DD cycle {} differs from timeline cycle {t_c}", dd.cycle_time()),
            ));
        }
        let pulse = Pulse::Rotation {
            axis_phase: dd.pulse_phase(),
            angle: dd.pulse_angle(),
        };
        events.extend(dd.pulse_times().into_iter().map(|time| PulseEvent {
            time,
            target: Qubit::System,
            pulse,
        }));
    }
    if let Some(k) = kicks {
        let delta = k.interval();
        let n = kick_slots(t_c, delta);
        if n == 0 {
            warnings.push(TimelineWarning::KickIntervalExceedsCycle {
                interval: delta.as_f64(),
                cycle_time: t_c.as_f64(),
            });
        }
        events.extend((1..=n).map(|i| PulseEvent {
            time: (T::lit(i as f64) * delta).min(t_c),
            target: Qubit::Environment,
            pulse: Pulse::Kick,
        }));
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times").then(a.target.cmp(&b.target)));
    Ok(Timeline {
        cycle_time: t_c,
        events,
        n_cycles,
        kicks: kicks.copied(),
        warnings,
    })
}

/// Number of kick instants `k·δ ≤ t_c`, counting `t_c` itself when it is
/// a multiple of `δ` up to rounding.
fn kick_slots<T: Real>(t_c: T, delta: T) -> usize {
    let ratio = (t_c / delta).as_f64();
    (ratio * (1.0 + FENCEPOST_SLACK)).floor() as usize
}

impl<T: Real> Timeline<T> {
    /// Pulse-free cycles, used for no-control baselines.
    pub(crate) fn free_evolution(t_c: T, n_cycles: usize) -> Self {
        Self {
            cycle_time: t_c,
            events: Vec::new(),
            n_cycles,
            kicks: None,
            warnings: Vec::new(),
        }
    }

    pub fn cycle_time(&self) -> T {
        self.cycle_time
    }

    pub fn events(&self) -> &[PulseEvent<T>] {
        &self.events
    }

    pub fn n_cycles(&self) -> usize {
        self.n_cycles
    }

    pub fn kicks(&self) -> Option<&KickParams<T>> {
        self.kicks.as_ref()
    }

    pub fn warnings(&self) -> &[TimelineWarning] {
        &self.warnings
    }

    pub fn with_cycles(mut self, n_cycles: usize) -> Self {
        self.n_cycles = n_cycles;
        self
    }

    /// Replaces the kick seed, keeping every event in place.
    pub fn with_kick_seed(mut self, seed: u64) -> Self {
        if let Some(k) = self.kicks.as_mut() {
            *k = k.with_seed(seed);
        }
        self
    }

    pub fn count(&self, target: Qubit) -> usize {
        self.events.iter().filter(|e| e.target == target).count()
    }

    /// Plain-text listing, one event per line: `time_s target axis angle`.
    /// Kick axes and angles are drawn at run time and print as `rand`.
    pub fn to_event_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# cycle_time_s {:.16e}", self.cycle_time.as_f64());
        let _ = writeln!(out, "# n_cycles {}", self.n_cycles);
        let _ = writeln!(out, "# time_s target axis_phase_rad angle_rad");
        for e in &self.events {
            let target = match e.target {
                Qubit::System => "system",
                Qubit::Environment => "environment",
            };
            let _ = match e.pulse {
                Pulse::Rotation { axis_phase, angle } => writeln!(
                    out,
                    "{:.16e} {target} {:.16e} {:.16e}",
                    e.time.as_f64(),
                    axis_phase.as_f64(),
                    angle.as_f64()
                ),
                Pulse::Kick => writeln!(out, "{:.16e} {target} rand rand", e.time.as_f64()),
            };
        }
        out
    }
}
