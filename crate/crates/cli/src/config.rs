//! On-disk experiment configuration.
//!
//! Boundary units are the laboratory ones: milliseconds, degrees, hertz and
//! kicks per millisecond. The accessors (`spin_system`, `kick_params`, ...)
//! convert to SI and radians once and re-run the core validation.

use std::fmt;
use std::path::PathBuf;

use engdec::dd::{DDParams, SequenceKind};
use engdec::noise::{KickParams, PhaseMode};
use engdec::qdyn::{RelaxationParams, SpinSystem};
use serde::{Deserialize, Serialize};

const MS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kicks: Option<KicksSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dd: Option<DdSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationSection>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecaySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qpt: Option<QptSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_sweep: Option<RateSweepSection>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default)]
    pub nu_s_hz: f64,
    #[serde(default)]
    pub nu_e_hz: f64,
    /// Placeholder coupling; set it to the sample's measured value.
    #[serde(default = "default_j")]
    pub j_hz: f64,
}

fn default_j() -> f64 {
    215.0
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            nu_s_hz: 0.0,
            nu_e_hz: 0.0,
            j_hz: default_j(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModeName {
    FixedY,
    UniformPhase,
}

impl From<PhaseModeName> for PhaseMode {
    fn from(p: PhaseModeName) -> Self {
        match p {
            PhaseModeName::FixedY => PhaseMode::FixedY,
            PhaseModeName::UniformPhase => PhaseMode::UniformPhase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KicksSection {
    pub theta_deg: f64,
    pub rate_per_ms: f64,
    #[serde(default = "default_phase_mode")]
    pub phase_mode: PhaseModeName,
}

fn default_phase_mode() -> PhaseModeName {
    PhaseModeName::FixedY
}

/// Pulse count and spacing of the decoupling sequences used by `decay`.
/// The sequence kind comes from the sequence names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdSection {
    pub n_pulses: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_ms: Option<f64>,
    #[serde(default)]
    pub pulse_error: f64,
    #[serde(default)]
    pub pulse_phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
}

fn default_n_traj() -> usize {
    200
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { n_traj: default_n_traj() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequenceName {
    #[serde(rename = "none")]
    Baseline,
    #[serde(rename = "kicks")]
    Kicks,
    #[serde(rename = "cpmg")]
    Cpmg,
    #[serde(rename = "udd")]
    Udd,
    #[serde(rename = "cpmg+kicks")]
    CpmgKicks,
    #[serde(rename = "udd+kicks")]
    UddKicks,
}

impl SequenceName {
    pub const ALL: [SequenceName; 6] = [
        Self::Baseline,
        Self::Kicks,
        Self::Cpmg,
        Self::Udd,
        Self::CpmgKicks,
        Self::UddKicks,
    ];

    /// File-name stem.
    pub fn stem(self) -> &'static str {
        match self {
            Self::Baseline => "none",
            Self::Kicks => "kicks",
            Self::Cpmg => "cpmg",
            Self::Udd => "udd",
            Self::CpmgKicks => "cpmg_kicks",
            Self::UddKicks => "udd_kicks",
        }
    }

    pub fn kind(self) -> Option<SequenceKind> {
        match self {
            Self::Cpmg | Self::CpmgKicks => Some(SequenceKind::Cpmg),
            Self::Udd | Self::UddKicks => Some(SequenceKind::Udd),
            _ => None,
        }
    }

    pub fn kicked(self) -> bool {
        matches!(self, Self::Kicks | Self::CpmgKicks | Self::UddKicks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    #[serde(default = "all_sequences")]
    pub sequences: Vec<SequenceName>,
    #[serde(default = "default_decay_cycles")]
    pub n_cycles: usize,
    /// Sampling interval when no `[dd]` section fixes it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_ms: Option<f64>,
}

fn all_sequences() -> Vec<SequenceName> {
    SequenceName::ALL.to_vec()
}

fn default_decay_cycles() -> usize {
    40
}

impl Default for DecaySection {
    fn default() -> Self {
        Self {
            sequences: all_sequences(),
            n_cycles: default_decay_cycles(),
            cycle_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub tau_ms: Vec<f64>,
    #[serde(default = "default_spectrum_cycles")]
    pub n_cycles: usize,
    #[serde(default = "one")]
    pub pulses_per_cycle: usize,
    /// Kick ranges to sweep; defaults to `[kicks].theta_deg`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_deg: Vec<f64>,
    /// Kick rates to sweep; defaults to `[kicks].rate_per_ms`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_per_ms: Vec<f64>,
    /// Gaussian components fitted to each kicks-only profile (0 disables).
    #[serde(default)]
    pub gaussians: usize,
}

fn default_spectrum_cycles() -> usize {
    300
}

fn one() -> usize {
    1
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            tau_ms: (1..=9).map(|k| 0.5 * k as f64 + 0.5).collect(),
            n_cycles: default_spectrum_cycles(),
            pulses_per_cycle: 1,
            theta_deg: vec![],
            rate_per_ms: vec![],
            gaussians: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QptSection {
    /// `NOOP`, `K`, `C`, `U`, `C+K`, `U+K`, or analytic channels
    /// `identity`, `not`, `pd:<f>`, `bitflip:<p>`, `depol:<p>`.
    #[serde(default = "default_specs")]
    pub specs: Vec<String>,
    #[serde(default = "default_qpt_pulses")]
    pub n_pulses: usize,
    #[serde(default = "default_qpt_tau")]
    pub tau_ms: f64,
    #[serde(default)]
    pub pulse_error: f64,
}

fn default_specs() -> Vec<String> {
    ["NOOP", "K", "U+K", "C+K"].map(String::from).to_vec()
}

fn default_qpt_pulses() -> usize {
    7
}

fn default_qpt_tau() -> f64 {
    4.0
}

impl Default for QptSection {
    fn default() -> Self {
        Self {
            specs: default_specs(),
            n_pulses: default_qpt_pulses(),
            tau_ms: default_qpt_tau(),
            pulse_error: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepSection {
    /// Large on purpose: small ranges need very long horizons to saturate.
    #[serde(default = "default_rate_theta")]
    pub theta_deg: f64,
    /// Explicit grid; when empty a log grid `[min, max]` with `points` is used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates_per_ms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_per_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_per_ms: Option<f64>,
    #[serde(default = "default_rate_points")]
    pub points: usize,
    #[serde(default = "default_max_kicks")]
    pub max_kicks: usize,
}

fn default_rate_theta() -> f64 {
    45.0
}

fn default_rate_points() -> usize {
    40
}

fn default_max_kicks() -> usize {
    400_000
}

impl Default for RateSweepSection {
    fn default() -> Self {
        Self {
            theta_deg: default_rate_theta(),
            rates_per_ms: vec![],
            min_per_ms: None,
            max_per_ms: None,
            points: default_rate_points(),
            max_kicks: default_max_kicks(),
        }
    }
}

impl Default for ExperimentConfig {
    /// Desk-scale defaults used when no file is given.
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out: None,
            system: SystemSection::default(),
            kicks: Some(KicksSection {
                theta_deg: 1.0,
                rate_per_ms: 25.0,
                phase_mode: PhaseModeName::FixedY,
            }),
            dd: Some(DdSection {
                n_pulses: 4,
                tau_ms: Some(3.2),
                cycle_ms: None,
                pulse_error: 0.0,
                pulse_phase_deg: 0.0,
            }),
            relaxation: None,
            ensemble: EnsembleSection::default(),
            decay: Some(DecaySection::default()),
            spectrum: Some(SpectrumSection::default()),
            qpt: Some(QptSection::default()),
            rate_sweep: Some(RateSweepSection::default()),
        }
    }
}

/// A rejected configuration, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        line: None,
        key: key.to_string(),
        message: message.to_string(),
    }
}

/// 1-based line of `key` inside `[section]` (or the top level when empty).
fn locate(source: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.rsplit_once('.') {
        Some((s, k)) => (s.trim_matches(['[', ']']), k),
        None => ("", dotted),
    };
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(key, format!("must be positive and finite, got {v}")))
    }
}

fn core<T>(key: &str, r: engdec::Result<T>) -> Result<T, ConfigError> {
    r.map_err(|e| err(key, e))
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the offending line.
    pub fn from_toml_str(source: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(source).map_err(|e| ConfigError {
            line: e.span().map(|s| source[..s.start].matches('\n').count() + 1),
            key: "toml".into(),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|mut e| {
            e.line = locate(source, &e.key);
            e
        })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Canonical form for hashing and provenance: no output location.
    pub fn canonical(&self) -> Self {
        Self {
            out: None,
            ..self.clone()
        }
    }

    /// Re-runs every core invariant the configuration refers to.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spin_system()?;
        self.kick_params()?;
        self.relaxation()?;
        if let Some(dd) = &self.dd {
            self.dd_params(SequenceKind::Cpmg)?;
            self.dd_params(SequenceKind::Udd)?;
            if dd.tau_ms.is_some() == dd.cycle_ms.is_some() {
                return Err(err("[dd].tau_ms", "give exactly one of tau_ms and cycle_ms"));
            }
        }
        if self.ensemble.n_traj == 0 {
            return Err(err("[ensemble].n_traj", "need at least one trajectory"));
        }
        if let Some(d) = &self.decay {
            if let Some(c) = d.cycle_ms {
                positive("[decay].cycle_ms", c)?;
            }
            for s in &d.sequences {
                if s.kicked() && self.kicks.is_none() {
                    return Err(err("[decay].sequences", format!("`{}` needs a [kicks] section", s.stem())));
                }
                if s.kind().is_some() && self.dd.is_none() {
                    return Err(err("[decay].sequences", format!("`{}` needs a [dd] section", s.stem())));
                }
            }
            if self.dd.is_none() && d.cycle_ms.is_none() {
                return Err(err("[decay].cycle_ms", "required without a [dd] section"));
            }
        }
        if let Some(s) = &self.spectrum {
            for &t in &s.tau_ms {
                positive("[spectrum].tau_ms", t)?;
            }
            if s.pulses_per_cycle == 0 {
                return Err(err("[spectrum].pulses_per_cycle", "must be at least 1"));
            }
            if s.gaussians > 2 {
                return Err(err("[spectrum].gaussians", "at most 2 components"));
            }
            self.spectrum_kicks()?;
        }
        if let Some(q) = &self.qpt {
            self.qpt_specs_checked(q)?;
        }
        if let Some(r) = &self.rate_sweep {
            let theta = positive("[rate_sweep].theta_deg", r.theta_deg)?;
            if theta > 180.0 {
                return Err(err("[rate_sweep].theta_deg", "must not exceed 180"));
            }
            for &g in &r.rates_per_ms {
                positive("[rate_sweep].rates_per_ms", g)?;
            }
            if r.rates_per_ms.windows(2).any(|w| w[1] <= w[0]) {
                return Err(err("[rate_sweep].rates_per_ms", "must be strictly ascending"));
            }
            if let (Some(a), Some(b)) = (r.min_per_ms, r.max_per_ms) {
                if positive("[rate_sweep].min_per_ms", a)? >= positive("[rate_sweep].max_per_ms", b)? {
                    return Err(err("[rate_sweep].max_per_ms", "must exceed min_per_ms"));
                }
            }
        }
        Ok(())
    }

    pub fn spin_system(&self) -> Result<SpinSystem<f64>, ConfigError> {
        let s = &self.system;
        core("[system].j_hz", SpinSystem::new(s.nu_s_hz, s.nu_e_hz, s.j_hz))
    }

    pub fn kick_params(&self) -> Result<Option<KickParams<f64>>, ConfigError> {
        self.kicks
            .as_ref()
            .map(|k| kicks_from(k.theta_deg, k.rate_per_ms, k.phase_mode, self.seed))
            .transpose()
    }

    pub fn relaxation(&self) -> Result<Option<RelaxationParams<f64>>, ConfigError> {
        let Some(r) = &self.relaxation else {
            return Ok(None);
        };
        let t1 = r.t1_ms.map(|t| positive("[relaxation].t1_ms", t)).transpose()?;
        let t2 = r.t2_ms.map(|t| positive("[relaxation].t2_ms", t)).transpose()?;
        core("[relaxation].t2_ms", RelaxationParams::new(t1.map(|t| t * MS), t2.map(|t| t * MS))).map(Some)
    }

    pub fn dd_params(&self, kind: SequenceKind) -> Result<Option<DDParams<f64>>, ConfigError> {
        let Some(d) = &self.dd else {
            return Ok(None);
        };
        let base = match (d.tau_ms, d.cycle_ms) {
            (Some(tau), _) => DDParams::with_spacing(kind, d.n_pulses, positive("[dd].tau_ms", tau)? * MS),
            (None, Some(c)) => DDParams::new(kind, d.n_pulses, positive("[dd].cycle_ms", c)? * MS),
            (None, None) => return Err(err("[dd].tau_ms", "give exactly one of tau_ms and cycle_ms")),
        };
        let dd = core("[dd].n_pulses", base)?.with_phase(d.pulse_phase_deg.to_radians());
        core("[dd].pulse_error", dd.with_pulse_error(d.pulse_error)).map(Some)
    }

    /// Every (rate, θ) pair of the spectrum sweep, in kicks/ms and degrees.
    pub fn spectrum_kicks(&self) -> Result<Vec<(f64, f64)>, ConfigError> {
        let s = self.spectrum.clone().unwrap_or_default();
        let rates = if s.rate_per_ms.is_empty() {
            self.kicks.iter().map(|k| k.rate_per_ms).collect()
        } else {
            s.rate_per_ms.clone()
        };
        let thetas = if s.theta_deg.is_empty() {
            self.kicks.iter().map(|k| k.theta_deg).collect()
        } else {
            s.theta_deg.clone()
        };
        if rates.is_empty() || thetas.is_empty() {
            return Err(err("[spectrum].theta_deg", "no kick parameters: add [kicks] or list them here"));
        }
        let mode = self.kicks.as_ref().map(|k| k.phase_mode).unwrap_or(PhaseModeName::FixedY);
        let mut pairs = Vec::new();
        for &r in &rates {
            for &t in &thetas {
                kicks_from(t, r, mode, 0)?;
                pairs.push((r, t));
            }
        }
        Ok(pairs)
    }

    pub fn spectrum_kick_params(&self, rate_per_ms: f64, theta_deg: f64) -> Result<KickParams<f64>, ConfigError> {
        let mode = self.kicks.as_ref().map(|k| k.phase_mode).unwrap_or(PhaseModeName::FixedY);
        kicks_from(theta_deg, rate_per_ms, mode, self.seed)
    }

    fn qpt_specs_checked(&self, q: &QptSection) -> Result<(), ConfigError> {
        for label in &q.specs {
            QptSpec::parse(label).map_err(|m| err("[qpt].specs", m))?;
        }
        positive("[qpt].tau_ms", q.tau_ms)?;
        core("[qpt].n_pulses", DDParams::with_spacing(SequenceKind::Cpmg, q.n_pulses, q.tau_ms * MS))
            .and_then(|d| core("[qpt].pulse_error", d.with_pulse_error(q.pulse_error)))?;
        let needs_kicks = q
            .specs
            .iter()
            .any(|l| matches!(QptSpec::parse(l), Ok(QptSpec::Simulated { kicks: true, .. })));
        if needs_kicks && self.kicks.is_none() {
            return Err(err("[qpt].specs", "kicked specs need a [kicks] section"));
        }
        Ok(())
    }

    /// Log-spaced or explicit kick rates of the rate sweep, in kicks/ms.
    pub fn rate_grid(&self) -> Vec<f64> {
        let r = self.rate_sweep.clone().unwrap_or_default();
        if !r.rates_per_ms.is_empty() {
            return r.rates_per_ms;
        }
        let j_per_ms = self.system.j_hz * MS;
        let lo = r.min_per_ms.unwrap_or(0.1 * j_per_ms);
        let hi = r.max_per_ms.unwrap_or(100.0 * j_per_ms);
        if r.points < 2 {
            return vec![lo; r.points];
        }
        let step = (hi / lo).ln() / (r.points - 1) as f64;
        (0..r.points).map(|k| lo * (step * k as f64).exp()).collect()
    }
}

fn kicks_from(theta_deg: f64, rate_per_ms: f64, mode: PhaseModeName, seed: u64) -> Result<KickParams<f64>, ConfigError> {
    positive("[kicks].rate_per_ms", rate_per_ms)?;
    core(
        "[kicks].theta_deg",
        KickParams::new(theta_deg.to_radians(), rate_per_ms / MS, mode.into(), seed),
    )
}

/// A parsed `[qpt].specs` entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QptSpec {
    Noop,
    Simulated { dd: Option<SequenceKind>, kicks: bool },
    Identity,
    Not,
    PhaseDamping(f64),
    BitFlip(f64),
    Depolarizing(f64),
}

impl QptSpec {
    pub fn parse(label: &str) -> Result<Self, String> {
        let param = |rest: &str| {
            rest.parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| format!("`{label}`: parameter must be a number in [0, 1]"))
        };
        let upper = label.to_ascii_uppercase();
        Ok(match upper.as_str() {
            "NOOP" => Self::Noop,
            "K" => Self::Simulated { dd: None, kicks: true },
            "C" => Self::Simulated { dd: Some(SequenceKind::Cpmg), kicks: false },
            "U" => Self::Simulated { dd: Some(SequenceKind::Udd), kicks: false },
            "C+K" => Self::Simulated { dd: Some(SequenceKind::Cpmg), kicks: true },
            "U+K" => Self::Simulated { dd: Some(SequenceKind::Udd), kicks: true },
            "IDENTITY" => Self::Identity,
            "NOT" => Self::Not,
            _ => match label.split_once(':') {
                Some(("pd", v)) => Self::PhaseDamping(param(v)?),
                Some(("bitflip", v)) => Self::BitFlip(param(v)?),
                Some(("depol", v)) => Self::Depolarizing(param(v)?),
                _ => return Err(format!("unknown process `{label}`")),
            },
        })
    }
}
