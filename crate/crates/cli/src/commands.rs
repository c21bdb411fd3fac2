//! Pipelines behind each subcommand. They only compute; the caller writes
//! the returned artifacts.

use engdec::dd::udd_times;
use engdec::ensemble::derive_seed;
use engdec::noise::{t2_of_kick_rate, FitWindow};
use engdec::qpt::{chi_zz_csv, chi_zz_report, AnalyticChannel, ChiZzRow, ProcessSpec, SimulatedProcess};
use engdec::spectroscopy::{
    fit_doublet, fit_gaussians, kicks_only_profile, simulate_decay, sweep_spectrum, DecayConfig, DecayCurve,
    ExpFit, FitError, GaussianFit, GaussianFitError, Provenance, SpectralProfile, SweepConfig,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, QptSpec, SequenceName};
use crate::error::CliError;
use crate::Format;

const MS: f64 = 1e-3;
/// Fewest grid points for which regimes can be told apart.
pub const MIN_RATE_POINTS: usize = 5;

type FitResult = Result<ExpFit<f64>, FitError>;

/// One output file, relative to the run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: impl Into<String>, body: String) -> Self {
        Self {
            name: name.into(),
            bytes: body.into_bytes(),
        }
    }

    fn json(name: impl Into<String>, value: &impl Serialize) -> Self {
        let body = serde_json::to_string_pretty(value).expect("artifact serializes") + "\n";
        Self::text(name, body)
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Float rendered for file names: `2.5` becomes `2p5`.
fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

fn fit_status(fit: &FitResult) -> &'static str {
    match fit {
        Ok(_) => "ok",
        Err(FitError::InsufficientPoints { .. }) => "insufficient_points",
        Err(FitError::NonDecaying { .. }) => "non_decaying",
        Err(FitError::NonFinite) => "non_finite",
    }
}

fn fit_row(label: &str, fit: &FitResult) -> String {
    let (t2, se, a, r2, n) = match fit {
        Ok(f) => (f.t2, f.t2_stderr, f.amplitude, f.r_squared, f.n_points_used),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0),
    };
    format!("{label},{},{},{},{},{n},{}\n", num(t2), num(se), num(a), num(r2), fit_status(fit))
}

fn ln_or_nan(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NAN
    }
}

/// One curve per requested sequence, a combined log table and the fits.
pub fn decay(cfg: &ExperimentConfig, format: Format) -> Result<Vec<Artifact>, CliError> {
    let section = cfg.decay.clone().unwrap_or_default();
    if section.sequences.is_empty() {
        return Err(CliError::Usage("[decay].sequences is empty".into()));
    }
    let sys = cfg.spin_system()?;
    let kicks = cfg.kick_params()?;
    let relax = cfg.relaxation()?;
    let cycle = match (&cfg.dd, section.cycle_ms) {
        (Some(_), _) => cfg
            .dd_params(engdec::dd::SequenceKind::Cpmg)?
            .expect("dd present")
            .cycle_time(),
        (None, Some(c)) => c * MS,
        (None, None) => unreachable!("validated"),
    };
    let canonical = cfg.canonical();

    let mut curves: Vec<(SequenceName, DecayCurve<f64>, FitResult)> = Vec::new();
    for &seq in &section.sequences {
        let mut dc = DecayConfig::new(sys, cycle)?;
        if let Some(kind) = seq.kind() {
            dc = dc.with_dd(cfg.dd_params(kind)?.expect("validated"));
        }
        if seq.kicked() {
            dc = dc.with_kicks(kicks.expect("validated"));
        }
        if let Some(r) = relax {
            dc = dc.with_relaxation(r);
        }
        // Seeds follow the sequence identity, not its position in the list.
        let slot = SequenceName::ALL.iter().position(|s| *s == seq).expect("known") as u64;
        let dc = dc.with_seed(derive_seed(cfg.seed, slot));
        let curve = simulate_decay(&dc, section.n_cycles, cfg.ensemble.n_traj)?;
        let fit = fit_doublet(&curve);
        curves.push((seq, curve, fit));
    }

    let mut out = Vec::new();
    for (seq, curve, fit) in &curves {
        match format {
            Format::Csv => out.push(Artifact::text(format!("decay_{}.csv", seq.stem()), curve.to_csv())),
            Format::Json => out.push(Artifact::json(
                format!("decay_{}.json", seq.stem()),
                &json!({ "sequence": seq, "seed": cfg.seed, "config": canonical, "curve": curve, "fit": fit }),
            )),
        }
    }

    let mut log = String::from("time_s");
    for (seq, _, _) in &curves {
        log.push_str(&format!(",{0}_ln_mx,{0}_ln_doublet", seq.stem()));
    }
    log.push('\n');
    for k in 0..curves[0].1.len() {
        log.push_str(&num(curves[0].1.times[k]));
        for (_, c, _) in &curves {
            log.push_str(&format!(",{},{}", num(ln_or_nan(c.m_x[k])), num(ln_or_nan(c.doublet[k]))));
        }
        log.push('\n');
    }
    out.push(Artifact::text("log_magnetization.csv", log));

    let mut fits = String::from("sequence,t2_s,t2_stderr_s,amplitude,r_squared,n_points,status\n");
    for (seq, _, fit) in &curves {
        fits.push_str(&fit_row(seq.stem(), fit));
    }
    out.push(Artifact::text("decay_fits.csv", fits));
    Ok(out)
}

fn profile_artifact(
    name: &str,
    profile: &SpectralProfile<f64>,
    cfg: &ExperimentConfig,
    format: Format,
    extra: serde_json::Value,
) -> Artifact {
    match format {
        Format::Csv => Artifact::text(format!("{name}.csv"), profile.to_csv()),
        Format::Json => Artifact::json(
            format!("{name}.json"),
            &json!({ "seed": cfg.seed, "config": cfg.canonical(), "parameters": extra, "profile": profile }),
        ),
    }
}

fn gaussian_csv(result: &Result<GaussianFit<f64>, GaussianFitError<f64>>) -> String {
    let mut out = String::from("component,amplitude_per_s,center_rad_s,width_rad_s,residual_norm,status\n");
    let (fit, status) = match result {
        Ok(f) => (Some(f), "ok"),
        Err(GaussianFitError::NoConvergence { best }) => (Some(best), "no_convergence"),
        Err(_) => (None, "insufficient_points"),
    };
    match fit {
        Some(f) => {
            for (i, c) in f.components.iter().enumerate() {
                out.push_str(&format!(
                    "{i},{},{},{},{},{status}\n",
                    num(c.amplitude),
                    num(c.center),
                    num(c.width),
                    num(f.residual_norm)
                ));
            }
        }
        None => out.push_str(&format!("0,NaN,NaN,NaN,NaN,{status}\n")),
    }
    out
}

/// Total, baseline and kicks-only profiles for every (rate, θ) pair.
pub fn spectrum(cfg: &ExperimentConfig, format: Format) -> Result<Vec<Artifact>, CliError> {
    let section = cfg.spectrum.clone().unwrap_or_default();
    if section.tau_ms.is_empty() {
        return Err(CliError::Usage("[spectrum].tau_ms is empty".into()));
    }
    let tau: Vec<f64> = section.tau_ms.iter().map(|t| t * MS).collect();
    let n_traj = cfg.ensemble.n_traj;
    let mut base = SweepConfig::new(cfg.spin_system()?)
        .with_pulses_per_cycle(section.pulses_per_cycle)
        .with_seed(cfg.seed);
    if let Some(r) = cfg.relaxation()? {
        base = base.with_relaxation(r);
    }

    let mut out = Vec::new();
    // Without intrinsic relaxation the baseline is identically zero.
    let baseline = match base.relax {
        Some(_) => {
            let b = sweep_spectrum(&base, &tau, section.n_cycles, n_traj)?;
            out.push(profile_artifact("spectrum_baseline", &b, cfg, format, json!({})));
            Some(b)
        }
        None => None,
    };

    let mut summary = String::from("rate_per_ms,theta_deg,omega_rad_s,S_total_per_s,S_kicks_only_per_s,stderr\n");
    for (i, (rate, theta)) in cfg.spectrum_kicks()?.into_iter().enumerate() {
        let kicks = cfg.spectrum_kick_params(rate, theta)?;
        let sweep = base.clone().with_kicks(kicks).with_seed(derive_seed(cfg.seed, 1 + i as u64));
        let total = sweep_spectrum(&sweep, &tau, section.n_cycles, n_traj)?;
        let kicks_only = match &baseline {
            Some(b) => kicks_only_profile(&total, b),
            None => SpectralProfile {
                provenance: Provenance::KicksOnly,
                ..total.clone()
            },
        };
        let stem = format!("spectrum_g{}_th{}", tag(rate), tag(theta));
        let params = json!({ "rate_per_ms": rate, "theta_deg": theta });
        out.push(profile_artifact(&format!("{stem}_total"), &total, cfg, format, params.clone()));
        out.push(profile_artifact(&format!("{stem}_kicks_only"), &kicks_only, cfg, format, params));
        if section.gaussians > 0 {
            let fit = fit_gaussians(&kicks_only, section.gaussians);
            out.push(Artifact::text(format!("{stem}_gaussians.csv"), gaussian_csv(&fit)));
        }
        for p in &total.points {
            let ko = kicks_only.point_at(p.omega);
            summary.push_str(&format!(
                "{},{},{},{},{},{}\n",
                num(rate),
                num(theta),
                num(p.omega),
                num(p.s_value),
                num(ko.map(|k| k.s_value).unwrap_or(f64::NAN)),
                num(ko.map(|k| k.stderr).unwrap_or(p.stderr)),
            ));
        }
    }
    out.push(Artifact::text("spectrum_summary.csv", summary));
    Ok(out)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| match c {
            '+' => '_',
            ':' => '_',
            '.' => 'p',
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => c,
            _ => '_',
        })
        .collect()
}

/// Builds the process list of `[qpt]`.
pub fn qpt_specs(cfg: &ExperimentConfig) -> Result<Vec<ProcessSpec<f64>>, CliError> {
    let q = cfg.qpt.clone().unwrap_or_default();
    if q.specs.is_empty() {
        return Err(CliError::Usage("[qpt].specs is empty".into()));
    }
    let sys = cfg.spin_system()?;
    let kicks = cfg.kick_params()?;
    let relax = cfg.relaxation()?;
    let duration = q.n_pulses as f64 * q.tau_ms * MS;
    q.specs
        .iter()
        .map(|label| {
            let spec = QptSpec::parse(label).map_err(CliError::Usage)?;
            let analytic = |ch| ProcessSpec::analytic(label.clone(), ch);
            let simulated = |p: SimulatedProcess<f64>| {
                let p = match relax {
                    Some(r) => p.with_relaxation(r),
                    None => p,
                };
                ProcessSpec::simulated(label.clone(), p)
            };
            let built = match spec {
                QptSpec::Identity => analytic(AnalyticChannel::Identity),
                QptSpec::Not => analytic(AnalyticChannel::Not),
                QptSpec::PhaseDamping(f) => analytic(AnalyticChannel::PhaseDamping { f }),
                QptSpec::BitFlip(p) => analytic(AnalyticChannel::BitFlip { p }),
                QptSpec::Depolarizing(p) => analytic(AnalyticChannel::Depolarizing { p }),
                QptSpec::Noop => simulated(SimulatedProcess::noop(sys, duration)?),
                QptSpec::Simulated { dd, kicks: kicked } => {
                    let mut p = SimulatedProcess::new(sys, duration, cfg.ensemble.n_traj)?;
                    if kicked {
                        p = p.with_kicks(kicks.expect("validated"));
                    }
                    if let Some(kind) = dd {
                        let d = engdec::dd::DDParams::with_spacing(kind, q.n_pulses, q.tau_ms * MS)?
                            .with_pulse_error(q.pulse_error)?;
                        p = p.with_dd(d);
                    }
                    simulated(p)
                }
            };
            Ok(built?)
        })
        .collect()
}

/// χ per process plus the `|χ_ZZ|` comparison table.
pub fn qpt(cfg: &ExperimentConfig, format: Format) -> Result<Vec<Artifact>, CliError> {
    let rows: Vec<ChiZzRow<f64>> = chi_zz_report(&qpt_specs(cfg)?)?;
    let mut out = Vec::new();
    for r in &rows {
        let stem = file_stem(&r.label);
        out.push(Artifact::json(
            format!("chi_{stem}.json"),
            &json!({
                "label": r.label,
                "seed": cfg.seed,
                "omega_rad_s": r.omega,
                "S_per_s": r.s_omega,
                "result": r.result,
            }),
        ));
        out.push(Artifact::text(format!("chi_{stem}.txt"), r.result.chi.magnitude_table()));
    }
    match format {
        Format::Csv => out.push(Artifact::text("chi_zz.csv", chi_zz_csv(&rows))),
        Format::Json => {
            let table: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "label": r.label,
                        "chi_zz": r.chi_zz,
                        "stderr": r.chi_zz_stderr,
                        "omega_rad_s": r.omega,
                        "S_per_s": r.s_omega,
                    })
                })
                .collect();
            out.push(Artifact::json("chi_zz.json", &table));
        }
    }
    Ok(out)
}

/// `1/T2` against the kick rate from the closed form.
pub fn rate_sweep(cfg: &ExperimentConfig, format: Format) -> Result<Vec<Artifact>, CliError> {
    let section = cfg.rate_sweep.clone().unwrap_or_default();
    let grid = cfg.rate_grid();
    if grid.len() < MIN_RATE_POINTS {
        return Err(CliError::Usage(format!(
            "rate sweep needs at least {MIN_RATE_POINTS} points, got {}",
            grid.len()
        )));
    }
    let window = FitWindow {
        max_kicks: section.max_kicks,
        ..FitWindow::default()
    };
    let rates: Vec<f64> = grid.iter().map(|g| g / MS).collect();
    let points = t2_of_kick_rate(&cfg.spin_system()?, section.theta_deg.to_radians(), &rates, &window)?;
    let body = match format {
        Format::Csv => {
            let mut s = String::from("rate_per_ms,inv_t2_per_s,t2_s,r_squared,status\n");
            for p in &points {
                let (inv, t2, r2) = match &p.fit {
                    Ok(f) => (1.0 / f.t2, f.t2, f.r_squared),
                    Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                };
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    num(p.gamma_rate * MS),
                    num(inv),
                    num(t2),
                    num(r2),
                    fit_status(&p.fit)
                ));
            }
            return Ok(vec![Artifact::text("rate_sweep.csv", s)]);
        }
        Format::Json => json!({
            "theta_deg": section.theta_deg,
            "j_hz": cfg.system.j_hz,
            "window": window,
            "points": points,
        }),
    };
    Ok(vec![Artifact::json("rate_sweep.json", &body)])
}

/// `N,t_1,…,t_N` in milliseconds.
pub fn udd_row(n: usize, cycle_ms: f64) -> Result<String, CliError> {
    if !(cycle_ms > 0.0 && cycle_ms.is_finite()) {
        return Err(CliError::Usage(format!("--cycle-ms must be positive, got {cycle_ms}")));
    }
    let times = udd_times(n, cycle_ms).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut row = n.to_string();
    for t in times {
        row.push_str(&format!(",{t}"));
    }
    Ok(row)
}
