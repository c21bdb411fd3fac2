//! Batch front-end for the engdec simulator.
//!
//! Every subcommand computes first, then writes its artifacts
//! single-threaded and finishes with `manifest.json`. Outputs depend only
//! on the configuration and seed, never on `--jobs`.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::Artifact;
pub use config::ExperimentConfig;
pub use error::CliError;
use manifest::{sha256_hex, FileEntry, RunManifest, Timings, MANIFEST_NAME};

/// Default output root when neither `--out` nor the config sets one.
pub const OUT_ENV: &str = "ENGDEC_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "engdec", version, about = "Engineered decoherence simulations")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,

    /// Output directory; overrides the config and the environment.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Magnetisation decay under each configured sequence.
    Decay,
    /// Noise spectroscopy profiles.
    Spectrum,
    /// Process tomography and the |χ_ZZ| table.
    Qpt,
    /// 1/T2 against the kick rate.
    RateSweep,
    /// Print the Uhrig pulse instants in ms.
    UddTimes {
        #[arg(short = 'n', long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        cycle_ms: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Decay => "decay",
            Self::Spectrum => "spectrum",
            Self::Qpt => "qpt",
            Self::RateSweep => "rate-sweep",
            Self::UddTimes { .. } => "udd-times",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            ExperimentConfig::from_toml_str(&text).map_err(|mut e| {
                e.key = format!("{}: {}", path.display(), e.key);
                e
            })?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = cli.out.clone().or_else(|| cfg.out.clone()) {
        return dir;
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| "engdec-out".into());
    root.join(cli.command.name())
}

/// Writes artifacts, then the manifest as the completion marker.
pub fn write_run(
    dir: &Path,
    artifacts: &[Artifact],
    command: &str,
    cfg: &ExperimentConfig,
    jobs: usize,
    compute_s: f64,
) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let stale = dir.join(MANIFEST_NAME);
    if stale.exists() {
        fs::remove_file(&stale).map_err(CliError::io(&stale))?;
    }
    let mut files = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(CliError::io(&path))?;
        files.push(FileEntry {
            path: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len() as u64,
        });
    }
    let manifest = RunManifest {
        tool: "engdec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_sha256: sha256_hex(cfg.canonical().to_toml_string().as_bytes()),
        seed: cfg.seed,
        jobs,
        files,
        timings: Timings {
            compute_s,
            write_s: start.elapsed().as_secs_f64(),
        },
    };
    manifest.write(dir)?;
    Ok(manifest)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Command::UddTimes { n, cycle_ms } = cli.command {
        let row = commands::udd_row(n as usize, cycle_ms)?;
        match cli.format {
            Format::Csv => println!("{row}"),
            Format::Json => {
                let times = engdec::dd::udd_times(n as usize, cycle_ms)?;
                println!("{}", serde_json::json!({ "n": n, "cycle_ms": cycle_ms, "times_ms": times }));
            }
        }
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    let dir = out_dir(&cli, &cfg);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j as usize);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let start = Instant::now();
    let artifacts = pool.install(|| match cli.command {
        Command::Decay => commands::decay(&cfg, cli.format),
        Command::Spectrum => commands::spectrum(&cfg, cli.format),
        Command::Qpt => commands::qpt(&cfg, cli.format),
        Command::RateSweep => commands::rate_sweep(&cfg, cli.format),
        Command::UddTimes { .. } => unreachable!(),
    })?;
    let compute_s = start.elapsed().as_secs_f64();
    let manifest = write_run(&dir, &artifacts, cli.command.name(), &cfg, pool.current_num_threads(), compute_s)?;
    eprintln!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
