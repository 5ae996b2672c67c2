//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
//! Every run writes `manifest.json` next to its outputs; passing that file
//! back as `--config` reproduces the run.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::detector::decide;
use crate::error::{Error, Result};
use crate::io::{write_frame_csv, write_freq_grid_csv, write_rdmap_csv, write_sample_grid_bin, write_sample_grid_csv};
use crate::montecarlo::{roc_sweep, run_trial, synthesize_trial, write_roc_csv, TrialOptions};
use crate::plot::{read_roc_csv, render_roc_svg};
use crate::rdmap::{baseline_estimate, extract_peak_observations, range_doppler_map};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "jrcsim", version, about = "OFDM joint radar-communication false-target simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set scenario.snr_db=9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Master seed; overrides run.seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (0 = all cores); overrides run.workers.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial and write its record.
    Simulate {
        /// Use the true CFO in the false-target fit.
        #[arg(long)]
        genie: bool,
        /// Also dump the frame, sample grid and frequency grid.
        #[arg(long)]
        dump: bool,
    },
    /// Export the range-Doppler map and peak observations of one trial.
    Rdmap,
    /// Sweep thresholds and SNRs and write ROC curves.
    Roc,
    /// Render a ROC CSV to SVG.
    Plot {
        /// ROC CSV produced by `roc`.
        csv: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Rdmap => "rdmap",
            Command::Roc => "roc",
            Command::Plot { .. } => "plot",
        }
    }
}

/// Written as `manifest.json` alongside every run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub master_seed: u64,
    pub config_hash: String,
    /// The fully resolved configuration.
    pub config_toml: String,
    pub outputs: Vec<String>,
    pub timestamp_unix: u64,
}

/// Resolves the configuration with the documented precedence.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    if let Some(w) = common.workers {
        overrides.push(format!("run.workers={w}"));
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Usage(_) | Error::Parse(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>> {
    outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, outputs: &mut Vec<String>) -> Result<()> {
    let mut w = create(dir, name, outputs)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    let ofdm = cfg.ofdm_config()?;
    let dir = cli.common.out.as_path();
    std::fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();

    match &cli.command {
        Command::Simulate { genie, dump } => {
            let scenario = cfg.scenario()?;
            let mode = cfg.mode()?;
            let opts = if *genie {
                TrialOptions::genie_for(&scenario, mode)
            } else {
                TrialOptions::estimated(mode)
            };
            let record = run_trial(&ofdm, &scenario, &opts)?;
            let outcome = record.score().map(|s| decide(s, cfg.detector.gamma, mode));
            write_json(
                dir,
                "trial.json",
                &serde_json::json!({ "record": record, "outcome": outcome }),
                &mut outputs,
            )?;
            if *dump {
                let sig = synthesize_trial(&ofdm, &scenario)?;
                write_frame_csv(&sig.frame, &ofdm, create(dir, "frame.csv", &mut outputs)?)?;
                write_sample_grid_csv(&sig.grid, create(dir, "samples.csv", &mut outputs)?)?;
                write_sample_grid_bin(&sig.grid, create(dir, "samples.bin", &mut outputs)?)?;
                write_freq_grid_csv(&sig.freq, &ofdm, create(dir, "freq_grid.csv", &mut outputs)?)?;
            }
            match (&record.error, outcome) {
                (Some(e), _) => println!("trial failed: {e}"),
                (None, Some(o)) => println!("T/sigma^2 = {:.6e}, decision {:?}", o.t_stat, o.decision),
                (None, None) => {}
            }
        }
        Command::Rdmap => {
            let scenario = cfg.scenario()?;
            let sig = synthesize_trial(&ofdm, &scenario)?;
            let map = range_doppler_map(&sig.freq, &ofdm)?;
            write_rdmap_csv(&map, create(dir, "rdmap.csv", &mut outputs)?)?;
            let baseline = baseline_estimate(&map, &ofdm);
            let peaks = extract_peak_observations(&sig.freq, &ofdm)?;
            write_json(
                dir,
                "peaks.json",
                &serde_json::json!({ "baseline": baseline, "observations": peaks }),
                &mut outputs,
            )?;
            println!(
                "map peak: delay {:.4e} s, Doppler {:.1} Hz (R0 {:.2} m, v {:.2} m/s)",
                baseline.delay, baseline.doppler, baseline.r0, baseline.v
            );
        }
        Command::Roc => {
            let req = cfg.roc_request()?;
            let sweep = roc_sweep(&ofdm, &req, cfg.run.workers)?;
            write_roc_csv(&sweep.curves, create(dir, "roc.csv", &mut outputs)?)?;
            write_json(dir, "roc.json", &sweep, &mut outputs)?;
            for (c, bad) in sweep.curves.iter().zip(&sweep.invalid) {
                println!(
                    "snr {} dB, genie {}: {} + {} valid trials, {} failed",
                    c.snr_db, c.genie, c.n_valid_h0, c.n_valid_h1, bad
                );
            }
        }
        Command::Plot { csv } => {
            let file = File::open(csv).map_err(|e| Error::Usage(format!("cannot open {}: {e}", csv.display())))?;
            let rows = read_roc_csv(file)?;
            let mut w = create(dir, "roc.svg", &mut outputs)?;
            w.write_all(render_roc_svg(&rows).as_bytes())?;
            w.flush()?;
        }
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cli.command.name().to_string(),
        master_seed: cfg.run.seed,
        config_hash: cfg.hash(),
        config_toml: cfg.to_toml(),
        outputs: outputs.clone(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    write_json(dir, "manifest.json", &manifest, &mut outputs)?;
    Ok(())
}
