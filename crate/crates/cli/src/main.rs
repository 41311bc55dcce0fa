//! `polarcat` — construct, analyze, design, and simulate concatenated
//! polar codes from the command line.
//!
//! Artifacts are JSON (profiles, histograms, manifests) and CSV (FER/BER
//! results); every command that consumes randomness takes an explicit
//! `--seed`, and reruns with the same arguments reproduce the same bytes
//! apart from wall-clock fields.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use polarcat_core::sim::DecodeMode;

use crate::commands::{
    analyze_ss, collect_densities, construct, design_outer, simulate, AnalyzeArgs, CollectArgs,
    ConstructArgs, DesignArgs, SimulateArgs,
};
use crate::config::ChannelSpec;

#[derive(Parser)]
#[command(
    name = "polarcat",
    version,
    about = "Concatenated polar code construction, outer-code design, and FER simulation"
)]
struct Cli {
    /// Directory all relative paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ChannelArgs {
    /// Design channel: bec or awgn.
    #[arg(long)]
    channel: String,
    /// BEC erasure probability (with --channel bec).
    #[arg(long)]
    eps: Option<f64>,
    /// E_b/N_0 in dB (with --channel awgn).
    #[arg(long)]
    ebn0_db: Option<f64>,
    /// Code rate fixing the E_b/N_0 to noise-variance conversion.
    #[arg(long)]
    rate: Option<f64>,
}

impl ChannelArgs {
    fn to_spec(&self) -> Result<ChannelSpec> {
        match self.channel.as_str() {
            "bec" => {
                let erasure_prob = self
                    .eps
                    .ok_or_else(|| anyhow::anyhow!("--channel bec needs --eps"))?;
                if self.ebn0_db.is_some() || self.rate.is_some() {
                    anyhow::bail!("--ebn0-db and --rate apply only to --channel awgn");
                }
                Ok(ChannelSpec::Bec { erasure_prob })
            }
            "awgn" => {
                let (Some(ebn0_db), Some(rate)) = (self.ebn0_db, self.rate) else {
                    anyhow::bail!("--channel awgn needs --ebn0-db and --rate");
                };
                if self.eps.is_some() {
                    anyhow::bail!("--eps applies only to --channel bec");
                }
                Ok(ChannelSpec::Awgn { ebn0_db, rate })
            }
            other => anyhow::bail!("unknown channel '{other}', expected bec or awgn"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Construct a polar code profile by DE or the Gaussian approximation.
    Construct {
        #[command(flatten)]
        channel: ChannelArgs,
        /// log2 of the block length.
        #[arg(long)]
        n: u32,
        /// Information bits.
        #[arg(long)]
        k: usize,
        /// Construction method: de (default) or ga.
        #[arg(long, default_value = "de")]
        method: String,
        /// Profile output path; omit to print to stdout only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stopping-tree and minimum-stopping-set analysis of message rows.
    AnalyzeSs {
        /// log2 of the block length.
        #[arg(long)]
        n: u32,
        /// Comma-separated 1-based message positions, e.g. 2,7,8.
        #[arg(long, value_delimiter = ',')]
        rows: Vec<usize>,
        /// Also run the exact exponential search (N <= 16).
        #[arg(long)]
        exact: bool,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design the outer code of a concatenated experiment.
    DesignOuter {
        /// Experiment config (architecture, channel, dimensions).
        #[arg(long)]
        config: PathBuf,
        /// Design method: de, ss, or nde.
        #[arg(long)]
        method: String,
        /// Reliability-for-stopping-distance trades (ss only).
        #[arg(long)]
        swaps: Option<usize>,
        /// Empirical LLR histograms (nde: one file, or one per block).
        #[arg(long = "hist")]
        histograms: Vec<PathBuf>,
        /// Start the local-global fixed point from a random set.
        #[arg(long)]
        random_init: bool,
        /// Seed for --random-init.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Designed profile output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect empirical LLR histograms at semipolarized positions.
    CollectDensities {
        /// Experiment config (architecture, channel, dimensions).
        #[arg(long)]
        config: PathBuf,
        /// Override the config channel's E_b/N_0 (AWGN only).
        #[arg(long)]
        ebn0_db: Option<f64>,
        /// BP iterations before sampling.
        #[arg(long)]
        iterations: u32,
        /// Frames to accumulate.
        #[arg(long)]
        frames: u64,
        /// RNG seed.
        #[arg(long)]
        seed: u64,
        /// 1-based inner block (local-global only).
        #[arg(long)]
        block: Option<usize>,
        /// Histogram output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo FER/BER sweep, appended to a CSV with a manifest.
    Simulate {
        /// Experiment config (architecture, channel, dimensions).
        #[arg(long)]
        config: PathBuf,
        /// Sweep as start:stop:step in dB, or a single value.
        #[arg(long)]
        snr: String,
        /// Stop a point after this many frame errors.
        #[arg(long, default_value_t = 100)]
        min_errors: u64,
        /// Hard frame cap per point.
        #[arg(long, default_value_t = 10_000_000)]
        max_frames: u64,
        /// RNG seed.
        #[arg(long)]
        seed: u64,
        /// Decode mode: single, local, or global.
        #[arg(long)]
        mode: String,
        /// Results CSV path (appended; manifest written alongside).
        #[arg(long)]
        out: PathBuf,
        /// Overrides the build tag column.
        #[arg(long)]
        build_tag: Option<String>,
    },
    /// Run the self-check suite and print a pass/fail table.
    Verify {
        /// Restrict to the fast oracle checks (seconds, n <= 3).
        #[arg(long)]
        quick: bool,
    },
}

fn parse_mode(text: &str) -> Result<DecodeMode> {
    match text {
        "single" => Ok(DecodeMode::Single),
        "local" => Ok(DecodeMode::Local),
        "global" => Ok(DecodeMode::Global),
        other => anyhow::bail!("unknown decode mode '{other}', expected single, local, or global"),
    }
}

fn dispatch(cli: Cli, command_line: String) -> Result<bool> {
    let workdir = cli.workdir;
    match cli.command {
        Command::Construct {
            channel,
            n,
            k,
            method,
            out,
        } => {
            construct(
                &workdir,
                ConstructArgs {
                    channel: channel.to_spec()?,
                    n,
                    k,
                    method,
                    out,
                },
            )?;
            Ok(true)
        }
        Command::AnalyzeSs {
            n,
            rows,
            exact,
            out,
        } => {
            analyze_ss(
                &workdir,
                AnalyzeArgs {
                    n,
                    rows,
                    exact,
                    out,
                },
            )?;
            Ok(true)
        }
        Command::DesignOuter {
            config,
            method,
            swaps,
            histograms,
            random_init,
            seed,
            out,
        } => {
            design_outer(
                &workdir,
                DesignArgs {
                    config,
                    method,
                    swaps,
                    histograms,
                    random_init,
                    seed,
                    out,
                },
            )?;
            Ok(true)
        }
        Command::CollectDensities {
            config,
            ebn0_db,
            iterations,
            frames,
            seed,
            block,
            out,
        } => {
            collect_densities(
                &workdir,
                CollectArgs {
                    config,
                    ebn0_db,
                    iterations,
                    frames,
                    seed,
                    block,
                    out,
                },
            )?;
            Ok(true)
        }
        Command::Simulate {
            config,
            snr,
            min_errors,
            max_frames,
            seed,
            mode,
            out,
            build_tag,
        } => {
            simulate(
                &workdir,
                command_line,
                SimulateArgs {
                    config,
                    snr,
                    min_errors,
                    max_frames,
                    seed,
                    mode: parse_mode(&mode)?,
                    out,
                    build_tag,
                },
            )?;
            Ok(true)
        }
        Command::Verify { quick } => verify::run(quick),
    }
}

fn main() -> ExitCode {
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    let cli = Cli::parse();
    match dispatch(cli, command_line) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
