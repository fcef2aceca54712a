//! `camdpi`: compile rulesets into array images, run the cycle model over
//! payload files, sweep the energy model and generate workloads.

mod commands;
mod framing;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "camdpi", version, about = "Pipelined CAM pattern-matching engine model")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Hardware config (TOML); flags below override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; the current one if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Energy coefficient table (TOML).
    #[arg(long, global = true)]
    pub coeffs: Option<PathBuf>,
    /// Phase-1 depth D.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Stage to PE assignment, e.g. "2:0-2,3:3-5,4:6-7".
    #[arg(long, global = true)]
    pub stages: Option<String>,
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub lanes: u8,
    #[arg(long, global = true)]
    pub no_gating: bool,
    #[arg(long, global = true, value_enum, default_value_t = CongestionArg::Stall)]
    pub congestion: CongestionArg,
    /// Compare every output against the brute-force references.
    #[arg(long, global = true)]
    pub oracle_check: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CongestionArg {
    Stall,
    Drop,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Compile a rules file into `<out>/image.json`.
    Compile { rules: PathBuf },
    /// Run the engine, Phase 3 and the energy model over payload files.
    Run(RunArgs),
    /// Emit sweep curves as CSV.
    Sweep(SweepArgs),
    /// Generate a ruleset or traffic.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Pretty-print an image.
    Dump { image: PathBuf },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub rules: PathBuf,
    /// Precompiled image; must match what the rules compile to.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Payload files: one per lane.
    #[arg(required = true, num_args = 1..=2)]
    pub streams: Vec<PathBuf>,
    /// Streams are u32-LE length-prefixed packet containers.
    #[arg(long)]
    pub framed: bool,
    #[arg(long, default_value_t = 4)]
    pub queue_depth: usize,
    #[arg(long, default_value_t = 2)]
    pub latency: usize,
    #[arg(long)]
    pub no_row_enable: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Rulesize,
    Hitrate,
    Stages,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    #[arg(long, value_delimiter = ',', default_value = "30,60,120,240")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.5,0.9")]
    pub rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub depths: Vec<usize>,
    /// Traffic bytes per point.
    #[arg(long, default_value_t = 65536)]
    pub len: usize,
    /// Ruleset for the hit-rate sweep; the 240-pattern desk set otherwise.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Run points one after another instead of on the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug)]
pub enum GenCmd {
    /// Write `<out>/rules.txt`.
    Rules {
        #[arg(long, default_value_t = 240)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        min_len: usize,
        #[arg(long, default_value_t = 24)]
        max_len: usize,
        #[arg(long, default_value_t = 0.1)]
        wildcard_frac: f64,
        #[arg(long, default_value_t = 0.2)]
        multi_frac: f64,
    },
    /// Write `<out>/stream.bin` and `<out>/truth.csv`.
    Traffic {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        hit_rate: f64,
        #[arg(long, default_value_t = 65536)]
        len: usize,
        /// Emit a framed container of this many packets of `--len` bytes.
        #[arg(long)]
        packets: Option<usize>,
    },
}

/// Exit statuses.
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Mismatch(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("oracle mismatch: {m}");
            ExitCode::from(3)
        }
    }
}
