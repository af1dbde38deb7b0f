//! `bwtrace`: per-job bandwidth estimates from workload accounting traces.
//!
//! Data goes to `--out` (standard output by default); reports and errors go
//! to standard error. Exit status: 0 on success, 1 on I/O failure, 2 on bad
//! arguments or an invalid generator spec.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use bwtrace::{MbBase, MemorySource, PerProcMemory, TraceFormat};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bwtrace", version, about = "Estimate per-job bandwidth from workload traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse only and print line counts and the valid/omitted split.
    Inspect(TraceArgs),
    /// Write one row per usable job (worksheet, or full CSV with --full).
    Rates {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        output: RateArgs,
        /// Full-fidelity CSV instead of the worksheet.
        #[arg(long)]
        full: bool,
    },
    /// Print summary statistics over the estimated rates.
    Summary {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        output: RateArgs,
    },
    /// Generate a synthetic LANL16 trace and its ground-truth sidecar.
    Gen {
        /// Generator spec (key=value lines).
        spec: PathBuf,
        /// Trace destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sidecar destination; defaults to the trace path plus `.truth`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Trace file, or `-` for standard input.
    #[arg(default_value = "-")]
    pub input: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Lanl)]
    pub format: FormatArg,
    /// Memory column used as the job's byte count.
    #[arg(long, value_enum, default_value_t = MemoryArg::Requested)]
    pub memory: MemoryArg,
    /// Use the previous record's end time when a start time is missing.
    #[arg(long)]
    pub carry_forward: bool,
    /// Archive memory columns: scale by allocated processors, or keep raw.
    #[arg(long, value_enum, default_value_t = PerProcArg::Scaled)]
    pub per_proc_memory: PerProcArg,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum, default_value_t = MbArg::Binary)]
    pub mb: MbArg,
    /// Leave out jobs whose end precedes their start.
    #[arg(long)]
    pub drop_negative: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Lanl,
    Archive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MemoryArg {
    Requested,
    Used,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MbArg {
    Binary,
    Decimal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PerProcArg {
    Scaled,
    Raw,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Lanl => TraceFormat::Lanl16,
            FormatArg::Archive => TraceFormat::Archive18,
        }
    }
}

impl From<MemoryArg> for MemorySource {
    fn from(m: MemoryArg) -> Self {
        match m {
            MemoryArg::Requested => MemorySource::Requested,
            MemoryArg::Used => MemorySource::Used,
        }
    }
}

impl From<MbArg> for MbBase {
    fn from(m: MbArg) -> Self {
        match m {
            MbArg::Binary => MbBase::Binary,
            MbArg::Decimal => MbBase::Decimal,
        }
    }
}

impl From<PerProcArg> for PerProcMemory {
    fn from(p: PerProcArg) -> Self {
        match p {
            PerProcArg::Scaled => PerProcMemory::Scaled,
            PerProcArg::Raw => PerProcMemory::Raw,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("bwtrace: {:#}", failure.error);
            ExitCode::from(failure.status)
        }
    }
}
