use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use bwtrace::pipeline::{self, PipelineError, PipelineOptions, SummaryLines};
use bwtrace::synth::{self, GenSpec, SynthError};
use bwtrace::{Layout, ParseOptions, RateOptions};

use crate::{Command, RateArgs, TraceArgs};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub struct Failure {
    pub status: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            status: EXIT_IO,
            error: error.into(),
        }
    }

    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            status: EXIT_USAGE,
            error: error.into(),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Inspect(trace) => inspect(&trace),
        Command::Rates {
            trace,
            output,
            full,
        } => rates(&trace, &output, full),
        Command::Summary { trace, output } => summary(&trace, &output),
        Command::Gen { spec, out, truth } => generate(&spec, out, truth),
    }
}

fn options(trace: &TraceArgs, rates: Option<&RateArgs>) -> PipelineOptions {
    PipelineOptions {
        parse: ParseOptions {
            format: trace.format.into(),
            per_proc_memory: trace.per_proc_memory.into(),
            skip_missing_times: false,
        },
        rates: RateOptions {
            memory: trace.memory.into(),
            carry_forward: trace.carry_forward,
            drop_negative: rates.is_some_and(|r| r.drop_negative),
        },
    }
}

fn open_input(input: &str) -> Result<Box<dyn BufRead>> {
    if input == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file = File::open(input)
        .with_context(|| format!("cannot open {input}"))
        .map_err(Failure::io)?;
    Ok(Box::new(BufReader::new(file)))
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    match out {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(Failure::io)?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    let mut sink = open_output(out)?;
    sink.write_all(text.as_bytes())
        .and_then(|()| sink.flush())
        .context("write failed")
        .map_err(Failure::io)
}

fn inspect(trace: &TraceArgs) -> Result<()> {
    let source = open_input(&trace.input)?;
    let report = pipeline::inspect(source, options(trace, None)).map_err(Failure::io)?;
    write_text(trace.out.as_deref(), &report.to_string())
}

fn rates(trace: &TraceArgs, args: &RateArgs, full: bool) -> Result<()> {
    let source = open_input(&trace.input)?;
    let sink = open_output(trace.out.as_deref())?;
    let layout = if full { Layout::Full } else { Layout::Worksheet };
    let (report, _) =
        pipeline::write_rates(source, options(trace, Some(args)), layout, args.mb.into(), sink)
            .map_err(|e| match e {
                PipelineError::Read(e) => Failure::io(e),
                PipelineError::Write(e) => Failure::io(e),
            })?;
    eprint!("{report}");
    Ok(())
}

fn summary(trace: &TraceArgs, args: &RateArgs) -> Result<()> {
    let source = open_input(&trace.input)?;
    let (report, summary) =
        pipeline::summarize_trace(source, options(trace, Some(args)), args.mb.into())
            .map_err(Failure::io)?;
    eprint!("{report}");
    write_text(trace.out.as_deref(), &SummaryLines(&summary).to_string())
}

fn generate(spec_path: &Path, out: Option<PathBuf>, truth: Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("cannot read {}", spec_path.display()))
        .map_err(Failure::io)?;
    let spec = GenSpec::parse(&text).map_err(Failure::usage)?;

    let truth_path = match (truth, &out) {
        (Some(t), _) => t,
        (None, Some(out)) => {
            let mut name = out.clone().into_os_string();
            name.push(".truth");
            PathBuf::from(name)
        }
        (None, None) => {
            return Err(Failure::usage(anyhow!(
                "--truth is required when the trace goes to standard output"
            )))
        }
    };
    let trace_sink = open_output(out.as_deref())?;
    let truth_sink = open_output(Some(&truth_path))?;
    synth::write_fixture(&spec, trace_sink, truth_sink).map_err(|e| match e {
        SynthError::InvalidSpec(_) => Failure::usage(e),
        other => Failure::io(other),
    })?;
    Ok(())
}
