//! End-to-end runs over a trace stream: parse, estimate, then count,
//! export or summarize. Records are never all held in memory.

use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::bandwidth::{MbBase, RateEstimator, RateOptions};
use crate::export::{ExportError, Layout, SampleWriter, SummaryBuilder};
use crate::model::{ParseReport, RateSample, TraceSummary};
use crate::parser::{ParseOptions, TraceIoError, TraceReader};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    pub parse: ParseOptions,
    pub rates: RateOptions,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Read(#[from] TraceIoError),
    #[error(transparent)]
    Write(#[from] ExportError),
}

/// Line accounting plus the usable/omitted split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InspectReport {
    pub parse: ParseReport,
    /// Parsed records with start, end and the selected memory present.
    pub valid: u64,
    pub omitted: u64,
    /// Valid records left out because their duration was negative.
    pub dropped_negative: u64,
}

/// `key=value` lines: `total` counts job lines, `lines` every input line
/// including comments. Totals come first, then one `malformed.<reason>` line per
/// reason seen.
impl fmt::Display for InspectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.parse;
        writeln!(f, "total={}", p.job_lines())?;
        writeln!(f, "lines={}", p.total_lines)?;
        writeln!(f, "parsed={}", p.parsed)?;
        writeln!(f, "valid={}", self.valid)?;
        writeln!(f, "omitted={}", self.omitted)?;
        writeln!(f, "malformed={}", p.malformed)?;
        writeln!(f, "comments={}", p.comments)?;
        writeln!(f, "skipped_missing_times={}", p.skipped_missing_times)?;
        writeln!(f, "dropped_negative={}", self.dropped_negative)?;
        for (reason, count) in &p.reasons {
            writeln!(f, "malformed.{reason}={count}")?;
        }
        Ok(())
    }
}

/// Wraps a [`TraceSummary`] for `key=value` printing; absent statistics
/// print as an empty value.
pub struct SummaryLines<'a>(pub &'a TraceSummary);

impl fmt::Display for SummaryLines<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        writeln!(f, "n_rates={}", s.n_rates)?;
        writeln!(f, "n_negative={}", s.n_negative)?;
        writeln!(f, "n_undefined={}", s.n_undefined)?;
        for (key, value) in [
            ("min", s.min),
            ("max", s.max),
            ("mean", s.mean),
            ("median", s.median),
            ("p95", s.p95),
        ] {
            match value {
                Some(v) => writeln!(f, "{key}={v}")?,
                None => writeln!(f, "{key}=")?,
            }
        }
        Ok(())
    }
}

/// Runs parse and estimation, handing every sample to `sink`.
pub fn for_each_sample<R, F, E>(
    source: R,
    options: PipelineOptions,
    mut sink: F,
) -> Result<InspectReport, E>
where
    R: BufRead,
    F: FnMut(RateSample) -> Result<(), E>,
    E: From<TraceIoError>,
{
    let mut reader = TraceReader::new(source, options.parse);
    let mut estimator = RateEstimator::new(options.rates);
    while let Some(item) = reader.next() {
        let record = match item {
            Ok(record) => record,
            Err(source) => {
                return Err(TraceIoError {
                    source,
                    report: reader.into_report(),
                }
                .into())
            }
        };
        if let Some(sample) = estimator.push(&record) {
            sink(sample)?;
        }
    }
    Ok(InspectReport {
        parse: reader.into_report(),
        valid: estimator.valid(),
        omitted: estimator.omitted(),
        dropped_negative: estimator.dropped_negative(),
    })
}

pub fn inspect<R: BufRead>(
    source: R,
    options: PipelineOptions,
) -> Result<InspectReport, TraceIoError> {
    for_each_sample(source, options, |_| Ok::<(), TraceIoError>(()))
}

/// Writes one row per sample in the chosen layout.
pub fn write_rates<R: BufRead, W: Write>(
    source: R,
    options: PipelineOptions,
    layout: Layout,
    base: MbBase,
    sink: W,
) -> Result<(InspectReport, u64), PipelineError> {
    let mut writer = SampleWriter::new(sink, layout, base)?;
    let report = for_each_sample(source, options, |s| {
        writer.write(&s).map_err(PipelineError::from)
    })?;
    let rows = writer.finish()?;
    Ok((report, rows))
}

pub fn summarize_trace<R: BufRead>(
    source: R,
    options: PipelineOptions,
    base: MbBase,
) -> Result<(InspectReport, TraceSummary), TraceIoError> {
    let mut builder = SummaryBuilder::new(base);
    let report = for_each_sample(source, options, |s| {
        builder.push(&s);
        Ok::<(), TraceIoError>(())
    })?;
    Ok((report, builder.finish()))
}
