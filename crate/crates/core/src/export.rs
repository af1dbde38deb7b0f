//! Summaries and CSV output for rate samples.
//!
//! Two layouts are written:
//!
//! * the worksheet, `Start date,End date,Mbytes,Bytes`, with day-resolution
//!   dates, the rate in Mbytes/s to 7 significant digits, and the memory
//!   figure in KB as it appears in the trace;
//! * the full CSV, with millisecond timestamps and rates printed so they
//!   read back bit-for-bit.
//!
//! An undefined (zero-duration) rate is an empty cell in both.

use std::io::{self, Write};

use thiserror::Error;

use crate::bandwidth::{to_output_unit, MbBase};
use crate::dates::render_day;
use crate::model::{RateSample, TraceSummary};

pub const WORKSHEET_HEADER: [&str; 4] = ["Start date", "End date", "Mbytes", "Bytes"];
pub const FULL_CSV_HEADER: [&str; 8] = [
    "job_id",
    "start_ms",
    "end_ms",
    "duration_ms",
    "n_bytes",
    "rate_bytes_per_s",
    "rate_out",
    "flags",
];

/// Sink failure; `rows_written` data rows were accepted before it.
#[derive(Debug, Error)]
#[error("write failed after {rows_written} rows: {source}")]
pub struct ExportError {
    #[source]
    pub source: io::Error,
    pub rows_written: u64,
}

/// Statistics over the defined rates, converted with `base`.
///
/// Median is the lower of the two middle values for even counts; p95 is the
/// nearest-rank percentile. The result does not depend on sample order.
pub fn summarize(samples: &[RateSample], base: MbBase) -> TraceSummary {
    let mut values: Vec<f64> = samples
        .iter()
        .filter_map(RateSample::rate_bytes_per_s)
        .map(|r| to_output_unit(r, base))
        .collect();
    let n_undefined = (samples.len() - values.len()) as u64;
    values.sort_by(f64::total_cmp);
    summarize_sorted(&values, n_undefined)
}

fn summarize_sorted(values: &[f64], n_undefined: u64) -> TraceSummary {
    let n = values.len();
    let mut summary = TraceSummary {
        n_rates: n as u64,
        n_negative: values.iter().filter(|v| **v < 0.0).count() as u64,
        n_undefined,
        ..Default::default()
    };
    if n == 0 {
        return summary;
    }
    // summing in sorted order keeps the mean independent of input order
    let sum: f64 = values.iter().sum();
    let p95_rank = (95 * n).div_ceil(100);
    summary.min = Some(values[0]);
    summary.max = Some(values[n - 1]);
    summary.mean = Some(sum / n as f64);
    summary.median = Some(values[(n - 1) / 2]);
    summary.p95 = Some(values[p95_rank - 1]);
    summary
}

/// Streaming counterpart of [`summarize`]: keeps only the converted rates.
#[derive(Debug, Clone)]
pub struct SummaryBuilder {
    base: MbBase,
    values: Vec<f64>,
    n_undefined: u64,
}

impl SummaryBuilder {
    pub fn new(base: MbBase) -> Self {
        SummaryBuilder {
            base,
            values: Vec::new(),
            n_undefined: 0,
        }
    }

    pub fn push(&mut self, sample: &RateSample) {
        match sample.rate_bytes_per_s() {
            Some(r) => self.values.push(to_output_unit(r, self.base)),
            None => self.n_undefined += 1,
        }
    }

    pub fn finish(mut self) -> TraceSummary {
        self.values.sort_by(f64::total_cmp);
        summarize_sorted(&self.values, self.n_undefined)
    }
}

/// Formats `value` with at most 7 significant digits, trailing zeros
/// removed. Magnitudes below 1e-3 or at least 1e7 use `d.ddddddE±XX`.
pub fn format_sig7(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    // `{:.6e}` rounds to exactly 7 significant digits, e.g. "-2.780000e-4"
    let sci = format!("{:.6e}", value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };

    if !(-3..7).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let frac = if tail.is_empty() {
            String::new()
        } else {
            format!(".{tail}")
        };
        let exp_sign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{head}{frac}E{exp_sign}{:02}", exp.abs());
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{digits}");
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        let (int_part, frac) = digits.split_at(int_len);
        format!("{sign}{int_part}.{frac}")
    }
}

/// Memory figure as it appears in the trace (KB).
fn source_kb(n_bytes: u64) -> String {
    if n_bytes.is_multiple_of(1024) {
        (n_bytes / 1024).to_string()
    } else {
        format_sig7(n_bytes as f64 / 1024.0)
    }
}

fn worksheet_row(sample: &RateSample, base: MbBase) -> [String; 4] {
    [
        render_day(sample.start()),
        render_day(sample.end()),
        sample
            .rate_bytes_per_s()
            .map(|r| format_sig7(to_output_unit(r, base)))
            .unwrap_or_default(),
        source_kb(sample.n_bytes()),
    ]
}

fn full_row(sample: &RateSample, base: MbBase) -> [String; 8] {
    let rate = sample.rate_bytes_per_s();
    [
        sample.job_id().to_string(),
        sample.start().epoch_ms().to_string(),
        sample.end().epoch_ms().to_string(),
        sample.duration_ms().to_string(),
        sample.n_bytes().to_string(),
        rate.map(|r| r.to_string()).unwrap_or_default(),
        rate.map(|r| to_output_unit(r, base).to_string())
            .unwrap_or_default(),
        sample.flags().to_string(),
    ]
}

/// Writes the worksheet and returns the number of data rows.
pub fn write_worksheet<W: Write>(
    samples: &[RateSample],
    base: MbBase,
    sink: W,
) -> Result<u64, ExportError> {
    write_all(samples, Layout::Worksheet, base, sink)
}

/// Writes the full-fidelity CSV and returns the number of data rows.
pub fn write_csv<W: Write>(
    samples: &[RateSample],
    base: MbBase,
    sink: W,
) -> Result<u64, ExportError> {
    write_all(samples, Layout::Full, base, sink)
}

fn write_all<W: Write>(
    samples: &[RateSample],
    layout: Layout,
    base: MbBase,
    sink: W,
) -> Result<u64, ExportError> {
    let mut writer = SampleWriter::new(sink, layout, base)?;
    for sample in samples {
        writer.write(sample)?;
    }
    writer.finish()
}

/// Which table a [`SampleWriter`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Worksheet,
    Full,
}

/// Row-at-a-time writer for either layout, for pipelines that never hold
/// all samples at once.
pub struct SampleWriter<W: Write> {
    writer: csv::Writer<W>,
    layout: Layout,
    base: MbBase,
    rows_written: u64,
}

impl<W: Write> SampleWriter<W> {
    pub fn new(sink: W, layout: Layout, base: MbBase) -> Result<Self, ExportError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(sink);
        let header: &[&str] = match layout {
            Layout::Worksheet => &WORKSHEET_HEADER,
            Layout::Full => &FULL_CSV_HEADER,
        };
        writer.write_record(header).map_err(|e| ExportError {
            source: e.into(),
            rows_written: 0,
        })?;
        Ok(SampleWriter {
            writer,
            layout,
            base,
            rows_written: 0,
        })
    }

    pub fn write(&mut self, sample: &RateSample) -> Result<(), ExportError> {
        let result = match self.layout {
            Layout::Worksheet => self.writer.write_record(worksheet_row(sample, self.base)),
            Layout::Full => self.writer.write_record(full_row(sample, self.base)),
        };
        result.map_err(|e| ExportError {
            source: e.into(),
            rows_written: self.rows_written,
        })?;
        self.rows_written += 1;
        Ok(())
    }

    /// Flushes and returns the number of data rows.
    pub fn finish(mut self) -> Result<u64, ExportError> {
        self.writer.flush().map_err(|e| ExportError {
            source: e,
            rows_written: self.rows_written,
        })?;
        Ok(self.rows_written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::rate;
    use crate::model::{JobId, Timestamp};

    // 1994-05-10T00:00:00Z
    const MAY_10_94: i64 = 768_528_000_000;

    fn sample(id: &str, start: i64, end: i64, n_bytes: u64) -> RateSample {
        RateSample::try_new(
            JobId::new(id).unwrap(),
            Timestamp::from_epoch_ms(start).unwrap(),
            Timestamp::from_epoch_ms(end).unwrap(),
            n_bytes,
            rate(n_bytes, end - start),
            false,
        )
        .unwrap()
    }

    /// Sample whose binary-Mbyte rate is exactly `mb_per_s`, 1 s long.
    fn with_rate(mb_per_s: f64) -> RateSample {
        let n = (mb_per_s * 1_048_576.0) as u64;
        sample("r", MAY_10_94, MAY_10_94 + 1000, n)
    }

    #[test]
    fn sig7_formatting() {
        let cases = [
            (1024.0, "1024"),
            (204.74449, "204.7445"),
            (9.7465791, "9.746579"),
            (-2.78e-4, "-2.78E-04"),
            (68478.4321, "68478.43"),
            (1424.6956, "1424.696"),
            (682.666666, "682.6667"),
            (0.001, "0.001"),
            (0.5, "0.5"),
            (12345678.0, "1.234568E+07"),
            (9999999.5, "1E+07"),
            (1.0e-12, "1E-12"),
            (-0.0, "0"),
            (100.0, "100"),
        ];
        for (value, text) in cases {
            assert_eq!(format_sig7(value), text, "{value}");
        }
    }

    #[test]
    fn summary_of_three() {
        let samples: Vec<_> = [1.0, 3.0, 2.0].into_iter().map(with_rate).collect();
        let s = summarize(&samples, MbBase::Binary);
        assert_eq!(s.n_rates, 3);
        assert_eq!(s.min, Some(1.0));
        assert_eq!(s.median, Some(2.0));
        assert_eq!(s.max, Some(3.0));
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.p95, Some(3.0));
    }

    #[test]
    fn summary_of_nothing() {
        let s = summarize(&[], MbBase::Binary);
        assert_eq!(s, TraceSummary::default());
    }

    #[test]
    fn summary_median_and_percentile_rules() {
        let samples: Vec<_> = (1..=20).map(|i| with_rate(i as f64)).collect();
        let s = summarize(&samples, MbBase::Binary);
        assert_eq!(s.median, Some(10.0));
        assert_eq!(s.p95, Some(19.0));
        let mut with_neg = samples.clone();
        with_neg.push(sample("n", MAY_10_94 + 10, MAY_10_94, 1024));
        with_neg.push(sample("z", MAY_10_94, MAY_10_94, 1024));
        let s = summarize(&with_neg, MbBase::Binary);
        assert_eq!((s.n_rates, s.n_negative, s.n_undefined), (21, 1, 1));
    }

    #[test]
    fn builder_matches_summarize() {
        let samples: Vec<_> = [5.0, 1.0, 4.0, 4.5].into_iter().map(with_rate).collect();
        let mut b = SummaryBuilder::new(MbBase::Decimal);
        samples.iter().for_each(|s| b.push(s));
        assert_eq!(b.finish(), summarize(&samples, MbBase::Decimal));
    }

    #[test]
    fn worksheet_rows() {
        let samples = vec![
            // 32768 KB over 32 ms is 1000 binary MB/s
            sample("a", MAY_10_94, MAY_10_94 + 32, 32768 * 1024),
            sample("b", MAY_10_94, MAY_10_94, 32768 * 1024),
        ];
        let mut out = Vec::new();
        let rows = write_worksheet(&samples, MbBase::Binary, &mut out).unwrap();
        assert_eq!(rows, 2);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "Start date,End date,Mbytes,Bytes\n\
             May 10 94,May 10 94,1000,32768\n\
             May 10 94,May 10 94,,32768\n"
        );
    }

    #[test]
    fn table_row_rendering() {
        // 1024 MB/s over 32768 KB needs a 31.25 ms job, so check the cells
        // rather than a whole sample.
        let day = render_day(Timestamp::from_epoch_ms(MAY_10_94).unwrap());
        let row = [day.clone(), day, format_sig7(1024.0), source_kb(32768 * 1024)];
        assert_eq!(row.join(","), "May 10 94,May 10 94,1024,32768");
    }

    #[test]
    fn empty_worksheet_is_header_only() {
        let mut out = Vec::new();
        assert_eq!(write_worksheet(&[], MbBase::Binary, &mut out).unwrap(), 0);
        assert_eq!(out, b"Start date,End date,Mbytes,Bytes\n");
    }

    #[test]
    fn full_csv_quotes_and_arity() {
        let samples = vec![sample("a,b", 0, 2000, 16_777_216)];
        let mut out = Vec::new();
        assert_eq!(write_csv(&samples, MbBase::Binary, &mut out).unwrap(), 1);
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("job_id,start_ms,end_ms,duration_ms,n_bytes,rate_bytes_per_s,rate_out,flags")
        );
        assert_eq!(lines.next(), Some("\"a,b\",0,2000,2000,16777216,8388608,8,"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn streaming_writer_matches_batch() {
        let samples = vec![
            sample("a", 0, 2000, 4096),
            sample("b", 500, 100, 4096),
            sample("c", 7, 7, 0),
        ];
        for layout in [Layout::Worksheet, Layout::Full] {
            let mut batch = Vec::new();
            match layout {
                Layout::Worksheet => write_worksheet(&samples, MbBase::Binary, &mut batch),
                Layout::Full => write_csv(&samples, MbBase::Binary, &mut batch),
            }
            .unwrap();
            let mut streamed = Vec::new();
            let mut w = SampleWriter::new(&mut streamed, layout, MbBase::Binary).unwrap();
            samples.iter().for_each(|s| w.write(s).unwrap());
            assert_eq!(w.finish().unwrap(), 3);
            assert_eq!(batch, streamed);
        }
    }

    struct Broken;

    impl Write for Broken {
        fn write(&mut self, _: &[u8]) -> io::Result<usize> {
            Err(io::Error::new(io::ErrorKind::BrokenPipe, "closed"))
        }
        fn flush(&mut self) -> io::Result<()> {
            Err(io::Error::new(io::ErrorKind::BrokenPipe, "closed"))
        }
    }

    #[test]
    fn sink_failure_is_reported() {
        let samples = vec![sample("a", 0, 2000, 4096)];
        let err = write_worksheet(&samples, MbBase::Binary, Broken).unwrap_err();
        assert_eq!(err.source.kind(), io::ErrorKind::BrokenPipe);
    }
}
