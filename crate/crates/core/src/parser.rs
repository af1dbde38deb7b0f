//! Line-oriented readers for the two supported trace layouts.
//!
//! * [`TraceFormat::Lanl16`]: 16 positional columns (job id, submit, start,
//!   end, requested/used processors, requested/used CPU seconds,
//!   requested/used memory in KB, queue, dedicated, user, project,
//!   executable, exit code). `#` starts a comment line.
//! * [`TraceFormat::Archive18`]: the 18-column numeric layout of the public
//!   workload archive. `;` starts a comment line.
//!
//! In both, `-1` means "missing". LANL16 columns are split on single tabs
//! when that yields 16 columns (so empty columns are allowed); otherwise on
//! runs of blanks, with `Mon DD YY [HH:MM:SS[.mmm]]` dates kept together.

use std::io::{self, BufRead};
use std::str::FromStr;

use thiserror::Error;

use crate::dates;
use crate::model::{
    CpuSeconds, ExitCode, JobId, JobRecord, Label, MalformedReason, ParseReport, Timestamp,
};

pub const LANL_COLUMNS: usize = 16;
pub const ARCHIVE_COLUMNS: usize = 18;

const MISSING: &str = "-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Lanl16,
    Archive18,
}

impl TraceFormat {
    fn comment_prefix(self) -> char {
        match self {
            TraceFormat::Lanl16 => '#',
            TraceFormat::Archive18 => ';',
        }
    }
}

/// How archive memory columns (KB per processor) become whole-job figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerProcMemory {
    /// Multiply by the allocated processor count.
    #[default]
    Scaled,
    /// Keep the per-processor value.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    pub format: TraceFormat,
    pub per_proc_memory: PerProcMemory,
    /// Drop records lacking a start or end time and count them in
    /// [`ParseReport::skipped_missing_times`] instead of emitting them.
    pub skip_missing_times: bool,
}

impl ParseOptions {
    pub fn new(format: TraceFormat) -> Self {
        ParseOptions {
            format,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line_no}: malformed ({reason}): {detail}")]
pub struct MalformedLine {
    pub line_no: u64,
    pub reason: MalformedReason,
    pub detail: String,
}

/// An I/O failure that ended a parse session, with the counts gathered so far.
#[derive(Debug, Error)]
#[error("read failed after {} lines: {source}", report.total_lines)]
pub struct TraceIoError {
    #[source]
    pub source: io::Error,
    pub report: ParseReport,
}

struct LineParser {
    line_no: u64,
}

impl LineParser {
    fn fail(&self, reason: MalformedReason, detail: impl Into<String>) -> MalformedLine {
        MalformedLine {
            line_no: self.line_no,
            reason,
            detail: detail.into(),
        }
    }

    fn column_error(&self, column: usize, token: &str, reason: MalformedReason) -> MalformedLine {
        self.fail(reason, format!("column {column}: {token:?}"))
    }

    fn job_id(&self, token: &str) -> Result<JobId, MalformedLine> {
        JobId::new(token).map_err(|_| self.column_error(1, token, MalformedReason::BadLabel))
    }

    fn label(&self, column: usize, token: &str) -> Result<Option<Label>, MalformedLine> {
        if is_missing(token) {
            return Ok(None);
        }
        Label::new(token)
            .map(Some)
            .map_err(|_| self.column_error(column, token, MalformedReason::BadLabel))
    }

    fn count(&self, column: usize, token: &str) -> Result<Option<u64>, MalformedLine> {
        if is_missing(token) {
            return Ok(None);
        }
        match token.parse::<u64>() {
            Ok(v) => Ok(Some(v)),
            Err(_) if token.parse::<i64>().is_ok() => {
                Err(self.column_error(column, token, MalformedReason::NegativeValue))
            }
            Err(_) => Err(self.column_error(column, token, MalformedReason::BadInteger)),
        }
    }

    /// Like [`Self::count`] but also accepts integral decimals such as `64.0`,
    /// which appear in some archive files.
    fn loose_count(&self, column: usize, token: &str) -> Result<Option<u64>, MalformedLine> {
        match self.count(column, token) {
            Err(e) if e.reason == MalformedReason::BadInteger => {
                let v = self.real(column, token)?;
                match v {
                    None => Ok(None),
                    Some(v) if v.fract() == 0.0 && v < u64::MAX as f64 => Ok(Some(v as u64)),
                    Some(_) => Err(self.column_error(column, token, MalformedReason::BadInteger)),
                }
            }
            other => other,
        }
    }

    fn real(&self, column: usize, token: &str) -> Result<Option<f64>, MalformedLine> {
        if is_missing(token) {
            return Ok(None);
        }
        if !token.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
            return Err(self.column_error(column, token, MalformedReason::BadReal));
        }
        match f64::from_str(token) {
            Ok(-1.0) => Ok(None),
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.column_error(column, token, MalformedReason::BadReal)),
        }
    }

    fn cpu(&self, column: usize, token: &str) -> Result<Option<CpuSeconds>, MalformedLine> {
        match self.real(column, token)? {
            None => Ok(None),
            Some(v) => CpuSeconds::new(v)
                .map(Some)
                .map_err(|_| self.column_error(column, token, MalformedReason::NegativeValue)),
        }
    }

    fn timestamp(&self, column: usize, token: &str) -> Result<Option<Timestamp>, MalformedLine> {
        if is_missing(token) {
            return Ok(None);
        }
        let parsed = if token.starts_with(|c: char| c.is_ascii_alphabetic()) {
            dates::parse_calendar(token)
        } else {
            token
                .parse::<i64>()
                .ok()
                .and_then(|s| Timestamp::from_epoch_secs(s).ok())
        };
        parsed
            .map(Some)
            .ok_or_else(|| self.column_error(column, token, MalformedReason::BadTimestamp))
    }

    fn flag(&self, column: usize, token: &str) -> Result<Option<bool>, MalformedLine> {
        match token {
            t if is_missing(t) => Ok(None),
            "0" => Ok(Some(false)),
            "1" => Ok(Some(true)),
            _ => Err(self.column_error(column, token, MalformedReason::BadFlag)),
        }
    }

    fn exit_code(&self, column: usize, token: &str) -> Result<Option<ExitCode>, MalformedLine> {
        if is_missing(token) {
            return Ok(None);
        }
        token
            .parse::<i64>()
            .ok()
            .and_then(|c| ExitCode::new(c).ok())
            .map(Some)
            .ok_or_else(|| self.column_error(column, token, MalformedReason::BadInteger))
    }

    /// Archive time column in seconds (possibly fractional), as milliseconds.
    fn seconds_as_ms(&self, column: usize, token: &str) -> Result<Option<i64>, MalformedLine> {
        if is_missing(token) {
            return Ok(None);
        }
        if let Ok(s) = token.parse::<i64>() {
            return s
                .checked_mul(1000)
                .map(Some)
                .ok_or_else(|| self.column_error(column, token, MalformedReason::OutOfRange));
        }
        let secs = self
            .real(column, token)?
            .expect("-1 handled above and -1.0 maps to missing");
        let ms = (secs * 1000.0).round();
        if ms.abs() > Timestamp::MAX_MS as f64 {
            return Err(self.column_error(column, token, MalformedReason::OutOfRange));
        }
        Ok(Some(ms as i64))
    }
}

fn is_missing(token: &str) -> bool {
    token.is_empty() || token == MISSING
}

/// Splits a LANL16 line into columns.
fn lanl_columns(line: &str) -> Result<Vec<&str>, usize> {
    if line.contains('\t') {
        let cols: Vec<&str> = line.split('\t').map(|c| c.trim_matches(' ')).collect();
        if cols.len() == LANL_COLUMNS {
            return Ok(cols);
        }
    }

    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c == ' ' || c == '\t', start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, line.len()));
    }

    let mut cols = Vec::with_capacity(LANL_COLUMNS);
    let mut i = 0;
    while i < spans.len() {
        let (s, mut e) = spans[i];
        let token = &line[s..e];
        // columns 2-4 hold timestamps, which may be written as several words
        if (1..=3).contains(&cols.len()) && dates::is_month(token) && i + 2 < spans.len() {
            e = spans[i + 2].1;
            i += 3;
            if i < spans.len() && line[spans[i].0..spans[i].1].contains(':') {
                e = spans[i].1;
                i += 1;
            }
        } else {
            i += 1;
        }
        cols.push(&line[s..e]);
    }
    if cols.len() == LANL_COLUMNS {
        Ok(cols)
    } else {
        Err(cols.len())
    }
}

/// Parses one non-comment LANL16 line (1-based `line_no` is used in errors).
pub fn parse_lanl_line(line: &str, line_no: u64) -> Result<JobRecord, MalformedLine> {
    let p = LineParser { line_no };
    let line = line.trim_end_matches(['\r', '\n']);
    let c = lanl_columns(line).map_err(|n| {
        p.fail(
            MalformedReason::Arity,
            format!("expected {LANL_COLUMNS} columns, found {n}"),
        )
    })?;
    Ok(JobRecord {
        job_id: p.job_id(c[0])?,
        submit_time: p.timestamp(2, c[1])?,
        start_time: p.timestamp(3, c[2])?,
        end_time: p.timestamp(4, c[3])?,
        req_procs: p.count(5, c[4])?,
        used_procs: p.count(6, c[5])?,
        req_cpu_s: p.cpu(7, c[6])?,
        used_cpu_s: p.cpu(8, c[7])?,
        req_mem_kb: p.count(9, c[8])?,
        used_mem_kb: p.count(10, c[9])?,
        queue: p.label(11, c[10])?,
        dedicated: p.flag(12, c[11])?,
        user: p.label(13, c[12])?,
        project: p.label(14, c[13])?,
        executable: p.label(15, c[14])?,
        exit_code: p.exit_code(16, c[15])?,
    })
}

/// Parses one non-comment archive line using the default memory scaling.
pub fn parse_archive_line(line: &str, line_no: u64) -> Result<JobRecord, MalformedLine> {
    parse_archive_line_with(line, line_no, PerProcMemory::Scaled)
}

pub fn parse_archive_line_with(
    line: &str,
    line_no: u64,
    per_proc_memory: PerProcMemory,
) -> Result<JobRecord, MalformedLine> {
    let p = LineParser { line_no };
    let c: Vec<&str> = line.split_whitespace().collect();
    if c.len() != ARCHIVE_COLUMNS {
        return Err(p.fail(
            MalformedReason::Arity,
            format!("expected {ARCHIVE_COLUMNS} columns, found {}", c.len()),
        ));
    }

    let job_id = p.job_id(c[0])?;
    let submit = p.seconds_as_ms(2, c[1])?;
    let wait = p.seconds_as_ms(3, c[2])?;
    let run = p.seconds_as_ms(4, c[3])?;
    let alloc_procs = p.loose_count(5, c[4])?;
    let used_cpu_s = p.cpu(6, c[5])?;
    let used_mem = p.loose_count(7, c[6])?;
    let req_procs = p.loose_count(8, c[7])?;
    let req_cpu_s = p.cpu(9, c[8])?;
    let req_mem = p.loose_count(10, c[9])?;
    let exit_code = p.exit_code(11, c[10])?;
    let user = p.label(12, c[11])?;
    let project = p.label(13, c[12])?;
    let executable = p.label(14, c[13])?;
    let queue = p.label(15, c[14])?;
    for (i, token) in c.iter().enumerate().skip(15) {
        p.real(i + 1, token)?;
    }

    let start_ms = match (submit, wait) {
        (Some(s), Some(w)) => Some(
            s.checked_add(w)
                .ok_or_else(|| p.column_error(3, c[2], MalformedReason::OutOfRange))?,
        ),
        _ => None,
    };
    let end_ms = match (start_ms, run) {
        (Some(s), Some(r)) => Some(
            s.checked_add(r)
                .ok_or_else(|| p.column_error(4, c[3], MalformedReason::OutOfRange))?,
        ),
        _ => None,
    };
    let to_ts = |ms: Option<i64>, column: usize| -> Result<Option<Timestamp>, MalformedLine> {
        ms.map(|ms| {
            Timestamp::from_epoch_ms(ms)
                .map_err(|_| p.column_error(column, c[column - 1], MalformedReason::OutOfRange))
        })
        .transpose()
    };
    let scale = |kb: Option<u64>, column: usize| -> Result<Option<u64>, MalformedLine> {
        match per_proc_memory {
            PerProcMemory::Raw => Ok(kb),
            PerProcMemory::Scaled => match (kb, alloc_procs) {
                (Some(kb), Some(procs)) => kb
                    .checked_mul(procs)
                    .map(Some)
                    .ok_or_else(|| p.column_error(column, c[column - 1], MalformedReason::OutOfRange)),
                _ => Ok(None),
            },
        }
    };

    Ok(JobRecord {
        job_id,
        submit_time: to_ts(submit, 2)?,
        start_time: to_ts(start_ms, 3)?,
        end_time: to_ts(end_ms, 4)?,
        req_procs,
        used_procs: alloc_procs,
        req_cpu_s,
        used_cpu_s,
        req_mem_kb: scale(req_mem, 10)?,
        used_mem_kb: scale(used_mem, 7)?,
        queue,
        dedicated: None,
        user,
        project,
        executable,
        exit_code,
    })
}

fn format_timestamp(ts: Option<Timestamp>) -> String {
    match ts {
        None => MISSING.to_string(),
        // -1000 ms would print as the sentinel
        Some(t) if t.epoch_ms() % 1000 == 0 && t.epoch_ms() != -1000 => {
            (t.epoch_ms() / 1000).to_string()
        }
        Some(t) => dates::render_full(t),
    }
}

fn or_missing<T: ToString>(value: Option<T>) -> String {
    value.map_or_else(|| MISSING.to_string(), |v| v.to_string())
}

/// Renders a record as one tab-separated LANL16 line (no trailing newline).
pub fn format_lanl_line(record: &JobRecord) -> String {
    let columns = [
        record.job_id.to_string(),
        format_timestamp(record.submit_time),
        format_timestamp(record.start_time),
        format_timestamp(record.end_time),
        or_missing(record.req_procs),
        or_missing(record.used_procs),
        or_missing(record.req_cpu_s.map(CpuSeconds::get)),
        or_missing(record.used_cpu_s.map(CpuSeconds::get)),
        or_missing(record.req_mem_kb),
        or_missing(record.used_mem_kb),
        or_missing(record.queue.as_ref()),
        or_missing(record.dedicated.map(u8::from)),
        or_missing(record.user.as_ref()),
        or_missing(record.project.as_ref()),
        or_missing(record.executable.as_ref()),
        or_missing(record.exit_code.map(ExitCode::get)),
    ];
    columns.join("\t")
}

/// Streaming reader: yields records in file order while keeping a running
/// [`ParseReport`]. Only the current line is held in memory.
///
/// Malformed lines are counted and skipped. An I/O error is yielded once and
/// ends the iteration; the report then covers the lines read before it.
pub struct TraceReader<R> {
    source: R,
    options: ParseOptions,
    buf: Vec<u8>,
    report: ParseReport,
    last_malformed: Option<MalformedLine>,
    finished: bool,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(source: R, options: ParseOptions) -> Self {
        TraceReader {
            source,
            options,
            buf: Vec::with_capacity(256),
            report: ParseReport::default(),
            last_malformed: None,
            finished: false,
        }
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    pub fn into_report(self) -> ParseReport {
        self.report
    }

    /// Most recent malformed line, for diagnostics.
    pub fn last_malformed(&self) -> Option<&MalformedLine> {
        self.last_malformed.as_ref()
    }

    fn malformed(&mut self, err: MalformedLine) {
        self.report.malformed += 1;
        *self.report.reasons.entry(err.reason).or_default() += 1;
        self.last_malformed = Some(err);
    }

    fn handle_line(&mut self) -> Option<JobRecord> {
        let line_no = self.report.total_lines;
        let line = match std::str::from_utf8(&self.buf) {
            Ok(line) => line,
            Err(e) => {
                self.malformed(MalformedLine {
                    line_no,
                    reason: MalformedReason::Encoding,
                    detail: e.to_string(),
                });
                return None;
            }
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(self.options.format.comment_prefix()) {
            self.report.comments += 1;
            return None;
        }
        let parsed = match self.options.format {
            TraceFormat::Lanl16 => parse_lanl_line(line, line_no),
            TraceFormat::Archive18 => {
                parse_archive_line_with(line, line_no, self.options.per_proc_memory)
            }
        };
        match parsed {
            Ok(rec)
                if self.options.skip_missing_times
                    && (rec.start_time.is_none() || rec.end_time.is_none()) =>
            {
                self.report.skipped_missing_times += 1;
                None
            }
            Ok(rec) => {
                self.report.parsed += 1;
                Some(rec)
            }
            Err(e) => {
                self.malformed(e);
                None
            }
        }
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = io::Result<JobRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.finished {
            self.buf.clear();
            match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.finished = true,
                Ok(_) => {
                    self.report.total_lines += 1;
                    while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
                        self.buf.pop();
                    }
                    if let Some(rec) = self.handle_line() {
                        return Some(Ok(rec));
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => {
                    self.finished = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

/// Reads a whole trace into memory. Prefer [`TraceReader`] for large files.
pub fn parse_trace<R: BufRead>(
    source: R,
    options: ParseOptions,
) -> Result<(Vec<JobRecord>, ParseReport), TraceIoError> {
    let mut reader = TraceReader::new(source, options);
    let mut records = Vec::new();
    while let Some(item) = reader.next() {
        match item {
            Ok(rec) => records.push(rec),
            Err(source) => {
                return Err(TraceIoError {
                    source,
                    report: reader.into_report(),
                })
            }
        }
    }
    Ok((records, reader.into_report()))
}
