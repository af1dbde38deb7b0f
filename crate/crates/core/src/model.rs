//! Shared domain types: timestamps, parsed job records, per-job rate samples
//! and the reports produced while reading and summarizing a trace.
//!
//! Everything here is immutable once built. Missing values are `None`; the
//! `-1` sentinel only exists in the text formats handled by [`crate::parser`].

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Relative tolerance used when checking `rate * duration == 1000 * bytes`.
pub const RATE_RECONSTRUCTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("timestamp {0} ms is outside the supported range (years 1-9999)")]
    TimestampOutOfRange(i64),
    #[error("label {0:?} is empty, contains whitespace or is the missing-value sentinel")]
    InvalidLabel(String),
    #[error("job id {0:?} would be read back as a comment")]
    CommentLikeJobId(String),
    #[error("CPU time {0} is negative or not finite")]
    InvalidCpuSeconds(f64),
    #[error("exit code -1 is reserved for a missing value")]
    ReservedExitCode,
    #[error("rate {rate:?} is inconsistent with duration {duration_ms} ms and {n_bytes} bytes")]
    InconsistentRate {
        rate: Option<f64>,
        duration_ms: i64,
        n_bytes: u64,
    },
}

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    /// 0001-01-01T00:00:00Z
    pub const MIN_MS: i64 = -62_135_596_800_000;
    /// 9999-12-31T23:59:59.999Z
    pub const MAX_MS: i64 = 253_402_300_799_999;

    pub fn from_epoch_ms(epoch_ms: i64) -> Result<Self, ModelError> {
        if (Self::MIN_MS..=Self::MAX_MS).contains(&epoch_ms) {
            Ok(Timestamp(epoch_ms))
        } else {
            Err(ModelError::TimestampOutOfRange(epoch_ms))
        }
    }

    pub fn from_epoch_secs(epoch_s: i64) -> Result<Self, ModelError> {
        let ms = epoch_s
            .checked_mul(1000)
            .ok_or(ModelError::TimestampOutOfRange(i64::MAX))?;
        Self::from_epoch_ms(ms)
    }

    pub fn epoch_ms(self) -> i64 {
        self.0
    }
}

/// An opaque, whitespace-free text field (job id, queue, user, ...).
///
/// Labels never contain whitespace and are never the literal `-1`, so they
/// survive a trip through the line formats unchanged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.is_empty() || text == "-1" || text.chars().any(char::is_whitespace) {
            return Err(ModelError::InvalidLabel(text));
        }
        Ok(Label(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Job identifier. Same rules as [`Label`], and it may not start with `#`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(Label);

impl JobId {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let label = Label::new(text)?;
        if label.0.starts_with('#') || label.0.starts_with(';') {
            return Err(ModelError::CommentLikeJobId(label.0));
        }
        Ok(JobId(label))
    }

    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }
}

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-negative, finite CPU time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CpuSeconds(f64);

impl CpuSeconds {
    pub fn new(secs: f64) -> Result<Self, ModelError> {
        if secs.is_finite() && secs >= 0.0 {
            Ok(CpuSeconds(secs))
        } else {
            Err(ModelError::InvalidCpuSeconds(secs))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Process exit code; `-1` is not representable because the trace formats
/// use it for "unknown".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExitCode(i64);

impl ExitCode {
    pub fn new(code: i64) -> Result<Self, ModelError> {
        if code == -1 {
            Err(ModelError::ReservedExitCode)
        } else {
            Ok(ExitCode(code))
        }
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

/// One accounting record, one job. Fields follow the 16-column LANL layout.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: JobId,
    pub submit_time: Option<Timestamp>,
    pub start_time: Option<Timestamp>,
    pub end_time: Option<Timestamp>,
    pub req_procs: Option<u64>,
    pub used_procs: Option<u64>,
    pub req_cpu_s: Option<CpuSeconds>,
    pub used_cpu_s: Option<CpuSeconds>,
    pub req_mem_kb: Option<u64>,
    pub used_mem_kb: Option<u64>,
    pub queue: Option<Label>,
    pub dedicated: Option<bool>,
    pub user: Option<Label>,
    pub project: Option<Label>,
    pub executable: Option<Label>,
    pub exit_code: Option<ExitCode>,
}

impl JobRecord {
    /// A record with every field except the id missing.
    pub fn new(job_id: JobId) -> Self {
        JobRecord {
            job_id,
            submit_time: None,
            start_time: None,
            end_time: None,
            req_procs: None,
            used_procs: None,
            req_cpu_s: None,
            used_cpu_s: None,
            req_mem_kb: None,
            used_mem_kb: None,
            queue: None,
            dedicated: None,
            user: None,
            project: None,
            executable: None,
            exit_code: None,
        }
    }
}

/// Flags attached to a [`RateSample`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SampleFlags {
    pub negative_duration: bool,
    pub carried_forward_start: bool,
}

impl SampleFlags {
    pub const NEGATIVE_DURATION: &'static str = "NEGATIVE_DURATION";
    pub const CARRIED_FORWARD_START: &'static str = "CARRIED_FORWARD_START";

    pub fn is_empty(self) -> bool {
        !self.negative_duration && !self.carried_forward_start
    }
}

/// `|`-separated flag names, empty when no flag is set.
impl fmt::Display for SampleFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names = Vec::with_capacity(2);
        if self.negative_duration {
            names.push(Self::NEGATIVE_DURATION);
        }
        if self.carried_forward_start {
            names.push(Self::CARRIED_FORWARD_START);
        }
        f.write_str(&names.join("|"))
    }
}

/// Bandwidth result for one job.
///
/// Built only through [`RateSample::try_new`], which enforces that the rate
/// is present exactly when the duration is non-zero and that it reproduces
/// `1000 * n_bytes / duration_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    job_id: JobId,
    start: Timestamp,
    end: Timestamp,
    n_bytes: u64,
    duration_ms: i64,
    rate_bytes_per_s: Option<f64>,
    flags: SampleFlags,
}

impl RateSample {
    pub fn try_new(
        job_id: JobId,
        start: Timestamp,
        end: Timestamp,
        n_bytes: u64,
        rate_bytes_per_s: Option<f64>,
        carried_forward_start: bool,
    ) -> Result<Self, ModelError> {
        // Both timestamps are within years 1..9999, so this cannot overflow.
        let duration_ms = end.epoch_ms() - start.epoch_ms();
        let inconsistent = || ModelError::InconsistentRate {
            rate: rate_bytes_per_s,
            duration_ms,
            n_bytes,
        };
        match rate_bytes_per_s {
            None if duration_ms != 0 => return Err(inconsistent()),
            Some(_) if duration_ms == 0 => return Err(inconsistent()),
            Some(rate) => {
                if !rate.is_finite() {
                    return Err(inconsistent());
                }
                let expected = 1000.0 * n_bytes as f64;
                let got = rate * duration_ms as f64;
                let scale = expected.abs().max(f64::MIN_POSITIVE);
                if (got - expected).abs() / scale > RATE_RECONSTRUCTION_TOLERANCE {
                    return Err(inconsistent());
                }
                if n_bytes > 0 && (rate < 0.0) != (duration_ms < 0) {
                    return Err(inconsistent());
                }
            }
            None => {}
        }
        Ok(RateSample {
            job_id,
            start,
            end,
            n_bytes,
            duration_ms,
            rate_bytes_per_s,
            flags: SampleFlags {
                negative_duration: duration_ms < 0,
                carried_forward_start,
            },
        })
    }

    pub fn job_id(&self) -> &JobId {
        &self.job_id
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }

    pub fn n_bytes(&self) -> u64 {
        self.n_bytes
    }

    pub fn duration_ms(&self) -> i64 {
        self.duration_ms
    }

    pub fn rate_bytes_per_s(&self) -> Option<f64> {
        self.rate_bytes_per_s
    }

    pub fn flags(&self) -> SampleFlags {
        self.flags
    }
}

/// Why a line could not be turned into a [`JobRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MalformedReason {
    /// Wrong number of columns.
    Arity,
    BadInteger,
    BadReal,
    BadTimestamp,
    BadFlag,
    BadLabel,
    /// A value that must be non-negative was negative (other than `-1`).
    NegativeValue,
    /// A derived value (sum, product) overflowed or left the timestamp range.
    OutOfRange,
    /// The line is not valid UTF-8.
    Encoding,
}

impl MalformedReason {
    pub fn code(self) -> &'static str {
        match self {
            MalformedReason::Arity => "arity",
            MalformedReason::BadInteger => "bad_integer",
            MalformedReason::BadReal => "bad_real",
            MalformedReason::BadTimestamp => "bad_timestamp",
            MalformedReason::BadFlag => "bad_flag",
            MalformedReason::BadLabel => "bad_label",
            MalformedReason::NegativeValue => "negative_value",
            MalformedReason::OutOfRange => "out_of_range",
            MalformedReason::Encoding => "encoding",
        }
    }
}

impl fmt::Display for MalformedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Line accounting for one parse session.
///
/// `parsed + skipped_missing_times + malformed + comments == total_lines`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub total_lines: u64,
    pub parsed: u64,
    pub skipped_missing_times: u64,
    pub malformed: u64,
    /// Comment and blank lines.
    pub comments: u64,
    pub reasons: BTreeMap<MalformedReason, u64>,
}

impl ParseReport {
    /// Non-comment, non-blank lines: one per job in the trace.
    pub fn job_lines(&self) -> u64 {
        self.total_lines - self.comments
    }

    pub fn is_balanced(&self) -> bool {
        self.parsed + self.skipped_missing_times + self.malformed + self.comments
            == self.total_lines
            && self.reasons.values().sum::<u64>() == self.malformed
    }
}

/// Aggregate statistics over defined rates, in the configured output unit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSummary {
    pub n_rates: u64,
    pub n_negative: u64,
    pub n_undefined: u64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub p95: Option<f64>,
}
