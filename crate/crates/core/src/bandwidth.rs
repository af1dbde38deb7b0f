//! Per-job bandwidth: `rate = 1000 * n_bytes / (end_ms - start_ms)` bytes per
//! second, where `n_bytes` comes from one of the record's memory columns.
//!
//! A job is usable when its start time, end time and selected memory value
//! are all present. Optionally a missing start time is replaced by the end
//! time of the immediately preceding record in file order ("carry-forward").
//! Zero-length jobs get no rate; negative-length jobs keep their negative
//! rate and are flagged.

use crate::model::{JobRecord, RateSample, Timestamp};

/// Which memory column supplies the byte count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemorySource {
    /// Requested memory (column 9).
    #[default]
    Requested,
    /// Used memory (column 10).
    Used,
}

/// Divisor turning bytes/s into Mbytes/s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MbBase {
    /// 2^20 bytes.
    #[default]
    Binary,
    /// 10^6 bytes.
    Decimal,
}

impl MbBase {
    pub fn divisor(self) -> u64 {
        match self {
            MbBase::Binary => 1_048_576,
            MbBase::Decimal => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RateOptions {
    pub memory: MemorySource,
    pub carry_forward: bool,
    /// Exclude jobs whose end precedes their start.
    pub drop_negative: bool,
}

/// Anything with an optional start and end, in sequence order.
pub trait Interval {
    fn start(&self) -> Option<Timestamp>;
    fn end(&self) -> Option<Timestamp>;
}

impl Interval for JobRecord {
    fn start(&self) -> Option<Timestamp> {
        self.start_time
    }

    fn end(&self) -> Option<Timestamp> {
        self.end_time
    }
}

impl Interval for (Option<Timestamp>, Option<Timestamp>) {
    fn start(&self) -> Option<Timestamp> {
        self.0
    }

    fn end(&self) -> Option<Timestamp> {
        self.1
    }
}

/// Byte count from the selected memory column (KB × 1024).
///
/// A KB value too large to express in bytes as a `u64` is treated as absent.
pub fn select_bytes(record: &JobRecord, source: MemorySource) -> Option<u64> {
    let kb = match source {
        MemorySource::Requested => record.req_mem_kb,
        MemorySource::Used => record.used_mem_kb,
    }?;
    kb.checked_mul(1024)
}

pub fn duration_ms(start: Timestamp, end: Timestamp) -> i64 {
    end.epoch_ms() - start.epoch_ms()
}

/// `1000 * n_bytes / duration_ms` in bytes per second; `None` for a zero
/// duration.
pub fn rate(n_bytes: u64, duration_ms: i64) -> Option<f64> {
    if duration_ms == 0 {
        return None;
    }
    // 1000 * u64::MAX fits in u128; the only rounding steps are this
    // conversion and the division.
    let numerator = (u128::from(n_bytes) * 1000) as f64;
    Some(numerator / duration_ms as f64)
}

pub fn to_output_unit(rate_bytes_per_s: f64, base: MbBase) -> f64 {
    rate_bytes_per_s / base.divisor() as f64
}

/// Start time for `items[idx]`, falling back to the previous item's end.
///
/// Returns `None` when the item has no start and either it is the first item
/// or its predecessor has no end. Panics if `idx` is out of bounds.
pub fn resolve_start<T: Interval>(items: &[T], idx: usize) -> Option<Timestamp> {
    items[idx]
        .start()
        .or_else(|| idx.checked_sub(1).and_then(|prev| items[prev].end()))
}

/// Splits records into usable and omitted ones, preserving order.
pub fn partition_jobs(
    records: &[JobRecord],
    source: MemorySource,
) -> (Vec<&JobRecord>, Vec<&JobRecord>) {
    records
        .iter()
        .partition(|r| is_valid(r, r.start_time, source))
}

fn is_valid(record: &JobRecord, start: Option<Timestamp>, source: MemorySource) -> bool {
    start.is_some() && record.end_time.is_some() && select_bytes(record, source).is_some()
}

/// Incremental version of [`compute_rates`] for streamed records.
///
/// Feed records in file order; each call returns the sample for that record,
/// or `None` when it is omitted.
#[derive(Debug, Clone, Default)]
pub struct RateEstimator {
    options: RateOptions,
    prev_end: Option<Timestamp>,
    seen: u64,
    valid: u64,
    omitted: u64,
    dropped_negative: u64,
}

impl RateEstimator {
    pub fn new(options: RateOptions) -> Self {
        RateEstimator {
            options,
            ..Default::default()
        }
    }

    pub fn push(&mut self, record: &JobRecord) -> Option<RateSample> {
        let prev_end = std::mem::replace(&mut self.prev_end, record.end_time);
        self.seen += 1;

        let (start, carried) = match (record.start_time, self.options.carry_forward) {
            (Some(s), _) => (Some(s), false),
            (None, true) => (prev_end, prev_end.is_some()),
            (None, false) => (None, false),
        };
        let (Some(start), Some(end), Some(n_bytes)) = (
            start,
            record.end_time,
            select_bytes(record, self.options.memory),
        ) else {
            self.omitted += 1;
            return None;
        };
        self.valid += 1;

        let duration = duration_ms(start, end);
        if self.options.drop_negative && duration < 0 {
            self.dropped_negative += 1;
            return None;
        }
        let sample = RateSample::try_new(
            record.job_id.clone(),
            start,
            end,
            n_bytes,
            rate(n_bytes, duration),
            carried,
        )
        .expect("rate() output always satisfies the sample invariants");
        Some(sample)
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Records with start (possibly carried), end and memory present.
    pub fn valid(&self) -> u64 {
        self.valid
    }

    pub fn omitted(&self) -> u64 {
        self.omitted
    }

    /// Valid records excluded by `drop_negative`.
    pub fn dropped_negative(&self) -> u64 {
        self.dropped_negative
    }
}

/// One sample per usable record, in input order.
pub fn compute_rates(
    records: &[JobRecord],
    source: MemorySource,
    carry_forward: bool,
) -> Vec<RateSample> {
    compute_rates_with(
        records,
        RateOptions {
            memory: source,
            carry_forward,
            drop_negative: false,
        },
    )
}

pub fn compute_rates_with(records: &[JobRecord], options: RateOptions) -> Vec<RateSample> {
    let mut estimator = RateEstimator::new(options);
    records.iter().filter_map(|r| estimator.push(r)).collect()
}
