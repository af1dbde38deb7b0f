//! Deterministic rigid-job trace generator.
//!
//! Each job has an arrival time, a processor count and a runtime. Arrivals
//! follow exponential inter-arrival gaps; waits, runtimes, memory sizes and
//! processor counts are uniform. Fields can be deleted at random to exercise
//! the missing-data paths.
//!
//! The random stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`),
//! and every job consumes the same fixed sequence of draws whatever the
//! spec's fractions are, so a given spec always yields the same bytes.
//!
//! Next to the trace the generator reports the expected outcome of
//! bandwidth estimation with requested memory and no carry-forward: how many
//! jobs are usable and each usable job's exact rate as a reduced fraction.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{CpuSeconds, ExitCode, JobId, JobRecord, Label, Timestamp};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid ground truth, line {line}: {detail}")]
    InvalidTruth { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub count: u64,
    pub inter_arrival_mean_ms: f64,
    pub runtime_min_ms: u64,
    pub runtime_max_ms: u64,
    pub mem_kb_choices: Vec<u64>,
    pub procs_choices: Vec<u64>,
    pub missing_start_frac: f64,
    pub missing_end_frac: f64,
    pub missing_mem_frac: f64,
    /// Clock origin; the first job arrives one gap after it.
    pub start_epoch_ms: i64,
    /// Upper bound of the uniform queue wait.
    pub max_wait_ms: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 42,
            count: 1000,
            inter_arrival_mean_ms: 30_000.0,
            runtime_min_ms: 1_000,
            runtime_max_ms: 3_600_000,
            mem_kb_choices: vec![32768, 122880, 204800, 307200, 409600, 512000, 755712, 16777216],
            procs_choices: vec![32, 64, 128, 256, 512, 1024],
            missing_start_frac: 0.0,
            missing_end_frac: 0.0,
            missing_mem_frac: 0.0,
            // 1994-10-01T00:00:00Z
            start_epoch_ms: 780_969_600_000,
            max_wait_ms: 60_000,
        }
    }
}

// Largest value of -ln(1 - u) for u drawn from [0, 1) with 53-bit resolution.
const MAX_EXP_FACTOR: f64 = 37.0;

impl GenSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.inter_arrival_mean_ms.is_finite() && self.inter_arrival_mean_ms > 0.0) {
            return Err(invalid("inter_arrival_mean_ms must be a positive number"));
        }
        if self.runtime_min_ms == 0 || self.runtime_min_ms > self.runtime_max_ms {
            return Err(invalid("runtime range must satisfy 0 < min <= max"));
        }
        if self.mem_kb_choices.is_empty() || self.mem_kb_choices.contains(&0) {
            return Err(invalid("mem_kb_choices must be non-empty and positive"));
        }
        if self.mem_kb_choices.iter().any(|&kb| kb > u64::MAX / 1024 / 1000) {
            return Err(invalid("mem_kb_choices value too large"));
        }
        if self.procs_choices.is_empty() || self.procs_choices.contains(&0) {
            return Err(invalid("procs_choices must be non-empty and positive"));
        }
        for (name, frac) in [
            ("missing_start_frac", self.missing_start_frac),
            ("missing_end_frac", self.missing_end_frac),
            ("missing_mem_frac", self.missing_mem_frac),
        ] {
            if !(0.0..=1.0).contains(&frac) {
                return Err(invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        let horizon = self.start_epoch_ms as f64
            + self.count as f64 * (self.inter_arrival_mean_ms * MAX_EXP_FACTOR + 1.0)
            + self.max_wait_ms as f64
            + self.runtime_max_ms as f64;
        if self.start_epoch_ms < 0 || horizon > Timestamp::MAX_MS as f64 {
            return Err(invalid("generated timestamps would leave the supported range"));
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment. Unlisted keys keep
    /// their defaults. Lists are comma-separated.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, SynthError> {
            value
                .parse()
                .map_err(|_| invalid(format!("{key}: cannot parse {value:?}")))
        }
        fn list(key: &str, value: &str) -> Result<Vec<u64>, SynthError> {
            value
                .split(',')
                .map(|v| num(key, v.trim()))
                .collect()
        }

        let mut spec = GenSpec::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" => spec.seed = num(key, value)?,
                "count" => spec.count = num(key, value)?,
                "inter_arrival_mean_ms" => spec.inter_arrival_mean_ms = num(key, value)?,
                "runtime_min_ms" => spec.runtime_min_ms = num(key, value)?,
                "runtime_max_ms" => spec.runtime_max_ms = num(key, value)?,
                "mem_kb_choices" => spec.mem_kb_choices = list(key, value)?,
                "procs_choices" => spec.procs_choices = list(key, value)?,
                "missing_start_frac" => spec.missing_start_frac = num(key, value)?,
                "missing_end_frac" => spec.missing_end_frac = num(key, value)?,
                "missing_mem_frac" => spec.missing_mem_frac = num(key, value)?,
                "start_epoch_ms" => spec.start_epoch_ms = num(key, value)?,
                "max_wait_ms" => spec.max_wait_ms = num(key, value)?,
                _ => return Err(invalid(format!("unknown key {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Exact bandwidth of a usable generated job, `numerator / denominator`
/// bytes per second, in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRate {
    pub numerator: u128,
    pub denominator: u128,
}

impl ExactRate {
    pub fn new(n_bytes: u64, duration_ms: u64) -> Self {
        let num = u128::from(n_bytes) * 1000;
        let den = u128::from(duration_ms);
        let g = num.gcd(&den).max(1);
        ExactRate {
            numerator: num / g,
            denominator: den / g,
        }
    }
}

impl fmt::Display for ExactRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Expected outcome of estimating bandwidth on a generated trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub expected_valid: u64,
    pub expected_omitted: u64,
    /// Usable jobs in trace order.
    pub rates: Vec<(JobId, ExactRate)>,
}

impl GroundTruth {
    fn record(&mut self, job: &GeneratedJob) {
        match job.exact_rate {
            Some(rate) => {
                self.expected_valid += 1;
                self.rates.push((job.record.job_id.clone(), rate));
            }
            None => self.expected_omitted += 1,
        }
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> io::Result<()> {
        writeln!(sink, "expected_valid={}", self.expected_valid)?;
        writeln!(sink, "expected_omitted={}", self.expected_omitted)?;
        for (id, rate) in &self.rates {
            writeln!(sink, "{id} {rate}")?;
        }
        sink.flush()
    }

    pub fn read_from<R: BufRead>(source: R) -> Result<Self, SynthError> {
        let mut truth = GroundTruth::default();
        let mut seen_valid = false;
        let mut seen_omitted = false;
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let bad = |detail: &str| SynthError::InvalidTruth {
                line: i + 1,
                detail: detail.to_string(),
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("expected_valid=") {
                truth.expected_valid = v.parse().map_err(|_| bad("bad count"))?;
                seen_valid = true;
            } else if let Some(v) = line.strip_prefix("expected_omitted=") {
                truth.expected_omitted = v.parse().map_err(|_| bad("bad count"))?;
                seen_omitted = true;
            } else {
                let (id, frac) = line.split_once(' ').ok_or_else(|| bad("expected `id num/den`"))?;
                let (num, den) = frac.split_once('/').ok_or_else(|| bad("expected num/den"))?;
                let rate = ExactRate {
                    numerator: num.parse().map_err(|_| bad("bad numerator"))?,
                    denominator: den.parse().map_err(|_| bad("bad denominator"))?,
                };
                if rate.denominator == 0 {
                    return Err(bad("zero denominator"));
                }
                let id = JobId::new(id).map_err(|_| bad("bad job id"))?;
                truth.rates.push((id, rate));
            }
        }
        if !(seen_valid && seen_omitted) {
            return Err(SynthError::InvalidTruth {
                line: 0,
                detail: "missing expected_valid or expected_omitted".into(),
            });
        }
        if truth.rates.len() as u64 != truth.expected_valid {
            return Err(SynthError::InvalidTruth {
                line: 0,
                detail: "rate count differs from expected_valid".into(),
            });
        }
        Ok(truth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedJob {
    pub record: JobRecord,
    /// `Some` exactly when start, end and requested memory survived deletion.
    pub exact_rate: Option<ExactRate>,
}

/// Lazily generated jobs; see [`jobs`].
pub struct JobStream {
    spec: GenSpec,
    rng: ChaCha8Rng,
    index: u64,
    clock_ms: i64,
}

/// Streams the jobs of `spec` one at a time without buffering the trace.
pub fn jobs(spec: &GenSpec) -> Result<JobStream, SynthError> {
    spec.validate()?;
    Ok(JobStream {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        clock_ms: spec.start_epoch_ms,
        index: 0,
        spec: spec.clone(),
    })
}

const QUEUES: [&str; 4] = ["batch", "short", "long", "debug"];

impl Iterator for JobStream {
    type Item = GeneratedJob;

    fn next(&mut self) -> Option<GeneratedJob> {
        if self.index >= self.spec.count {
            return None;
        }
        self.index += 1;
        let spec = &self.spec;
        let rng = &mut self.rng;

        let u: f64 = rng.gen();
        let gap = (-spec.inter_arrival_mean_ms * (1.0 - u).ln()).round() as i64;
        self.clock_ms += gap;
        let submit = self.clock_ms;
        let wait = rng.gen_range(0..=spec.max_wait_ms) as i64;
        let runtime = rng.gen_range(spec.runtime_min_ms..=spec.runtime_max_ms);
        let start = submit + wait;
        let end = start + runtime as i64;

        let req_mem_kb = spec.mem_kb_choices[rng.gen_range(0..spec.mem_kb_choices.len())];
        let procs = spec.procs_choices[rng.gen_range(0..spec.procs_choices.len())];
        let used_mem_kb = rng.gen_range(1..=req_mem_kb);
        let req_cpu = (runtime as f64 / 1000.0).ceil() * procs as f64;
        let used_cpu = (req_cpu * rng.gen::<f64>()).floor();
        let dedicated = rng.gen_bool(0.1);
        let queue = QUEUES[rng.gen_range(0..QUEUES.len())];
        let user = rng.gen_range(1..=64u32);
        let project = rng.gen_range(1..=16u32);
        let exit_code = if rng.gen_bool(0.95) { 0 } else { rng.gen_range(1..=255) };

        let drop_start = rng.gen::<f64>() < spec.missing_start_frac;
        let drop_end = rng.gen::<f64>() < spec.missing_end_frac;
        let drop_mem = rng.gen::<f64>() < spec.missing_mem_frac;

        let ts = |ms: i64| Timestamp::from_epoch_ms(ms).expect("range checked by validate()");
        let label = |s: String| Label::new(s).expect("generated labels are well-formed");
        let record = JobRecord {
            job_id: JobId::new(self.index.to_string()).expect("numeric ids are valid"),
            submit_time: Some(ts(submit)),
            start_time: (!drop_start).then(|| ts(start)),
            end_time: (!drop_end).then(|| ts(end)),
            req_procs: Some(procs),
            used_procs: Some(procs),
            req_cpu_s: Some(CpuSeconds::new(req_cpu).expect("finite, non-negative")),
            used_cpu_s: Some(CpuSeconds::new(used_cpu).expect("finite, non-negative")),
            req_mem_kb: (!drop_mem).then_some(req_mem_kb),
            used_mem_kb: Some(used_mem_kb),
            queue: Some(label(queue.to_string())),
            dedicated: Some(dedicated),
            user: Some(label(format!("u{user}"))),
            project: Some(label(format!("p{project}"))),
            executable: Some(label(format!("app{}", self.index % 97))),
            exit_code: Some(ExitCode::new(exit_code).expect("never -1")),
        };
        let exact_rate = (!(drop_start || drop_end || drop_mem))
            .then(|| ExactRate::new(req_mem_kb * 1024, runtime));
        Some(GeneratedJob { record, exact_rate })
    }
}

/// Generates the whole trace together with its ground truth.
pub fn generate(spec: &GenSpec) -> Result<(Vec<JobRecord>, GroundTruth), SynthError> {
    let mut truth = GroundTruth::default();
    let records = jobs(spec)?
        .map(|job| {
            truth.record(&job);
            job.record
        })
        .collect();
    Ok((records, truth))
}

/// Writes the trace as LANL16 lines to `trace` and the ground truth to
/// `truth`, streaming.
pub fn write_fixture<T: Write, G: Write>(
    spec: &GenSpec,
    mut trace: T,
    truth: G,
) -> Result<GroundTruth, SynthError> {
    let mut gt = GroundTruth::default();
    for job in jobs(spec)? {
        writeln!(trace, "{}", crate::parser::format_lanl_line(&job.record))?;
        gt.record(&job);
    }
    trace.flush()?;
    gt.write_to(truth)?;
    Ok(gt)
}
