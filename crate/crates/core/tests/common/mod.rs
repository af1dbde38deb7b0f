//! Test support: record strategies and an exact-arithmetic rate oracle.
//!
//! The oracle works on arbitrary-precision rationals and never calls into the
//! crate's arithmetic.

#![allow(dead_code)]

use bwtrace::model::{CpuSeconds, ExitCode, JobId, JobRecord, Label, RateSample, Timestamp};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Exact `1000 * n_bytes / duration_ms`, or `None` for a zero duration.
pub fn exact_rate(n_bytes: u64, duration_ms: i64) -> Option<BigRational> {
    if duration_ms == 0 {
        return None;
    }
    Some(BigRational::new(
        BigInt::from(n_bytes) * BigInt::from(1000),
        BigInt::from(duration_ms),
    ))
}

/// `|value - exact| <= tol * |exact|`, evaluated exactly.
pub fn within_relative(value: f64, exact: &BigRational, tol: f64) -> bool {
    let Some(value) = BigRational::from_float(value) else {
        return false;
    };
    let tol = BigRational::from_float(tol).expect("finite tolerance");
    let err = (value - exact).abs();
    if exact.is_zero() {
        return err.is_zero();
    }
    err <= tol * exact.abs()
}

/// Checks a sample's rate against the oracle.
pub fn sample_matches_oracle(sample: &RateSample, tol: f64) -> bool {
    match (
        sample.rate_bytes_per_s(),
        exact_rate(sample.n_bytes(), sample.duration_ms()),
    ) {
        (None, None) => true,
        (Some(r), Some(exact)) => within_relative(r, &exact, tol),
        _ => false,
    }
}

pub fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn text_token() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z0-9_.]{1,8}",
        // punctuation, quotes, commas, non-ASCII
        "[!-~é€]{1,10}",
    ]
}

pub fn arb_job_id() -> impl Strategy<Value = JobId> {
    text_token().prop_filter_map("valid job id", |s| JobId::new(s).ok())
}

pub fn arb_label() -> impl Strategy<Value = Label> {
    text_token().prop_filter_map("valid label", |s| Label::new(s).ok())
}

pub fn arb_timestamp() -> impl Strategy<Value = Timestamp> {
    prop_oneof![
        // whole seconds around the trace period
        (600_000_000i64..1_000_000_000).prop_map(|s| s * 1000),
        // arbitrary milliseconds 1990-2100
        631_152_000_000i64..4_133_980_800_000,
        // anywhere in the supported range
        Timestamp::MIN_MS..=Timestamp::MAX_MS,
        Just(-1000i64),
        Just(0i64),
    ]
    .prop_map(|ms| Timestamp::from_epoch_ms(ms).unwrap())
}

pub fn arb_cpu() -> impl Strategy<Value = CpuSeconds> {
    prop_oneof![
        0.0f64..1e7,
        (0u32..100_000).prop_map(f64::from),
        proptest::num::f64::POSITIVE | proptest::num::f64::ZERO,
    ]
    .prop_map(|v| CpuSeconds::new(v).unwrap())
}

pub fn arb_exit_code() -> impl Strategy<Value = ExitCode> {
    prop_oneof![0i64..256, any::<i64>()].prop_filter_map("not -1", |c| ExitCode::new(c).ok())
}

fn small_or_any() -> impl Strategy<Value = u64> {
    prop_oneof![0u64..100_000, any::<u64>()]
}

pub fn arb_job_record() -> impl Strategy<Value = JobRecord> {
    (
        (
            arb_job_id(),
            proptest::option::of(arb_timestamp()),
            proptest::option::of(arb_timestamp()),
            proptest::option::of(arb_timestamp()),
            proptest::option::of(small_or_any()),
            proptest::option::of(small_or_any()),
            proptest::option::of(arb_cpu()),
            proptest::option::of(arb_cpu()),
        ),
        (
            proptest::option::of(small_or_any()),
            proptest::option::of(small_or_any()),
            proptest::option::of(arb_label()),
            proptest::option::of(any::<bool>()),
            proptest::option::of(arb_label()),
            proptest::option::of(arb_label()),
            proptest::option::of(arb_label()),
            proptest::option::of(arb_exit_code()),
        ),
    )
        .prop_map(|(a, b)| JobRecord {
            job_id: a.0,
            submit_time: a.1,
            start_time: a.2,
            end_time: a.3,
            req_procs: a.4,
            used_procs: a.5,
            req_cpu_s: a.6,
            used_cpu_s: a.7,
            req_mem_kb: b.0,
            used_mem_kb: b.1,
            queue: b.2,
            dedicated: b.3,
            user: b.4,
            project: b.5,
            executable: b.6,
            exit_code: b.7,
        })
}

/// Records with realistic sizes and sometimes-missing times and memory.
pub fn arb_trace_record() -> impl Strategy<Value = JobRecord> {
    let ms = 768_000_000_000i64..769_000_000_000;
    (
        arb_job_id(),
        proptest::option::weighted(0.8, ms.clone()),
        proptest::option::weighted(0.8, ms),
        proptest::option::weighted(0.8, 0u64..20_000_000),
        proptest::option::weighted(0.8, 0u64..20_000_000),
    )
        .prop_map(|(id, start, end, req, used)| {
            let mut r = JobRecord::new(id);
            r.start_time = start.map(|ms| Timestamp::from_epoch_ms(ms).unwrap());
            r.end_time = end.map(|ms| Timestamp::from_epoch_ms(ms).unwrap());
            r.req_mem_kb = req;
            r.used_mem_kb = used;
            r
        })
}
