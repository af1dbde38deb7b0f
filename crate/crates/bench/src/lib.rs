//! Fixtures shared by the benchmarks.

use bwtrace::synth::{generate, GenSpec};
use bwtrace::{parser, JobRecord};

/// A seeded LANL16 trace of `count` jobs with some missing data.
pub fn lanl_fixture(count: u64) -> (Vec<JobRecord>, String) {
    let spec = GenSpec {
        count,
        missing_start_frac: 0.2,
        missing_end_frac: 0.1,
        ..Default::default()
    };
    let (records, _) = generate(&spec).expect("valid spec");
    let text = records
        .iter()
        .map(|r| parser::format_lanl_line(r) + "\n")
        .collect();
    (records, text)
}
