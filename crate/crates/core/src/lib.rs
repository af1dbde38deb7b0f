//! Bandwidth estimation for parallel-machine workload traces.
//!
//! Reads per-job accounting logs ([`parser`]), estimates each job's
//! bandwidth as its memory footprint over its wall-clock duration
//! ([`bandwidth`]), and writes worksheets and summaries ([`export`]).
//! [`synth`] produces deterministic traces with known answers for testing.

pub mod bandwidth;
pub mod dates;
pub mod export;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod synth;

pub use bandwidth::{MbBase, MemorySource, RateEstimator, RateOptions};
pub use export::{Layout, SampleWriter, SummaryBuilder};
pub use model::{
    JobId, JobRecord, Label, MalformedReason, ParseReport, RateSample, SampleFlags, Timestamp,
    TraceSummary,
};
pub use parser::{ParseOptions, PerProcMemory, TraceFormat, TraceReader};
pub use synth::{GenSpec, GroundTruth};
