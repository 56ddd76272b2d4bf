//! Experiment orchestration: plans, reproducible RNG streams, sweeps and
//! output.

pub mod output;
pub mod plan;
pub mod rng;
pub mod sweep;

pub use output::{emit, render};
pub use plan::{parse_config, ConfigSource, DetectorKind, ExperimentPlan, OutputFormat, OutputSpec};
pub use rng::trial_rng;
pub use sweep::{
    bench_detectors, dump_channel, optimize_precoder, run_aber_sweep, run_analytical_aber, run_analytical_capacity,
    run_capacity_sweep, PrecoderPoint, PrecoderResult, SweepPoint, SweepResult, SCHEMA_VERSION,
};
