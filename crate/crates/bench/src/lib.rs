//! Evaluation harness: runs suites of episodes across map families, agent
//! counts and inference modes, sweeps the planning horizon and the spatial
//! encoding, and writes CSV tables and SVG plots.
//!
//! Instance seeds are derived from the suite's master seed by hashing
//! `(master, family, map index, agent count, seed index)`, so a suite's
//! results never depend on how episodes are scheduled across threads.

pub mod config;
pub mod error;
pub mod report;
pub mod suite;

pub use config::{Family, ModeName, ModeSpec, SuiteConfig};
pub use error::{BenchError, Result};
pub use report::{emit_csv, emit_plot, parse_csv, read_csv, sr_table};
pub use suite::{
    ablation_horizon, ablation_sre, aggregate, run_suite, EpisodeRecord, PointSummary, Provenance, SreAblation,
    SreDelta, SuiteResult,
};
