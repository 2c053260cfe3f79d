//! Configuration, persistence, reports, and canned scenarios.
//!
//! File formats: flat `key = value` configs with `[section]` headers
//! ([`config`]), `TAWF` binary arrays ([`arrayfile`]), and RFC 4180 CSV
//! reports with 17-significant-digit floats ([`report`]). Subcommand runners
//! live in [`scenario`]; all outputs are deterministic for a fixed
//! (config, seed).

pub mod arrayfile;
pub mod config;
pub mod report;
pub mod scenario;

pub use arrayfile::{read_array, write_array, ArrayFile};
pub use config::ScenarioConfig;
pub use scenario::{
    builtin, run, run_check_conditions, Assembled, RunOpts, RunSummary, Subcommand, BUILTIN_NAMES,
};
