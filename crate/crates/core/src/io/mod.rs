//! Configuration parsing, run orchestration and report emission.

pub mod config;
pub mod output;
pub mod run;
pub mod validate;

pub use config::{parse_config, validate_spec, CachePolicy, RunSpec, COMMANDS};
pub use output::{fmt_f64, write_atomic, CsvTable};
pub use run::{cache_dir, run, write_outputs, Report, CACHE_ENV};
pub use validate::{validation_suite, PropertyResult};
