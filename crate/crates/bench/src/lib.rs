//! Experiment runner for `robustbf`: configuration, the Monte Carlo sweep,
//! CSV and SVG output, and the acceptance checks behind `selftest`.

pub mod acceptance;
pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ConfigError, ConstraintMode, ExperimentConfig};
pub use experiment::{run_experiment, ResultRow, RowStatus};
pub use output::{emit_csv, emit_svg_lines, read_csv, Metric};
