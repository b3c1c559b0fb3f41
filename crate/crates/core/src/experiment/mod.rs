//! Experiment driver: seeded initial conditions, trajectory files, figure
//! reproduction, recurrence diagnostics and the self-check suite.

pub mod check;
pub mod config;
pub mod figures;
pub mod io;
pub mod recurrence;
pub mod rng;
pub mod sample;

pub use check::{check_suite, CheckReport};
pub use config::{ExperimentConfig, IcMode};
pub use figures::{figure_config, run_figure, simulate, FigureOutput};
pub use recurrence::{recurrence_metric, RecurrenceReport};
pub use sample::sample_initial;
