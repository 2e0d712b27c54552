//! Configuration-driven experiments on top of `qcmod`: each named experiment
//! reproduces one step of the boundary-regularity argument and declares the
//! contracts its numbers must satisfy.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig, ExperimentSpec, SCHEMA_VERSION};
pub use error::CliError;
pub use report::{emit_plot_data, write_outputs, ExperimentReport, ExperimentResult, Status};
pub use run::{run, RunOptions};
