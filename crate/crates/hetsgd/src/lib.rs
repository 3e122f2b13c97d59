//! Experiment harness around `hetsgd-core`: spec files, parallel sweeps,
//! the bound-gap study, report files and the `hetsgd` command line.

pub mod analysis;
pub mod error;
pub mod formats;
pub mod gap;
pub mod report;
pub mod scenario;
pub mod spec;
pub mod sweep;

pub use error::{HarnessError, Result};
pub use spec::{load_spec, parse_spec, ExperimentSpec, Overrides};
