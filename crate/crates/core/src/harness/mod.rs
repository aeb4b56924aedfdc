//! Exponent predictions, the β bootstrap, experiment configs, runs and
//! reports.

mod config;
mod experiment;
mod predict;
mod report;

pub use config::{ExperimentConfig, DEFAULT_DELTA};
pub use experiment::{collect_configs, run_experiment, write_outputs, Outcome};
pub use predict::{bootstrap_sequence, predicted_exponent, BootstrapState};
pub use report::{classify, Report, Verdict, REPORT_TOLERANCE};

pub use crate::fit::{fit_power_law, DecayFit};
