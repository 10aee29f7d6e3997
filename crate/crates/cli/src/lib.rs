//! Experiment runner for the `bergman-core` laboratory: JSON configs in,
//! CSV or JSON reports with a pass/fail summary out.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{validate, Experiment, ExperimentConfig, Format, PSpec, SequenceSpec};
pub use experiments::run_experiment;
pub use report::{Cell, Check, Report, Summary};

/// Caps the global rayon pool; `0` leaves the default.
pub fn configure_threads(threads: usize) -> anyhow::Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}
