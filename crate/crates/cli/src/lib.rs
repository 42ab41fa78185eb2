//! Experiment harness for the RIS-based DFRC transmitter: configuration
//! files, design runs, beampattern cuts and operating-characteristic sweeps,
//! all exported as plain-text tables.

pub mod config;
mod error;
pub mod run;
pub mod table;

pub use config::{ConfigError, ConfigIssue, Profile, RunConfig};
pub use error::{CliError, Context};
pub use run::{
    export_cut, read_complex, run_cut, run_design, run_tradeoff, tradeoff_points, Arch, ArchCurvePoint,
    DesignOutcome, MapData, RunOptions, FULL_SCALE_LIMIT, THREADS_ENV,
};
pub use table::{fmt_f64, Table};
