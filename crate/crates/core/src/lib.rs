//! Transmit beampattern design for a RIS-based dual-function radar-communication
//! (DFRC) transmitter.
//!
//! A small number of active sources illuminate a passive reconfigurable
//! intelligent surface. The source waveforms and the RIS phase shifts are
//! designed jointly so that the radiated amplitude beampattern matches a
//! desired space-frequency pattern in a weighted least-squares sense. The
//! resulting design is scored by the average radar detection probability of
//! a Swerling-1 target and the average Gaussian-channel rate at a user,
//! which traces the ISAC operating characteristic. A fully digital planar
//! array is provided as a baseline.
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the command
//! line live in the companion `ris-dfrc-cli` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod desired;
mod error;
pub mod grid;
mod linalg;
pub mod mimo;
pub mod optimizer;
pub mod performance;
mod response;
pub mod scene;
mod waveform;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;

pub use desired::{build_desired, AngleBox, BeamRegion, DesiredPattern, TwoBeamLayout};
pub use grid::Grids;
pub use mimo::{design_mimo, mimo_beampattern_value, MimoProblem, MimoScene};
pub use optimizer::{matching_objective, run_bcd, Init, ObjectiveTrace, OptimConfig, RisProblem, WaveformSolver};
pub use performance::{
    average_detection_prob, average_rate, calibrate_comm, calibrate_radar, comm_snr,
    detection_prob, evaluate_design, operating_characteristic, radar_snr, rate, snr_band_integral,
    Architecture, BandPattern, Calibration, CommPerf, Estimate, McConfig, OperatingPoint, RadarPerf,
};
pub use scene::{
    beampattern_map, beampattern_value, normalized_power_map, BeampatternMap, DesignVariables, ExcitedAperture,
    ElementPattern, PlanarArray, Scene, SignalParams, SourceSet, SPEED_OF_LIGHT,
};
