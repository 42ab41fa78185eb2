//! Physical description of the RIS transmitter and evaluation of its
//! far-field amplitude beampattern.

mod beampattern;
mod channel;
mod geometry;

pub use beampattern::{
    beampattern_map, beampattern_value, normalized_power_db, normalized_power_map,
    BeampatternMap, DesignVariables, ExcitedAperture,
};
pub use channel::{gain_matrix, omega_matrix, q_matrix, sample_phases, source_ris_gain, steering_vector};
pub use geometry::{direction, ElementPattern, PlanarArray, SignalParams, SourceSet, SPEED_OF_LIGHT};

pub(crate) use geometry::check_visible;

use alloc::vec::Vec;
use nalgebra::Vector3;

use crate::error::{invalid, Result};

/// RIS elements, their illuminating sources and the signal parameters.
///
/// RIS elements radiate toward `+z` and receive from the sources on the
/// `-z` side, so an element's receive boresight is `-z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    elements: Vec<Vector3<f64>>,
    pub element_pattern: ElementPattern,
    pub sources: SourceSet,
    pub source_pattern: ElementPattern,
    pub signal: SignalParams,
}

impl Scene {
    pub fn new(
        ris: &PlanarArray,
        sources: SourceSet,
        element_pattern: ElementPattern,
        source_pattern: ElementPattern,
        signal: SignalParams,
    ) -> Result<Self> {
        Self::with_elements(ris.positions(), sources, element_pattern, source_pattern, signal)
    }

    /// Arbitrary element layout; positions need not lie on a grid.
    pub fn with_elements(
        elements: Vec<Vector3<f64>>,
        sources: SourceSet,
        element_pattern: ElementPattern,
        source_pattern: ElementPattern,
        signal: SignalParams,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(invalid("ris", "need at least one RIS element"));
        }
        Ok(Self {
            elements,
            element_pattern,
            sources,
            source_pattern,
            signal,
        })
    }

    /// 10x10 half-wavelength transmitting RIS fed by four quadrant sources
    /// 60 cm behind it; T = 0.64 us, W = 100 MHz, f_c = 3 GHz.
    pub fn paper() -> Self {
        let signal = SignalParams::new(0.64e-6, 100e6, 3e9).expect("valid signal");
        let ris = PlanarArray::half_wavelength(10, 10, signal.carrier).expect("valid array");
        let sources = SourceSet::quadrants(&ris, 0.6).expect("valid sources");
        Self::new(
            &ris,
            sources,
            ElementPattern::default(),
            ElementPattern::default(),
            signal,
        )
        .expect("valid scene")
    }

    pub fn elements(&self) -> &[Vector3<f64>] {
        &self.elements
    }

    /// `M`
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// `J`
    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    /// `N`
    pub fn samples(&self) -> usize {
        self.signal.samples()
    }

    /// Length of the waveform vector `s`, `J N`.
    pub fn waveform_len(&self) -> usize {
        self.num_sources() * self.samples()
    }
}
