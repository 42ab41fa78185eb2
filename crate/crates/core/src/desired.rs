//! Two-beam desired amplitude pattern: a radar beam in the lower part of the
//! band and a communication beam over the full band.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::grid::Grids;
use crate::scene::SignalParams;

// grid cell centers can land on box edges up to rounding
const ANGLE_SLACK: f64 = 1e-9;
const FREQ_SLACK: f64 = 1e-3;

fn within(v: f64, range: [f64; 2], slack: f64) -> bool {
    v >= range[0] - slack && v <= range[1] + slack
}

/// Closed rectangle in `(theta, phi)`, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBox {
    pub theta: [f64; 2],
    pub phi: [f64; 2],
}

impl AngleBox {
    pub fn new(theta: [f64; 2], phi: [f64; 2]) -> Result<Self> {
        if !(theta[0] <= theta[1] && phi[0] <= phi[1]) {
            return Err(invalid("angle box", "lower bounds must not exceed upper bounds"));
        }
        Ok(Self { theta, phi })
    }

    pub fn contains(&self, theta: f64, phi: f64) -> bool {
        within(theta, self.theta, ANGLE_SLACK) && within(phi, self.phi, ANGLE_SLACK)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.theta[0] + self.theta[1]),
            0.5 * (self.phi[0] + self.phi[1]),
        )
    }

    /// Box with the same center and `fraction` of each side length.
    pub fn shrink(&self, fraction: f64) -> Self {
        let (tc, pc) = self.center();
        let ht = 0.5 * fraction * (self.theta[1] - self.theta[0]);
        let hp = 0.5 * fraction * (self.phi[1] - self.phi[0]);
        Self {
            theta: [tc - ht, tc + ht],
            phi: [pc - hp, pc + hp],
        }
    }
}

/// Frequency band times angle box with a constant amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamRegion {
    pub band: [f64; 2],
    pub angles: AngleBox,
    pub height: f64,
}

impl BeamRegion {
    pub fn new(band: [f64; 2], angles: AngleBox, height: f64) -> Result<Self> {
        if !(band[0] < band[1]) {
            return Err(invalid("band", "lower edge must be below upper edge"));
        }
        if !(height >= 0.0) {
            return Err(invalid("height", "must be nonnegative"));
        }
        Ok(Self {
            band,
            angles,
            height,
        })
    }
}

/// Whether `(f, theta, phi)` lies in the region; boundaries are inside.
pub fn region_contains(region: &BeamRegion, f: f64, theta: f64, phi: f64) -> bool {
    within(f, region.band, FREQ_SLACK) && region.angles.contains(theta, phi)
}

/// Bands and boxes of the radar and communication beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBeamLayout {
    pub radar_band: [f64; 2],
    pub radar_box: AngleBox,
    pub comm_band: [f64; 2],
    pub comm_box: AngleBox,
}

impl TwoBeamLayout {
    /// Radar over `[-W/2, -W/4] x [0, pi/8]^2`; communication over
    /// `[-W/2, W/2] x [-pi/4, -pi/8]^2`.
    pub fn standard(signal: &SignalParams) -> Self {
        let w = signal.bandwidth;
        Self {
            radar_band: [-w / 2.0, -w / 4.0],
            radar_box: AngleBox {
                theta: [0.0, FRAC_PI_8],
                phi: [0.0, FRAC_PI_8],
            },
            comm_band: [-w / 2.0, w / 2.0],
            comm_box: AngleBox {
                theta: [-FRAC_PI_4, -FRAC_PI_8],
                phi: [-FRAC_PI_4, -FRAC_PI_8],
            },
        }
    }
}

/// Radar beam amplitude `sqrt(1024 eta / (W sin(pi/8)))`.
pub fn radar_height(eta: f64, bandwidth: f64) -> f64 {
    (1024.0 * eta / (bandwidth * FRAC_PI_8.sin())).sqrt()
}

/// Communication beam amplitude `sqrt(256 (1 - eta) / (W sqrt2 - W sin(pi/8)))`.
pub fn comm_height(eta: f64, bandwidth: f64) -> f64 {
    (256.0 * (1.0 - eta) / (bandwidth * SQRT_2 - bandwidth * FRAC_PI_8.sin())).sqrt()
}

/// Desired amplitudes `D` and weights `w` on a `K x L` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredPattern {
    pub eta: f64,
    /// Radar region first, then communication.
    pub regions: Vec<BeamRegion>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    freqs: Vec<f64>,
    signal: SignalParams,
}

impl DesiredPattern {
    /// Samples the regions on `grids` with unit weights.
    pub fn from_regions(
        eta: f64,
        regions: Vec<BeamRegion>,
        signal: &SignalParams,
        grids: &Grids,
    ) -> Self {
        let mut values = Vec::with_capacity(grids.len());
        for &f in grids.freqs() {
            for &(t, p) in grids.angles() {
                values.push(point_value(&regions, f, t, p));
            }
        }
        Self {
            eta,
            regions,
            weights: alloc::vec![1.0; values.len()],
            values,
            freqs: grids.freqs().to_vec(),
            signal: *signal,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: self.values.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || !weights.iter().any(|w| *w > 0.0) {
            return Err(invalid("weights", "must be nonnegative and not all zero"));
        }
        self.weights = weights;
        Ok(self)
    }

    /// `D(f; theta, phi)` at any point, on or off the grid.
    pub fn value_at(&self, f: f64, theta: f64, phi: f64) -> f64 {
        point_value(&self.regions, f, theta, phi)
    }

    pub fn radar(&self) -> &BeamRegion {
        &self.regions[0]
    }

    pub fn comm(&self) -> &BeamRegion {
        &self.regions[1]
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn signal(&self) -> &SignalParams {
        &self.signal
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|d| *d == 0.0)
    }
}

fn point_value(regions: &[BeamRegion], f: f64, theta: f64, phi: f64) -> f64 {
    regions
        .iter()
        .filter(|r| region_contains(r, f, theta, phi))
        .map(|r| r.height)
        .sum()
}

/// Desired pattern for power split `eta` with the standard beam layout.
pub fn build_desired(eta: f64, signal: &SignalParams, grids: &Grids) -> Result<DesiredPattern> {
    build_desired_with(eta, &TwoBeamLayout::standard(signal), signal, grids)
}

pub fn build_desired_with(
    eta: f64,
    layout: &TwoBeamLayout,
    signal: &SignalParams,
    grids: &Grids,
) -> Result<DesiredPattern> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta", format!("must lie in [0, 1], got {eta}")));
    }
    let w = signal.bandwidth;
    let radar = BeamRegion::new(layout.radar_band, layout.radar_box, radar_height(eta, w))?;
    let comm = BeamRegion::new(layout.comm_band, layout.comm_box, comm_height(eta, w))?;
    Ok(DesiredPattern::from_regions(
        eta,
        alloc::vec![radar, comm],
        signal,
        grids,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig() -> SignalParams {
        SignalParams::new(0.64e-6, 100e6, 3e9).unwrap()
    }

    #[test]
    fn heights_at_even_split() {
        // sqrt(512 / (1e8 sin(pi/8))) and sqrt(128 / (1e8 (sqrt2 - sin(pi/8))))
        assert!((radar_height(0.5, 1e8) - 3.657_8e-3).abs() < 1e-7);
        assert!((comm_height(0.5, 1e8) - 1.113_9e-3).abs() < 1e-7);
    }

    #[test]
    fn corner_splits() {
        assert_eq!(comm_height(1.0, 1e8), 0.0);
        assert_eq!(radar_height(0.0, 1e8), 0.0);
        let g = Grids::uniform(&sig(), 8, 12, 12).unwrap();
        let d = build_desired(1.0, &sig(), &g).unwrap();
        assert!(d.values.iter().all(|v| *v == 0.0 || *v == d.radar().height));
        assert!(d.values.iter().any(|v| *v > 0.0));
    }

    #[test]
    fn rejects_eta_out_of_range() {
        let g = Grids::uniform(&sig(), 8, 12, 12).unwrap();
        assert!(build_desired(1.5, &sig(), &g).is_err());
        assert!(build_desired(-0.1, &sig(), &g).is_err());
    }

    #[test]
    fn membership() {
        let layout = TwoBeamLayout::standard(&sig());
        let radar = BeamRegion::new(layout.radar_band, layout.radar_box, 1.0).unwrap();
        let ten = 10f64.to_radians();
        assert!(region_contains(&radar, -37.5e6, ten, ten));
        assert!(!region_contains(&radar, 37.5e6, ten, ten));
        assert!(!region_contains(&radar, -37.5e6, 2.0, ten));
        // closed boundaries
        assert!(region_contains(&radar, -25e6, 0.0, FRAC_PI_8));
    }

    #[test]
    fn paper_grid_region_counts() {
        let g = Grids::uniform(&sig(), 64, 36, 36).unwrap();
        let d = build_desired(0.5, &sig(), &g).unwrap();
        let rh = d.radar().height;
        let ch = d.comm().height;
        let radar_pts = d.values.iter().filter(|v| **v == rh).count();
        let comm_pts = d.values.iter().filter(|v| **v == ch).count();
        // both band edges and both box edges fall on grid points
        assert_eq!(radar_pts, 17 * 25);
        assert_eq!(comm_pts, 64 * 25);
    }

    proptest! {
        #[test]
        fn heights_monotone_in_eta(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!(a < b);
            prop_assert!(radar_height(a, 1e8) < radar_height(b, 1e8));
            prop_assert!(comm_height(a, 1e8) > comm_height(b, 1e8));
        }

        #[test]
        fn desired_zero_outside_regions(eta in 0.0f64..=1.0) {
            let g = Grids::uniform(&sig(), 8, 10, 10).unwrap();
            let d = build_desired(eta, &sig(), &g).unwrap();
            for (k, &f) in g.freqs().iter().enumerate() {
                for (l, &(t, p)) in g.angles().iter().enumerate() {
                    let v = d.values[k * g.num_angles() + l];
                    prop_assert!(v >= 0.0);
                    if !d.regions.iter().any(|r| region_contains(r, f, t, p)) {
                        prop_assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }
}
