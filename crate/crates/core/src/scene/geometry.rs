use alloc::format;
use alloc::vec::Vec;
use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unit propagation vector for elevation `theta` and azimuth `phi`.
///
/// Broadside of the aperture is `(0, 0)` and maps to `+z`.
pub fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.cos() * phi.sin(), theta.sin(), theta.cos() * phi.cos())
}

pub(crate) fn check_visible(theta: f64, phi: f64) -> Result<()> {
    let half_pi = core::f64::consts::FRAC_PI_2;
    if theta.abs() < half_pi && phi.abs() < half_pi {
        Ok(())
    } else {
        Err(Error::AngleOutOfDomain { theta, phi })
    }
}

/// Uniform rectangular array in the x-y plane, centered at the origin.
///
/// Element `r * cols + c` sits at `((c - (cols-1)/2) d, (r - (rows-1)/2) d, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarArray {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl PlanarArray {
    pub fn new(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("rows/cols", "array must have at least one element"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", format!("must be positive, got {spacing}")));
        }
        Ok(Self {
            rows,
            cols,
            spacing,
        })
    }

    /// Half-wavelength pitch at `carrier` Hz.
    pub fn half_wavelength(rows: usize, cols: usize, carrier: f64) -> Result<Self> {
        Self::new(rows, cols, SPEED_OF_LIGHT / carrier / 2.0)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        let x0 = (self.cols as f64 - 1.0) / 2.0;
        let y0 = (self.rows as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(Vector3::new(
                    (c as f64 - x0) * self.spacing,
                    (r as f64 - y0) * self.spacing,
                    0.0,
                ));
            }
        }
        out
    }
}

/// Cosine power pattern: `G(psi) = G0 cos(psi)` in front, zero behind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPattern {
    pub peak_gain: f64,
}

impl Default for ElementPattern {
    /// `G0 = 4` integrates the front hemisphere to `4 pi`.
    fn default() -> Self {
        Self { peak_gain: 4.0 }
    }
}

impl ElementPattern {
    pub fn cosine(peak_gain: f64) -> Result<Self> {
        if !(peak_gain > 0.0 && peak_gain.is_finite()) {
            return Err(invalid("peak_gain", format!("must be positive, got {peak_gain}")));
        }
        Ok(Self { peak_gain })
    }

    /// Power gain for a given cosine of the angle from boresight.
    pub fn power_gain(&self, cos_psi: f64) -> f64 {
        if cos_psi > 0.0 {
            self.peak_gain * cos_psi
        } else {
            0.0
        }
    }

    pub fn amplitude(&self, cos_psi: f64) -> f64 {
        self.power_gain(cos_psi).sqrt()
    }

    /// Amplitude toward `(theta, phi)` for an element with boresight `+z`.
    pub fn amplitude_toward(&self, theta: f64, phi: f64) -> f64 {
        let half_pi = core::f64::consts::FRAC_PI_2;
        if theta.abs() >= half_pi || phi.abs() >= half_pi {
            return 0.0;
        }
        self.amplitude(theta.cos() * phi.cos())
    }
}

/// Active sources illuminating the RIS from behind.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    positions: Vec<Vector3<f64>>,
    boresights: Vec<Vector3<f64>>,
}

impl SourceSet {
    pub fn new(positions: Vec<Vector3<f64>>, boresights: Vec<Vector3<f64>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("sources", "need at least one source"));
        }
        if positions.len() != boresights.len() {
            return Err(Error::DimensionMismatch {
                what: "source boresights",
                expected: positions.len(),
                got: boresights.len(),
            });
        }
        if let Some(j) = positions.iter().position(|p| p.z == 0.0) {
            return Err(invalid(
                "sources",
                format!("source {j} lies in the RIS plane"),
            ));
        }
        let mut unit = Vec::with_capacity(boresights.len());
        for b in &boresights {
            let n = b.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(invalid("boresight", "boresight vectors must be nonzero"));
            }
            unit.push(b / n);
        }
        Ok(Self {
            positions,
            boresights: unit,
        })
    }

    /// One source per tile of a `tiles_x` by `tiles_y` partition of the array,
    /// placed behind the tile centroid at `distance` meters and facing `+z`.
    pub fn tiled(
        array: &PlanarArray,
        tiles_x: usize,
        tiles_y: usize,
        distance: f64,
    ) -> Result<Self> {
        if tiles_x == 0 || tiles_y == 0 {
            return Err(invalid("source tiles", "tile counts must be positive"));
        }
        if !(distance > 0.0) {
            return Err(invalid("source distance", "must be positive"));
        }
        let width = array.cols as f64 * array.spacing;
        let height = array.rows as f64 * array.spacing;
        let mut positions = Vec::with_capacity(tiles_x * tiles_y);
        for ty in 0..tiles_y {
            for tx in 0..tiles_x {
                let x = -width / 2.0 + (tx as f64 + 0.5) * width / tiles_x as f64;
                let y = -height / 2.0 + (ty as f64 + 0.5) * height / tiles_y as f64;
                positions.push(Vector3::new(x, y, -distance));
            }
        }
        let boresights = alloc::vec![Vector3::z(); positions.len()];
        Self::new(positions, boresights)
    }

    /// Four sources behind the quadrant centroids.
    pub fn quadrants(array: &PlanarArray, distance: f64) -> Result<Self> {
        Self::tiled(array, 2, 2, distance)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn boresights(&self) -> &[Vector3<f64>] {
        &self.boresights
    }
}

/// Pulse and band parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    /// Pulse duration `T`, seconds.
    pub pulse_duration: f64,
    /// Bandwidth `W`, Hz.
    pub bandwidth: f64,
    /// Carrier `f_c`, Hz.
    pub carrier: f64,
}

impl SignalParams {
    pub fn new(pulse_duration: f64, bandwidth: f64, carrier: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid("bandwidth", format!("must be positive, got {bandwidth}")));
        }
        if !(pulse_duration > 0.0 && pulse_duration.is_finite()) {
            return Err(invalid(
                "pulse_duration",
                format!("must be positive, got {pulse_duration}"),
            ));
        }
        if !(carrier > bandwidth / 2.0) {
            return Err(invalid("carrier", "must exceed half the bandwidth"));
        }
        let sig = Self {
            pulse_duration,
            bandwidth,
            carrier,
        };
        if sig.samples() == 0 {
            return Err(invalid("pulse_duration", "W*T must be at least one sample"));
        }
        Ok(sig)
    }

    /// `N = floor(W T)`.
    pub fn samples(&self) -> usize {
        // W*T is usually an integer that the product misses by an ulp
        let wt = self.bandwidth * self.pulse_duration;
        (wt * (1.0 + 1e-12)).floor() as usize
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sample_count() {
        let sig = SignalParams::new(0.64e-6, 100e6, 3e9).unwrap();
        assert_eq!(sig.samples(), 64);
    }

    #[test]
    fn planar_array_is_centered() {
        let a = PlanarArray::half_wavelength(10, 10, 3e9).unwrap();
        let c: Vector3<f64> = a.positions().iter().sum();
        assert!(c.norm() < 1e-15);
        assert_eq!(a.positions().len(), 100);
    }

    #[test]
    fn quadrant_sources() {
        let a = PlanarArray::new(10, 10, 0.05).unwrap();
        let s = SourceSet::quadrants(&a, 0.6).unwrap();
        assert_eq!(s.len(), 4);
        for p in s.positions() {
            assert!((p.x.abs() - 0.125).abs() < 1e-12);
            assert!((p.y.abs() - 0.125).abs() < 1e-12);
            assert_eq!(p.z, -0.6);
        }
    }

    #[test]
    fn rejects_source_in_plane() {
        let p = alloc::vec![Vector3::new(0.0, 0.0, 0.0)];
        assert!(SourceSet::new(p, alloc::vec![Vector3::z()]).is_err());
    }

    #[test]
    fn cosine_pattern_support() {
        let p = ElementPattern::default();
        assert_eq!(p.power_gain(1.0), 4.0);
        assert_eq!(p.power_gain(0.0), 0.0);
        assert_eq!(p.power_gain(-0.5), 0.0);
        assert!((p.amplitude(0.25) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn direction_is_unit() {
        for &(t, p) in &[(0.3, -1.1), (1.2, 0.4), (-0.7, 0.0)] {
            assert!((direction(t, p).norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(direction(0.0, 0.0), Vector3::z());
    }

    #[test]
    fn signal_validation() {
        assert!(SignalParams::new(0.64e-6, 100e6, 40e6).is_err());
        assert!(SignalParams::new(1e-9, 100e6, 3e9).is_err());
    }
}
