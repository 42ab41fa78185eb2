//! Space-frequency sampling grids.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Result};
use crate::scene::SignalParams;

/// `K` baseband frequencies and `L` directions `(theta, phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    freqs: Vec<f64>,
    angles: Vec<(f64, f64)>,
    bandwidth: f64,
    shape: Option<(usize, usize)>,
}

impl Grids {
    /// Uniform grids: frequencies `-W/2 + k W/K` and angular cell centers
    /// `-pi/2 + (a + 1/2) pi / n` on each axis, theta-major.
    pub fn uniform(signal: &SignalParams, k: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("freq_points", "must be at least 1"));
        }
        if n_theta == 0 || n_phi == 0 {
            return Err(invalid("angle points", "must be at least 1 per axis"));
        }
        let w = signal.bandwidth;
        let freqs = (0..k).map(|i| -w / 2.0 + i as f64 * w / k as f64).collect();
        let thetas = cell_centers(n_theta);
        let phis = cell_centers(n_phi);
        let mut angles = Vec::with_capacity(n_theta * n_phi);
        for &t in &thetas {
            for &p in &phis {
                angles.push((t, p));
            }
        }
        Ok(Self {
            freqs,
            angles,
            bandwidth: w,
            shape: Some((n_theta, n_phi)),
        })
    }

    /// Explicit point lists.
    pub fn new(freqs: Vec<f64>, angles: Vec<(f64, f64)>, signal: &SignalParams) -> Result<Self> {
        if freqs.is_empty() || angles.is_empty() {
            return Err(invalid("grids", "need at least one frequency and one angle"));
        }
        let w = signal.bandwidth;
        if let Some(f) = freqs.iter().find(|f| !(f.abs() <= w / 2.0)) {
            return Err(invalid("freqs", format!("{f} Hz lies outside [-W/2, W/2]")));
        }
        if let Some(a) = angles
            .iter()
            .find(|(t, p)| !(t.abs() < FRAC_PI_2 && p.abs() < FRAC_PI_2))
        {
            return Err(invalid(
                "angles",
                format!("({}, {}) rad is not strictly inside (-pi/2, pi/2)^2", a.0, a.1),
            ));
        }
        Ok(Self {
            freqs,
            angles,
            bandwidth: w,
            shape: None,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn num_freqs(&self) -> usize {
        self.freqs.len()
    }

    pub fn num_angles(&self) -> usize {
        self.angles.len()
    }

    /// `K L`
    pub fn len(&self) -> usize {
        self.freqs.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(n_theta, n_phi)` for tensor grids.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    /// Frequency cell width `W / K` used by band integrals.
    pub fn freq_step(&self) -> f64 {
        self.bandwidth / self.freqs.len() as f64
    }

    /// Index of a grid frequency within `tol` Hz.
    pub fn freq_index(&self, f: f64, tol: f64) -> Option<usize> {
        self.freqs.iter().position(|g| (g - f).abs() <= tol)
    }

    /// Up to `count` grid frequencies closest to `f`, nearest first.
    pub fn nearest_freqs(&self, f: f64, count: usize) -> Vec<f64> {
        let mut sorted = self.freqs.clone();
        sorted.sort_by(|a, b| (a - f).abs().total_cmp(&(b - f).abs()));
        sorted.truncate(count);
        sorted
    }
}

fn cell_centers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|a| -FRAC_PI_2 + (a as f64 + 0.5) * PI / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> SignalParams {
        SignalParams::new(0.64e-6, 100e6, 3e9).unwrap()
    }

    #[test]
    fn paper_grid() {
        let g = Grids::uniform(&sig(), 64, 36, 36).unwrap();
        assert_eq!(g.num_freqs(), 64);
        assert_eq!(g.num_angles(), 1296);
        assert_eq!(g.freq_index(-37.5e6, 1e-3), Some(8));
        assert_eq!(g.freq_index(37.5e6, 1e-3), Some(56));
        assert!((g.freq_step() - 1.5625e6).abs() < 1e-6);
        assert!(g.angles().iter().all(|(t, p)| t.abs() < FRAC_PI_2 && p.abs() < FRAC_PI_2));
        assert!((g.angles()[0].0 + 87.5f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn nearest() {
        let g = Grids::uniform(&sig(), 4, 1, 1).unwrap();
        assert_eq!(g.nearest_freqs(1e6, 2), alloc::vec![0.0, 25e6]);
    }

    #[test]
    fn explicit_validation() {
        assert!(Grids::new(alloc::vec![60e6], alloc::vec![(0.0, 0.0)], &sig()).is_err());
        assert!(Grids::new(alloc::vec![0.0], alloc::vec![(FRAC_PI_2, 0.0)], &sig()).is_err());
        assert!(Grids::uniform(&sig(), 0, 3, 3).is_err());
    }
}
