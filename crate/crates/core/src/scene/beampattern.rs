use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DVector, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use super::channel::{gain_matrix, q_matrix, sample_phases, steering_vector};
use super::geometry::{check_visible, direction, ElementPattern, SignalParams, SPEED_OF_LIGHT};
use super::Scene;
use crate::error::{Error, Result};
use crate::grid::Grids;
use crate::C64;

/// Waveform samples `s` (sample-major blocks of `J`) and RIS responses `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVariables {
    pub s: Vec<C64>,
    pub x: Vec<C64>,
}

impl DesignVariables {
    pub fn new(s: Vec<C64>, x: Vec<C64>, scene: &Scene) -> Result<Self> {
        if s.len() != scene.waveform_len() {
            return Err(Error::DimensionMismatch {
                what: "waveform vector s",
                expected: scene.waveform_len(),
                got: s.len(),
            });
        }
        if x.len() != scene.num_elements() {
            return Err(Error::DimensionMismatch {
                what: "RIS vector x",
                expected: scene.num_elements(),
                got: x.len(),
            });
        }
        Ok(Self { s, x })
    }

    /// `(1/N) ||s||^2`
    pub fn power(&self, samples: usize) -> f64 {
        self.s.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples as f64
    }

    /// Largest deviation of `|x_i|` from one.
    pub fn modulus_error(&self) -> f64 {
        self.x.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Amplitude beampattern `|v^H diag(x) Q s|` at one point, matrix form.
pub fn beampattern_value(dv: &DesignVariables, f: f64, theta: f64, phi: f64, scene: &Scene) -> Result<f64> {
    let v = steering_vector(f, theta, phi, scene.elements(), &scene.signal)?;
    let q = q_matrix(f, theta, phi, scene)?;
    let qs = q * DVector::from_column_slice(&dv.s);
    let y: C64 = v
        .iter()
        .zip(dv.x.iter())
        .zip(qs.iter())
        .map(|((vi, xi), qi)| vi.conj() * xi * qi)
        .sum();
    Ok(y.norm())
}

/// Beampattern values on a `K x L` grid, row-major in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternMap {
    pub values: Vec<f64>,
    pub freqs: usize,
    pub angles: usize,
}

impl BeampatternMap {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.angles + l]
    }

    /// All angles at frequency index `k`.
    pub fn cut(&self, k: usize) -> &[f64] {
        &self.values[k * self.angles..(k + 1) * self.angles]
    }

    /// All frequencies at angle index `l`.
    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.freqs).map(|k| self.get(k, l)).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates the beampattern over every grid point. Points are independent;
/// evaluation order is fixed.
pub fn beampattern_map(dv: &DesignVariables, grids: &Grids, scene: &Scene) -> Result<BeampatternMap> {
    let field = ExcitedAperture::ris(scene, dv, grids.freqs())?;
    let mut values = Vec::with_capacity(grids.num_freqs() * grids.num_angles());
    let cols = grids
        .angles()
        .iter()
        .map(|&(t, p)| field.column(t, p))
        .collect::<Result<Vec<_>>>()?;
    for k in 0..grids.num_freqs() {
        values.extend(cols.iter().map(|c| c[k]));
    }
    Ok(BeampatternMap {
        values,
        freqs: grids.num_freqs(),
        angles: grids.num_angles(),
    })
}

/// `B^2 / max B^2` over the whole map.
pub fn normalized_power_map(map: &BeampatternMap) -> Result<Vec<f64>> {
    let peak = map.max();
    if !(peak > 0.0) {
        return Err(Error::ZeroMap);
    }
    let peak2 = peak * peak;
    Ok(map
        .values
        .iter()
        .map(|b| if *b == peak { 1.0 } else { b * b / peak2 })
        .collect())
}

/// Normalized power in dB (`-inf` where the beampattern vanishes).
pub fn normalized_power_db(map: &BeampatternMap) -> Result<Vec<f64>> {
    Ok(normalized_power_map(map)?
        .into_iter()
        .map(|p| 10.0 * p.log10())
        .collect())
}

/// Radiating aperture with fixed per-frequency element excitations.
///
/// Evaluates `B(f_k; theta, phi) = |sum_m conj(v_m) Gamma_m g_km|` at any
/// direction for a fixed set of baseband frequencies `f_k`, where `g_k` is
/// the signal arriving at each radiating element.
#[derive(Debug, Clone)]
pub struct ExcitedAperture {
    positions: Vec<Vector3<f64>>,
    pattern: ElementPattern,
    signal: SignalParams,
    freqs: Vec<f64>,
    excitation: Vec<C64>,
}

/// `sigma_k = (1/(W sqrt T)) sum_n e_n(f_k) s_n` for each frequency.
pub(crate) fn spectra(s: &[C64], feeds: usize, freqs: &[f64], signal: &SignalParams) -> Vec<C64> {
    let scale = 1.0 / (signal.bandwidth * signal.pulse_duration.sqrt());
    let mut out = vec![C64::new(0.0, 0.0); freqs.len() * feeds];
    for (k, &f) in freqs.iter().enumerate() {
        let e = sample_phases(f, signal);
        let sigma = &mut out[k * feeds..(k + 1) * feeds];
        for (n, en) in e.iter().enumerate() {
            for (j, sj) in sigma.iter_mut().enumerate() {
                *sj += en * s[n * feeds + j];
            }
        }
        sigma.iter_mut().for_each(|z| *z *= scale);
    }
    out
}

impl ExcitedAperture {
    /// RIS excitation `x_m (G(f_k + f_c) sigma_k)_m`.
    pub fn ris(scene: &Scene, dv: &DesignVariables, freqs: &[f64]) -> Result<Self> {
        let (m, j) = (scene.num_elements(), scene.num_sources());
        if dv.s.len() != scene.waveform_len() || dv.x.len() != m {
            return Err(Error::DimensionMismatch {
                what: "design variables",
                expected: scene.waveform_len() + m,
                got: dv.s.len() + dv.x.len(),
            });
        }
        let sigma = spectra(&dv.s, j, freqs, &scene.signal);
        let mut excitation = Vec::with_capacity(freqs.len() * m);
        for (k, &f) in freqs.iter().enumerate() {
            let g = gain_matrix(f + scene.signal.carrier, scene)?;
            let gs = g * DVector::from_column_slice(&sigma[k * j..(k + 1) * j]);
            excitation.extend(gs.iter().zip(dv.x.iter()).map(|(a, b)| a * b));
        }
        Ok(Self {
            positions: scene.elements().to_vec(),
            pattern: scene.element_pattern,
            signal: scene.signal,
            freqs: freqs.to_vec(),
            excitation,
        })
    }

    /// Fully digital array: element `m` radiates its own waveform `s_m`.
    pub fn digital(
        positions: &[Vector3<f64>],
        pattern: ElementPattern,
        signal: SignalParams,
        s: &[C64],
        freqs: &[f64],
    ) -> Result<Self> {
        let expected = positions.len() * signal.samples();
        if s.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "digital waveform vector",
                expected,
                got: s.len(),
            });
        }
        Ok(Self {
            positions: positions.to_vec(),
            pattern,
            signal,
            freqs: freqs.to_vec(),
            excitation: spectra(s, positions.len(), freqs, &signal),
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn signal(&self) -> &SignalParams {
        &self.signal
    }

    /// Beampattern at every frequency for direction `(theta, phi)`.
    pub fn column(&self, theta: f64, phi: f64) -> Result<Vec<f64>> {
        check_visible(theta, phi)?;
        let u = direction(theta, phi);
        let gamma = self.pattern.amplitude_toward(theta, phi);
        let path: Vec<f64> = self.positions.iter().map(|p| p.dot(&u) / SPEED_OF_LIGHT).collect();
        let m = self.positions.len();
        Ok(self
            .freqs
            .iter()
            .enumerate()
            .map(|(k, &f)| {
                let w = 2.0 * PI * (f + self.signal.carrier);
                let g = &self.excitation[k * m..(k + 1) * m];
                let y: C64 = path
                    .iter()
                    .zip(g.iter())
                    .map(|(d, gm)| C64::from_polar(1.0, w * d) * gm)
                    .sum();
                gamma * y.norm()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{PlanarArray, SourceSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_scene() -> Scene {
        let sig = SignalParams::new(0.04e-6, 100e6, 3e9).unwrap();
        let ris = PlanarArray::half_wavelength(3, 3, sig.carrier).unwrap();
        let src = SourceSet::tiled(&ris, 2, 1, 0.3).unwrap();
        Scene::new(&ris, src, ElementPattern::default(), ElementPattern::default(), sig).unwrap()
    }

    fn random_dv(scene: &Scene, seed: u64) -> DesignVariables {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..scene.waveform_len())
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let x = (0..scene.num_elements())
            .map(|_| C64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
            .collect();
        DesignVariables::new(s, x, scene).unwrap()
    }

    #[test]
    fn zero_waveform_gives_zero() {
        let scene = small_scene();
        let mut dv = random_dv(&scene, 1);
        dv.s.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        assert_eq!(beampattern_value(&dv, 10e6, 0.1, 0.2, &scene).unwrap(), 0.0);
        let grids = Grids::uniform(&scene.signal, 4, 3, 3).unwrap();
        let map = beampattern_map(&dv, &grids, &scene).unwrap();
        assert!(map.values.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn global_phase_and_scaling() {
        let scene = small_scene();
        let dv = random_dv(&scene, 2);
        let b = beampattern_value(&dv, -12e6, 0.3, -0.4, &scene).unwrap();
        let rot = C64::from_polar(1.0, 1.234);
        let mut dx = dv.clone();
        dx.x.iter_mut().for_each(|z| *z *= rot);
        let mut ds = dv.clone();
        ds.s.iter_mut().for_each(|z| *z *= rot * 2.5);
        assert!((beampattern_value(&dx, -12e6, 0.3, -0.4, &scene).unwrap() - b).abs() < 1e-12 * b);
        assert!((beampattern_value(&ds, -12e6, 0.3, -0.4, &scene).unwrap() - 2.5 * b).abs() < 1e-12 * b);
    }

    #[test]
    fn map_matches_pointwise_matrix_form() {
        let scene = small_scene();
        let dv = random_dv(&scene, 3);
        let grids = Grids::uniform(&scene.signal, 4, 3, 5).unwrap();
        let map = beampattern_map(&dv, &grids, &scene).unwrap();
        for (k, &f) in grids.freqs().iter().enumerate() {
            for (l, &(t, p)) in grids.angles().iter().enumerate() {
                let b = beampattern_value(&dv, f, t, p, &scene).unwrap();
                assert!((map.get(k, l) - b).abs() <= 1e-12 * b.max(1e-300), "{k} {l}");
            }
        }
    }

    #[test]
    fn single_point_grid() {
        let scene = small_scene();
        let dv = random_dv(&scene, 4);
        let grids = Grids::new(vec![5e6], vec![(0.2, 0.3)], &scene.signal).unwrap();
        let map = beampattern_map(&dv, &grids, &scene).unwrap();
        let b = beampattern_value(&dv, 5e6, 0.2, 0.3, &scene).unwrap();
        assert!((map.values[0] - b).abs() < 1e-12 * b);
    }

    #[test]
    fn normalization() {
        let map = BeampatternMap { values: vec![1.0, 2.0], freqs: 1, angles: 2 };
        assert_eq!(normalized_power_map(&map).unwrap(), vec![0.25, 1.0]);
        let flat = BeampatternMap { values: vec![3.0; 6], freqs: 2, angles: 3 };
        assert!(normalized_power_map(&flat).unwrap().iter().all(|p| *p == 1.0));
        assert!(normalized_power_db(&flat).unwrap().iter().all(|p| *p == 0.0));
        let zero = BeampatternMap { values: vec![0.0; 4], freqs: 2, angles: 2 };
        assert_eq!(normalized_power_map(&zero), Err(Error::ZeroMap));
    }
}
