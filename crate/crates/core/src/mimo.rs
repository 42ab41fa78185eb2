//! Fully digital planar-array baseline with one waveform per antenna.

use alloc::vec::Vec;
use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::desired::DesiredPattern;
use crate::error::{invalid, Error, Result};
use crate::grid::Grids;
use crate::optimizer::{Engine, ObjectiveTrace, OptimConfig};
use crate::response::LinearModel;
use crate::scene::{check_visible, sample_phases, steering_vector, ElementPattern, PlanarArray, SignalParams};
use crate::waveform::Factorization;
use crate::C64;

/// Digital array whose antennas each radiate their own waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoScene {
    antennas: Vec<Vector3<f64>>,
    pub element_pattern: ElementPattern,
    pub signal: SignalParams,
}

impl MimoScene {
    pub fn new(array: &PlanarArray, element_pattern: ElementPattern, signal: SignalParams) -> Self {
        Self {
            antennas: array.positions(),
            element_pattern,
            signal,
        }
    }

    /// 10 x 10 half-wavelength array with cosine elements and the default signal.
    pub fn paper() -> Self {
        let signal = SignalParams::new(0.64e-6, 100e6, 3e9).expect("valid signal");
        let array = PlanarArray::half_wavelength(10, 10, signal.carrier).expect("valid array");
        Self::new(&array, ElementPattern::default(), signal)
    }

    pub fn antennas(&self) -> &[Vector3<f64>] {
        &self.antennas
    }

    pub fn num_antennas(&self) -> usize {
        self.antennas.len()
    }

    pub fn samples(&self) -> usize {
        self.signal.samples()
    }

    /// `M' N`
    pub fn waveform_len(&self) -> usize {
        self.num_antennas() * self.samples()
    }
}

/// `|v^H diag(Gamma) (e^T(f) kron I) s_m| / (W sqrt(T))`
pub fn mimo_beampattern_value(s_m: &[C64], f: f64, theta: f64, phi: f64, mscene: &MimoScene) -> Result<f64> {
    check_visible(theta, phi)?;
    if s_m.len() != mscene.waveform_len() {
        return Err(Error::DimensionMismatch {
            what: "MIMO waveform vector",
            expected: mscene.waveform_len(),
            got: s_m.len(),
        });
    }
    let v = steering_vector(f, theta, phi, &mscene.antennas, &mscene.signal)?;
    let gamma = mscene.element_pattern.amplitude_toward(theta, phi);
    let signal = &mscene.signal;
    let m = mscene.num_antennas();
    let norm = signal.bandwidth * signal.pulse_duration.sqrt();
    let mut acc = C64::new(0.0, 0.0);
    for (n, e) in sample_phases(f, signal).into_iter().enumerate() {
        let block = &s_m[n * m..(n + 1) * m];
        let inner: C64 = v.iter().zip(block).map(|(vi, si)| vi.conj() * si).sum();
        acc += e * inner;
    }
    Ok(gamma * acc.norm() / norm)
}

/// Precomputed digital-array matching problem; the normal equations do not
/// change between iterations and are factorized once.
#[derive(Debug, Clone)]
pub struct MimoProblem {
    engine: Engine,
    fact: Factorization,
    cfg: OptimConfig,
}

impl MimoProblem {
    pub fn new(desired: &DesiredPattern, mscene: &MimoScene, grids: &Grids, cfg: &OptimConfig) -> Result<Self> {
        cfg.validate()?;
        let model = LinearModel::digital(&mscene.antennas, &mscene.element_pattern, &mscene.signal, grids);
        let engine = Engine::new(model, desired, mscene.samples())?;
        let fact = engine.factorize(None, cfg.solver)?;
        Ok(Self { engine, fact, cfg: *cfg })
    }

    pub fn responses(&self, s_m: &[C64]) -> Vec<C64> {
        self.engine.model.responses(None, s_m)
    }

    pub fn objective(&self, s_m: &[C64]) -> f64 {
        self.engine.objective_of(&self.responses(s_m))
    }

    /// Alternates phase and waveform updates from the least-squares start.
    pub fn run(&self, power: f64) -> Result<(Vec<C64>, ObjectiveTrace)> {
        if !(power > 0.0) {
            return Err(invalid("power", "must be positive"));
        }
        let engine = &self.engine;
        let budget = power * engine.samples as f64;
        let constraint = self.cfg.constraint(budget);
        let mut s = engine.initial_waveform(&self.fact, None, &self.cfg, budget)?;
        let mut obj = self.objective(&s);
        let mut values = alloc::vec![obj];
        let mut converged = obj == 0.0;
        let mut iterations = 0;
        while !converged && iterations < self.cfg.max_outer_iters {
            iterations += 1;
            let y = self.responses(&s);
            let psi = Engine::phases_of(&y);
            let before = engine.lifted_of(&y, &psi);
            let next_s = engine.waveform(&self.fact, None, &psi, &constraint, Some(&s))?;
            if engine.lifted_of(&self.responses(&next_s), &psi) <= before {
                s = next_s;
            }
            let next = self.objective(&s);
            values.push(next);
            converged = next == 0.0 || obj - next <= self.cfg.rel_obj_tol * obj;
            obj = next;
        }
        Ok((
            s,
            ObjectiveTrace {
                final_objective: obj,
                values,
                iterations,
                converged,
            },
        ))
    }
}

/// Designs the per-antenna waveforms for `desired` under the power budget `power`.
pub fn design_mimo(
    desired: &DesiredPattern,
    mscene: &MimoScene,
    grids: &Grids,
    power: f64,
    cfg: &OptimConfig,
) -> Result<(Vec<C64>, ObjectiveTrace)> {
    MimoProblem::new(desired, mscene, grids, cfg)?.run(power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{run_bcd, Init};
    use crate::scene::{Scene, SourceSet};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_scene(rows: usize, cols: usize, pulse: f64) -> MimoScene {
        let sig = SignalParams::new(pulse, 100e6, 3e9).unwrap();
        let array = PlanarArray::half_wavelength(rows, cols, sig.carrier).unwrap();
        MimoScene::new(&array, ElementPattern::default(), sig)
    }

    fn random_waveform(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn zero_waveform_and_invariances() {
        let m = small_scene(2, 2, 0.03e-6);
        let zero = vec![C64::new(0.0, 0.0); m.waveform_len()];
        assert_eq!(mimo_beampattern_value(&zero, 1e6, 0.1, 0.2, &m).unwrap(), 0.0);
        let s = random_waveform(m.waveform_len(), 1);
        let b = mimo_beampattern_value(&s, 1e6, 0.1, 0.2, &m).unwrap();
        let rotated: Vec<C64> = s.iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
        let scaled: Vec<C64> = s.iter().map(|z| z * C64::new(0.0, -3.0)).collect();
        assert!((mimo_beampattern_value(&rotated, 1e6, 0.1, 0.2, &m).unwrap() - b).abs() < 1e-13 * b);
        assert!((mimo_beampattern_value(&scaled, 1e6, 0.1, 0.2, &m).unwrap() - 3.0 * b).abs() < 1e-12 * b);
    }

    #[test]
    fn single_antenna_scalar_oracle() {
        let m = small_scene(1, 1, 0.03e-6);
        let s = random_waveform(3, 2);
        let (f, theta, phi) = (12e6, 0.2, -0.4);
        let sig = m.signal;
        let spectrum: C64 = s
            .iter()
            .enumerate()
            .map(|(n, z)| z * C64::from_polar(1.0, -2.0 * core::f64::consts::PI * (n + 1) as f64 * f / sig.bandwidth))
            .sum::<C64>()
            / sig.bandwidth;
        let gamma = (4.0 * theta.cos() * phi.cos()).sqrt();
        let want = gamma * spectrum.norm() / sig.pulse_duration.sqrt();
        let got = mimo_beampattern_value(&s, f, theta, phi, &m).unwrap();
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn direct_summation_oracle() {
        let m = small_scene(2, 3, 0.04e-6);
        let s = random_waveform(m.waveform_len(), 3);
        let (f, theta, phi) = (-31e6, -0.3, 0.5);
        let sig = m.signal;
        let u = crate::scene::direction(theta, phi);
        let mut y = C64::new(0.0, 0.0);
        for (i, p) in m.antennas().iter().enumerate() {
            let tau = -p.dot(&u) / crate::SPEED_OF_LIGHT;
            let v = C64::from_polar(1.0, 2.0 * core::f64::consts::PI * (f + sig.carrier) * tau);
            let si: C64 = (0..m.samples())
                .map(|n| s[n * 6 + i] * C64::from_polar(1.0, -2.0 * core::f64::consts::PI * (n + 1) as f64 * f / sig.bandwidth))
                .sum::<C64>()
                / sig.bandwidth;
            y += v.conj() * si;
        }
        let want = m.element_pattern.amplitude_toward(theta, phi) * y.norm() / sig.pulse_duration.sqrt();
        let got = mimo_beampattern_value(&s, f, theta, phi, &m).unwrap();
        assert!((got - want).abs() < 1e-11 * want);
    }

    #[test]
    fn responses_agree_with_pointwise_value() {
        let m = small_scene(2, 2, 0.03e-6);
        let grids = Grids::uniform(&m.signal, 3, 2, 3).unwrap();
        let desired = DesiredPattern::from_regions(0.5, Vec::new(), &m.signal, &grids);
        let problem = MimoProblem::new(&desired, &m, &grids, &OptimConfig::default()).unwrap();
        let s = random_waveform(m.waveform_len(), 4);
        let y = problem.responses(&s);
        for (k, &f) in grids.freqs().iter().enumerate() {
            for (l, &(t, p)) in grids.angles().iter().enumerate() {
                let b = mimo_beampattern_value(&s, f, t, p, &m).unwrap();
                assert!((y[k * 6 + l].norm() - b).abs() < 1e-11 * b);
            }
        }
    }

    fn matched_setup(seed: u64) -> (Scene, MimoScene, Grids, DesiredPattern) {
        let sig = SignalParams::new(0.04e-6, 100e6, 3e9).unwrap();
        let array = PlanarArray::half_wavelength(2, 2, sig.carrier).unwrap();
        let src = SourceSet::tiled(&array, 2, 1, 0.2).unwrap();
        let scene = Scene::new(&array, src, ElementPattern::default(), ElementPattern::default(), sig).unwrap();
        let mscene = MimoScene::new(&array, ElementPattern::default(), sig);
        let grids = Grids::uniform(&sig, 4, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_waveform(mscene.waveform_len(), seed);
        let typical = {
            let p = MimoProblem::new(&DesiredPattern::from_regions(0.0, Vec::new(), &sig, &grids), &mscene, &grids, &OptimConfig::default()).unwrap();
            let y = p.responses(&s);
            y.iter().map(|z| z.norm()).sum::<f64>() / y.len() as f64
        };
        let mut desired = DesiredPattern::from_regions(0.5, Vec::new(), &sig, &grids);
        desired.values = (0..grids.len()).map(|_| 2.0 * typical * rng.random::<f64>()).collect();
        (scene, mscene, grids, desired)
    }

    #[test]
    fn design_is_monotone_and_feasible() {
        for seed in 0..4 {
            let (_, m, grids, desired) = matched_setup(seed);
            let (s, trace) = design_mimo(&desired, &m, &grids, 0.5, &OptimConfig::default()).unwrap();
            assert!(trace.worst_increase() <= 1e-9);
            let power = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / m.samples() as f64;
            assert!(power <= 0.5 * (1.0 + 1e-10));
        }
    }

    #[test]
    fn zero_target_gives_zero_waveform() {
        let (_, m, grids, mut desired) = matched_setup(1);
        desired.values.iter_mut().for_each(|d| *d = 0.0);
        let (s, trace) = design_mimo(&desired, &m, &grids, 1.0, &OptimConfig::default()).unwrap();
        assert_eq!(trace.final_objective, 0.0);
        assert!(s.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn digital_array_matches_at_least_as_well_as_ris() {
        // same aperture; the digital array has an independent waveform per element
        let (scene, m, grids, desired) = matched_setup(7);
        let cfg = OptimConfig::default();
        let (_, mimo) = design_mimo(&desired, &m, &grids, 1.0, &cfg).unwrap();
        let ris = (0..4)
            .map(|seed| {
                let cfg = OptimConfig { seed, ..cfg };
                run_bcd(Init::Random, &desired, &scene, &grids, 1.0, &cfg).unwrap().1.final_objective
            })
            .fold(f64::INFINITY, f64::min);
        assert!(mimo.final_objective <= ris * 1.05, "mimo {} ris {ris}", mimo.final_objective);
    }
}
