//! Radar detection probability and communication rate for a designed
//! beampattern, nominal-SNR calibration and the operating characteristic.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::desired::{build_desired_with, AngleBox, DesiredPattern, TwoBeamLayout};
use crate::error::{invalid, Error, Result};
use crate::grid::Grids;
use crate::mimo::{MimoProblem, MimoScene};
use crate::optimizer::{Init, OptimConfig, RisProblem};
use crate::scene::{ExcitedAperture, SignalParams, SPEED_OF_LIGHT};

/// Amplitude beampattern over a fixed set of baseband frequencies.
pub trait BandPattern {
    fn signal(&self) -> &SignalParams;
    fn freqs(&self) -> &[f64];
    /// `B(f_k; theta, phi)` for every frequency.
    fn band_amplitudes(&self, theta: f64, phi: f64) -> Result<Vec<f64>>;
}

impl BandPattern for ExcitedAperture {
    fn signal(&self) -> &SignalParams {
        ExcitedAperture::signal(self)
    }

    fn freqs(&self) -> &[f64] {
        ExcitedAperture::freqs(self)
    }

    fn band_amplitudes(&self, theta: f64, phi: f64) -> Result<Vec<f64>> {
        self.column(theta, phi)
    }
}

impl BandPattern for DesiredPattern {
    fn signal(&self) -> &SignalParams {
        DesiredPattern::signal(self)
    }

    fn freqs(&self) -> &[f64] {
        DesiredPattern::freqs(self)
    }

    fn band_amplitudes(&self, theta: f64, phi: f64) -> Result<Vec<f64>> {
        Ok(self.freqs().iter().map(|&f| self.value_at(f, theta, phi)).collect())
    }
}

/// `sum_k (B_k c / (f_k + f_c))^2 W / K`
pub fn snr_band_integral(column: &[f64], freqs: &[f64], signal: &SignalParams) -> f64 {
    if freqs.is_empty() {
        return 0.0;
    }
    let df = signal.bandwidth / freqs.len() as f64;
    column
        .iter()
        .zip(freqs)
        .map(|(b, f)| {
            let a = b * SPEED_OF_LIGHT / (f + signal.carrier);
            a * a
        })
        .sum::<f64>()
        * df
}

/// Radar receiver and target model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarPerf {
    pub p_fa: f64,
    pub pulses: u32,
    /// `sigma^2_{n,r}` in W/Hz.
    pub noise_psd: f64,
    /// Target directions averaged over.
    pub region: AngleBox,
    pub rcs: f64,
    pub rx_gain: f64,
    pub range: f64,
}

impl RadarPerf {
    /// Unit constants and the centered half-size sub-box of the radar beam.
    pub fn for_desired(desired: &DesiredPattern, p_fa: f64) -> Result<Self> {
        let perf = Self {
            p_fa,
            pulses: 1,
            noise_psd: 1.0,
            region: desired.radar().angles.shrink(0.5),
            rcs: 1.0,
            rx_gain: 1.0,
            range: 1.0,
        };
        perf.validate()?;
        Ok(perf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(invalid("p_fa", "must lie in (0, 1)"));
        }
        if self.pulses == 0 {
            return Err(invalid("pulses", "must be at least 1"));
        }
        for (name, v) in [
            ("noise_psd", self.noise_psd),
            ("rcs", self.rcs),
            ("rx_gain", self.rx_gain),
            ("range", self.range),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }

    /// `N_p sigma_RCS G_rx T / ((4 pi)^3 r^4 sigma^2)`
    pub fn scale(&self, signal: &SignalParams) -> f64 {
        let four_pi = 4.0 * PI;
        self.pulses as f64 * self.rcs * self.rx_gain * signal.pulse_duration
            / (four_pi.powi(3) * self.range.powi(4) * self.noise_psd)
    }
}

/// Communication receiver model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommPerf {
    /// `sigma^2_{n,u}` in W/Hz.
    pub noise_psd: f64,
    /// User directions averaged over.
    pub region: AngleBox,
    pub rx_gain: f64,
    pub range: f64,
}

impl CommPerf {
    /// Unit constants and the centered half-size sub-box of the comm beam.
    pub fn for_desired(desired: &DesiredPattern) -> Result<Self> {
        let perf = Self {
            noise_psd: 1.0,
            region: desired.comm().angles.shrink(0.5),
            rx_gain: 1.0,
            range: 1.0,
        };
        perf.validate()?;
        Ok(perf)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("noise_psd", self.noise_psd), ("rx_gain", self.rx_gain), ("range", self.range)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }

    /// `G_rx T / ((4 pi r)^2 sigma^2)`
    pub fn scale(&self, signal: &SignalParams) -> f64 {
        let spread = 4.0 * PI * self.range;
        self.rx_gain * signal.pulse_duration / (spread * spread * self.noise_psd)
    }
}

/// Radar SNR for a target with reflectivity energy `a_sq` at `(theta, phi)`.
pub fn radar_snr<P: BandPattern + ?Sized>(a_sq: f64, theta: f64, phi: f64, pattern: &P, perf: &RadarPerf) -> Result<f64> {
    if !(a_sq >= 0.0) {
        return Err(invalid("a_sq", "must be nonnegative"));
    }
    let column = pattern.band_amplitudes(theta, phi)?;
    let signal = pattern.signal();
    Ok(a_sq * perf.scale(signal) * snr_band_integral(&column, pattern.freqs(), signal))
}

/// SNR at a communication user located at `(theta, phi)`.
pub fn comm_snr<P: BandPattern + ?Sized>(theta: f64, phi: f64, pattern: &P, perf: &CommPerf) -> Result<f64> {
    let column = pattern.band_amplitudes(theta, phi)?;
    let signal = pattern.signal();
    Ok(perf.scale(signal) * snr_band_integral(&column, pattern.freqs(), signal))
}

/// Swerling-1 detection probability `P_fa^{1/(1+SNR)}`.
pub fn detection_prob(snr: f64, p_fa: f64) -> f64 {
    p_fa.powf(1.0 / (1.0 + snr))
}

/// Gaussian-channel capacity `log2(1 + SNR)` in bits per channel use.
pub fn rate(snr: f64) -> f64 {
    snr.ln_1p() / core::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Replaces the exponential draw of `|a|^2` with a fixed value.
    pub pin_symbol_energy: Option<f64>,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(invalid("n_samples", "must be at least 1"));
        }
        Ok(Self {
            n_samples,
            seed,
            pin_symbol_energy: None,
        })
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
            };
        }
        // shifted by the first sample so constant inputs average exactly
        let shift = values[0];
        let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
        if values.len() == 1 {
            return Self { mean, std_error: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_in(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        range[0] + (range[1] - range[0]) * rng.random::<f64>()
    }
}

/// Per-sample radar SNRs; sample `i` draws its angle and `|a|^2` from its
/// own counter-based stream, so results do not depend on evaluation order.
pub fn radar_snr_draws<P: BandPattern + ?Sized>(pattern: &P, perf: &RadarPerf, mc: &McConfig) -> Result<Vec<f64>> {
    perf.validate()?;
    (0..mc.n_samples)
        .map(|i| {
            let mut rng = sample_rng(mc.seed, 2 * i as u64);
            let theta = uniform_in(&mut rng, perf.region.theta);
            let phi = uniform_in(&mut rng, perf.region.phi);
            let a_sq = match mc.pin_symbol_energy {
                Some(v) => v,
                None => -(1.0 - rng.random::<f64>()).ln(),
            };
            radar_snr(a_sq, theta, phi, pattern, perf)
        })
        .collect()
}

/// Per-sample user SNRs with user directions uniform on the comm region.
pub fn comm_snr_draws<P: BandPattern + ?Sized>(pattern: &P, perf: &CommPerf, mc: &McConfig) -> Result<Vec<f64>> {
    perf.validate()?;
    (0..mc.n_samples)
        .map(|i| {
            let mut rng = sample_rng(mc.seed, 2 * i as u64 + 1);
            let theta = uniform_in(&mut rng, perf.region.theta);
            let phi = uniform_in(&mut rng, perf.region.phi);
            comm_snr(theta, phi, pattern, perf)
        })
        .collect()
}

pub fn average_detection_prob<P: BandPattern + ?Sized>(pattern: &P, perf: &RadarPerf, mc: &McConfig) -> Result<Estimate> {
    let pd: Vec<f64> = radar_snr_draws(pattern, perf, mc)?
        .into_iter()
        .map(|snr| detection_prob(snr, perf.p_fa))
        .collect();
    Ok(Estimate::from_samples(&pd))
}

pub fn average_rate<P: BandPattern + ?Sized>(pattern: &P, perf: &CommPerf, mc: &McConfig) -> Result<Estimate> {
    let r: Vec<f64> = comm_snr_draws(pattern, perf, mc)?.into_iter().map(rate).collect();
    Ok(Estimate::from_samples(&r))
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Radar noise PSD making the SNR of `desired` (normally at `eta = 1`) equal
/// `target_snr_db` for a unit-energy target at the center of `perf.region`.
pub fn calibrate_radar(desired: &DesiredPattern, target_snr_db: f64, perf: &RadarPerf) -> Result<f64> {
    let unit = RadarPerf { noise_psd: 1.0, ..*perf };
    let (theta, phi) = perf.region.center();
    let snr = radar_snr(1.0, theta, phi, desired, &unit)?;
    if !(snr > 0.0) {
        return Err(Error::ZeroBeamEnergy);
    }
    Ok(snr / db_to_linear(target_snr_db))
}

/// Comm noise PSD making the SNR of `desired` (normally at `eta = 0`) equal
/// `target_snr_db` at the center of `perf.region`.
pub fn calibrate_comm(desired: &DesiredPattern, target_snr_db: f64, perf: &CommPerf) -> Result<f64> {
    let unit = CommPerf { noise_psd: 1.0, ..*perf };
    let (theta, phi) = perf.region.center();
    let snr = comm_snr(theta, phi, desired, &unit)?;
    if !(snr > 0.0) {
        return Err(Error::ZeroBeamEnergy);
    }
    Ok(snr / db_to_linear(target_snr_db))
}

/// Noise PSDs for both receivers at any nominal SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    radar_unit: f64,
    comm_unit: f64,
}

impl Calibration {
    /// Calibrates against the `eta = 1` and `eta = 0` desired patterns of `layout`.
    pub fn new(layout: &TwoBeamLayout, signal: &SignalParams, grids: &Grids, radar: &RadarPerf, comm: &CommPerf) -> Result<Self> {
        let radar_only = build_desired_with(1.0, layout, signal, grids)?;
        let comm_only = build_desired_with(0.0, layout, signal, grids)?;
        Ok(Self {
            radar_unit: calibrate_radar(&radar_only, 0.0, radar)?,
            comm_unit: calibrate_comm(&comm_only, 0.0, comm)?,
        })
    }

    pub fn radar_noise(&self, nominal_snr_db: f64) -> f64 {
        self.radar_unit / db_to_linear(nominal_snr_db)
    }

    pub fn comm_noise(&self, nominal_snr_db: f64) -> f64 {
        self.comm_unit / db_to_linear(nominal_snr_db)
    }
}

/// Average rate and detection probability of one design at one nominal SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub eta: f64,
    pub nominal_snr_db: f64,
    pub rate: f64,
    pub rate_std_error: f64,
    pub pd: f64,
    pub pd_std_error: f64,
}

/// Operating points of `pattern` at each nominal SNR. The Monte Carlo draws
/// are shared across SNRs; only the calibrated noise level changes.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_design<P: BandPattern + ?Sized>(
    pattern: &P,
    eta: f64,
    radar: &RadarPerf,
    comm: &CommPerf,
    calibration: &Calibration,
    nominal_snr_db: &[f64],
    mc: &McConfig,
) -> Result<Vec<OperatingPoint>> {
    let radar_unit = RadarPerf { noise_psd: 1.0, ..*radar };
    let comm_unit = CommPerf { noise_psd: 1.0, ..*comm };
    let radar_draws = radar_snr_draws(pattern, &radar_unit, mc)?;
    let comm_draws = comm_snr_draws(pattern, &comm_unit, mc)?;
    Ok(nominal_snr_db
        .iter()
        .map(|&db| {
            let nr = calibration.radar_noise(db);
            let nu = calibration.comm_noise(db);
            let pd: Vec<f64> = radar_draws.iter().map(|s| detection_prob(s / nr, radar.p_fa)).collect();
            let r: Vec<f64> = comm_draws.iter().map(|s| rate(s / nu)).collect();
            let pd = Estimate::from_samples(&pd);
            let r = Estimate::from_samples(&r);
            OperatingPoint {
                eta,
                nominal_snr_db: db,
                rate: r.mean,
                rate_std_error: r.std_error,
                pd: pd.mean,
                pd_std_error: pd.std_error,
            }
        })
        .collect())
}

/// Transmitter architecture swept by [`operating_characteristic`].
#[derive(Debug, Clone, Copy)]
pub enum Architecture<'a> {
    Ris(&'a crate::scene::Scene),
    Mimo(&'a MimoScene),
}

impl Architecture<'_> {
    pub fn signal(&self) -> &SignalParams {
        match self {
            Self::Ris(s) => &s.signal,
            Self::Mimo(m) => &m.signal,
        }
    }

    /// Designs for one desired pattern and returns the radiated pattern on the grid frequencies.
    pub fn design(&self, desired: &DesiredPattern, grids: &Grids, power: f64, cfg: &OptimConfig) -> Result<ExcitedAperture> {
        match self {
            Self::Ris(scene) => {
                let (dv, _) = RisProblem::new(scene, grids, desired)?.run(Init::Random, power, cfg)?;
                ExcitedAperture::ris(scene, &dv, grids.freqs())
            }
            Self::Mimo(m) => {
                let (s, _) = MimoProblem::new(desired, m, grids, cfg)?.run(power)?;
                ExcitedAperture::digital(m.antennas(), m.element_pattern, m.signal, &s, grids.freqs())
            }
        }
    }
}

/// Designs for every `eta`, then evaluates each design at every nominal SNR.
/// Points are ordered eta-major.
#[allow(clippy::too_many_arguments)]
pub fn operating_characteristic(
    etas: &[f64],
    arch: Architecture<'_>,
    grids: &Grids,
    power: f64,
    cfg: &OptimConfig,
    p_fa: f64,
    nominal_snr_db: &[f64],
    mc: &McConfig,
) -> Result<Vec<OperatingPoint>> {
    let signal = *arch.signal();
    let layout = TwoBeamLayout::standard(&signal);
    let reference = build_desired_with(1.0, &layout, &signal, grids)?;
    let radar = RadarPerf::for_desired(&reference, p_fa)?;
    let comm = CommPerf::for_desired(&reference)?;
    let calibration = Calibration::new(&layout, &signal, grids, &radar, &comm)?;
    let mut points = Vec::with_capacity(etas.len() * nominal_snr_db.len());
    for &eta in etas {
        let desired = build_desired_with(eta, &layout, &signal, grids)?;
        let aperture = arch.design(&desired, grids, power, cfg)?;
        points.extend(evaluate_design(&aperture, eta, &radar, &comm, &calibration, nominal_snr_db, mc)?);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desired::build_desired;
    use crate::scene::{DesignVariables, ElementPattern, PlanarArray, Scene, SourceSet};
    use crate::C64;
    use alloc::vec;
    use nalgebra::DMatrix;

    fn paper_signal() -> SignalParams {
        SignalParams::new(0.64e-6, 100e6, 3e9).unwrap()
    }

    /// Small RIS radiating a random waveform toward the standard beam regions.
    fn aperture(scale: f64) -> ExcitedAperture {
        let sig = SignalParams::new(0.08e-6, 100e6, 3e9).unwrap();
        let ris = PlanarArray::half_wavelength(3, 3, sig.carrier).unwrap();
        let src = SourceSet::tiled(&ris, 1, 1, 0.3).unwrap();
        let scene = Scene::new(&ris, src, ElementPattern::default(), ElementPattern::default(), sig).unwrap();
        let s: Vec<C64> = (0..scene.waveform_len())
            .map(|i| C64::from_polar(scale, 0.9 * (i * i) as f64))
            .collect();
        let x: Vec<C64> = (0..9).map(|i| C64::from_polar(1.0, 0.4 * i as f64)).collect();
        let dv = DesignVariables::new(s, x, &scene).unwrap();
        let grids = crate::grid::Grids::uniform(&sig, 8, 1, 1).unwrap();
        ExcitedAperture::ris(&scene, &dv, grids.freqs()).unwrap()
    }

    fn perfs(pattern: &ExcitedAperture) -> (RadarPerf, CommPerf) {
        let grids = crate::grid::Grids::uniform(pattern.signal(), 8, 4, 4).unwrap();
        let d = build_desired(0.5, pattern.signal(), &grids).unwrap();
        let mut radar = RadarPerf::for_desired(&d, 1e-6).unwrap();
        let mut comm = CommPerf::for_desired(&d).unwrap();
        // put the beam-center SNRs near 10
        let (t, p) = radar.region.center();
        radar.noise_psd = radar_snr(1.0, t, p, pattern, &radar).unwrap() / 10.0;
        let (t, p) = comm.region.center();
        comm.noise_psd = comm_snr(t, p, pattern, &comm).unwrap() / 10.0;
        (radar, comm)
    }

    /// Gauss rule from the Jacobi matrix (Golub-Welsch).
    fn gauss_rule(diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
        let n = diag.len();
        let mut j = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = diag[i];
        }
        for i in 1..n {
            j[(i, i - 1)] = off[i - 1];
            j[(i - 1, i)] = off[i - 1];
        }
        let eig = j.symmetric_eigen();
        let nodes = eig.eigenvalues.iter().copied().collect();
        let weights = (0..n).map(|i| mu0 * eig.eigenvectors[(0, i)].powi(2)).collect();
        (nodes, weights)
    }

    fn laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let diag: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64).collect();
        let off: Vec<f64> = (1..n).map(|i| i as f64).collect();
        gauss_rule(&diag, &off, 1.0)
    }

    fn legendre_on(n: usize, range: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let off: Vec<f64> = (1..n).map(|i| i as f64 / ((4 * i * i - 1) as f64).sqrt()).collect();
        let (x, w) = gauss_rule(&vec![0.0; n], &off, 2.0);
        let half = 0.5 * (range[1] - range[0]);
        let mid = 0.5 * (range[1] + range[0]);
        (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
    }

    /// Tensor-grid average of `g` over a box, normalized by its area.
    fn box_average(region: &AngleBox, n: usize, mut g: impl FnMut(f64, f64) -> f64) -> f64 {
        let (tx, tw) = legendre_on(n, region.theta);
        let (px, pw) = legendre_on(n, region.phi);
        let area = (region.theta[1] - region.theta[0]) * (region.phi[1] - region.phi[0]);
        let mut acc = 0.0;
        for (t, wt) in tx.iter().zip(&tw) {
            for (p, wp) in px.iter().zip(&pw) {
                acc += wt * wp * g(*t, *p);
            }
        }
        acc / area
    }

    #[test]
    fn band_integral_basics() {
        let sig = paper_signal();
        let grids = crate::grid::Grids::uniform(&sig, 64, 1, 1).unwrap();
        assert_eq!(snr_band_integral(&vec![0.0; 64], grids.freqs(), &sig), 0.0);
        let b0 = 2e-3;
        let full = snr_band_integral(&vec![b0; 64], grids.freqs(), &sig);
        let approx = (b0 * SPEED_OF_LIGHT / sig.carrier).powi(2) * sig.bandwidth;
        assert!((full / approx - 1.0).abs() < 1e-3);
        let half = snr_band_integral(&vec![b0 / 2.0; 64], grids.freqs(), &sig);
        assert!((half * 4.0 - full).abs() < 1e-14 * full);
    }

    #[test]
    fn detection_probability_closed_forms() {
        let p_fa = 1e-6;
        assert_eq!(detection_prob(0.0, p_fa), p_fa);
        let half = p_fa.ln() / 0.5f64.ln() - 1.0;
        assert!((half - 18.93).abs() < 0.01);
        assert!((detection_prob(half, p_fa) - 0.5).abs() < 1e-12);
        assert!(detection_prob(1e12, p_fa) > 1.0 - 1e-10);
        let mut last = p_fa;
        for i in 1..200 {
            let pd = detection_prob(i as f64 * 0.5, p_fa);
            assert!(pd > last && pd < 1.0);
            last = pd;
        }
    }

    #[test]
    fn rate_closed_forms() {
        assert_eq!(rate(0.0), 0.0);
        assert!((rate(1.0) - 1.0).abs() < 1e-15);
        assert!((rate(15.0) - 4.0).abs() < 1e-15);
        let small = 1e-6;
        assert!((rate(small) / small * core::f64::consts::LN_2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn snr_proportionalities() {
        let ap = aperture(1.0);
        let (radar, comm) = perfs(&ap);
        let (t, p) = (0.15, 0.2);
        assert_eq!(radar_snr(0.0, t, p, &ap, &radar).unwrap(), 0.0);
        let one = radar_snr(1.0, t, p, &ap, &radar).unwrap();
        assert!((radar_snr(2.0, t, p, &ap, &radar).unwrap() - 2.0 * one).abs() < 1e-14 * one);
        let c1 = comm_snr(t, p, &ap, &comm).unwrap();
        let noisier = CommPerf { noise_psd: 2.0 * comm.noise_psd, ..comm };
        assert!((comm_snr(t, p, &ap, &noisier).unwrap() * 2.0 - c1).abs() < 1e-14 * c1);
    }

    #[test]
    fn degenerate_region_reduces_to_point_evaluation() {
        let ap = aperture(1.0);
        let (mut radar, mut comm) = perfs(&ap);
        let point = AngleBox::new([0.1, 0.1], [0.2, 0.2]).unwrap();
        radar.region = point;
        comm.region = point;
        let mc = McConfig {
            pin_symbol_energy: Some(1.0),
            ..McConfig::new(5, 3).unwrap()
        };
        let pd = average_detection_prob(&ap, &radar, &mc).unwrap();
        let want = detection_prob(radar_snr(1.0, 0.1, 0.2, &ap, &radar).unwrap(), radar.p_fa);
        assert_eq!(pd.mean, want);
        assert_eq!(pd.std_error, 0.0);
        let r = average_rate(&ap, &comm, &mc).unwrap();
        assert_eq!(r.mean, rate(comm_snr(0.1, 0.2, &ap, &comm).unwrap()));
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let ap = aperture(1.0);
        let (radar, comm) = perfs(&ap);
        let mc = McConfig::new(4000, 17).unwrap();
        let (an, aw) = laguerre(60);
        let pd_quad = box_average(&radar.region, 16, |t, p| {
            let snr1 = radar_snr(1.0, t, p, &ap, &radar).unwrap();
            an.iter().zip(&aw).map(|(a, w)| w * detection_prob(a * snr1, radar.p_fa)).sum()
        });
        let pd = average_detection_prob(&ap, &radar, &mc).unwrap();
        assert!((pd.mean - pd_quad).abs() <= 3.0 * pd.std_error, "{pd:?} vs {pd_quad}");
        let r_quad = box_average(&comm.region, 16, |t, p| rate(comm_snr(t, p, &ap, &comm).unwrap()));
        let r = average_rate(&ap, &comm, &mc).unwrap();
        assert!((r.mean - r_quad).abs() <= 3.0 * r.std_error, "{r:?} vs {r_quad}");
    }

    #[test]
    fn monte_carlo_is_reproducible_and_scales() {
        let ap = aperture(1.0);
        let (radar, _) = perfs(&ap);
        let small = McConfig::new(500, 9).unwrap();
        let big = McConfig::new(2000, 9).unwrap();
        let a = average_detection_prob(&ap, &radar, &small).unwrap();
        let b = average_detection_prob(&ap, &radar, &small).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let c = average_detection_prob(&ap, &radar, &big).unwrap();
        let ratio = a.std_error / c.std_error;
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "ratio {ratio}");
    }

    #[test]
    fn no_radar_energy_detects_at_false_alarm_rate() {
        let sig = paper_signal();
        let grids = crate::grid::Grids::uniform(&sig, 16, 6, 6).unwrap();
        let d = build_desired(0.0, &sig, &grids).unwrap();
        let radar = RadarPerf::for_desired(&d, 1e-6).unwrap();
        let pd = average_detection_prob(&d, &radar, &McConfig::new(200, 1).unwrap()).unwrap();
        assert_eq!(pd.mean, 1e-6);
    }

    #[test]
    fn stronger_beam_never_lowers_rate() {
        let weak = aperture(1.0);
        let strong = aperture(2.0);
        let (_, comm) = perfs(&weak);
        let mc = McConfig::new(300, 4).unwrap();
        let rw = average_rate(&weak, &comm, &mc).unwrap().mean;
        let rs = average_rate(&strong, &comm, &mc).unwrap().mean;
        assert!(rs >= rw);
    }

    #[test]
    fn calibration_fixed_point_and_scaling() {
        let sig = paper_signal();
        let grids = crate::grid::Grids::uniform(&sig, 64, 36, 36).unwrap();
        let radar_only = build_desired(1.0, &sig, &grids).unwrap();
        let comm_only = build_desired(0.0, &sig, &grids).unwrap();
        let radar = RadarPerf::for_desired(&radar_only, 1e-6).unwrap();
        let comm = CommPerf::for_desired(&comm_only).unwrap();
        for db in [5.0, 10.0, 15.0, 20.0, 30.0] {
            let nr = calibrate_radar(&radar_only, db, &radar).unwrap();
            let (t, p) = radar.region.center();
            let snr = radar_snr(1.0, t, p, &radar_only, &RadarPerf { noise_psd: nr, ..radar }).unwrap();
            assert!((snr / 10f64.powf(db / 10.0) - 1.0).abs() < 1e-9);
            let nu = calibrate_comm(&comm_only, db, &comm).unwrap();
            let (t, p) = comm.region.center();
            let snr = comm_snr(t, p, &comm_only, &CommPerf { noise_psd: nu, ..comm }).unwrap();
            assert!((snr / 10f64.powf(db / 10.0) - 1.0).abs() < 1e-9);
        }
        let n10 = calibrate_radar(&radar_only, 10.0, &radar).unwrap();
        let n20 = calibrate_radar(&radar_only, 20.0, &radar).unwrap();
        assert!((n10 / n20 - 10.0).abs() < 1e-12);
        assert!(matches!(calibrate_radar(&comm_only, 10.0, &radar), Err(Error::ZeroBeamEnergy)));
    }

    #[test]
    fn physical_constants_are_absorbed_by_calibration() {
        let ap = aperture(1.0);
        let sig = *ap.signal();
        let grids = crate::grid::Grids::uniform(&sig, 8, 4, 4).unwrap();
        let layout = TwoBeamLayout::standard(&sig);
        let d = build_desired(1.0, &sig, &grids).unwrap();
        let radar = RadarPerf::for_desired(&d, 1e-6).unwrap();
        let comm = CommPerf::for_desired(&d).unwrap();
        let mc = McConfig::new(400, 5).unwrap();
        let snrs = [5.0, 20.0];
        let cal = Calibration::new(&layout, &sig, &grids, &radar, &comm).unwrap();
        let base = evaluate_design(&ap, 0.5, &radar, &comm, &cal, &snrs, &mc).unwrap();
        let radar2 = RadarPerf {
            rcs: 3.0,
            rx_gain: 7.0,
            range: 0.5,
            pulses: 4,
            ..radar
        };
        let comm2 = CommPerf {
            rx_gain: 0.2,
            range: 12.0,
            ..comm
        };
        let cal2 = Calibration::new(&layout, &sig, &grids, &radar2, &comm2).unwrap();
        let other = evaluate_design(&ap, 0.5, &radar2, &comm2, &cal2, &snrs, &mc).unwrap();
        for (a, b) in base.iter().zip(&other) {
            assert!((a.pd - b.pd).abs() < 1e-12);
            assert!((a.rate - b.rate).abs() < 1e-12 * (1.0 + a.rate));
        }
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(McConfig::new(0, 1).is_err());
    }
}
