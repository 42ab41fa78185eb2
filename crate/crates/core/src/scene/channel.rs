use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use super::geometry::{check_visible, direction, SignalParams, SPEED_OF_LIGHT};
use super::Scene;
use crate::error::{Error, Result};
use crate::C64;

/// Steering vector `v(f; theta, phi)` of an aperture, `f` baseband.
///
/// Entry `i` is `exp(2 pi i (f + f_c) tau_i)` with `tau_i = -p_i . u / c`.
pub fn steering_vector(
    f: f64,
    theta: f64,
    phi: f64,
    positions: &[Vector3<f64>],
    signal: &SignalParams,
) -> Result<Vec<C64>> {
    check_visible(theta, phi)?;
    Ok(steering_along(f + signal.carrier, &direction(theta, phi), positions))
}

pub(crate) fn steering_along(f_rf: f64, u: &Vector3<f64>, positions: &[Vector3<f64>]) -> Vec<C64> {
    positions
        .iter()
        .map(|p| {
            let tau = -p.dot(u) / SPEED_OF_LIGHT;
            C64::from_polar(1.0, 2.0 * PI * f_rf * tau)
        })
        .collect()
}

/// Coupling `G_ij(f)` between source `j` and RIS element `i` at RF frequency `f_rf`:
/// spherical free-space term, source amplitude pattern toward the element, and
/// the square root of the element's effective area toward the source.
pub fn source_ris_gain(f_rf: f64, source_idx: usize, element_idx: usize, scene: &Scene) -> Result<C64> {
    let q = scene.sources.positions()[source_idx];
    let boresight = scene.sources.boresights()[source_idx];
    let p = scene.elements()[element_idx];
    let delta = p - q;
    let d = delta.norm();
    if d == 0.0 {
        return Err(Error::CoincidentPositions {
            src: source_idx,
            element: element_idx,
        });
    }
    let dir = delta / d;
    let src_amp = scene.source_pattern.amplitude(dir.dot(&boresight));
    // element receive boresight is -z; the source sits along -dir from it
    let elem_gain = scene.element_pattern.power_gain(dir.z);
    let lambda = SPEED_OF_LIGHT / f_rf;
    let eff_area = lambda * lambda / (4.0 * PI) * elem_gain;
    let spread = (4.0 * PI * d * d).sqrt();
    Ok(C64::from_polar(1.0, -2.0 * PI * f_rf * d / SPEED_OF_LIGHT) * (src_amp * eff_area.sqrt() / spread))
}

/// `M x J` matrix of source-RIS couplings at RF frequency `f_rf`.
pub fn gain_matrix(f_rf: f64, scene: &Scene) -> Result<DMatrix<C64>> {
    let (m, j) = (scene.num_elements(), scene.num_sources());
    let mut g = DMatrix::zeros(m, j);
    for i in 0..m {
        for jj in 0..j {
            g[(i, jj)] = source_ris_gain(f_rf, jj, i, scene)?;
        }
    }
    Ok(g)
}

/// `Omega(f; theta, phi)`: couplings at `f + f_c` scaled by each element's
/// amplitude pattern toward `(theta, phi)`. Accepts the closed square so
/// that grazing directions evaluate to zero.
pub fn omega_matrix(f: f64, theta: f64, phi: f64, scene: &Scene) -> Result<DMatrix<C64>> {
    let half_pi = core::f64::consts::FRAC_PI_2;
    if !(theta.abs() <= half_pi && phi.abs() <= half_pi) {
        return Err(Error::AngleOutOfDomain { theta, phi });
    }
    let gamma = scene.element_pattern.amplitude_toward(theta, phi);
    let mut omega = gain_matrix(f + scene.signal.carrier, scene)?;
    omega *= C64::new(gamma, 0.0);
    Ok(omega)
}

/// `e(f)`: `exp(-2 pi i n f / W)` for `n = 1..=N`.
pub fn sample_phases(f: f64, signal: &SignalParams) -> Vec<C64> {
    (1..=signal.samples())
        .map(|n| C64::from_polar(1.0, -2.0 * PI * n as f64 * f / signal.bandwidth))
        .collect()
}

/// `Q(f; theta, phi) = Omega (e^T(f) kron I_J) / (W sqrt(T))`, an `M x JN` matrix.
pub fn q_matrix(f: f64, theta: f64, phi: f64, scene: &Scene) -> Result<DMatrix<C64>> {
    let omega = omega_matrix(f, theta, phi, scene)?;
    let sig = &scene.signal;
    let scale = 1.0 / (sig.bandwidth * sig.pulse_duration.sqrt());
    let e = sample_phases(f, sig);
    let (m, j) = omega.shape();
    let mut q = DMatrix::zeros(m, j * e.len());
    for (n, en) in e.iter().enumerate() {
        let block = &omega * (en * scale);
        q.view_mut((0, n * j), (m, j)).copy_from(&block);
    }
    Ok(q)
}
