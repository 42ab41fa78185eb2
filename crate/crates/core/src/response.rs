//! Precomputed grid responses shared by the RIS and fully digital designs.
//!
//! At grid point `(k, l)` the radiated spectrum is
//! `y_kl = sum_m h_klm x_m (F_k sigma_k)_m` with `h_klm = conj(v_klm) Gamma_lm`,
//! `F_k` the per-frequency feed matrix (identity for a digital array) and
//! `sigma_k = E_k s` the waveform spectrum at `f_k`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::grid::Grids;
use crate::scene::{direction, gain_matrix, sample_phases, ElementPattern, Scene, SignalParams, SPEED_OF_LIGHT};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Rows `E_k = e^T(f_k) / (W sqrt T)` mapping samples to spectra.
#[derive(Debug, Clone)]
pub(crate) struct Sampler {
    e: Vec<C64>,
    pub nk: usize,
    pub n: usize,
    /// `alpha` when `E E^H = alpha I_K`.
    pub orthogonal: Option<f64>,
}

impl Sampler {
    pub fn new(freqs: &[f64], signal: &SignalParams) -> Self {
        let scale = 1.0 / (signal.bandwidth * signal.pulse_duration.sqrt());
        let n = signal.samples();
        let mut e = Vec::with_capacity(freqs.len() * n);
        for &f in freqs {
            e.extend(sample_phases(f, signal).into_iter().map(|z| z * scale));
        }
        let mut sampler = Self {
            e,
            nk: freqs.len(),
            n,
            orthogonal: None,
        };
        sampler.orthogonal = sampler.detect_orthogonal();
        sampler
    }

    fn row(&self, k: usize) -> &[C64] {
        &self.e[k * self.n..(k + 1) * self.n]
    }

    fn detect_orthogonal(&self) -> Option<f64> {
        let alpha = crate::linalg::norm_sqr(self.row(0));
        for a in 0..self.nk {
            let ra = self.row(a);
            if (crate::linalg::norm_sqr(ra) - alpha).abs() > 1e-12 * alpha {
                return None;
            }
            for b in a + 1..self.nk {
                if crate::linalg::dot(ra, self.row(b)).norm() > 1e-10 * alpha {
                    return None;
                }
            }
        }
        Some(alpha)
    }

    /// `sigma = (E kron I_J) s`, frequency-major blocks of `j`.
    pub fn forward(&self, s: &[C64], j: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.nk * j];
        for k in 0..self.nk {
            let sigma = &mut out[k * j..(k + 1) * j];
            for (n, en) in self.row(k).iter().enumerate() {
                for (jj, sj) in sigma.iter_mut().enumerate() {
                    *sj += en * s[n * j + jj];
                }
            }
        }
        out
    }

    /// `s = (E kron I_J)^H sigma`, sample-major blocks of `j`.
    pub fn adjoint(&self, sigma: &[C64], j: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.n * j];
        for k in 0..self.nk {
            let sk = &sigma[k * j..(k + 1) * j];
            for (n, en) in self.row(k).iter().enumerate() {
                let c = en.conj();
                for (jj, v) in sk.iter().enumerate() {
                    out[n * j + jj] += c * v;
                }
            }
        }
        out
    }

    /// `sum_k conj(E_kn) E_kn'`
    pub fn gram_entry(&self, n: usize, n2: usize) -> impl Iterator<Item = C64> + '_ {
        (0..self.nk).map(move |k| self.e[k * self.n + n].conj() * self.e[k * self.n + n2])
    }
}

/// Linear map from `(x, s)` to grid responses.
#[derive(Debug, Clone)]
pub(crate) struct LinearModel {
    pub elems: usize,
    pub feeds: usize,
    pub nk: usize,
    pub nl: usize,
    /// `h_klm`, element-major: `[m][k * nl + l]`.
    table: Vec<C64>,
    /// `F_k`, `[k][m][j]`; `None` for the identity feed.
    feed: Option<Vec<C64>>,
    pub sampler: Sampler,
}

fn build_table(positions: &[Vector3<f64>], pattern: &ElementPattern, signal: &SignalParams, grids: &Grids) -> Vec<C64> {
    let (nk, nl) = (grids.num_freqs(), grids.num_angles());
    let mut table = vec![ZERO; positions.len() * nk * nl];
    for (l, &(theta, phi)) in grids.angles().iter().enumerate() {
        let u = direction(theta, phi);
        let gamma = pattern.amplitude_toward(theta, phi);
        for (m, p) in positions.iter().enumerate() {
            let path = p.dot(&u) / SPEED_OF_LIGHT;
            for (k, &f) in grids.freqs().iter().enumerate() {
                table[m * nk * nl + k * nl + l] =
                    C64::from_polar(gamma, 2.0 * PI * (f + signal.carrier) * path);
            }
        }
    }
    table
}

impl LinearModel {
    pub fn ris(scene: &Scene, grids: &Grids) -> Result<Self> {
        let (m, j) = (scene.num_elements(), scene.num_sources());
        let mut feed = Vec::with_capacity(grids.num_freqs() * m * j);
        for &f in grids.freqs() {
            let g = gain_matrix(f + scene.signal.carrier, scene)?;
            for i in 0..m {
                for jj in 0..j {
                    feed.push(g[(i, jj)]);
                }
            }
        }
        Ok(Self {
            elems: m,
            feeds: j,
            nk: grids.num_freqs(),
            nl: grids.num_angles(),
            table: build_table(scene.elements(), &scene.element_pattern, &scene.signal, grids),
            feed: Some(feed),
            sampler: Sampler::new(grids.freqs(), &scene.signal),
        })
    }

    pub fn digital(positions: &[Vector3<f64>], pattern: &ElementPattern, signal: &SignalParams, grids: &Grids) -> Self {
        Self {
            elems: positions.len(),
            feeds: positions.len(),
            nk: grids.num_freqs(),
            nl: grids.num_angles(),
            table: build_table(positions, pattern, signal, grids),
            feed: None,
            sampler: Sampler::new(grids.freqs(), signal),
        }
    }

    pub fn points(&self) -> usize {
        self.nk * self.nl
    }

    fn h(&self, m: usize) -> &[C64] {
        let len = self.nk * self.nl;
        &self.table[m * len..(m + 1) * len]
    }

    /// Signal reaching each element before the RIS phase, `F_k sigma_k`; `[k][m]`.
    pub fn element_drive(&self, s: &[C64]) -> Vec<C64> {
        let sigma = self.sampler.forward(s, self.feeds);
        match &self.feed {
            None => sigma,
            Some(feed) => {
                let (m, j) = (self.elems, self.feeds);
                let mut out = vec![ZERO; self.nk * m];
                for k in 0..self.nk {
                    let sk = &sigma[k * j..(k + 1) * j];
                    for i in 0..m {
                        let row = &feed[(k * m + i) * j..(k * m + i + 1) * j];
                        out[k * m + i] = row.iter().zip(sk).map(|(a, b)| a * b).sum();
                    }
                }
                out
            }
        }
    }

    /// Responses `y_kl` given the element drive and optional RIS phases.
    pub fn responses_from_drive(&self, x: Option<&[C64]>, drive: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.points()];
        for m in 0..self.elems {
            let xm = x.map_or(C64::new(1.0, 0.0), |x| x[m]);
            let h = self.h(m);
            for k in 0..self.nk {
                let g = xm * drive[k * self.elems + m];
                if g == ZERO {
                    continue;
                }
                let hk = &h[k * self.nl..(k + 1) * self.nl];
                let yk = &mut y[k * self.nl..(k + 1) * self.nl];
                for (yv, hv) in yk.iter_mut().zip(hk) {
                    *yv += hv * g;
                }
            }
        }
        y
    }

    pub fn responses(&self, x: Option<&[C64]>, s: &[C64]) -> Vec<C64> {
        self.responses_from_drive(x, &self.element_drive(s))
    }

    /// Per-point coefficient rows `a_kl` with `y_kl = a_kl^T sigma_k`; `[kl][j]`.
    pub fn coefficients(&self, x: Option<&[C64]>) -> Vec<C64> {
        let j = self.feeds;
        let mut a = vec![ZERO; self.points() * j];
        for m in 0..self.elems {
            let xm = x.map_or(C64::new(1.0, 0.0), |x| x[m]);
            let h = self.h(m);
            for k in 0..self.nk {
                let hk = &h[k * self.nl..(k + 1) * self.nl];
                match &self.feed {
                    None => {
                        for (l, hv) in hk.iter().enumerate() {
                            a[(k * self.nl + l) * j + m] += hv * xm;
                        }
                    }
                    Some(feed) => {
                        let row = &feed[(k * self.elems + m) * j..(k * self.elems + m + 1) * j];
                        for (l, hv) in hk.iter().enumerate() {
                            let hx = hv * xm;
                            let dst = &mut a[(k * self.nl + l) * j..(k * self.nl + l + 1) * j];
                            for (d, f) in dst.iter_mut().zip(row) {
                                *d += hx * f;
                            }
                        }
                    }
                }
            }
        }
        a
    }

    /// Spectral-domain normal equations `A_k` for RIS phases `x`.
    pub fn normal_blocks(&self, x: Option<&[C64]>, weights: &[f64]) -> NormalBlocks {
        if self.feed.is_some() {
            let a = self.coefficients(x);
            return NormalBlocks::assemble(&a, weights, self.feeds, self.nk, self.nl);
        }
        // identity feed: a_kl is the table column itself
        let j = self.feeds;
        let mut gram = vec![ZERO; self.nk * j * j];
        let mut wh = vec![ZERO; self.nl];
        for r in 0..j {
            let hr = self.h(r);
            for k in 0..self.nk {
                let base = k * self.nl;
                for l in 0..self.nl {
                    wh[l] = hr[base + l].conj() * weights[base + l];
                }
                for c in r..j {
                    let hc = &self.h(c)[base..base + self.nl];
                    let v: C64 = wh.iter().zip(hc).map(|(a, b)| a * b).sum();
                    gram[k * j * j + r * j + c] = v;
                }
            }
        }
        for k in 0..self.nk {
            let block = &mut gram[k * j * j..(k + 1) * j * j];
            for r in 0..j {
                block[r * j + r].im = 0.0;
                for c in 0..r {
                    block[r * j + c] = block[c * j + r].conj();
                }
            }
        }
        NormalBlocks { j, nk: self.nk, gram }
    }

    /// Right-hand sides `r_k = sum_l w conj(a_kl) d_kl` without forming `a`.
    pub fn normal_rhs(&self, x: Option<&[C64]>, targets: &[C64], weights: &[f64]) -> Vec<C64> {
        let (m_count, j) = (self.elems, self.feeds);
        let mut rhs = vec![ZERO; self.nk * j];
        for m in 0..m_count {
            let xm = x.map_or(C64::new(1.0, 0.0), |x| x[m]).conj();
            let h = self.h(m);
            for k in 0..self.nk {
                let base = k * self.nl;
                let t: C64 = (0..self.nl)
                    .map(|l| h[base + l].conj() * targets[base + l] * weights[base + l])
                    .sum::<C64>()
                    * xm;
                match &self.feed {
                    None => rhs[k * j + m] += t,
                    Some(feed) => {
                        let row = &feed[(k * m_count + m) * j..(k * m_count + m + 1) * j];
                        for (r, f) in rhs[k * j..(k + 1) * j].iter_mut().zip(row) {
                            *r += f.conj() * t;
                        }
                    }
                }
            }
        }
        rhs
    }

    /// Per-element contributions `b_klm = h_klm (F_k sigma_k)_m`, so that
    /// `y_kl = sum_m b_klm x_m`. Calls `visit(m, b_m)` with `b_m` over all points.
    pub fn for_each_element_row<F>(&self, drive: &[C64], mut visit: F)
    where
        F: FnMut(usize, &[C64]),
    {
        let mut row = vec![ZERO; self.points()];
        for m in 0..self.elems {
            let h = self.h(m);
            for k in 0..self.nk {
                let g = drive[k * self.elems + m];
                for l in 0..self.nl {
                    row[k * self.nl + l] = h[k * self.nl + l] * g;
                }
            }
            visit(m, &row);
        }
    }
}

/// Weighted normal-equation blocks in the spectral domain:
/// `A_k = sum_l w conj(a_kl) a_kl^T`, `r_k = sum_l w conj(a_kl) d_kl`.
#[derive(Debug, Clone)]
pub(crate) struct NormalBlocks {
    pub j: usize,
    pub nk: usize,
    /// `[k][row][col]`
    pub gram: Vec<C64>,
}

impl NormalBlocks {
    pub fn assemble(coeffs: &[C64], weights: &[f64], j: usize, nk: usize, nl: usize) -> Self {
        let mut gram = vec![ZERO; nk * j * j];
        for k in 0..nk {
            let block = &mut gram[k * j * j..(k + 1) * j * j];
            for l in 0..nl {
                let w = weights[k * nl + l];
                if w == 0.0 {
                    continue;
                }
                let a = &coeffs[(k * nl + l) * j..(k * nl + l + 1) * j];
                for r in 0..j {
                    let ar = a[r].conj() * w;
                    for c in r..j {
                        block[r * j + c] += ar * a[c];
                    }
                }
            }
            for r in 0..j {
                block[r * j + r].im = 0.0;
                for c in 0..r {
                    block[r * j + c] = block[c * j + r].conj();
                }
            }
        }
        Self { j, nk, gram }
    }

    pub fn block(&self, k: usize) -> &[C64] {
        &self.gram[k * self.j * self.j..(k + 1) * self.j * self.j]
    }
}
