//! Power-constrained least-squares waveform update.
//!
//! Minimizes `sum_kl w_kl |d_kl - a_kl^T sigma_k|^2` over `s` with
//! `sigma = (E kron I_J) s`, subject to `||s||^2 <= budget`. The
//! stationarity condition is `(G + lambda I) s = b` with
//! `G = (E kron I)^H blockdiag(A_k) (E kron I)` and `b = (E kron I)^H r`;
//! `lambda` is zero when the unconstrained minimizer is feasible and is
//! otherwise found by bisection on `||s(lambda)||^2 = budget`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{conjugate_gradient, norm_sqr, psd_eigen};
use crate::response::{NormalBlocks, Sampler};
use crate::C64;

/// How the normal equations of the waveform block are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveformSolver {
    /// Decoupled when the frequency grid allows it, dense up to
    /// [`DENSE_LIMIT`] unknowns, iterative beyond.
    #[default]
    Auto,
    /// Per-frequency eigendecompositions; needs `E E^H = alpha I`.
    Decoupled,
    /// One eigendecomposition of the full `JN x JN` Gram matrix.
    Dense,
    /// Conjugate gradient on the structured Gram operator.
    Iterative,
}

/// Largest `JN` solved densely under [`WaveformSolver::Auto`].
pub const DENSE_LIMIT: usize = 2048;

/// Relative residual for the iterative path.
pub const CG_TOL: f64 = 1e-8;

/// Power constraint and multiplier search settings.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Constraint {
    /// `N P`
    pub budget: f64,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct WaveformSolution {
    pub s: Vec<C64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Factorization {
    Decoupled {
        alpha: f64,
        j: usize,
        values: Vec<Vec<f64>>,
        vectors: Vec<DMatrix<C64>>,
    },
    Dense {
        values: Vec<f64>,
        vectors: DMatrix<C64>,
    },
    Iterative {
        blocks: NormalBlocks,
    },
}

// eigenvalues below this fraction of the largest are treated as null at lambda = 0
const NULL_RATIO: f64 = 1e-12;

fn inv(mu: f64, shift: f64, floor: f64) -> f64 {
    if shift == 0.0 && mu <= floor {
        0.0
    } else {
        1.0 / (mu + shift)
    }
}

impl Factorization {
    pub fn new(blocks: NormalBlocks, sampler: &Sampler, solver: WaveformSolver) -> Result<Self> {
        let unknowns = blocks.j * sampler.n;
        let choice = match solver {
            WaveformSolver::Auto if sampler.orthogonal.is_some() => WaveformSolver::Decoupled,
            WaveformSolver::Auto if unknowns <= DENSE_LIMIT => WaveformSolver::Dense,
            WaveformSolver::Auto => WaveformSolver::Iterative,
            other => other,
        };
        match choice {
            WaveformSolver::Decoupled => {
                let alpha = sampler.orthogonal.ok_or_else(|| {
                    invalid("solver", "decoupled solve needs K | N on the uniform frequency grid")
                })?;
                let j = blocks.j;
                let mut values = Vec::with_capacity(blocks.nk);
                let mut vectors = Vec::with_capacity(blocks.nk);
                for k in 0..blocks.nk {
                    let a = DMatrix::from_row_slice(j, j, blocks.block(k));
                    let (mu, u) = psd_eigen(a);
                    values.push(mu);
                    vectors.push(u);
                }
                Ok(Self::Decoupled {
                    alpha,
                    j,
                    values,
                    vectors,
                })
            }
            WaveformSolver::Dense => {
                let g = dense_gram(&blocks, sampler);
                let (values, vectors) = psd_eigen(g);
                Ok(Self::Dense { values, vectors })
            }
            _ => Ok(Self::Iterative { blocks }),
        }
    }

    /// Minimizer for right-hand side blocks `r_k` under the power constraint.
    pub fn solve(&self, sampler: &Sampler, rhs: &[C64], c: &Constraint, warm: Option<&[C64]>) -> Result<WaveformSolution> {
        match self {
            Self::Decoupled {
                alpha,
                j,
                values,
                vectors,
            } => {
                let j = *j;
                let beta: Vec<DVector<C64>> = vectors
                    .iter()
                    .enumerate()
                    .map(|(k, u)| u.adjoint() * DVector::from_column_slice(&rhs[k * j..(k + 1) * j]))
                    .collect();
                let mu_max = values.iter().flatten().copied().fold(0.0, f64::max);
                let floor = NULL_RATIO * mu_max * (j * values.len()) as f64;
                let eval = |lambda: f64| -> Result<Vec<C64>> {
                    let shift = lambda / alpha;
                    let mut sigma = Vec::with_capacity(rhs.len());
                    for (k, u) in vectors.iter().enumerate() {
                        let scaled = DVector::from_iterator(
                            j,
                            beta[k].iter().zip(&values[k]).map(|(b, mu)| b * inv(*mu, shift, floor)),
                        );
                        sigma.extend((u * scaled).iter().copied());
                    }
                    let mut s = sampler.adjoint(&sigma, j);
                    s.iter_mut().for_each(|z| *z /= alpha);
                    Ok(s)
                };
                bisect(eval, c)
            }
            Self::Dense { values, vectors } => {
                let j = rhs.len() / sampler.nk;
                let b = DVector::from_vec(sampler.adjoint(rhs, j));
                let beta = vectors.adjoint() * b;
                let mu_max = values.iter().copied().fold(0.0, f64::max);
                let floor = NULL_RATIO * mu_max * values.len() as f64;
                let eval = |lambda: f64| -> Result<Vec<C64>> {
                    let scaled = DVector::from_iterator(
                        values.len(),
                        beta.iter().zip(values).map(|(b, mu)| b * inv(*mu, lambda, floor)),
                    );
                    Ok((vectors * scaled).as_slice().to_vec())
                };
                bisect(eval, c)
            }
            Self::Iterative { blocks } => {
                let j = blocks.j;
                let b = sampler.adjoint(rhs, j);
                let n = b.len();
                let mut guess = warm.map_or_else(|| vec![C64::new(0.0, 0.0); n], |w| w.to_vec());
                let max_cg = 20 * n + 100;
                let eval = |lambda: f64| -> Result<Vec<C64>> {
                    let apply = |v: &[C64], out: &mut [C64]| {
                        let sigma = sampler.forward(v, j);
                        let mut prod = vec![C64::new(0.0, 0.0); sigma.len()];
                        for k in 0..blocks.nk {
                            let a = blocks.block(k);
                            for r in 0..j {
                                prod[k * j + r] = (0..j).map(|cc| a[r * j + cc] * sigma[k * j + cc]).sum();
                            }
                        }
                        let back = sampler.adjoint(&prod, j);
                        for ((o, bv), vv) in out.iter_mut().zip(back).zip(v) {
                            *o = bv + vv * lambda;
                        }
                    };
                    conjugate_gradient(apply, &b, &mut guess, CG_TOL, max_cg)?;
                    Ok(guess.clone())
                };
                bisect(eval, c)
            }
        }
    }
}

fn dense_gram(blocks: &NormalBlocks, sampler: &Sampler) -> DMatrix<C64> {
    let (j, n) = (blocks.j, sampler.n);
    let mut g = DMatrix::zeros(n * j, n * j);
    for a in 0..n {
        for b in 0..n {
            let weights: Vec<C64> = sampler.gram_entry(a, b).collect();
            for r in 0..j {
                for c in 0..j {
                    g[(a * j + r, b * j + c)] = weights
                        .iter()
                        .enumerate()
                        .map(|(k, e)| e * blocks.block(k)[r * j + c])
                        .sum();
                }
            }
        }
    }
    // exact Hermitian symmetry for the eigensolver
    let gh = g.adjoint();
    (g + gh) * C64::new(0.5, 0.0)
}

/// Bisection on `lambda` for `||s(lambda)||^2 = budget`, returning the
/// feasible end of the final bracket.
fn bisect<F>(mut eval: F, c: &Constraint) -> Result<WaveformSolution>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    let s0 = eval(0.0)?;
    if norm_sqr(&s0) <= c.budget {
        return Ok(WaveformSolution { s: s0, lambda: 0.0 });
    }
    let mut hi = 1.0;
    let mut s_hi = eval(hi)?;
    let mut doublings = 0;
    while norm_sqr(&s_hi) > c.budget {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::BisectionNotConverged {
                lo: 0.0,
                hi,
                iters: doublings,
            });
        }
        s_hi = eval(hi)?;
    }
    let mut lo = 0.0;
    for _ in 0..c.max_iters {
        if c.budget - norm_sqr(&s_hi) <= c.tol * c.budget {
            return Ok(WaveformSolution { s: s_hi, lambda: hi });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket exhausted at machine precision
            return Ok(WaveformSolution { s: s_hi, lambda: hi });
        }
        let s_mid = eval(mid)?;
        if norm_sqr(&s_mid) > c.budget {
            lo = mid;
        } else {
            hi = mid;
            s_hi = s_mid;
        }
    }
    if c.budget - norm_sqr(&s_hi) <= c.tol * c.budget {
        Ok(WaveformSolution { s: s_hi, lambda: hi })
    } else {
        Err(Error::BisectionNotConverged {
            lo,
            hi,
            iters: c.max_iters,
        })
    }
}
