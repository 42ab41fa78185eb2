//! Dense Hermitian helpers and a conjugate-gradient solver.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::C64;

/// Eigenvalues (clamped at zero) and eigenvectors of a Hermitian PSD matrix.
pub(crate) fn psd_eigen(mat: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = mat.symmetric_eigen();
    let values = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    (values, eig.eigenvectors)
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Solves `A x = b` for Hermitian positive semidefinite `A` given as a
/// matrix-vector product, starting from the contents of `x`. Stops when
/// `||b - A x|| <= tol ||b||`. Returns the iteration count.
pub(crate) fn conjugate_gradient<F>(
    mut apply: F,
    b: &[C64],
    x: &mut [C64],
    tol: f64,
    max_iters: usize,
) -> Result<usize>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = b.len();
    let b_norm = norm_sqr(b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        return Ok(0);
    }
    let mut ax = vec![C64::new(0.0, 0.0); n];
    apply(x, &mut ax);
    let mut r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = norm_sqr(&r);
    let mut ap = vec![C64::new(0.0, 0.0); n];
    for it in 0..max_iters {
        if rr.sqrt() <= tol * b_norm {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            // residual lies in the null space; nothing left to reduce
            return Ok(it);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = norm_sqr(&r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
    }
    if rr.sqrt() <= tol * b_norm {
        Ok(max_iters)
    } else {
        Err(Error::CgNotConverged {
            iters: max_iters,
            residual: rr.sqrt() / b_norm,
        })
    }
}
