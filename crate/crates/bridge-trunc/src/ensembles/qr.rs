//! Householder QR for dense real and complex matrices, column-major.
//!
//! Used only to sample from the Haar measure: fill a matrix with i.i.d.
//! Gaussians, factorize, then rotate each column of `Q` by the phase of the
//! corresponding diagonal entry of `R`. The rotated `Q` is exactly the
//! factor whose `R` has positive diagonal, which is the Haar-distributed
//! one; without the rotation the output would be biased by the
//! factorization's sign conventions.

use num_traits::{Float, Zero};
use rand::Rng;

use crate::scalar::{Entry, Scalar};

/// In-place Householder factorization of the column-major `n x n` matrix `a`.
///
/// Returns `(q, rdiag)`. On exit the strict upper triangle of `a` holds the
/// off-diagonal entries of `R` (content below the diagonal is garbage);
/// `rdiag[j]` is `R[j][j]`.
pub(crate) fn householder<E: Entry>(n: usize, a: &mut [E]) -> (Vec<E>, Vec<E>) {
    assert_eq!(a.len(), n * n);
    let two = <E::Real as Scalar>::from_f(2.0);
    let mut vs = vec![E::zero(); n * n];
    let mut rdiag = vec![E::zero(); n];

    for k in 0..n {
        let (head, tail) = a.split_at_mut((k + 1) * n);
        let col = &head[k * n..];
        let mut norm_sqr = <E::Real as num_traits::Zero>::zero();
        for i in k..n {
            norm_sqr += col[i].norm_sqr();
        }
        let norm = norm_sqr.sqrt();
        let phase = col[k].phase_or_one();
        let alpha = -(phase.scale(norm));
        rdiag[k] = alpha;
        if norm.is_zero() {
            continue;
        }

        let v = &mut vs[k * n..(k + 1) * n];
        v[k] = col[k] - alpha;
        v[(k + 1)..n].copy_from_slice(&col[(k + 1)..n]);
        let mut vnorm_sqr = <E::Real as num_traits::Zero>::zero();
        for i in k..n {
            vnorm_sqr += v[i].norm_sqr();
        }
        if !vnorm_sqr.is_zero() {
            let inv = vnorm_sqr.sqrt().recip();
            for i in k..n {
                v[i] = v[i].scale(inv);
            }
        }

        // Reflect the trailing columns: c <- c - 2 v (v* . c).
        for j in 0..(n - k - 1) {
            let cj = &mut tail[j * n..(j + 1) * n];
            let mut w = E::zero();
            for i in k..n {
                w = w + v[i].conj() * cj[i];
            }
            let w2 = w.scale(two);
            for i in k..n {
                cj[i] = cj[i] - v[i] * w2;
            }
        }
    }

    // Accumulate Q = H_0 H_1 ... H_{n-1} by applying the reflectors to the
    // identity in reverse order. Column j is only touched by reflectors with
    // k <= j, so the inner loop starts at j = k.
    let mut q = vec![E::zero(); n * n];
    for j in 0..n {
        q[j * n + j] = E::one();
    }
    for k in (0..n).rev() {
        let v = &vs[k * n..(k + 1) * n];
        let mut active = false;
        for entry in v.iter().take(n).skip(k) {
            if !entry.norm_sqr().is_zero() {
                active = true;
                break;
            }
        }
        if !active {
            continue;
        }
        for j in k..n {
            let cj = &mut q[j * n..(j + 1) * n];
            let mut w = E::zero();
            for i in k..n {
                w = w + v[i].conj() * cj[i];
            }
            let w2 = w.scale(two);
            for i in k..n {
                cj[i] = cj[i] - v[i] * w2;
            }
        }
    }

    (q, rdiag)
}

/// Sample the Q factor of a Gaussian matrix and apply the diagonal phase
/// correction; the result is Haar distributed.
pub(crate) fn haar_q<E: Entry, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<E> {
    let mut a: Vec<E> = (0..n * n).map(|_| E::gaussian(rng)).collect();
    let (mut q, rdiag) = householder(n, &mut a);
    for j in 0..n {
        let phase = rdiag[j].phase_or_one();
        for i in 0..n {
            q[j * n + i] = q[j * n + i] * phase;
        }
    }
    q
}
