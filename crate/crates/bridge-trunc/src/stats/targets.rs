//! Exact finite-n covariance targets.
//!
//! Quenched experiments freeze one environment. Conditionally on it, the
//! covariance of every statistic in scope is an exact finite-n expression in
//! the mark counts, built from the pairwise moments of the squared moduli.
//! A single frozen environment sits at distance O_P(n^{-1/2}) from the
//! limit kernel, which is far larger than the Monte-Carlo error at the
//! replicate counts used here, so quenched pass/fail decisions compare
//! against these conditional values and report the limit kernel alongside.
//!
//! The same expressions with deterministic floor counts give the exact
//! covariance of the deterministic truncation.

use crate::ensembles::EnsembleKind;
use crate::error::{Error, Result};

/// Exact pairwise moments `E[w_ij w_kl]` of squared moduli of one Haar
/// matrix, by coincidence pattern of the index pairs.
#[derive(Clone, Copy, Debug)]
pub struct PairMoments {
    pub same_cell: f64,
    pub same_row: f64,
    pub same_col: f64,
    pub distinct: f64,
}

/// Pairwise moments for a Haar ensemble. Rows (and columns) of squared
/// moduli are symmetric Dirichlet vectors, which pins the same-row moments;
/// the remaining case follows from the unit row sums.
pub fn haar_pair_moments(kind: EnsembleKind, n: usize) -> Result<PairMoments> {
    let nf = n as f64;
    match kind {
        EnsembleKind::HaarUnitary => Ok(PairMoments {
            same_cell: 2.0 / (nf * (nf + 1.0)),
            same_row: 1.0 / (nf * (nf + 1.0)),
            same_col: 1.0 / (nf * (nf + 1.0)),
            distinct: if n > 1 {
                1.0 / (nf * nf - 1.0)
            } else {
                1.0
            },
        }),
        EnsembleKind::HaarOrthogonal => Ok(PairMoments {
            same_cell: 3.0 / (nf * (nf + 2.0)),
            same_row: 1.0 / (nf * (nf + 2.0)),
            same_col: 1.0 / (nf * (nf + 2.0)),
            distinct: if n > 1 {
                (nf + 1.0) / (nf * (nf - 1.0) * (nf + 2.0))
            } else {
                1.0
            },
        }),
        other => Err(Error::contract(format!(
            "pairwise moments are defined for Haar ensembles, got {:?}",
            other
        ))),
    }
}

/// Row/column counts entering a covariance between truncations at levels
/// `(s, t)` and `(s', t')`: counts at the two levels and at their minimum,
/// for rows and for columns. Deterministic truncations use floor counts.
#[derive(Clone, Copy, Debug)]
pub struct PairCounts {
    pub row_min: f64,
    pub row_a: f64,
    pub row_b: f64,
    pub col_min: f64,
    pub col_a: f64,
    pub col_b: f64,
}

impl PairCounts {
    pub fn new(rows: (f64, f64, f64), cols: (f64, f64, f64)) -> Self {
        PairCounts {
            row_min: rows.0,
            row_a: rows.1,
            row_b: rows.2,
            col_min: cols.0,
            col_a: cols.1,
            col_b: cols.2,
        }
    }
}

/// Exact covariance of the (uncentered) truncation masses of a Haar matrix
/// over the matrix draw, for fixed row/column selections with the given
/// counts. Centering by any selection-measurable quantity leaves it
/// unchanged.
pub fn haar_conditional_cov(kind: EnsembleKind, n: usize, c: &PairCounts) -> Result<f64> {
    let pm = haar_pair_moments(kind, n)?;
    let inv_sq = 1.0 / (n as f64 * n as f64);
    let d_cell = pm.same_cell - inv_sq;
    let d_row = pm.same_row - inv_sq;
    let d_col = pm.same_col - inv_sq;
    let d_dist = pm.distinct - inv_sq;
    let rows_cross = c.row_a * c.row_b - c.row_min;
    let cols_cross = c.col_a * c.col_b - c.col_min;
    Ok(d_cell * c.row_min * c.col_min
        + d_row * c.row_min * cols_cross
        + d_col * rows_cross * c.col_min
        + d_dist * rows_cross * cols_cross)
}

/// Exact covariance of the (uncentered) truncation masses of a uniform
/// permutation matrix for fixed row/column selections.
pub fn permutation_conditional_cov(n: usize, c: &PairCounts) -> f64 {
    let nf = n as f64;
    let same = c.col_min / nf - c.col_a * c.col_b / (nf * nf);
    let cross = if n > 1 {
        (c.col_a * c.col_b - c.col_min) / (nf * (nf - 1.0)) - c.col_a * c.col_b / (nf * nf)
    } else {
        0.0
    };
    c.row_min * same + (c.row_a * c.row_b - c.row_min) * cross
}

/// Exact covariance of `sqrt(n) (random first-column mass - count share)`
/// over the weight draw, for fixed row counts.
pub fn one_param_conditional_cov(
    beta_prime: f64,
    n: usize,
    count_min: f64,
    count_a: f64,
    count_b: f64,
) -> f64 {
    let nf = n as f64;
    (nf * count_min - count_a * count_b) / (nf * (nf * beta_prime + 1.0))
}

/// Exact covariance over environments of the normalized random truncation of
/// one frozen doubly stochastic matrix with squared-weight mass `sum_sq`
/// (after the n^{-1/2} scaling): a mixture of the bivariate-bridge and
/// additive-bridge kernels.
pub fn fixed_matrix_cov(sum_sq: f64, n: usize, p: (f64, f64), q: (f64, f64)) -> f64 {
    let (s, t) = p;
    let (s2, t2) = q;
    let b00 = s.min(s2) * t.min(t2) - s * s2 * t * t2;
    let additive = s * s2 * t.min(t2) + s.min(s2) * t * t2 - 2.0 * s * s2 * t * t2;
    (sum_sq * b00 + (n as f64 - sum_sq) * additive) / n as f64
}

/// Exact covariance over environments of `sqrt(n) (random column mass - s)`
/// for a frozen weight vector with squared mass `sum_sq`.
pub fn fixed_weights_cov(sum_sq: f64, n: usize, s: f64, s2: f64) -> f64 {
    n as f64 * sum_sq * (s.min(s2) - s * s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel_tied(p: (f64, f64), q: (f64, f64)) -> f64 {
        (p.0.min(q.0) - p.0 * q.0) * (p.1.min(q.1) - p.1 * q.1)
    }

    fn counts_at(n: usize, p: (f64, f64), q: (f64, f64)) -> PairCounts {
        let nf = n as f64;
        PairCounts::new(
            (nf * p.0.min(q.0), nf * p.0, nf * q.0),
            (nf * p.1.min(q.1), nf * p.1, nf * q.1),
        )
    }

    #[test]
    fn haar_conditional_cov_vanishes_at_full_truncation() {
        for kind in [EnsembleKind::HaarUnitary, EnsembleKind::HaarOrthogonal] {
            let n = 37;
            let nf = n as f64;
            let c = PairCounts::new((nf, nf, nf), (nf, nf, nf));
            let v = haar_conditional_cov(kind, n, &c).unwrap();
            assert!(v.abs() < 1e-12, "{:?}: {}", kind, v);
        }
    }

    #[test]
    fn haar_conditional_cov_approaches_the_tied_down_kernel() {
        let p = (0.3, 0.7);
        let q = (0.6, 0.4);
        for (kind, amp) in
            [(EnsembleKind::HaarUnitary, 1.0), (EnsembleKind::HaarOrthogonal, 2.0)]
        {
            let n = 4_000_000;
            let v = haar_conditional_cov(kind, n, &counts_at(n, p, q)).unwrap();
            let expect = amp * kernel_tied(p, q);
            assert!((v - expect).abs() < 1e-4, "{:?}: {} vs {}", kind, v, expect);
        }
    }

    #[test]
    fn permutation_conditional_cov_approaches_the_tied_down_kernel() {
        let p = (0.25, 0.5);
        let q = (0.5, 0.8);
        let n = 4_000_000;
        // The raw covariance scales like n; the statistic carries n^{-1/2}.
        let v = permutation_conditional_cov(n, &counts_at(n, p, q)) / n as f64;
        assert!((v - kernel_tied(p, q)).abs() < 1e-4, "{} vs {}", v, kernel_tied(p, q));
    }

    #[test]
    fn one_param_conditional_cov_matches_the_scaled_bridge() {
        let n = 2_000_000;
        let nf = n as f64;
        for (bp, amp) in [(1.0, 1.0), (0.5, 2.0)] {
            let v = one_param_conditional_cov(bp, n, nf * 0.3, nf * 0.3, nf * 0.8);
            let expect = amp * (0.3 - 0.3 * 0.8);
            assert!((v - expect).abs() < 1e-4, "{} vs {}", v, expect);
        }
    }

    #[test]
    fn fixed_matrix_cov_flat_case_is_the_exact_dft_covariance() {
        // A constant-modulus matrix has squared mass exactly 1; the closed
        // form is additive-bridge + tied-down-bridge / n.
        let n = 400;
        let p = (0.5, 0.5);
        let v = fixed_matrix_cov(1.0, n, p, p);
        let additive = 0.125;
        let tied = 0.0625;
        // b00 = additive + tied, so the mixture is additive + tied / n.
        assert!((v - (additive + tied / n as f64)).abs() < 1e-12);
    }

    #[test]
    fn pair_moments_respect_row_sums() {
        for kind in [EnsembleKind::HaarUnitary, EnsembleKind::HaarOrthogonal] {
            let n = 50;
            let pm = haar_pair_moments(kind, n).unwrap();
            // Summing E[w_11 w_1l] over l gives E[w_11] = 1/n.
            let row_total = pm.same_cell + (n as f64 - 1.0) * pm.same_row;
            assert!((row_total - 1.0 / n as f64).abs() < 1e-15);
            // Summing E[w_11 w_kl] over l for k != 1 also gives 1/n^2 * n.
            let cross_total = pm.same_col + (n as f64 - 1.0) * pm.distinct;
            assert!((cross_total - 1.0 / n as f64).abs() < 1e-15);
        }
        assert!(haar_pair_moments(EnsembleKind::Dft, 10).is_err());
    }
}
