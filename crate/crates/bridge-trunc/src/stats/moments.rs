//! Empirical moments of replicate values at the test points.
//!
//! Means carry the usual sd/sqrt(N) standard error. Covariances are the
//! unbiased full-sample estimator; their standard errors come from batch
//! means (20 equal batches by default), which is simple and adequate at the
//! replicate counts used here. Reductions run in replicate order with
//! pairwise summation, so results do not depend on thread scheduling.

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

/// Covariance of the values at point indices `i` and `j` (i <= j).
#[derive(Clone, Debug)]
pub struct CovEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub se: f64,
}

#[derive(Clone, Debug)]
pub struct PointMoments {
    pub replicates: usize,
    pub batches: usize,
    pub means: Vec<f64>,
    pub mean_ses: Vec<f64>,
    pub covariances: Vec<CovEntry>,
}

impl PointMoments {
    pub fn covariance(&self, i: usize, j: usize) -> Option<&CovEntry> {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.covariances.iter().find(|c| c.i == a && c.j == b)
    }
}

/// Moments of an N x P replicate-by-point value matrix.
pub fn empirical_moments(values: &[Vec<f64>], batches: usize) -> Result<PointMoments> {
    let n = values.len();
    if n < 2 {
        return Err(Error::contract("at least two replicates are required"));
    }
    let p = values[0].len();
    if p == 0 || values.iter().any(|row| row.len() != p) {
        return Err(Error::contract("replicate rows must share a positive length"));
    }
    let b = batches.clamp(2, n / 2).min(n);

    let mut column = vec![0.0f64; n];
    let mut means = Vec::with_capacity(p);
    let mut mean_ses = Vec::with_capacity(p);
    for j in 0..p {
        for (r, row) in values.iter().enumerate() {
            column[r] = row[j];
        }
        let mean = pairwise_sum(&column) / n as f64;
        let sq: Vec<f64> = column.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n as f64 - 1.0);
        means.push(mean);
        mean_ses.push((var / n as f64).sqrt());
    }

    let bounds: Vec<(usize, usize)> =
        (0..b).map(|k| (k * n / b, (k + 1) * n / b)).collect();

    let mut covariances = Vec::with_capacity(p * (p + 1) / 2);
    let mut products = vec![0.0f64; n];
    for i in 0..p {
        for j in i..p {
            for (r, row) in values.iter().enumerate() {
                products[r] = (row[i] - means[i]) * (row[j] - means[j]);
            }
            let value = pairwise_sum(&products) / (n as f64 - 1.0);
            let batch_means: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| pairwise_sum(&products[lo..hi]) / (hi - lo) as f64)
                .collect();
            let bm = pairwise_sum(&batch_means) / b as f64;
            let bvar: Vec<f64> =
                batch_means.iter().map(|&c| (c - bm) * (c - bm)).collect();
            let se = (pairwise_sum(&bvar) / (b as f64 - 1.0) / b as f64).sqrt();
            covariances.push(CovEntry { i, j, value, se });
        }
    }

    Ok(PointMoments { replicates: n, batches: b, means, mean_ses, covariances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, LANE_AUX};
    use crate::scalar::Scalar;

    #[test]
    fn constant_samples_are_degenerate() {
        let values = vec![vec![2.5, -1.0]; 50];
        let m = empirical_moments(&values, 20).unwrap();
        assert_eq!(m.means[0], 2.5);
        assert_eq!(m.mean_ses[0], 0.0);
        let c = m.covariance(0, 0).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.se, 0.0);
    }

    #[test]
    fn iid_gaussians_have_unit_variance() {
        let mut rng = stream_rng(5, LANE_AUX, 0);
        let n = 10_000;
        let values: Vec<Vec<f64>> =
            (0..n).map(|_| vec![f64::standard_normal(&mut rng)]).collect();
        let m = empirical_moments(&values, 20).unwrap();
        let c = m.covariance(0, 0).unwrap();
        assert!((c.value - 1.0).abs() <= 3.0 * c.se, "var {} se {}", c.value, c.se);
        assert!(m.means[0].abs() <= 3.0 * m.mean_ses[0] + 1e-9);
    }

    #[test]
    fn independent_coordinates_have_zero_cross_covariance() {
        let mut rng = stream_rng(6, LANE_AUX, 0);
        let n = 10_000;
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![f64::standard_normal(&mut rng), f64::standard_normal(&mut rng)])
            .collect();
        let m = empirical_moments(&values, 20).unwrap();
        let c = m.covariance(0, 1).unwrap();
        assert!(c.value.abs() <= 3.0 * c.se);
    }

    #[test]
    fn scaling_the_data_scales_covariance_and_se_together() {
        let mut rng = stream_rng(7, LANE_AUX, 0);
        let base: Vec<Vec<f64>> =
            (0..2000).map(|_| vec![f64::standard_normal(&mut rng)]).collect();
        let doubled: Vec<Vec<f64>> = base.iter().map(|r| vec![2.0 * r[0]]).collect();
        let m1 = empirical_moments(&base, 20).unwrap();
        let m2 = empirical_moments(&doubled, 20).unwrap();
        let c1 = m1.covariance(0, 0).unwrap();
        let c2 = m2.covariance(0, 0).unwrap();
        assert!((c2.value - 4.0 * c1.value).abs() < 1e-12);
        assert!((c2.se - 4.0 * c1.se).abs() < 1e-12);
    }

    #[test]
    fn too_few_replicates_is_an_error() {
        assert!(empirical_moments(&[vec![1.0]], 20).is_err());
        let ragged = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(empirical_moments(&ragged, 20).is_err());
    }
}
