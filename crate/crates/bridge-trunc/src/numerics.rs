//! Small summation and formatting helpers shared across the crate.

use crate::scalar::Scalar;

/// Kahan (compensated) accumulator.
#[derive(Clone, Copy, Debug)]
pub struct Kahan<T: Scalar> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Default for Kahan<T> {
    fn default() -> Self {
        Kahan { sum: T::zero(), comp: T::zero() }
    }
}

impl<T: Scalar> Kahan<T> {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> T {
        self.sum
    }
}

/// Sum by recursive pairwise reduction; order-insensitive up to rounding and
/// deterministic for a fixed input order.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Format a float with 17 significant digits (round-trip exact for f64).
pub fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_increments() {
        let mut acc = Kahan::<f64>::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        let plain: f64 = {
            let mut s = 1.0f64;
            for _ in 0..1_000_000 {
                s += 1e-16;
            }
            s
        };
        assert!((acc.total() - (1.0 + 1e-10)).abs() < 1e-13);
        // The naive sum loses the increments entirely.
        assert_eq!(plain, 1.0);
    }

    #[test]
    fn pairwise_matches_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, 2.0 / 3.0, 1.0 / 2550.0, 12.5625, -1.0e-12] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x);
        }
    }
}
