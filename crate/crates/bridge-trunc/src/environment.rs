//! The random environment of uniform row/column marks and its counting
//! processes.
//!
//! An environment couples every random truncation of one matrix: row i
//! survives the (s, t)-truncation when its mark R_i is at most s, column j
//! when C_j is at most t. Counting processes use the closed inequality
//! `mark <= level` throughout; ties between marks are broken by index
//! (stable sort), which has probability zero but keeps runs deterministic.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The marks `omega = (R_1..R_n, C_1..C_n)`, all i.i.d. uniform on [0, 1].
#[derive(Clone, Debug)]
pub struct Environment<T> {
    row_marks: Vec<T>,
    col_marks: Vec<T>,
}

impl<T: Scalar> Environment<T> {
    pub fn new(row_marks: Vec<T>, col_marks: Vec<T>) -> Result<Self> {
        if row_marks.is_empty() || row_marks.len() != col_marks.len() {
            return Err(Error::contract("row and column marks must have equal positive length"));
        }
        for &m in row_marks.iter().chain(col_marks.iter()) {
            if !(T::zero()..=T::one()).contains(&m) {
                return Err(Error::OutOfRange { what: "mark", value: m.to_f() });
            }
        }
        Ok(Environment { row_marks, col_marks })
    }

    pub fn n(&self) -> usize {
        self.row_marks.len()
    }

    pub fn row_marks(&self) -> &[T] {
        &self.row_marks
    }

    pub fn col_marks(&self) -> &[T] {
        &self.col_marks
    }
}

/// Environment with both mark families sorted and the sorting permutations.
///
/// `row_order[k]` is the original index of the k-th smallest row mark, so
/// `sorted_rows[k] = row_marks[row_order[k]]`; `row_rank` is its inverse
/// (original index to rank). Likewise for columns.
#[derive(Clone, Debug)]
pub struct SortedEnvironment<T> {
    pub sorted_rows: Vec<T>,
    pub sorted_cols: Vec<T>,
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    pub row_rank: Vec<usize>,
    pub col_rank: Vec<usize>,
}

fn argsort<T: Scalar>(marks: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..marks.len()).collect();
    order.sort_by(|&a, &b| {
        marks[a]
            .partial_cmp(&marks[b])
            .expect("marks are finite")
            .then(a.cmp(&b))
    });
    order
}

impl<T: Scalar> SortedEnvironment<T> {
    pub fn new(env: &Environment<T>) -> Self {
        let row_order = argsort(env.row_marks());
        let col_order = argsort(env.col_marks());
        let n = env.n();
        let mut row_rank = vec![0usize; n];
        let mut col_rank = vec![0usize; n];
        for (rank, &orig) in row_order.iter().enumerate() {
            row_rank[orig] = rank;
        }
        for (rank, &orig) in col_order.iter().enumerate() {
            col_rank[orig] = rank;
        }
        let sorted_rows = row_order.iter().map(|&i| env.row_marks()[i]).collect();
        let sorted_cols = col_order.iter().map(|&j| env.col_marks()[j]).collect();
        SortedEnvironment { sorted_rows, sorted_cols, row_order, col_order, row_rank, col_rank }
    }
}

/// Sample an environment of 2n i.i.d. uniform marks.
pub fn sample_environment<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Environment<T>> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let row_marks = (0..n).map(|_| T::standard_uniform(rng)).collect();
    let col_marks = (0..n).map(|_| T::standard_uniform(rng)).collect();
    Environment::new(row_marks, col_marks)
}

/// Number of marks at most `level`.
pub fn counting<T: Scalar>(marks: &[T], level: T) -> Result<usize> {
    if !(T::zero()..=T::one()).contains(&level) {
        return Err(Error::OutOfRange { what: "level", value: level.to_f() });
    }
    Ok(marks.iter().filter(|&&m| m <= level).count())
}

/// Centered and scaled count: `n^{-1/2} (count - n * level)`.
pub fn normalized_counting<T: Scalar>(marks: &[T], level: T) -> Result<T> {
    let n = marks.len();
    let count = counting(marks, level)?;
    Ok((T::from_count(count) - T::from_count(n) * level) / T::from_count(n).sqrt())
}

/// Counts at every grid level `k/m`, k = 0..=m, from a sorted mark array.
pub fn counts_on_grid<T: Scalar>(sorted_marks: &[T], m: usize) -> Vec<usize> {
    let mut counts = Vec::with_capacity(m + 1);
    let mut idx = 0usize;
    for k in 0..=m {
        let level = T::from_count(k) / T::from_count(m);
        while idx < sorted_marks.len() && sorted_marks[idx] <= level {
            idx += 1;
        }
        counts.push(idx);
    }
    counts
}

/// Exact variance of the normalized count product `S_s S'_t / n` over
/// environments, from independent binomial moments:
/// `n (s^2 t(1-t) + t^2 s(1-s)) + s t (1-s)(1-t)`.
pub fn product_count_variance<T: Scalar>(n: usize, s: T, t: T) -> Result<T> {
    for (what, v) in [("s", s), ("t", t)] {
        if !(T::zero()..=T::one()).contains(&v) {
            return Err(Error::OutOfRange { what, value: v.to_f() });
        }
    }
    let one = T::one();
    let nn = T::from_count(n);
    Ok(nn * (s * s * t * (one - t) + t * t * s * (one - s)) + s * t * (one - s) * (one - t))
}
