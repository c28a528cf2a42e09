//! Grid-path extraction for every truncation statistic.
//!
//! Two-parameter paths live on the uniform (m+1) x (m+1) grid of levels
//! (k/m, l/m). Deterministic truncations read a 2-D prefix grid at floor
//! indices computed in exact integer arithmetic; random truncations permute
//! the weight matrix by the sorted environment once and then read the
//! permuted prefix grid at the mark counts, which is identical to the masked
//! double sum. Permutation matrices never materialize dense weights: their
//! paths reduce to 2-D histograms of (row mark, column mark) cells in
//! O(n + m^2).

use crate::ensembles::WeightMatrix;
use crate::environment::{counts_on_grid, Environment, SortedEnvironment};
use crate::error::{Error, Result};
use crate::numerics::{fmt_float, Kahan};
use crate::scalar::Scalar;

/// Uniform evaluation grid with points `k/m`, k = 0..=m.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    m: usize,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("grid resolution m must be at least 1"));
        }
        Ok(Grid { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_points(&self) -> usize {
        self.m + 1
    }

    pub fn point<T: Scalar>(&self, k: usize) -> T {
        T::from_count(k) / T::from_count(self.m)
    }

    /// `floor(n * k / m)` in exact integer arithmetic.
    pub fn floor_index(&self, n: usize, k: usize) -> usize {
        n * k / self.m
    }

    /// Grid index of a level that must sit on the grid (within 1e-9).
    pub fn index_of(&self, level: f64) -> Result<usize> {
        let scaled = level * self.m as f64;
        let k = scaled.round();
        if (scaled - k).abs() > 1e-9 || !(0.0..=self.m as f64).contains(&k) {
            return Err(Error::config(format!(
                "level {} does not lie on the grid with m = {}",
                level, self.m
            )));
        }
        Ok(k as usize)
    }
}

/// Scaling applied to a path, as a function of the matrix size n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathScale {
    One,
    SqrtN,
    InvSqrtN,
}

impl PathScale {
    fn factor<T: Scalar>(self, n: usize) -> T {
        match self {
            PathScale::One => T::one(),
            PathScale::SqrtN => T::from_count(n).sqrt(),
            PathScale::InvSqrtN => T::one() / T::from_count(n).sqrt(),
        }
    }
}

/// One-parameter statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stat1Kind {
    /// Mass of the first `floor(ns)` first-column weights.
    DetColumnMass,
    /// Mass of the first-column weights whose row mark is at most s.
    RandColumnMass,
    /// A sampled limit process; no centering applies.
    LimitSample,
}

/// Two-parameter statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stat2Kind {
    /// Top-left block mass at floor indices.
    DetTruncation,
    /// Mass over rows/columns selected by the environment.
    RandTruncation,
    /// Deterministic truncation read at the normalized mark counts.
    Subordinated,
    /// Doubly centered random-truncation mass (the interaction part).
    Interaction,
    /// Normalized empirical copula process (already centered and scaled).
    Copula,
    /// A sampled limit process; no centering applies.
    LimitSample,
}

/// Centering choices for one-parameter paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centering1 {
    None,
    /// Subtract the level s.
    Identity,
    /// Subtract the environment's count share `S_s / n`.
    CountShare,
}

/// Centering choices for two-parameter paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centering2 {
    None,
    /// Subtract `floor(ns) floor(nt) / n`.
    DetMean,
    /// Subtract `n s t`.
    ProductMean,
    /// Subtract the environment's count product `S_s S'_t / n`.
    CountProduct,
}

#[derive(Clone, Debug)]
pub struct GridPath1<T> {
    pub grid: Grid,
    pub n: usize,
    pub kind: Stat1Kind,
    pub centering: Centering1,
    pub scale: PathScale,
    pub values: Vec<T>,
}

impl<T: Scalar> GridPath1<T> {
    pub fn value(&self, k: usize) -> T {
        self.values[k]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,value\n");
        for k in 0..self.grid.num_points() {
            out.push_str(&fmt_float(self.grid.point::<f64>(k)));
            out.push(',');
            out.push_str(&fmt_float(self.values[k].to_f()));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct GridPath2<T> {
    pub grid: Grid,
    pub n: usize,
    pub kind: Stat2Kind,
    pub centering: Centering2,
    pub scale: PathScale,
    /// Row-major: index (k, l) at `k * (m + 1) + l`.
    pub values: Vec<T>,
}

impl<T: Scalar> GridPath2<T> {
    pub fn value(&self, k: usize, l: usize) -> T {
        self.values[k * self.grid.num_points() + l]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,value\n");
        for k in 0..self.grid.num_points() {
            for l in 0..self.grid.num_points() {
                out.push_str(&fmt_float(self.grid.point::<f64>(k)));
                out.push(',');
                out.push_str(&fmt_float(self.grid.point::<f64>(l)));
                out.push(',');
                out.push_str(&fmt_float(self.value(k, l).to_f()));
                out.push('\n');
            }
        }
        out
    }
}

/// Two-dimensional cumulative sums `K[p][q] = sum of w_ij for i < p, j < q`.
pub struct PrefixGrid<T> {
    n: usize,
    grid: Vec<T>,
}

const COMPENSATED_THRESHOLD: usize = 1024;

impl<T: Scalar> PrefixGrid<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> T {
        self.grid[p * (self.n + 1) + q]
    }

    fn from_row_major(n: usize, w: &[T]) -> Self {
        let stride = n + 1;
        let mut grid = vec![T::zero(); stride * stride];
        if n <= COMPENSATED_THRESHOLD {
            for p in 1..=n {
                let row = &w[(p - 1) * n..p * n];
                let mut row_cum = T::zero();
                for q in 1..=n {
                    row_cum += row[q - 1];
                    grid[p * stride + q] = grid[(p - 1) * stride + q] + row_cum;
                }
            }
        } else {
            let mut col_acc: Vec<Kahan<T>> = vec![Kahan::new(); n + 1];
            for p in 1..=n {
                let row = &w[(p - 1) * n..p * n];
                let mut row_cum = Kahan::new();
                for q in 1..=n {
                    row_cum.add(row[q - 1]);
                    col_acc[q].add(row_cum.total());
                    grid[p * stride + q] = col_acc[q].total();
                }
            }
        }
        PrefixGrid { n, grid }
    }
}

/// Build the prefix grid of a weight matrix (compensated summation above
/// n = 1024).
pub fn prefix_grid<T: Scalar>(w: &WeightMatrix<T>) -> PrefixGrid<T> {
    PrefixGrid::from_row_major(w.n(), w.as_slice())
}

/// Deterministic truncation mass at every grid cell, read from a prefix grid.
pub fn det_truncation_path<T: Scalar>(pg: &PrefixGrid<T>, grid: &Grid) -> GridPath2<T> {
    let n = pg.n();
    let np = grid.num_points();
    let mut values = vec![T::zero(); np * np];
    for k in 0..np {
        let p = grid.floor_index(n, k);
        for l in 0..np {
            values[k * np + l] = pg.get(p, grid.floor_index(n, l));
        }
    }
    GridPath2 {
        grid: *grid,
        n,
        kind: Stat2Kind::DetTruncation,
        centering: Centering2::None,
        scale: PathScale::One,
        values,
    }
}

fn check_sizes<T: Scalar>(w: &WeightMatrix<T>, env: &Environment<T>) -> Result<()> {
    if w.n() != env.n() {
        return Err(Error::contract(format!(
            "weight matrix size {} does not match environment size {}",
            w.n(),
            env.n()
        )));
    }
    Ok(())
}

fn permuted_prefix<T: Scalar>(w: &WeightMatrix<T>, sorted: &SortedEnvironment<T>) -> PrefixGrid<T> {
    let n = w.n();
    let mut wp = vec![T::zero(); n * n];
    for (i, &orig_row) in sorted.row_order.iter().enumerate() {
        let src = w.row(orig_row);
        let dst = &mut wp[i * n..(i + 1) * n];
        for (j, &orig_col) in sorted.col_order.iter().enumerate() {
            dst[j] = src[orig_col];
        }
    }
    PrefixGrid::from_row_major(n, &wp)
}

/// Random truncation mass at every grid cell: rows with mark at most s and
/// columns with mark at most t.
pub fn rand_truncation_path<T: Scalar>(
    w: &WeightMatrix<T>,
    env: &Environment<T>,
    grid: &Grid,
) -> Result<GridPath2<T>> {
    check_sizes(w, env)?;
    let sorted = SortedEnvironment::new(env);
    let pg = permuted_prefix(w, &sorted);
    let row_counts = counts_on_grid(&sorted.sorted_rows, grid.m());
    let col_counts = counts_on_grid(&sorted.sorted_cols, grid.m());
    let np = grid.num_points();
    let mut values = vec![T::zero(); np * np];
    for k in 0..np {
        for l in 0..np {
            values[k * np + l] = pg.get(row_counts[k], col_counts[l]);
        }
    }
    Ok(GridPath2 {
        grid: *grid,
        n: w.n(),
        kind: Stat2Kind::RandTruncation,
        centering: Centering2::None,
        scale: PathScale::One,
        values,
    })
}

/// Deterministic truncation read at the normalized mark counts
/// `(S_s / n, S'_t / n)`; equal in law (not pathwise) to the random
/// truncation for row/column exchangeable ensembles.
pub fn subordinated_path<T: Scalar>(
    w: &WeightMatrix<T>,
    env: &Environment<T>,
    grid: &Grid,
) -> Result<GridPath2<T>> {
    check_sizes(w, env)?;
    let sorted = SortedEnvironment::new(env);
    let pg = prefix_grid(w);
    let row_counts = counts_on_grid(&sorted.sorted_rows, grid.m());
    let col_counts = counts_on_grid(&sorted.sorted_cols, grid.m());
    let np = grid.num_points();
    let mut values = vec![T::zero(); np * np];
    for k in 0..np {
        for l in 0..np {
            values[k * np + l] = pg.get(row_counts[k], col_counts[l]);
        }
    }
    Ok(GridPath2 {
        grid: *grid,
        n: w.n(),
        kind: Stat2Kind::Subordinated,
        centering: Centering2::None,
        scale: PathScale::One,
        values,
    })
}

/// Doubly centered random-truncation mass, computed along two independent
/// routes that must agree: subtracting the count product from the masked
/// mass, and summing `(w_ij - 1/n)` against centered row/column indicators.
/// The two agree exactly because the weight matrix is doubly stochastic.
pub fn interaction_path<T: Scalar>(
    w: &WeightMatrix<T>,
    env: &Environment<T>,
    grid: &Grid,
) -> Result<GridPath2<T>> {
    check_sizes(w, env)?;
    w.validate()
        .map_err(|e| Error::contract(format!("interaction path requires doubly stochastic weights: {}", e)))?;

    let n = w.n();
    let np = grid.num_points();
    let nn = T::from_count(n);

    // Route A: masked mass minus count product.
    let masked = rand_truncation_path(w, env, grid)?;
    let sorted = SortedEnvironment::new(env);
    let row_counts = counts_on_grid(&sorted.sorted_rows, grid.m());
    let col_counts = counts_on_grid(&sorted.sorted_cols, grid.m());
    let mut route_a = vec![T::zero(); np * np];
    for k in 0..np {
        let sk = T::from_count(row_counts[k]);
        for l in 0..np {
            route_a[k * np + l] = masked.value(k, l) - sk * T::from_count(col_counts[l]) / nn;
        }
    }

    // Route B: centered triple-product sum. The column factor is rolled into
    // z[i][l] = sum_j (w_ij - 1/n) (1_{C_j <= t_l} - t_l).
    let mut b = vec![T::zero(); n * np];
    let mut b_col_total = vec![T::zero(); np];
    for l in 0..np {
        let t = grid.point::<T>(l);
        let mut total = T::zero();
        for j in 0..n {
            let v = if env.col_marks()[j] <= t { T::one() - t } else { -t };
            b[j * np + l] = v;
            total += v;
        }
        b_col_total[l] = total;
    }
    let mut z = vec![T::zero(); n * np];
    for i in 0..n {
        let row = w.row(i);
        let zi = &mut z[i * np..(i + 1) * np];
        for (j, &wij) in row.iter().enumerate() {
            let bj = &b[j * np..(j + 1) * np];
            for l in 0..np {
                zi[l] += wij * bj[l];
            }
        }
        for l in 0..np {
            zi[l] -= b_col_total[l] / nn;
        }
    }
    let mut route_b = vec![T::zero(); np * np];
    for k in 0..np {
        let s = grid.point::<T>(k);
        for i in 0..n {
            let a = if env.row_marks()[i] <= s { T::one() - s } else { -s };
            let zi = &z[i * np..(i + 1) * np];
            let out = &mut route_b[k * np..(k + 1) * np];
            for l in 0..np {
                out[l] += a * zi[l];
            }
        }
    }

    let tol = T::route_agreement_tol();
    for idx in 0..np * np {
        let dev = (route_a[idx] - route_b[idx]).abs();
        if dev > tol {
            return Err(Error::contract(format!(
                "interaction path routes disagree by {} at flat index {}",
                dev, idx
            )));
        }
    }

    Ok(GridPath2 {
        grid: *grid,
        n,
        kind: Stat2Kind::Interaction,
        centering: Centering2::None,
        scale: PathScale::One,
        values: route_a,
    })
}

fn check_weight_vector<T: Scalar>(weights: &[T]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidSize);
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::unitarity_tol() {
        return Err(Error::contract(format!("weight vector sums to {}, expected 1", total)));
    }
    Ok(())
}

/// Deterministic first-column mass `sum of the first floor(ns) weights`.
pub fn one_param_det_path<T: Scalar>(weights: &[T], grid: &Grid) -> Result<GridPath1<T>> {
    check_weight_vector(weights)?;
    let n = weights.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(T::zero());
    let mut acc = T::zero();
    for &w in weights {
        acc += w;
        cum.push(acc);
    }
    let values = (0..grid.num_points()).map(|k| cum[grid.floor_index(n, k)]).collect();
    Ok(GridPath1 {
        grid: *grid,
        n,
        kind: Stat1Kind::DetColumnMass,
        centering: Centering1::None,
        scale: PathScale::One,
        values,
    })
}

/// Random first-column mass `sum of weights with row mark at most s`.
pub fn one_param_rand_path<T: Scalar>(
    weights: &[T],
    env: &Environment<T>,
    grid: &Grid,
) -> Result<GridPath1<T>> {
    check_weight_vector(weights)?;
    if weights.len() != env.n() {
        return Err(Error::contract("weight vector and environment sizes differ"));
    }
    let m = grid.m();
    let mut bucket_mass = vec![T::zero(); m + 1];
    for (i, &w) in weights.iter().enumerate() {
        bucket_mass[grid_bucket(env.row_marks()[i], grid)] += w;
    }
    let mut values = Vec::with_capacity(m + 1);
    let mut acc = T::zero();
    for mass in bucket_mass {
        acc += mass;
        values.push(acc);
    }
    Ok(GridPath1 {
        grid: *grid,
        n: weights.len(),
        kind: Stat1Kind::RandColumnMass,
        centering: Centering1::None,
        scale: PathScale::One,
        values,
    })
}

/// Both one-parameter paths for one weight vector and environment.
pub fn column_mass_paths<T: Scalar>(
    weights: &[T],
    env: &Environment<T>,
    grid: &Grid,
) -> Result<(GridPath1<T>, GridPath1<T>)> {
    Ok((one_param_det_path(weights, grid)?, one_param_rand_path(weights, env, grid)?))
}

/// Smallest grid index k with `x <= k/m`.
fn grid_bucket<T: Scalar>(x: T, grid: &Grid) -> usize {
    let m = grid.m();
    let mut k = (x.to_f() * m as f64).ceil() as usize;
    if k > m {
        k = m;
    }
    while k > 0 && x <= grid.point(k - 1) {
        k -= 1;
    }
    while x > grid.point(k) {
        k += 1;
    }
    k
}

fn validate_permutation(sigma: &[usize], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::contract("permutation length does not match size"));
    }
    let mut seen = vec![false; n];
    for &j in sigma {
        if j >= n || seen[j] {
            return Err(Error::contract("indices do not form a permutation"));
        }
        seen[j] = true;
    }
    Ok(())
}

fn mark_histogram_prefix<T: Scalar>(
    env: &Environment<T>,
    sigma: &[usize],
    grid: &Grid,
) -> Result<Vec<usize>> {
    let n = env.n();
    validate_permutation(sigma, n)?;
    let np = grid.num_points();
    let mut hist = vec![0usize; np * np];
    for i in 0..n {
        let k = grid_bucket(env.row_marks()[i], grid);
        let l = grid_bucket(env.col_marks()[sigma[i]], grid);
        hist[k * np + l] += 1;
    }
    for k in 0..np {
        for l in 0..np {
            let mut v = hist[k * np + l];
            if k > 0 {
                v += hist[(k - 1) * np + l];
            }
            if l > 0 {
                v += hist[k * np + l - 1];
            }
            if k > 0 && l > 0 {
                v -= hist[(k - 1) * np + l - 1];
            }
            hist[k * np + l] = v;
        }
    }
    Ok(hist)
}

/// Random truncation mass for a permutation matrix in O(n + m^2).
pub fn permutation_rand_path<T: Scalar>(
    sigma: &[usize],
    env: &Environment<T>,
    grid: &Grid,
) -> Result<GridPath2<T>> {
    let prefix = mark_histogram_prefix(env, sigma, grid)?;
    Ok(GridPath2 {
        grid: *grid,
        n: env.n(),
        kind: Stat2Kind::RandTruncation,
        centering: Centering2::None,
        scale: PathScale::One,
        values: prefix.into_iter().map(T::from_count).collect(),
    })
}

/// Deterministic truncation mass for a permutation matrix in O(n + m^2).
pub fn permutation_det_path<T: Scalar>(sigma: &[usize], grid: &Grid) -> Result<GridPath2<T>> {
    let n = sigma.len();
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    validate_permutation(sigma, n)?;
    let np = grid.num_points();
    // bucket[i] = smallest k with floor(n k / m) > i, i.e. the first grid
    // index whose truncation includes zero-based row i.
    let mut bucket = vec![np; n];
    let mut i = 0usize;
    for k in 0..np {
        let limit = grid.floor_index(n, k);
        while i < limit {
            bucket[i] = k;
            i += 1;
        }
    }
    let mut hist = vec![0usize; np * np];
    for (row, &col) in sigma.iter().enumerate() {
        let (k, l) = (bucket[row], bucket[col]);
        if k < np && l < np {
            hist[k * np + l] += 1;
        }
    }
    for k in 0..np {
        for l in 0..np {
            let mut v = hist[k * np + l];
            if k > 0 {
                v += hist[(k - 1) * np + l];
            }
            if l > 0 {
                v += hist[k * np + l - 1];
            }
            if k > 0 && l > 0 {
                v -= hist[(k - 1) * np + l - 1];
            }
            hist[k * np + l] = v;
        }
    }
    Ok(GridPath2 {
        grid: *grid,
        n,
        kind: Stat2Kind::DetTruncation,
        centering: Centering2::None,
        scale: PathScale::One,
        values: hist.into_iter().map(T::from_count).collect(),
    })
}

/// Random truncation mass for a constant-modulus matrix: `S_s S'_t / n`
/// from the counting processes alone.
pub fn flat_rand_path<T: Scalar>(env: &Environment<T>, grid: &Grid) -> GridPath2<T> {
    let n = env.n();
    let sorted = SortedEnvironment::new(env);
    let row_counts = counts_on_grid(&sorted.sorted_rows, grid.m());
    let col_counts = counts_on_grid(&sorted.sorted_cols, grid.m());
    let np = grid.num_points();
    let nn = T::from_count(n);
    let mut values = vec![T::zero(); np * np];
    for k in 0..np {
        let sk = T::from_count(row_counts[k]);
        for l in 0..np {
            values[k * np + l] = sk * T::from_count(col_counts[l]) / nn;
        }
    }
    GridPath2 {
        grid: *grid,
        n,
        kind: Stat2Kind::RandTruncation,
        centering: Centering2::None,
        scale: PathScale::One,
        values,
    }
}

/// Normalized empirical copula process
/// `n^{-1/2} (#{i : R_i <= s, C_{sigma(i)} <= t} - n s t)`.
pub fn empirical_copula_path<T: Scalar>(
    env: &Environment<T>,
    sigma: &[usize],
    grid: &Grid,
) -> Result<GridPath2<T>> {
    let prefix = mark_histogram_prefix(env, sigma, grid)?;
    let n = env.n();
    let np = grid.num_points();
    let nn = T::from_count(n);
    let sqrt_n = nn.sqrt();
    let mut values = vec![T::zero(); np * np];
    for k in 0..np {
        let s = grid.point::<T>(k);
        for l in 0..np {
            let t = grid.point::<T>(l);
            values[k * np + l] = (T::from_count(prefix[k * np + l]) - nn * s * t) / sqrt_n;
        }
    }
    Ok(GridPath2 {
        grid: *grid,
        n,
        kind: Stat2Kind::Copula,
        centering: Centering2::ProductMean,
        scale: PathScale::InvSqrtN,
        values,
    })
}

fn centering1_allowed(kind: Stat1Kind, centering: Centering1) -> bool {
    match centering {
        Centering1::None => true,
        Centering1::Identity => {
            matches!(kind, Stat1Kind::DetColumnMass | Stat1Kind::RandColumnMass)
        }
        Centering1::CountShare => matches!(kind, Stat1Kind::RandColumnMass),
    }
}

fn centering2_allowed(kind: Stat2Kind, centering: Centering2) -> bool {
    match centering {
        Centering2::None => true,
        Centering2::DetMean => matches!(kind, Stat2Kind::DetTruncation),
        Centering2::ProductMean => {
            matches!(kind, Stat2Kind::RandTruncation | Stat2Kind::Subordinated)
        }
        Centering2::CountProduct => {
            matches!(kind, Stat2Kind::RandTruncation | Stat2Kind::Subordinated)
        }
    }
}

/// Center and scale a one-parameter path. `grid_counts` supplies `S_{k/m}`
/// for the count-share centering.
pub fn centered_scaled1<T: Scalar>(
    path: &GridPath1<T>,
    centering: Centering1,
    scale: PathScale,
    grid_counts: Option<&[usize]>,
) -> Result<GridPath1<T>> {
    if path.centering != Centering1::None {
        return Err(Error::contract("path is already centered"));
    }
    if !centering1_allowed(path.kind, centering) {
        return Err(Error::contract(format!(
            "centering {:?} is incompatible with statistic {:?}",
            centering, path.kind
        )));
    }
    let n = path.n;
    let nn = T::from_count(n);
    let factor = scale.factor::<T>(n);
    let mut values = Vec::with_capacity(path.values.len());
    for k in 0..path.values.len() {
        let base = match centering {
            Centering1::None => T::zero(),
            Centering1::Identity => path.grid.point(k),
            Centering1::CountShare => {
                let counts = grid_counts
                    .ok_or_else(|| Error::contract("count-share centering requires grid counts"))?;
                T::from_count(counts[k]) / nn
            }
        };
        values.push((path.values[k] - base) * factor);
    }
    Ok(GridPath1 { grid: path.grid, n, kind: path.kind, centering, scale, values })
}

/// Center and scale a two-parameter path. `counts` supplies the row and
/// column grid counts for the count-product centering.
pub fn centered_scaled2<T: Scalar>(
    path: &GridPath2<T>,
    centering: Centering2,
    scale: PathScale,
    counts: Option<(&[usize], &[usize])>,
) -> Result<GridPath2<T>> {
    if path.centering != Centering2::None {
        return Err(Error::contract("path is already centered"));
    }
    if !centering2_allowed(path.kind, centering) {
        return Err(Error::contract(format!(
            "centering {:?} is incompatible with statistic {:?}",
            centering, path.kind
        )));
    }
    let n = path.n;
    let np = path.grid.num_points();
    let nn = T::from_count(n);
    let factor = scale.factor::<T>(n);
    let mut values = vec![T::zero(); np * np];
    for k in 0..np {
        for l in 0..np {
            let base = match centering {
                Centering2::None => T::zero(),
                Centering2::DetMean => {
                    T::from_count(path.grid.floor_index(n, k))
                        * T::from_count(path.grid.floor_index(n, l))
                        / nn
                }
                Centering2::ProductMean => nn * path.grid.point(k) * path.grid.point(l),
                Centering2::CountProduct => {
                    let (rows, cols) = counts.ok_or_else(|| {
                        Error::contract("count-product centering requires grid counts")
                    })?;
                    T::from_count(rows[k]) * T::from_count(cols[l]) / nn
                }
            };
            values[k * np + l] = (path.value(k, l) - base) * factor;
        }
    }
    Ok(GridPath2 { grid: path.grid, n, kind: path.kind, centering, scale, values })
}
