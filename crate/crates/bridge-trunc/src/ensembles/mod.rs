//! The four matrix models and their squared-modulus weight matrices.
//!
//! Haar unitary and orthogonal matrices are sampled by Gaussian fill + QR
//! with a diagonal phase correction (see [`qr`]). The DFT matrix is
//! deterministic, permutations are kept in sparse index form, and the first
//! column of a Haar matrix has a direct Dirichlet sampler that avoids the
//! O(n^3) factorization entirely.

mod qr;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which matrix model a sample comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    HaarUnitary,
    HaarOrthogonal,
    Dft,
    Permutation,
}

impl EnsembleKind {
    /// Ensemble parameter scaling the limit variances: 1 for unitary, 1/2
    /// for orthogonal, undefined for the other models.
    pub fn beta_prime(self) -> Option<f64> {
        match self {
            EnsembleKind::HaarUnitary => Some(1.0),
            EnsembleKind::HaarOrthogonal => Some(0.5),
            EnsembleKind::Dft | EnsembleKind::Permutation => None,
        }
    }

    pub fn is_haar(self) -> bool {
        matches!(self, EnsembleKind::HaarUnitary | EnsembleKind::HaarOrthogonal)
    }

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::HaarUnitary => "unitary",
            EnsembleKind::HaarOrthogonal => "orthogonal",
            EnsembleKind::Dft => "dft",
            EnsembleKind::Permutation => "permutation",
        }
    }
}

/// A matrix model together with its size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        Ok(EnsembleSpec { kind, n })
    }

    pub fn beta_prime(&self) -> Option<f64> {
        self.kind.beta_prime()
    }
}

enum Repr<T> {
    Complex(Vec<Complex<T>>),
    Real(Vec<T>),
    /// Row i carries its single unit entry in column `sigma[i]`.
    Permutation(Vec<usize>),
}

/// A sampled (or deterministic) matrix from one of the ensembles.
///
/// Dense storage is column-major; permutations stay sparse.
pub struct GenericMatrix<T> {
    n: usize,
    kind: EnsembleKind,
    repr: Repr<T>,
}

impl<T: Scalar> GenericMatrix<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// Squared modulus of entry (i, j), zero-based.
    pub fn entry_sq_modulus(&self, i: usize, j: usize) -> T {
        match &self.repr {
            Repr::Complex(data) => {
                let z = data[j * self.n + i];
                z.re * z.re + z.im * z.im
            }
            Repr::Real(data) => {
                let x = data[j * self.n + i];
                x * x
            }
            Repr::Permutation(sigma) => {
                if sigma[i] == j {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// The permutation indices when this is a permutation matrix.
    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Permutation(sigma) => Some(sigma),
            _ => None,
        }
    }

    /// Max-abs deviation of `M* M` from the identity. O(n^3) for dense
    /// representations, exact for permutations.
    pub fn unitarity_defect(&self) -> T {
        let n = self.n;
        match &self.repr {
            Repr::Permutation(sigma) => {
                let mut seen = vec![false; n];
                for &j in sigma {
                    if j >= n || seen[j] {
                        return T::one();
                    }
                    seen[j] = true;
                }
                T::zero()
            }
            Repr::Complex(data) => {
                let mut worst = T::zero();
                for j in 0..n {
                    for l in j..n {
                        let mut re = T::zero();
                        let mut im = T::zero();
                        let cj = &data[j * n..(j + 1) * n];
                        let cl = &data[l * n..(l + 1) * n];
                        for i in 0..n {
                            let a = cj[i];
                            let b = cl[i];
                            re += a.re * b.re + a.im * b.im;
                            im += a.re * b.im - a.im * b.re;
                        }
                        if j == l {
                            re -= T::one();
                        }
                        let mag = (re * re + im * im).sqrt();
                        if mag > worst {
                            worst = mag;
                        }
                    }
                }
                worst
            }
            Repr::Real(data) => {
                let mut worst = T::zero();
                for j in 0..n {
                    for l in j..n {
                        let mut dot = T::zero();
                        let cj = &data[j * n..(j + 1) * n];
                        let cl = &data[l * n..(l + 1) * n];
                        for i in 0..n {
                            dot += cj[i] * cl[i];
                        }
                        if j == l {
                            dot -= T::one();
                        }
                        let mag = dot.abs();
                        if mag > worst {
                            worst = mag;
                        }
                    }
                }
                worst
            }
        }
    }

    /// Cheap O(n^2) consistency check: unit column norms plus orthogonality
    /// of adjacent column pairs. Full unitarity is checked separately where
    /// the budget allows.
    fn quick_unitarity_defect(&self) -> T {
        let n = self.n;
        match &self.repr {
            Repr::Permutation(_) => self.unitarity_defect(),
            Repr::Complex(data) => {
                let mut worst = T::zero();
                for j in 0..n {
                    let cj = &data[j * n..(j + 1) * n];
                    let mut norm = T::zero();
                    for z in cj {
                        norm += z.re * z.re + z.im * z.im;
                    }
                    worst = worst.max((norm - T::one()).abs());
                    if j + 1 < n {
                        let cl = &data[(j + 1) * n..(j + 2) * n];
                        let mut re = T::zero();
                        let mut im = T::zero();
                        for i in 0..n {
                            re += cj[i].re * cl[i].re + cj[i].im * cl[i].im;
                            im += cj[i].re * cl[i].im - cj[i].im * cl[i].re;
                        }
                        worst = worst.max((re * re + im * im).sqrt());
                    }
                }
                worst
            }
            Repr::Real(data) => {
                let mut worst = T::zero();
                for j in 0..n {
                    let cj = &data[j * n..(j + 1) * n];
                    let mut norm = T::zero();
                    for x in cj {
                        norm += *x * *x;
                    }
                    worst = worst.max((norm - T::one()).abs());
                    if j + 1 < n {
                        let cl = &data[(j + 1) * n..(j + 2) * n];
                        let mut dot = T::zero();
                        for i in 0..n {
                            dot += cj[i] * cl[i];
                        }
                        worst = worst.max(dot.abs());
                    }
                }
                worst
            }
        }
    }
}

/// Doubly stochastic matrix of squared moduli, row-major.
pub struct WeightMatrix<T> {
    n: usize,
    w: Vec<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    /// Wrap raw row-major weights after validating the doubly stochastic
    /// invariant.
    pub fn new(n: usize, w: Vec<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        if w.len() != n * n {
            return Err(Error::contract(format!(
                "weight buffer has {} entries, expected {}",
                w.len(),
                n * n
            )));
        }
        let m = WeightMatrix { n, w };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn first_column(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, 0)).collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.n];
        for i in 0..self.n {
            for (j, s) in sums.iter_mut().enumerate() {
                *s += self.get(i, j);
            }
        }
        sums
    }

    /// Nonnegativity plus row/column sums equal to one within tolerance.
    pub fn validate(&self) -> Result<()> {
        let tol = T::stochasticity_tol();
        if self.w.iter().any(|&x| x < T::zero()) {
            return Err(Error::contract("weight matrix has a negative entry"));
        }
        for (i, s) in self.row_sums().into_iter().enumerate() {
            if (s - T::one()).abs() > tol {
                return Err(Error::contract(format!(
                    "row {} sums to {} (deviation beyond tolerance)",
                    i, s
                )));
            }
        }
        for (j, s) in self.col_sums().into_iter().enumerate() {
            if (s - T::one()).abs() > tol {
                return Err(Error::contract(format!(
                    "column {} sums to {} (deviation beyond tolerance)",
                    j, s
                )));
            }
        }
        Ok(())
    }
}

/// Sample a Haar unitary or orthogonal matrix.
pub fn sample_haar<T: Scalar, R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    rng: &mut R,
) -> Result<GenericMatrix<T>> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    match spec.kind {
        EnsembleKind::HaarUnitary => Ok(GenericMatrix {
            n,
            kind: spec.kind,
            repr: Repr::Complex(qr::haar_q::<Complex<T>, R>(n, rng)),
        }),
        EnsembleKind::HaarOrthogonal => Ok(GenericMatrix {
            n,
            kind: spec.kind,
            repr: Repr::Real(qr::haar_q::<T, R>(n, rng)),
        }),
        other => Err(Error::contract(format!(
            "sample_haar expects a Haar ensemble, got {:?}",
            other
        ))),
    }
}

/// The unitary discrete Fourier transform matrix: entry (j, k) equals
/// `n^{-1/2} exp(-2 pi i (j-1)(k-1) / n)` in one-based indexing.
pub fn dft_matrix<T: Scalar>(n: usize) -> Result<GenericMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let scale = T::from_f(1.0 / (n as f64).sqrt());
    let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
    for k in 0..n {
        for j in 0..n {
            // Reduce the exponent mod n to keep the argument small.
            let e = (j * k) % n;
            let angle = -2.0 * std::f64::consts::PI * (e as f64) / (n as f64);
            data[k * n + j] =
                Complex::new(T::from_f(angle.cos()) * scale, T::from_f(angle.sin()) * scale);
        }
    }
    Ok(GenericMatrix { n, kind: EnsembleKind::Dft, repr: Repr::Complex(data) })
}

/// Uniformly random permutation in sparse form (Fisher-Yates shuffle).
pub fn sample_permutation<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<GenericMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(rng);
    Ok(GenericMatrix { n, kind: EnsembleKind::Permutation, repr: Repr::Permutation(sigma) })
}

/// Squared moduli of a matrix that satisfies the unitarity invariant.
pub fn squared_moduli<T: Scalar>(m: &GenericMatrix<T>) -> Result<WeightMatrix<T>> {
    let defect = m.quick_unitarity_defect();
    if defect > T::unitarity_tol() {
        return Err(Error::contract(format!(
            "input matrix is not unitary: defect {}",
            defect
        )));
    }
    let n = m.n;
    let mut w = vec![T::zero(); n * n];
    match &m.repr {
        Repr::Permutation(sigma) => {
            for (i, &j) in sigma.iter().enumerate() {
                w[i * n + j] = T::one();
            }
        }
        Repr::Complex(data) => {
            for j in 0..n {
                for i in 0..n {
                    let z = data[j * n + i];
                    w[i * n + j] = z.re * z.re + z.im * z.im;
                }
            }
        }
        Repr::Real(data) => {
            for j in 0..n {
                for i in 0..n {
                    let x = data[j * n + i];
                    w[i * n + j] = x * x;
                }
            }
        }
    }
    WeightMatrix::new(n, w)
}

/// First-column weights of a Haar matrix, sampled directly: n independent
/// Gamma(beta', 1) variables normalized by their sum, i.e. the symmetric
/// Dirichlet distribution on the simplex.
pub fn sample_first_column_weights<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    beta_prime: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    if !(beta_prime > T::zero()) || !beta_prime.is_finite() {
        return Err(Error::NotPositive { what: "beta'", value: beta_prime.to_f() });
    }
    if n == 1 {
        return Ok(vec![T::one()]);
    }
    loop {
        let gammas: Vec<T> = (0..n).map(|_| T::standard_gamma(beta_prime, rng)).collect();
        let total: T = gammas.iter().copied().sum();
        if total > T::zero() {
            return Ok(gammas.into_iter().map(|g| g / total).collect());
        }
        // All-zero draw has measure zero but is representable in floats.
    }
}
