//! Closed-form covariance kernels of the limit processes and grid samplers.
//!
//! Five kernels on [0,1] or [0,1]^2:
//!   bridge            s^t' - s s'                      (^ = min)
//!   bivariate-bridge  (s^s')(t^t') - s s' t t'
//!   tied-down-bridge  (s^s' - s s')(t^t' - t t')
//!   additive-bridge   s s'(t^t') + (s^s') t t' - 2 s s' t t'
//!   tensor-bridge     same covariance as tied-down-bridge, but the process
//!                     (a product of two independent bridges) is not Gaussian
//!
//! Samplers: `Constructive` builds paths from discrete Brownian bridges
//! (cumulative Gaussian increments with the endpoint subtracted);
//! `CholeskyOnGrid` factors the kernel on the interior grid points with a
//! small diagonal jitter, boundary points pinned to zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{Centering1, Centering2, Grid, GridPath1, GridPath2, PathScale, Stat1Kind, Stat2Kind};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Bridge,
    BivariateBridge,
    TiedDownBridge,
    AdditiveBridge,
    TensorBridge,
}

impl KernelKind {
    pub fn is_two_param(self) -> bool {
        !matches!(self, KernelKind::Bridge)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Bridge => "bridge",
            KernelKind::BivariateBridge => "bivariate-bridge",
            KernelKind::TiedDownBridge => "tied-down-bridge",
            KernelKind::AdditiveBridge => "additive-bridge",
            KernelKind::TensorBridge => "tensor-bridge",
        }
    }
}

/// A kernel together with a positive scalar prefactor.
#[derive(Clone, Copy, Debug)]
pub struct Kernel<T> {
    pub kind: KernelKind,
    pub prefactor: T,
}

fn check_coord<T: Scalar>(what: &'static str, x: T) -> Result<()> {
    if !(T::zero()..=T::one()).contains(&x) {
        return Err(Error::OutOfRange { what, value: x.to_f() });
    }
    Ok(())
}

impl<T: Scalar> Kernel<T> {
    pub fn new(kind: KernelKind, prefactor: T) -> Result<Self> {
        if !(prefactor > T::zero()) || !prefactor.is_finite() {
            return Err(Error::NotPositive { what: "kernel prefactor", value: prefactor.to_f() });
        }
        Ok(Kernel { kind, prefactor })
    }

    /// Evaluate at a pair of points; one-parameter kernels ignore t.
    pub fn eval(&self, p: (T, T), q: (T, T)) -> Result<T> {
        let (s, t) = p;
        let (s2, t2) = q;
        check_coord("s", s)?;
        check_coord("s'", s2)?;
        if self.kind.is_two_param() {
            check_coord("t", t)?;
            check_coord("t'", t2)?;
        }
        let bare = match self.kind {
            KernelKind::Bridge => s.min(s2) - s * s2,
            KernelKind::BivariateBridge => s.min(s2) * t.min(t2) - s * s2 * t * t2,
            KernelKind::TiedDownBridge | KernelKind::TensorBridge => {
                (s.min(s2) - s * s2) * (t.min(t2) - t * t2)
            }
            KernelKind::AdditiveBridge => {
                s * s2 * t.min(t2) + s.min(s2) * t * t2
                    - T::from_f(2.0) * s * s2 * t * t2
            }
        };
        Ok(bare * self.prefactor)
    }
}

/// Residual of the covariance identity
/// `bivariate-bridge = tied-down-bridge + additive-bridge` (unit prefactors);
/// identically zero up to rounding.
pub fn kernel_identity_residual<T: Scalar>(p: (T, T), q: (T, T)) -> Result<T> {
    let b00 = Kernel::new(KernelKind::BivariateBridge, T::one())?.eval(p, q)?;
    let tied = Kernel::new(KernelKind::TiedDownBridge, T::one())?.eval(p, q)?;
    let additive = Kernel::new(KernelKind::AdditiveBridge, T::one())?.eval(p, q)?;
    Ok(b00 - (tied + additive))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMethod {
    Constructive,
    CholeskyOnGrid,
}

const CHOLESKY_JITTER: f64 = 1e-12;

/// Lower-triangular Cholesky factor of a dense symmetric matrix.
fn cholesky<T: Scalar>(d: usize, a: &[T]) -> Result<Vec<T>> {
    let mut l = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(Error::numerical(format!(
                        "covariance matrix is not positive definite at pivot {} ({})",
                        i, sum
                    )));
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Discrete Brownian bridge on the grid: cumulative N(0, 1/m) increments
/// with the endpoint-proportional drift removed. Both endpoints are exactly
/// zero.
pub fn sample_bridge<T: Scalar, R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Vec<T> {
    let m = grid.m();
    let step = (T::one() / T::from_count(m)).sqrt();
    let mut walk = Vec::with_capacity(m + 1);
    walk.push(T::zero());
    let mut acc = T::zero();
    for _ in 0..m {
        acc += T::standard_normal(rng) * step;
        walk.push(acc);
    }
    let last = walk[m];
    (0..=m).map(|k| walk[k] - grid.point::<T>(k) * last).collect()
}

/// Sampler for a limit process on a fixed grid. The Cholesky factor is
/// computed once at construction and shared read-only afterwards.
pub struct LimitSampler<T> {
    kernel: Kernel<T>,
    grid: Grid,
    method: SamplerMethod,
    /// Lower factor over the interior points, for the Cholesky method.
    factor: Option<Vec<T>>,
    interior: Vec<(usize, usize)>,
}

impl<T: Scalar> LimitSampler<T> {
    pub fn new(kernel: Kernel<T>, grid: Grid, method: SamplerMethod) -> Result<Self> {
        match (kernel.kind, method) {
            (KernelKind::TensorBridge, SamplerMethod::CholeskyOnGrid) => {
                return Err(Error::config(
                    "the tensor-bridge process is not Gaussian; a Cholesky sampler would \
                     produce the wrong law",
                ));
            }
            (KernelKind::BivariateBridge | KernelKind::TiedDownBridge, SamplerMethod::Constructive) => {
                return Err(Error::config(format!(
                    "no constructive sampler for {}; use cholesky-on-grid",
                    kernel.kind.name()
                )));
            }
            _ => {}
        }

        let mut interior = Vec::new();
        let m = grid.m();
        if method == SamplerMethod::CholeskyOnGrid {
            if kernel.kind.is_two_param() {
                for k in 1..m {
                    for l in 1..m {
                        interior.push((k, l));
                    }
                }
            } else {
                for k in 1..m {
                    interior.push((k, 0));
                }
            }
            let d = interior.len();
            let mut cov = vec![T::zero(); d * d];
            for (a, &(k, l)) in interior.iter().enumerate() {
                let p = (grid.point::<T>(k), grid.point::<T>(l));
                for (b, &(k2, l2)) in interior.iter().enumerate().take(a + 1) {
                    let q = (grid.point::<T>(k2), grid.point::<T>(l2));
                    let v = kernel.eval(p, q)?;
                    cov[a * d + b] = v;
                    cov[b * d + a] = v;
                }
            }
            let jitter = T::from_f(CHOLESKY_JITTER);
            for i in 0..d {
                cov[i * d + i] += jitter;
            }
            let factor = cholesky(d, &cov)?;
            return Ok(LimitSampler { kernel, grid, method, factor: Some(factor), interior });
        }

        Ok(LimitSampler { kernel, grid, method, factor: None, interior })
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Sample a one-parameter limit path (bridge kernel only).
    pub fn sample_path1<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GridPath1<T>> {
        if self.kernel.kind.is_two_param() {
            return Err(Error::config("kernel is two-parameter; use sample_path2"));
        }
        let amp = self.kernel.prefactor.sqrt();
        let values = match self.method {
            SamplerMethod::Constructive => {
                sample_bridge::<T, R>(&self.grid, rng).into_iter().map(|v| v * amp).collect()
            }
            SamplerMethod::CholeskyOnGrid => {
                let mut values = vec![T::zero(); self.grid.num_points()];
                // Prefactor is baked into the factored covariance.
                for (v, (k, _)) in self.gaussian_interior(rng).into_iter().zip(&self.interior) {
                    values[*k] = v;
                }
                values
            }
        };
        Ok(GridPath1 {
            grid: self.grid,
            n: 0,
            kind: Stat1Kind::LimitSample,
            centering: Centering1::None,
            scale: PathScale::One,
            values,
        })
    }

    /// Sample a two-parameter limit path.
    pub fn sample_path2<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GridPath2<T>> {
        if !self.kernel.kind.is_two_param() {
            return Err(Error::config("kernel is one-parameter; use sample_path1"));
        }
        let np = self.grid.num_points();
        let amp = self.kernel.prefactor.sqrt();
        let mut values = vec![T::zero(); np * np];
        match self.method {
            SamplerMethod::Constructive => {
                let first = sample_bridge::<T, R>(&self.grid, rng);
                let second = sample_bridge::<T, R>(&self.grid, rng);
                match self.kernel.kind {
                    KernelKind::AdditiveBridge => {
                        // s B(t) + t B'(s).
                        for k in 0..np {
                            let s = self.grid.point::<T>(k);
                            for l in 0..np {
                                let t = self.grid.point::<T>(l);
                                values[k * np + l] = (s * first[l] + t * second[k]) * amp;
                            }
                        }
                    }
                    KernelKind::TensorBridge => {
                        for k in 0..np {
                            for l in 0..np {
                                values[k * np + l] = first[k] * second[l] * amp;
                            }
                        }
                    }
                    _ => unreachable!("rejected at construction"),
                }
            }
            SamplerMethod::CholeskyOnGrid => {
                for (v, &(k, l)) in self.gaussian_interior(rng).into_iter().zip(&self.interior) {
                    values[k * np + l] = v;
                }
            }
        }
        Ok(GridPath2 {
            grid: self.grid,
            n: 0,
            kind: Stat2Kind::LimitSample,
            centering: Centering2::None,
            scale: PathScale::One,
            values,
        })
    }

    fn gaussian_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let factor = self.factor.as_ref().expect("cholesky factor present");
        let d = self.interior.len();
        let z: Vec<T> = (0..d).map(|_| T::standard_normal(rng)).collect();
        let mut out = vec![T::zero(); d];
        for i in 0..d {
            let mut acc = T::zero();
            for k in 0..=i {
                acc += factor[i * d + k] * z[k];
            }
            out[i] = acc;
        }
        out
    }
}
