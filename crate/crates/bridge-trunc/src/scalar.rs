//! Scalar abstraction for the numeric core.
//!
//! Everything downstream (ensembles, paths, kernels, the experiment engine)
//! is generic over a floating-point scalar. `f64` is the default used by the
//! CLI and the verification suites; `f32` is available for cheap exploratory
//! runs with correspondingly looser tolerances.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, AddAssign, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StandardUniform};

/// A dense matrix entry: either the scalar itself (real matrices) or a
/// complex number over it.
pub trait Entry:
    Copy
    + Send
    + Sync
    + 'static
    + num_traits::Zero
    + num_traits::One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    type Real: Scalar;

    fn conj(self) -> Self;
    fn scale(self, r: Self::Real) -> Self;
    fn norm_sqr(self) -> Self::Real;
    /// `self / |self|`, or one when `self` vanishes.
    fn phase_or_one(self) -> Self;
    /// Standard Gaussian entry: N(0,1) real, or independent N(0,1/2) real
    /// and imaginary parts in the complex case.
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl<T: Scalar> Entry for Complex<T> {
    type Real = T;

    #[inline]
    fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    #[inline]
    fn scale(self, r: T) -> Self {
        Complex::new(self.re * r, self.im * r)
    }

    #[inline]
    fn norm_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }

    fn phase_or_one(self) -> Self {
        let m = Entry::norm_sqr(self).sqrt();
        if m == T::zero() {
            num_traits::One::one()
        } else {
            Entry::scale(self, T::one() / m)
        }
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let half = T::from_f(std::f64::consts::FRAC_1_SQRT_2);
        Complex::new(T::standard_normal(rng) * half, T::standard_normal(rng) * half)
    }
}

/// Floating-point scalar with the sampling hooks the simulators need.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Display
    + LowerExp
    + Debug
    + Default
    + Send
    + Sync
    + 'static
    + Entry<Real = Self>
{
    /// Draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from the uniform distribution on [0, 1).
    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from Gamma(shape, 1). `shape` must be positive and finite.
    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;

    /// Max-abs tolerance for `U*U = I` checks on sampled matrices.
    fn unitarity_tol() -> Self;

    /// Tolerance for row/column sums of squared-modulus weight matrices.
    fn stochasticity_tol() -> Self;

    /// Tolerance for the two-route agreement check of the interaction path.
    fn route_agreement_tol() -> Self;

    fn from_f(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable in this scalar")
    }

    fn from_count(k: usize) -> Self {
        <Self as FromPrimitive>::from_usize(k).expect("count is representable in this scalar")
    }

    fn to_f(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $unit_tol:expr, $stoch_tol:expr, $route_tol:expr) => {
        impl Entry for $t {
            type Real = $t;

            #[inline]
            fn conj(self) -> Self {
                self
            }

            #[inline]
            fn scale(self, r: Self) -> Self {
                self * r
            }

            #[inline]
            fn norm_sqr(self) -> Self {
                self * self
            }

            fn phase_or_one(self) -> Self {
                if self < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }

            fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }
        }

        impl Scalar for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardUniform.sample(rng)
            }

            fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                Gamma::new(shape, 1.0).expect("positive gamma shape").sample(rng)
            }

            fn unitarity_tol() -> Self {
                $unit_tol
            }

            fn stochasticity_tol() -> Self {
                $stoch_tol
            }

            fn route_agreement_tol() -> Self {
                $route_tol
            }
        }
    };
}

impl_scalar!(f64, 1e-10, 1e-12, 1e-8);
impl_scalar!(f32, 1e-4, 1e-5, 1e-3);
