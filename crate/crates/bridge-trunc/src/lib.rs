//! Simulation and statistical verification of deterministic and random
//! truncations of unitary, orthogonal, DFT and permutation matrices.
//!
//! The crate samples the four matrix models, extracts one- and two-parameter
//! truncation statistics as grid paths, and checks their empirical moments
//! against the closed-form covariance kernels of the corresponding Gaussian
//! limit processes, in annealed and quenched regimes. The numeric core is
//! generic over the floating-point scalar; `f64` aliases are provided at the
//! crate root and are what the CLI and the acceptance suite use.

pub mod ensembles;
pub mod environment;
pub mod error;
pub mod limits;
pub mod numerics;
pub mod processes;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// f64 instantiations of the core types.
pub type GenericMatrix64 = ensembles::GenericMatrix<f64>;
pub type WeightMatrix64 = ensembles::WeightMatrix<f64>;
pub type Environment64 = environment::Environment<f64>;
pub type SortedEnvironment64 = environment::SortedEnvironment<f64>;
pub type PrefixGrid64 = processes::PrefixGrid<f64>;
pub type GridPath1of64 = processes::GridPath1<f64>;
pub type GridPath2of64 = processes::GridPath2<f64>;
pub type Kernel64 = limits::Kernel<f64>;
pub type LimitSampler64 = limits::LimitSampler<f64>;

/// f32 instantiations for cheap exploratory runs.
pub type WeightMatrix32 = ensembles::WeightMatrix<f32>;
pub type Environment32 = environment::Environment<f32>;
pub type GridPath2of32 = processes::GridPath2<f32>;
pub type Kernel32 = limits::Kernel<f32>;
