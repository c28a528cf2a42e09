//! Experiment configuration and its validity rules.

use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::processes::Grid;

/// How randomness is treated across replicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Resample both the matrix and the environment every replicate.
    Annealed,
    /// Freeze one environment drawn from the master seed; resample the matrix.
    QuenchedOmega,
    /// Freeze one matrix (or weight vector / permutation); resample the
    /// environment.
    QuenchedU,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Annealed => "annealed",
            Mode::QuenchedOmega => "quenched-omega",
            Mode::QuenchedU => "quenched-u",
        }
    }
}

/// Which centered/scaled statistic an experiment simulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    /// sqrt(n) (deterministic first-column mass - s).
    OneParamDet,
    /// sqrt(n) (random first-column mass - s), both sources resampled.
    OneParamAnnealed,
    /// sqrt(n) (random first-column mass - S_s/n), environment frozen.
    OneParamQuenched,
    /// Deterministic truncation minus its mean; unnormalized for Haar,
    /// n^{-1/2} for permutations.
    DetTruncCentered,
    /// n^{-1/2} (random truncation - n s t) for Haar matrices.
    RandTruncAnnealed,
    /// Doubly centered random truncation (unnormalized), environment frozen.
    VQuenched,
    /// Subordinated truncation minus the count product, environment frozen.
    SubordinatedW,
    /// n^{-1/2} (random truncation - n s t) for permutations.
    PermutationAnnealed,
    /// n^{-1/2} (random truncation - count product), environment frozen.
    PermutationQuenched,
    /// Normalized empirical copula process for a frozen permutation.
    EmpiricalCopula,
    /// n^{-1/2} (random truncation - n s t) for the DFT matrix.
    DftAnnealed,
    /// One-parameter probe with a frozen weight vector (evidence only).
    ConjectureProbe1,
    /// Two-parameter probe with a frozen matrix (evidence only).
    ConjectureProbe2,
}

impl StatisticKind {
    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::OneParamDet => "one-param-det",
            StatisticKind::OneParamAnnealed => "one-param-annealed",
            StatisticKind::OneParamQuenched => "one-param-quenched",
            StatisticKind::DetTruncCentered => "det-trunc-centered",
            StatisticKind::RandTruncAnnealed => "rand-trunc-annealed",
            StatisticKind::VQuenched => "v-quenched",
            StatisticKind::SubordinatedW => "subordinated-w",
            StatisticKind::PermutationAnnealed => "permutation-annealed",
            StatisticKind::PermutationQuenched => "permutation-quenched",
            StatisticKind::EmpiricalCopula => "empirical-copula",
            StatisticKind::DftAnnealed => "dft-annealed",
            StatisticKind::ConjectureProbe1 => "conjecture-probe-1",
            StatisticKind::ConjectureProbe2 => "conjecture-probe-2",
        }
    }

    pub fn is_one_param(self) -> bool {
        matches!(
            self,
            StatisticKind::OneParamDet
                | StatisticKind::OneParamAnnealed
                | StatisticKind::OneParamQuenched
                | StatisticKind::ConjectureProbe1
        )
    }

    pub fn is_conjecture_probe(self) -> bool {
        matches!(self, StatisticKind::ConjectureProbe1 | StatisticKind::ConjectureProbe2)
    }

    /// The mode this statistic requires.
    pub fn required_mode(self) -> Mode {
        match self {
            StatisticKind::OneParamDet
            | StatisticKind::OneParamAnnealed
            | StatisticKind::DetTruncCentered
            | StatisticKind::RandTruncAnnealed
            | StatisticKind::PermutationAnnealed
            | StatisticKind::DftAnnealed => Mode::Annealed,
            StatisticKind::OneParamQuenched
            | StatisticKind::VQuenched
            | StatisticKind::SubordinatedW
            | StatisticKind::PermutationQuenched => Mode::QuenchedOmega,
            StatisticKind::EmpiricalCopula
            | StatisticKind::ConjectureProbe1
            | StatisticKind::ConjectureProbe2 => Mode::QuenchedU,
        }
    }

    fn ensemble_allowed(self, kind: EnsembleKind) -> bool {
        match self {
            StatisticKind::OneParamDet
            | StatisticKind::OneParamAnnealed
            | StatisticKind::OneParamQuenched
            | StatisticKind::RandTruncAnnealed
            | StatisticKind::VQuenched
            | StatisticKind::SubordinatedW
            | StatisticKind::ConjectureProbe1 => kind.is_haar(),
            StatisticKind::DetTruncCentered => kind.is_haar() || kind == EnsembleKind::Permutation,
            StatisticKind::PermutationAnnealed
            | StatisticKind::PermutationQuenched
            | StatisticKind::EmpiricalCopula => kind == EnsembleKind::Permutation,
            StatisticKind::DftAnnealed => kind == EnsembleKind::Dft,
            StatisticKind::ConjectureProbe2 => kind.is_haar() || kind == EnsembleKind::Dft,
        }
    }
}

/// An evaluation point: one-parameter statistics carry only `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
}

impl Point {
    pub fn one(s: f64) -> Self {
        Point { s, t: None }
    }

    pub fn two(s: f64, t: f64) -> Self {
        Point { s, t: Some(t) }
    }

    pub fn label(&self) -> String {
        match self.t {
            Some(t) => format!("({}, {})", self.s, t),
            None => format!("s={}", self.s),
        }
    }
}

/// Default interior evaluation points for two-parameter statistics.
pub fn default_points2() -> Vec<Point> {
    [(0.25, 0.25), (0.5, 0.5), (0.75, 0.75), (0.3, 0.7), (0.7, 0.4)]
        .into_iter()
        .map(|(s, t)| Point::two(s, t))
        .collect()
}

/// Default interior evaluation points for one-parameter statistics.
pub fn default_points1() -> Vec<Point> {
    [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().map(Point::one).collect()
}

pub const DEFAULT_GRID_M: usize = 20;
pub const DEFAULT_REPLICATES: usize = 2000;
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;
/// Batches used for the batch-means standard error of covariances.
pub const DEFAULT_BATCHES: usize = 20;

/// Full description of one Monte-Carlo experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    pub statistic: StatisticKind,
    pub mode: Mode,
    pub grid_m: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub test_points: Vec<Point>,
    pub z_threshold: f64,
    /// For the empirical-copula statistic: freeze the identity permutation
    /// instead of a seeded uniform draw.
    #[serde(default)]
    pub identity_permutation: bool,
}

impl ExperimentConfig {
    /// Standard config for a statistic: mode and default points derived.
    pub fn new(
        statistic: StatisticKind,
        ensemble: EnsembleSpec,
        replicates: usize,
        grid_m: usize,
        master_seed: u64,
    ) -> Self {
        let test_points =
            if statistic.is_one_param() { default_points1() } else { default_points2() };
        ExperimentConfig {
            ensemble,
            statistic,
            mode: statistic.required_mode(),
            grid_m,
            replicates,
            master_seed,
            test_points,
            z_threshold: DEFAULT_Z_THRESHOLD,
            identity_permutation: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble.n == 0 {
            return Err(Error::InvalidSize);
        }
        if self.mode != self.statistic.required_mode() {
            // The DFT matrix is deterministic, so freezing it is the same
            // experiment as the annealed run.
            let dft_alias = self.statistic == StatisticKind::DftAnnealed
                && self.mode == Mode::QuenchedU;
            if !dft_alias {
                return Err(Error::config(format!(
                    "statistic {} requires mode {}, got {}",
                    self.statistic.name(),
                    self.statistic.required_mode().name(),
                    self.mode.name()
                )));
            }
        }
        if !self.statistic.ensemble_allowed(self.ensemble.kind) {
            return Err(Error::config(format!(
                "statistic {} does not accept the {} ensemble",
                self.statistic.name(),
                self.ensemble.kind.name()
            )));
        }
        if self.replicates < 100 {
            return Err(Error::config("covariance experiments need at least 100 replicates"));
        }
        if !(self.z_threshold > 0.0) {
            return Err(Error::NotPositive { what: "z threshold", value: self.z_threshold });
        }
        if self.test_points.is_empty() {
            return Err(Error::config("at least one test point is required"));
        }
        let grid = Grid::new(self.grid_m)?;
        for p in &self.test_points {
            match (self.statistic.is_one_param(), p.t) {
                (true, None) => check_interior_on_grid(grid, p.s)?,
                (true, Some(_)) => {
                    return Err(Error::config(format!(
                        "one-parameter statistic takes s-only points, got {}",
                        p.label()
                    )))
                }
                (false, Some(t)) => {
                    check_interior_on_grid(grid, p.s)?;
                    check_interior_on_grid(grid, t)?;
                }
                (false, None) => {
                    return Err(Error::config(format!(
                        "two-parameter statistic needs (s, t) points, got {}",
                        p.label()
                    )))
                }
            }
        }
        Ok(())
    }
}

fn check_interior_on_grid(grid: Grid, c: f64) -> Result<()> {
    let k = grid.index_of(c)?;
    if k == 0 || k == grid.m() {
        return Err(Error::config(format!("test point coordinate {} must be interior", c)));
    }
    Ok(())
}
