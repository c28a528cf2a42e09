//! Moment probes, conjecture probes and the total-variance consistency
//! check.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    sample_first_column_weights, sample_haar, sample_permutation, squared_moduli, EnsembleKind,
    EnsembleSpec,
};
use crate::environment::{product_count_variance, sample_environment};
use crate::error::{Error, Result};
use crate::numerics::fmt_float;
use crate::processes::{interaction_path, Grid};
use crate::rng::{stream_rng, LANE_AUX, LANE_ENV, LANE_FIXED, LANE_MATRIX};
use crate::scalar::Scalar;
use crate::stats::config::{ExperimentConfig, Point, StatisticKind, DEFAULT_BATCHES};
use crate::stats::engine::{run_experiment, CONJECTURE_BANNER};
use crate::stats::moments::empirical_moments;
use crate::stats::report::{ExperimentReport, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    /// `n * sum_i w_i^2` of first-column weights; exact finite-n mean known.
    FourthMoment,
    /// `n^2 * sum_i w_i^3`; exact finite-n mean known.
    SixthMoment,
    /// Gaussian quadratic form of the doubly centered weight matrix.
    QuadraticForm,
    /// Variance of the count product `S_s S'_t / n` vs the closed form.
    ConditionalVariance,
    /// Sixth moments of the interaction path across a small level sweep.
    TightnessSixth,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::FourthMoment => "fourth-moment",
            ProbeKind::SixthMoment => "sixth-moment",
            ProbeKind::QuadraticForm => "quadratic-form",
            ProbeKind::ConditionalVariance => "conditional-variance",
            ProbeKind::TightnessSixth => "tightness-sixth",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "fourth-moment" => Ok(ProbeKind::FourthMoment),
            "sixth-moment" => Ok(ProbeKind::SixthMoment),
            "quadratic-form" => Ok(ProbeKind::QuadraticForm),
            "conditional-variance" => Ok(ProbeKind::ConditionalVariance),
            "tightness-sixth" => Ok(ProbeKind::TightnessSixth),
            other => Err(Error::config(format!("unknown probe kind '{}'", other))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub ensemble: EnsembleSpec,
    pub replicates: usize,
    pub master_seed: u64,
    /// Level pair for the conditional-variance probe.
    #[serde(default)]
    pub point: Option<Point>,
    pub z_threshold: f64,
}

impl ProbeConfig {
    pub fn new(kind: ProbeKind, ensemble: EnsembleSpec, replicates: usize, master_seed: u64) -> Self {
        ProbeConfig { kind, ensemble, replicates, master_seed, point: None, z_threshold: 4.0 }
    }

    fn validate(&self) -> Result<()> {
        let needs_haar = matches!(
            self.kind,
            ProbeKind::FourthMoment
                | ProbeKind::SixthMoment
                | ProbeKind::QuadraticForm
                | ProbeKind::TightnessSixth
        );
        if needs_haar && !self.ensemble.kind.is_haar() {
            return Err(Error::config(format!(
                "probe {} needs a Haar ensemble",
                self.kind.name()
            )));
        }
        if self.replicates < 100 {
            return Err(Error::config("probes need at least 100 replicates"));
        }
        if let Some(p) = &self.point {
            let t = p.t.unwrap_or(f64::NAN);
            if !(0.0..=1.0).contains(&p.s) || !(0.0..=1.0).contains(&t) {
                return Err(Error::config("probe point must lie in the unit square"));
            }
        }
        Ok(())
    }
}

/// One estimate of the tightness sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TightnessRow {
    pub s: f64,
    pub t: f64,
    pub sixth_moment: f64,
    pub se: f64,
    /// `sixth_moment / max(s, t)^3`, the quantity that must stay bounded.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub config: ProbeConfig,
    pub estimate: f64,
    pub se: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_finite_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_limit: Option<f64>,
    pub z: f64,
    pub rows: Vec<TightnessRow>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("probe,ensemble,n,point,estimate,se,target,score,note\n");
        let kind = self.config.kind.name();
        let ens = self.config.ensemble.kind.name();
        let n = self.config.ensemble.n;
        if self.rows.is_empty() {
            let point = self
                .config
                .point
                .map(|p| format!("{}:{}", p.s, p.t.unwrap_or(f64::NAN)))
                .unwrap_or_default();
            out.push_str(&format!(
                "{kind},{ens},{n},{point},{},{},{},{},{:?}\n",
                fmt_float(self.estimate),
                fmt_float(self.se),
                self.target_finite_n.map(fmt_float).unwrap_or_default(),
                fmt_float(self.z),
                self.verdict,
            ));
        } else {
            for row in &self.rows {
                out.push_str(&format!(
                    "{kind},{ens},{n},{}:{},{},{},{},{},bounded-ratio\n",
                    row.s,
                    row.t,
                    fmt_float(row.sixth_moment),
                    fmt_float(row.se),
                    fmt_float(row.s.max(row.t).powi(3)),
                    fmt_float(row.ratio),
                ));
            }
        }
        out
    }
}

/// Exact finite-n mean of `n * sum w_i^2` for symmetric Dirichlet weights.
fn fourth_moment_target(beta_prime: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf * (beta_prime + 1.0) / (nf * beta_prime + 1.0)
}

/// Exact finite-n mean of `n^2 * sum w_i^3`.
fn sixth_moment_target(beta_prime: f64, n: usize) -> f64 {
    let nf = n as f64;
    let b = beta_prime;
    nf * nf * nf * b * (b + 1.0) * (b + 2.0)
        / (nf * b * (nf * b + 1.0) * (nf * b + 2.0))
}

/// Exact finite-n mean of the Gaussian quadratic form: `n^2 E w^2 - 1`.
fn quadratic_form_target(beta_prime: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf * (beta_prime + 1.0) / (nf * beta_prime + 1.0) - 1.0
}

const TIGHTNESS_SWEEP: [(f64, f64); 6] =
    [(0.05, 0.05), (0.1, 0.1), (0.1, 0.2), (0.25, 0.25), (0.5, 0.5), (0.75, 0.6)];

/// Run a moment probe: Monte-Carlo estimate with standard error against the
/// exact finite-n target (and the limit value for context).
pub fn moment_probe<T: Scalar>(cfg: &ProbeConfig) -> Result<ProbeReport> {
    let start = Instant::now();
    cfg.validate()?;
    let n = cfg.ensemble.n;
    let seed = cfg.master_seed;
    let mut notes = Vec::new();

    let (values, target_fin, target_lim, rows): (Vec<Vec<f64>>, Option<f64>, Option<f64>, Vec<TightnessRow>) =
        match cfg.kind {
            ProbeKind::FourthMoment | ProbeKind::SixthMoment => {
                let bp = cfg.ensemble.beta_prime().expect("haar");
                let sixth = cfg.kind == ProbeKind::SixthMoment;
                if sixth && cfg.replicates < 10_000 {
                    notes.push(
                        "sixth-moment estimates are noisy below 10^4 replicates".to_string(),
                    );
                }
                let values: Vec<Vec<f64>> = (0..cfg.replicates as u64)
                    .into_par_iter()
                    .map(|r| -> Result<Vec<f64>> {
                        let mut rng = stream_rng(seed, LANE_MATRIX, r);
                        let w =
                            sample_first_column_weights::<T, _>(n, T::from_f(bp), &mut rng)?;
                        let stat = if sixth {
                            let s: f64 = w.iter().map(|&x| x.to_f().powi(3)).sum();
                            (n as f64) * (n as f64) * s
                        } else {
                            let s: f64 = w.iter().map(|&x| x.to_f() * x.to_f()).sum();
                            (n as f64) * s
                        };
                        Ok(vec![stat])
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (fin, lim) = if sixth {
                    (sixth_moment_target(bp, n), (1.0 + 1.0 / bp) * (1.0 + 2.0 / bp))
                } else {
                    (fourth_moment_target(bp, n), 1.0 + 1.0 / bp)
                };
                (values, Some(fin), Some(lim), vec![])
            }
            ProbeKind::QuadraticForm => {
                let bp = cfg.ensemble.beta_prime().expect("haar");
                let values: Vec<Vec<f64>> = (0..cfg.replicates as u64)
                    .into_par_iter()
                    .map(|r| -> Result<Vec<f64>> {
                        let mut mrng = stream_rng(seed, LANE_MATRIX, r);
                        let u = sample_haar::<T, _>(&cfg.ensemble, &mut mrng)?;
                        let w = squared_moduli(&u)?;
                        let mut arng = stream_rng(seed, LANE_AUX, r);
                        let x: Vec<f64> =
                            (0..n).map(|_| T::standard_normal(&mut arng).to_f()).collect();
                        let x_sum: f64 = x.iter().sum();
                        // ||V^T X||^2 with V = W - 1/n, column by column.
                        let mut q = 0.0f64;
                        for j in 0..n {
                            let mut col = 0.0f64;
                            for i in 0..n {
                                col += w.get(i, j).to_f() * x[i];
                            }
                            col -= x_sum / n as f64;
                            q += col * col;
                        }
                        Ok(vec![q])
                    })
                    .collect::<Result<Vec<_>>>()?;
                (values, Some(quadratic_form_target(bp, n)), Some(1.0 / bp), vec![])
            }
            ProbeKind::ConditionalVariance => {
                let point = cfg.point.unwrap_or(Point::two(0.5, 0.5));
                let (s, t) = (point.s, point.t.unwrap_or(0.5));
                let values: Vec<Vec<f64>> = (0..cfg.replicates as u64)
                    .into_par_iter()
                    .map(|r| -> Result<Vec<f64>> {
                        let mut erng = stream_rng(seed, LANE_ENV, r);
                        let env = sample_environment::<T, _>(n, &mut erng)?;
                        let s_count = crate::environment::counting(env.row_marks(), T::from_f(s))?;
                        let t_count = crate::environment::counting(env.col_marks(), T::from_f(t))?;
                        Ok(vec![(s_count * t_count) as f64 / n as f64])
                    })
                    .collect::<Result<Vec<_>>>()?;
                let exact = product_count_variance::<f64>(n, s, t)?;
                (values, Some(exact), None, vec![])
            }
            ProbeKind::TightnessSixth => {
                if cfg.replicates < 10_000 {
                    notes.push(
                        "sixth-moment estimates are noisy below 10^4 replicates".to_string(),
                    );
                }
                let grid = Grid::new(20)?;
                let idx: Vec<(usize, usize)> = TIGHTNESS_SWEEP
                    .iter()
                    .map(|&(s, t)| Ok((grid.index_of(s)?, grid.index_of(t)?)))
                    .collect::<Result<_>>()?;
                let values: Vec<Vec<f64>> = (0..cfg.replicates as u64)
                    .into_par_iter()
                    .map(|r| -> Result<Vec<f64>> {
                        let mut mrng = stream_rng(seed, LANE_MATRIX, r);
                        let u = sample_haar::<T, _>(&cfg.ensemble, &mut mrng)?;
                        let w = squared_moduli(&u)?;
                        let mut erng = stream_rng(seed, LANE_ENV, r);
                        let env = sample_environment::<T, _>(n, &mut erng)?;
                        let path = interaction_path(&w, &env, &grid)?;
                        Ok(idx
                            .iter()
                            .map(|&(k, l)| path.value(k, l).to_f().powi(6))
                            .collect())
                    })
                    .collect::<Result<Vec<_>>>()?;
                let moments = empirical_moments(&values, DEFAULT_BATCHES)?;
                let rows: Vec<TightnessRow> = TIGHTNESS_SWEEP
                    .iter()
                    .enumerate()
                    .map(|(i, &(s, t))| TightnessRow {
                        s,
                        t,
                        sixth_moment: moments.means[i],
                        se: moments.mean_ses[i],
                        ratio: moments.means[i] / s.max(t).powi(3),
                    })
                    .collect();
                (values, None, None, rows)
            }
        };

    if cfg.kind == ProbeKind::TightnessSixth {
        let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
        notes.push(format!("max ratio over the sweep: {}", fmt_float(max_ratio)));
        return Ok(ProbeReport {
            config: cfg.clone(),
            estimate: max_ratio,
            se: 0.0,
            target_finite_n: None,
            target_limit: None,
            z: 0.0,
            rows,
            notes,
            verdict: Verdict::EvidenceOnly,
            runtime_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let moments = empirical_moments(&values, DEFAULT_BATCHES)?;
    let (estimate, se) = if cfg.kind == ProbeKind::ConditionalVariance {
        let c = moments.covariance(0, 0).expect("variance");
        (c.value, c.se)
    } else {
        (moments.means[0], moments.mean_ses[0])
    };
    let target = target_fin.expect("finite-n target");
    let z = if se > 0.0 { (estimate - target) / se } else { 0.0 };
    let verdict = if z.abs() <= cfg.z_threshold { Verdict::Pass } else { Verdict::Fail };
    Ok(ProbeReport {
        config: cfg.clone(),
        estimate,
        se,
        target_finite_n: target_fin,
        target_limit: target_lim,
        z,
        rows: vec![],
        notes,
        verdict,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Full conjecture-probe output: one experiment per matrix size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub which: u8,
    pub banner: String,
    pub reports: Vec<ExperimentReport>,
}

impl ConjectureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per n: the z-score trajectory.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,comparisons,max_abs_z,note\n");
        for r in &self.reports {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.config.ensemble.n,
                r.comparisons,
                fmt_float(r.max_abs_z),
                CONJECTURE_BANNER
            ));
        }
        out
    }
}

/// Run conjecture probe 1 or 2 across a sweep of matrix sizes.
pub fn conjecture_probe<T: Scalar>(
    which: u8,
    kind: EnsembleKind,
    ns: &[usize],
    replicates: usize,
    master_seed: u64,
) -> Result<ConjectureReport> {
    let statistic = match which {
        1 => StatisticKind::ConjectureProbe1,
        2 => StatisticKind::ConjectureProbe2,
        other => return Err(Error::config(format!("no conjecture probe {}", other))),
    };
    if ns.is_empty() {
        return Err(Error::config("the size sweep must not be empty"));
    }
    let mut reports = Vec::with_capacity(ns.len());
    for &n in ns {
        let config = ExperimentConfig::new(
            statistic,
            EnsembleSpec::new(kind, n)?,
            replicates,
            crate::stats::config::DEFAULT_GRID_M,
            master_seed,
        );
        reports.push(run_experiment::<T>(&config)?);
    }
    Ok(ConjectureReport { which, banner: CONJECTURE_BANNER.to_string(), reports })
}

/// Law-of-total-variance consistency check on the raw random truncation of
/// permutation matrices at one point: the annealed variance must equal the
/// average quenched variance plus the exact variance of the conditional
/// mean.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TotalVarianceReport {
    pub n: usize,
    pub point: Point,
    pub total_variance: f64,
    pub total_se: f64,
    pub mean_conditional_variance: f64,
    pub conditional_se: f64,
    pub conditional_mean_variance_exact: f64,
    pub z: f64,
    pub pass: bool,
}

pub fn total_variance_check<T: Scalar>(
    n: usize,
    point: Point,
    annealed_replicates: usize,
    environments: usize,
    replicates_per_env: usize,
    master_seed: u64,
) -> Result<TotalVarianceReport> {
    let s = T::from_f(point.s);
    let t = T::from_f(point.t.ok_or_else(|| Error::config("need an (s, t) point"))?);

    let raw_value = |sigma: &[usize], env: &crate::environment::Environment<T>| -> f64 {
        let mut count = 0usize;
        for (i, &j) in sigma.iter().enumerate() {
            if env.row_marks()[i] <= s && env.col_marks()[j] <= t {
                count += 1;
            }
        }
        count as f64
    };

    // Annealed variance.
    let annealed: Vec<Vec<f64>> = (0..annealed_replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mut mrng = stream_rng(master_seed, LANE_MATRIX, r);
            let p = sample_permutation::<T, _>(n, &mut mrng)?;
            let mut erng = stream_rng(master_seed, LANE_ENV, r);
            let env = sample_environment::<T, _>(n, &mut erng)?;
            Ok(vec![raw_value(p.permutation().unwrap(), &env)])
        })
        .collect::<Result<Vec<_>>>()?;
    let annealed_m = empirical_moments(&annealed, DEFAULT_BATCHES)?;
    let total = annealed_m.covariance(0, 0).expect("variance");

    // Average conditional variance over frozen environments.
    let per_env: Vec<f64> = (0..environments as u64)
        .into_par_iter()
        .map(|e| -> Result<f64> {
            let mut frng = stream_rng(master_seed, LANE_FIXED, e + 1);
            let env = sample_environment::<T, _>(n, &mut frng)?;
            let values: Vec<Vec<f64>> = (0..replicates_per_env as u64)
                .map(|r| -> Result<Vec<f64>> {
                    let mut mrng =
                        stream_rng(master_seed, LANE_AUX, e * replicates_per_env as u64 + r);
                    let p = sample_permutation::<T, _>(n, &mut mrng)?;
                    Ok(vec![raw_value(p.permutation().unwrap(), &env)])
                })
                .collect::<Result<Vec<_>>>()?;
            let m = empirical_moments(&values, DEFAULT_BATCHES)?;
            Ok(m.covariance(0, 0).expect("variance").value)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = per_env.len() as f64;
    let cond_mean = per_env.iter().sum::<f64>() / k;
    let cond_var = per_env.iter().map(|v| (v - cond_mean) * (v - cond_mean)).sum::<f64>()
        / (k - 1.0);
    let cond_se = (cond_var / k).sqrt();

    let exact = product_count_variance::<f64>(n, point.s, point.t.unwrap())?;

    let se = (total.se * total.se + cond_se * cond_se).sqrt();
    let z = if se > 0.0 {
        (total.value - cond_mean - exact) / se
    } else {
        0.0
    };
    Ok(TotalVarianceReport {
        n,
        point,
        total_variance: total.value,
        total_se: total.se,
        mean_conditional_variance: cond_mean,
        conditional_se: cond_se,
        conditional_mean_variance_exact: exact,
        z,
        pass: z.abs() <= 3.0,
    })
}
