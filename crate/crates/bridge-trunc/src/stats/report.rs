//! Experiment reports: JSON document and flat CSV rows.
//!
//! The JSON schema is the config echo, the per-point mean checks, the
//! per-pair covariance checks and the verdict. Wall-clock time is kept on
//! the struct for logging but never serialized, so reports produced by runs
//! with different thread counts are byte-identical.

use serde::{Deserialize, Serialize};

use crate::numerics::fmt_float;
use crate::stats::config::{ExperimentConfig, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Conjecture probes report z-scores without a pass/fail claim.
    EvidenceOnly,
}

/// Mean at one test point against its exact target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanCheck {
    pub point: Point,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub z: f64,
    pub degenerate: bool,
}

/// Covariance at one pair of test points against its target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovCheck {
    pub point_a: Point,
    pub point_b: Point,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    /// Secondary value for context; see `reference_kind` on the report.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference: Option<f64>,
    pub z: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub se_method: String,
    /// What the optional `reference` column of covariance checks holds.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_kind: Option<String>,
    pub notes: Vec<String>,
    pub means: Vec<MeanCheck>,
    pub covariances: Vec<CovCheck>,
    pub comparisons: usize,
    pub max_abs_z: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV row per comparison.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        self.append_csv_rows(&mut out, "");
        out
    }

    pub fn append_csv_rows(&self, out: &mut String, label: &str) {
        let stat = self.config.statistic.name();
        for m in &self.means {
            out.push_str(&format!(
                "{label}{stat},mean,{},{},{},{},{},{},{}\n",
                point_csv(&m.point),
                point_csv(&m.point),
                fmt_float(m.estimate),
                fmt_float(m.se),
                fmt_float(m.target),
                fmt_float(m.z),
                m.degenerate,
            ));
        }
        for c in &self.covariances {
            out.push_str(&format!(
                "{label}{stat},covariance,{},{},{},{},{},{},{}\n",
                point_csv(&c.point_a),
                point_csv(&c.point_b),
                fmt_float(c.estimate),
                fmt_float(c.se),
                fmt_float(c.target),
                fmt_float(c.z),
                c.degenerate,
            ));
        }
    }
}

pub const CSV_HEADER: &str =
    "statistic,comparison,point_a,point_b,estimate,se,target,z,degenerate\n";

fn point_csv(p: &Point) -> String {
    match p.t {
        Some(t) => format!("{}:{}", p.s, t),
        None => format!("{}", p.s),
    }
}

/// Report of the subordination distributional-equality check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubordinationReport {
    pub config_note: String,
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub points: Vec<SubordinationPoint>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubordinationPoint {
    pub point: Point,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub mean_masked: f64,
    pub mean_subordinated: f64,
    pub mean_z: f64,
    pub pass: bool,
}

impl SubordinationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("point,ks_statistic,ks_p_value,mean_masked,mean_subordinated,mean_z,pass\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                point_csv(&p.point),
                fmt_float(p.ks_statistic),
                fmt_float(p.ks_p_value),
                fmt_float(p.mean_masked),
                fmt_float(p.mean_subordinated),
                fmt_float(p.mean_z),
                p.pass,
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EnsembleKind, EnsembleSpec};
    use crate::stats::config::StatisticKind;

    fn tiny_report() -> ExperimentReport {
        ExperimentReport {
            config: ExperimentConfig::new(
                StatisticKind::DftAnnealed,
                EnsembleSpec::new(EnsembleKind::Dft, 100).unwrap(),
                500,
                20,
                7,
            ),
            se_method: "batch-means-20".into(),
            reference_kind: None,
            notes: vec![],
            means: vec![MeanCheck {
                point: Point::two(0.5, 0.5),
                estimate: 0.01,
                se: 0.02,
                target: 0.0,
                z: 0.5,
                degenerate: false,
            }],
            covariances: vec![CovCheck {
                point_a: Point::two(0.5, 0.5),
                point_b: Point::two(0.25, 0.25),
                estimate: 0.06,
                se: 0.01,
                target: 0.0625,
                reference: None,
                z: -0.25,
                degenerate: false,
            }],
            comparisons: 2,
            max_abs_z: 0.5,
            verdict: Verdict::Pass,
            runtime_seconds: 1.25,
        }
    }

    #[test]
    fn json_omits_runtime_and_round_trips() {
        let report = tiny_report();
        let json = report.to_json();
        assert!(!json.contains("runtime"));
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.runtime_seconds, 0.0);
        assert_eq!(back.means.len(), 1);
        assert_eq!(back.verdict, Verdict::Pass);
    }

    #[test]
    fn csv_has_one_row_per_comparison() {
        let report = tiny_report();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("statistic,comparison"));
        assert!(lines[1].contains("dft-annealed,mean,0.5:0.5"));
        assert!(lines[2].contains("covariance,0.5:0.5,0.25:0.25"));
        // 17 significant digits round-trip.
        let est: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(est, 0.06);
    }
}
