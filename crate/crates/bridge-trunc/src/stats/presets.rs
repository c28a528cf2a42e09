//! Named verification presets, one per convergence statement.

use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::stats::config::{ExperimentConfig, StatisticKind};
use crate::stats::engine::SubordinationConfig;

/// What a preset executes.
pub enum PresetRun {
    Experiments(Vec<ExperimentConfig>),
    Subordination(SubordinationConfig),
}

pub const PRESET_NAMES: [&str; 12] = [
    "lemma-3.1",
    "thm-3.2-quenched",
    "thm-3.2-annealed",
    "thm-3.3-dft",
    "thm-3.4-det",
    "thm-3.5-quenched",
    "thm-3.5-annealed",
    "thm-3.6-permutation",
    "thm-3.7-quenched",
    "thm-3.7-annealed",
    "sec-5.3-copula",
    "prop-4.1-subordination",
];

pub fn preset_names() -> &'static [&'static str] {
    &PRESET_NAMES
}

struct PresetShape {
    statistic: StatisticKind,
    default_kind: EnsembleKind,
    haar_selectable: bool,
    n: usize,
    replicates: usize,
}

fn shape(name: &str) -> Option<PresetShape> {
    let s = |statistic, default_kind, haar_selectable, n, replicates| PresetShape {
        statistic,
        default_kind,
        haar_selectable,
        n,
        replicates,
    };
    match name {
        "lemma-3.1" => {
            Some(s(StatisticKind::OneParamDet, EnsembleKind::HaarUnitary, true, 500, 5000))
        }
        "thm-3.2-quenched" => {
            Some(s(StatisticKind::OneParamQuenched, EnsembleKind::HaarUnitary, true, 500, 5000))
        }
        "thm-3.2-annealed" => {
            Some(s(StatisticKind::OneParamAnnealed, EnsembleKind::HaarUnitary, true, 500, 5000))
        }
        "thm-3.3-dft" => Some(s(StatisticKind::DftAnnealed, EnsembleKind::Dft, false, 400, 4000)),
        "thm-3.4-det" => {
            Some(s(StatisticKind::DetTruncCentered, EnsembleKind::HaarUnitary, true, 300, 3000))
        }
        "thm-3.5-quenched" => {
            Some(s(StatisticKind::VQuenched, EnsembleKind::HaarUnitary, true, 300, 3000))
        }
        "thm-3.5-annealed" => {
            Some(s(StatisticKind::RandTruncAnnealed, EnsembleKind::HaarUnitary, true, 300, 3000))
        }
        "thm-3.6-permutation" => {
            Some(s(StatisticKind::DetTruncCentered, EnsembleKind::Permutation, false, 1000, 5000))
        }
        "thm-3.7-quenched" => {
            Some(s(StatisticKind::PermutationQuenched, EnsembleKind::Permutation, false, 1000, 5000))
        }
        "thm-3.7-annealed" => {
            Some(s(StatisticKind::PermutationAnnealed, EnsembleKind::Permutation, false, 1000, 5000))
        }
        "sec-5.3-copula" => {
            Some(s(StatisticKind::EmpiricalCopula, EnsembleKind::Permutation, false, 500, 5000))
        }
        _ => None,
    }
}

/// Build the run for a named preset. `ensemble_override` selects unitary or
/// orthogonal for the Haar presets; overriding a fixed-ensemble preset is a
/// config error.
pub fn preset_config(
    name: &str,
    master_seed: u64,
    ensemble_override: Option<EnsembleKind>,
) -> Result<PresetRun> {
    if name == "prop-4.1-subordination" {
        if let Some(kind) = ensemble_override {
            if !kind.is_haar() {
                return Err(Error::config(
                    "the subordination preset accepts only Haar ensembles",
                ));
            }
            let spec = EnsembleSpec::new(kind, 100)?;
            return Ok(PresetRun::Subordination(SubordinationConfig::new(spec, 5000, master_seed)));
        }
        let spec = EnsembleSpec::new(EnsembleKind::HaarUnitary, 100)?;
        return Ok(PresetRun::Subordination(SubordinationConfig::new(spec, 5000, master_seed)));
    }

    let Some(shape) = shape(name) else {
        return Err(Error::config(format!(
            "unknown preset '{}'; known presets: {}",
            name,
            PRESET_NAMES.join(", ")
        )));
    };

    let kind = match ensemble_override {
        None => shape.default_kind,
        Some(k) if (shape.haar_selectable && k.is_haar()) || k == shape.default_kind => k,
        Some(_) => {
            return Err(Error::config(format!(
                "preset '{}' runs on the {} ensemble",
                name,
                shape.default_kind.name()
            )));
        }
    };

    let spec = EnsembleSpec::new(kind, shape.n)?;
    let base = ExperimentConfig::new(shape.statistic, spec, shape.replicates, 20, master_seed);

    if name == "sec-5.3-copula" {
        let mut identity = base.clone();
        identity.identity_permutation = true;
        let seeded = base;
        return Ok(PresetRun::Experiments(vec![identity, seeded]));
    }
    Ok(PresetRun::Experiments(vec![base]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_resolve_and_validate() {
        for name in preset_names() {
            match preset_config(name, 42, None).unwrap() {
                PresetRun::Experiments(configs) => {
                    assert!(!configs.is_empty());
                    for c in configs {
                        c.validate().unwrap_or_else(|e| panic!("{}: {}", name, e));
                    }
                }
                PresetRun::Subordination(cfg) => {
                    assert_eq!(cfg.ensemble.n, 100);
                    assert_eq!(cfg.points.len(), 4);
                }
            }
        }
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(preset_config("thm-9.9", 1, None).is_err());
    }

    #[test]
    fn haar_presets_accept_the_orthogonal_override() {
        match preset_config("thm-3.4-det", 1, Some(EnsembleKind::HaarOrthogonal)).unwrap() {
            PresetRun::Experiments(cfgs) => {
                assert_eq!(cfgs[0].ensemble.kind, EnsembleKind::HaarOrthogonal);
            }
            _ => panic!("expected experiments"),
        }
        assert!(preset_config("thm-3.3-dft", 1, Some(EnsembleKind::HaarUnitary)).is_err());
        assert!(
            preset_config("thm-3.6-permutation", 1, Some(EnsembleKind::Permutation)).is_ok()
        );
    }

    #[test]
    fn copula_preset_runs_identity_and_seeded() {
        match preset_config("sec-5.3-copula", 1, None).unwrap() {
            PresetRun::Experiments(cfgs) => {
                assert_eq!(cfgs.len(), 2);
                assert!(cfgs[0].identity_permutation);
                assert!(!cfgs[1].identity_permutation);
            }
            _ => panic!("expected experiments"),
        }
    }
}
