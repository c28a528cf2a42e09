//! Monte-Carlo experiment engine.

pub mod config;
pub mod engine;
pub mod ks;
pub mod moments;
pub mod presets;
pub mod probes;
pub mod report;
pub mod targets;

pub use config::{ExperimentConfig, Mode, StatisticKind};
pub use engine::{run_experiment, run_subordination_check, SubordinationConfig};
pub use ks::ks_two_sample;
pub use moments::empirical_moments;
pub use presets::{preset_config, preset_names, PresetRun};
pub use probes::{conjecture_probe, moment_probe, total_variance_check, ProbeConfig, ProbeKind};
pub use report::{ExperimentReport, Verdict};
