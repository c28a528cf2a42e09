//! Command-line front end: sample matrices, run verification presets, run
//! probes, and export plot-ready CSV.
//!
//! Exit codes: 0 success, 1 statistical failure, 2 configuration or I/O
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bridge_trunc::ensembles::{
    dft_matrix, sample_haar, sample_permutation, squared_moduli, EnsembleKind, EnsembleSpec,
};
use bridge_trunc::error::{Error, Result};
use bridge_trunc::numerics::fmt_float;
use bridge_trunc::rng::{stream_rng, LANE_MATRIX};
use bridge_trunc::stats::config::{Point, DEFAULT_REPLICATES};
use bridge_trunc::stats::engine::{run_experiment, run_subordination_check};
use bridge_trunc::stats::probes::{conjecture_probe, moment_probe, ProbeConfig, ProbeKind};
use bridge_trunc::stats::report::{ExperimentReport, SubordinationReport, Verdict, CSV_HEADER};
use bridge_trunc::stats::{preset_config, preset_names, ExperimentConfig, PresetRun};

#[derive(Parser)]
#[command(
    name = "bridge-trunc",
    version,
    about = "Random and deterministic matrix truncations: simulation and statistical verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    Unitary,
    Orthogonal,
    Dft,
    Permutation,
}

impl From<EnsembleArg> for EnsembleKind {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Unitary => EnsembleKind::HaarUnitary,
            EnsembleArg::Orthogonal => EnsembleKind::HaarOrthogonal,
            EnsembleArg::Dft => EnsembleKind::Dft,
            EnsembleArg::Permutation => EnsembleKind::Permutation,
        }
    }
}

#[derive(Args)]
struct OutDirArg {
    /// Output directory for reports and CSV files (default: the
    /// BRIDGE_TRUNC_OUT environment variable, then the current directory).
    #[arg(long, env = "BRIDGE_TRUNC_OUT")]
    out_dir: Option<PathBuf>,
}

impl OutDirArg {
    fn resolve(self, file_value: Option<PathBuf>) -> PathBuf {
        self.out_dir.or(file_value).unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample one matrix and write its squared-modulus weights as CSV.
    Sample {
        #[arg(long, value_enum)]
        ensemble: EnsembleArg,
        #[arg(long)]
        n: usize,
        /// Master seed; required for the random ensembles.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (defaults to sample-<ensemble>-n<n>.csv in the
        /// output directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        out_dir: OutDirArg,
    },
    /// Run a named verification preset (or a config file) and write JSON
    /// and CSV reports.
    Verify {
        /// Preset name; see the error message of an unknown name for the
        /// full list.
        preset: Option<String>,
        /// JSON config file with an `experiment` object, overriding the
        /// preset entirely.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ensemble override for the Haar presets.
        #[arg(long, value_enum)]
        ensemble: Option<EnsembleArg>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Master seed (mandatory unless supplied by the config file).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        z_threshold: Option<f64>,
        /// Test points as `s:t,s:t,...` (or `s,s,...` for one-parameter
        /// statistics).
        #[arg(long)]
        points: Option<String>,
        /// Rayon thread count (never changes numerical output).
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        out_dir: OutDirArg,
    },
    /// Run a moment or conjecture probe and write its CSV.
    Probe {
        /// fourth-moment | sixth-moment | quadratic-form |
        /// conditional-variance | tightness-sixth | conjecture-1 |
        /// conjecture-2
        kind: String,
        /// Matrix size, or a comma-separated sweep for conjecture probes.
        #[arg(long, default_value = "200")]
        n: String,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Haar flavor for matrix probes.
        #[arg(long, value_enum, default_value = "unitary")]
        group: EnsembleArg,
        /// Level s for the conditional-variance probe.
        #[arg(long)]
        s: Option<f64>,
        /// Level t for the conditional-variance probe.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        out_dir: OutDirArg,
    },
}

/// CLI-level config file: the experiment plus output options.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliConfig {
    experiment: ExperimentConfig,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sample { ensemble, n, seed, out, out_dir } => {
            cmd_sample(ensemble, n, seed, out, out_dir.resolve(None))?;
            Ok(true)
        }
        Command::Verify {
            preset,
            config,
            ensemble,
            n,
            grid_m,
            replicates,
            seed,
            z_threshold,
            points,
            threads,
            out_dir,
        } => {
            let file_cfg = match &config {
                Some(path) => Some(load_cli_config(path)?),
                None => None,
            };
            let pool = build_pool(threads.or(file_cfg.as_ref().and_then(|c| c.threads)))?;
            let resolved_out =
                out_dir.resolve(file_cfg.as_ref().and_then(|c| c.out_dir.clone()));
            let overrides = Overrides { ensemble, n, grid_m, replicates, seed, z_threshold, points };
            pool.install(|| {
                cmd_verify(preset, file_cfg.map(|c| c.experiment), overrides, resolved_out)
            })
        }
        Command::Probe { kind, n, replicates, seed, group, s, t, threads, out_dir } => {
            let pool = build_pool(threads)?;
            pool.install(|| cmd_probe(kind, n, replicates, seed, group, s, t, out_dir.resolve(None)))
        }
    }
}

fn load_cli_config(path: &Path) -> Result<CliConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("bad config {}: {e}", path.display())))
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        builder = builder.num_threads(k);
    }
    builder.build().map_err(|e| Error::config(format!("cannot build thread pool: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::config(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_sample(
    ensemble: EnsembleArg,
    n: usize,
    seed: Option<u64>,
    out: Option<PathBuf>,
    out_dir: PathBuf,
) -> Result<()> {
    let kind: EnsembleKind = ensemble.into();
    let spec = EnsembleSpec::new(kind, n)?;
    let matrix = match kind {
        EnsembleKind::Dft => dft_matrix::<f64>(n)?,
        EnsembleKind::Permutation => {
            let seed = seed.ok_or_else(|| Error::config("--seed is required for random ensembles"))?;
            sample_permutation::<f64, _>(n, &mut stream_rng(seed, LANE_MATRIX, 0))?
        }
        _ => {
            let seed = seed.ok_or_else(|| Error::config("--seed is required for random ensembles"))?;
            sample_haar::<f64, _>(&spec, &mut stream_rng(seed, LANE_MATRIX, 0))?
        }
    };
    let weights = squared_moduli(&matrix)?;

    let mut csv = String::from("i,j,w\n");
    for i in 0..n {
        for j in 0..n {
            csv.push_str(&format!("{},{},{}\n", i + 1, j + 1, fmt_float(weights.get(i, j))));
        }
    }
    let path = out.unwrap_or_else(|| {
        out_dir.join(format!("sample-{}-n{}.csv", kind.name(), n))
    });
    write_file(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

struct Overrides {
    ensemble: Option<EnsembleArg>,
    n: Option<usize>,
    grid_m: Option<usize>,
    replicates: Option<usize>,
    seed: Option<u64>,
    z_threshold: Option<f64>,
    points: Option<String>,
}

fn parse_points(text: &str) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        match part.split_once(':') {
            Some((a, b)) => {
                let s: f64 = a.parse().map_err(|_| Error::config(format!("bad point '{part}'")))?;
                let t: f64 = b.parse().map_err(|_| Error::config(format!("bad point '{part}'")))?;
                points.push(Point::two(s, t));
            }
            None => {
                let s: f64 =
                    part.parse().map_err(|_| Error::config(format!("bad point '{part}'")))?;
                points.push(Point::one(s));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::config("no test points parsed"));
    }
    Ok(points)
}

fn apply_overrides(config: &mut ExperimentConfig, ov: &Overrides) -> Result<()> {
    if let Some(e) = ov.ensemble {
        config.ensemble = EnsembleSpec::new(e.into(), config.ensemble.n)?;
    }
    if let Some(n) = ov.n {
        config.ensemble = EnsembleSpec::new(config.ensemble.kind, n)?;
    }
    if let Some(m) = ov.grid_m {
        config.grid_m = m;
    }
    if let Some(r) = ov.replicates {
        config.replicates = r;
    }
    if let Some(seed) = ov.seed {
        config.master_seed = seed;
    }
    if let Some(z) = ov.z_threshold {
        config.z_threshold = z;
    }
    if let Some(points) = &ov.points {
        config.test_points = parse_points(points)?;
    }
    Ok(())
}

/// Combined payload written by `verify`.
#[derive(Serialize)]
struct VerifyDocument<'a> {
    preset: &'a str,
    experiments: Vec<&'a ExperimentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subordination: Option<&'a SubordinationReport>,
    verdict: Verdict,
}

fn cmd_verify(
    preset: Option<String>,
    file_experiment: Option<ExperimentConfig>,
    overrides: Overrides,
    out_dir: PathBuf,
) -> Result<bool> {
    let (label, run) = match (&preset, file_experiment) {
        (Some(_), Some(_)) => {
            return Err(Error::config("give either a preset name or --config, not both"))
        }
        (None, None) => {
            return Err(Error::config(format!(
                "nothing to verify; presets: {}",
                preset_names().join(", ")
            )))
        }
        (Some(name), None) => {
            let seed = overrides
                .seed
                .ok_or_else(|| Error::config("--seed is required (no wall-clock seeding)"))?;
            let run = preset_config(name, seed, overrides.ensemble.map(Into::into))?;
            (name.clone(), run)
        }
        (None, Some(experiment)) => {
            ("custom".to_string(), PresetRun::Experiments(vec![experiment]))
        }
    };

    match run {
        PresetRun::Experiments(mut configs) => {
            let mut reports: Vec<ExperimentReport> = Vec::new();
            for (i, config) in configs.iter_mut().enumerate() {
                // The ensemble override was already consumed by the preset
                // lookup; apply the remaining knobs.
                let trimmed = Overrides { ensemble: None, ..copy_overrides(&overrides) };
                apply_overrides(config, &trimmed)?;
                let report = run_experiment::<f64>(config)?;
                print_experiment(&label, i, &report);
                reports.push(report);
            }
            let verdict = if reports.iter().all(|r| r.passed()) {
                if reports.iter().any(|r| r.verdict == Verdict::EvidenceOnly) {
                    Verdict::EvidenceOnly
                } else {
                    Verdict::Pass
                }
            } else {
                Verdict::Fail
            };

            let doc = VerifyDocument {
                preset: &label,
                experiments: reports.iter().collect(),
                subordination: None,
                verdict,
            };
            let json = serde_json::to_string_pretty(&doc).expect("report serializes");
            write_file(&out_dir.join(format!("{label}-report.json")), &json)?;

            let mut csv = String::from(CSV_HEADER);
            for report in &reports {
                report.append_csv_rows(&mut csv, "");
            }
            write_file(&out_dir.join(format!("{label}-report.csv")), &csv)?;

            // One representative seeded path per run, plot-ready.
            let path_csv = sample_statistic_path(&reports[0].config)?;
            write_file(&out_dir.join(format!("{label}-path.csv")), &path_csv)?;

            println!("{label}: verdict {:?}", verdict);
            Ok(verdict != Verdict::Fail)
        }
        PresetRun::Subordination(mut cfg) => {
            if let Some(n) = overrides.n {
                cfg.ensemble = EnsembleSpec::new(cfg.ensemble.kind, n)?;
            }
            if let Some(r) = overrides.replicates {
                cfg.replicates = r;
            }
            if let Some(m) = overrides.grid_m {
                cfg.grid_m = m;
            }
            if let Some(z) = overrides.z_threshold {
                cfg.z_threshold = z;
            }
            let report = run_subordination_check::<f64>(&cfg)?;
            for p in &report.points {
                println!(
                    "{label} {}: KS D={:.4} p={:.4} mean z={:+.2} {}",
                    p.point.label(),
                    p.ks_statistic,
                    p.ks_p_value,
                    p.mean_z,
                    if p.pass { "ok" } else { "FAIL" }
                );
            }
            write_file(&out_dir.join(format!("{label}-report.json")), &report.to_json())?;
            write_file(&out_dir.join(format!("{label}-report.csv")), &report.to_csv())?;
            println!("{label}: verdict {:?}", report.verdict);
            Ok(report.verdict != Verdict::Fail)
        }
    }
}

fn copy_overrides(ov: &Overrides) -> Overrides {
    Overrides {
        ensemble: ov.ensemble,
        n: ov.n,
        grid_m: ov.grid_m,
        replicates: ov.replicates,
        seed: ov.seed,
        z_threshold: ov.z_threshold,
        points: ov.points.clone(),
    }
}

fn print_experiment(label: &str, index: usize, report: &ExperimentReport) {
    println!(
        "{label}[{index}] {} {} n={} N={}: max |z| = {:.3} over {} comparisons -> {:?} ({:.1}s)",
        report.config.statistic.name(),
        report.config.ensemble.kind.name(),
        report.config.ensemble.n,
        report.config.replicates,
        report.max_abs_z,
        report.comparisons,
        report.verdict,
        report.runtime_seconds,
    );
    for note in &report.notes {
        println!("  note: {note}");
    }
}

/// Regenerate the full grid path of replicate 0 for plotting.
fn sample_statistic_path(config: &ExperimentConfig) -> Result<String> {
    use bridge_trunc::environment::sample_environment;
    use bridge_trunc::processes as proc;
    use bridge_trunc::rng::{LANE_ENV, LANE_FIXED};
    use bridge_trunc::stats::StatisticKind;

    let grid = proc::Grid::new(config.grid_m)?;
    let n = config.ensemble.n;
    let seed = config.master_seed;
    // A single representative replicate; quenched statistics rebuild their
    // frozen object exactly as the engine does.
    match config.statistic {
        StatisticKind::DftAnnealed => {
            let env = sample_environment::<f64, _>(n, &mut stream_rng(seed, LANE_ENV, 0))?;
            let path = proc::flat_rand_path(&env, &grid);
            let centered = proc::centered_scaled2(
                &path,
                proc::Centering2::ProductMean,
                proc::PathScale::InvSqrtN,
                None,
            )?;
            Ok(centered.to_csv())
        }
        StatisticKind::EmpiricalCopula => {
            let sigma: Vec<usize> = if config.identity_permutation {
                (0..n).collect()
            } else {
                sample_permutation::<f64, _>(n, &mut stream_rng(seed, bridge_trunc::rng::LANE_FIXED, 0))?
                    .permutation()
                    .unwrap()
                    .to_vec()
            };
            let env = sample_environment::<f64, _>(n, &mut stream_rng(seed, LANE_ENV, 0))?;
            Ok(proc::empirical_copula_path(&env, &sigma, &grid)?.to_csv())
        }
        _ => {
            // Deterministic/annealed matrix statistics: one matrix draw.
            let spec = config.ensemble;
            match spec.kind {
                EnsembleKind::Permutation => {
                    let p = sample_permutation::<f64, _>(
                        n,
                        &mut stream_rng(seed, LANE_MATRIX, 0),
                    )?;
                    let path = proc::permutation_det_path::<f64>(p.permutation().unwrap(), &grid)?;
                    let centered = proc::centered_scaled2(
                        &path,
                        proc::Centering2::DetMean,
                        proc::PathScale::InvSqrtN,
                        None,
                    )?;
                    Ok(centered.to_csv())
                }
                EnsembleKind::Dft => {
                    let env =
                        sample_environment::<f64, _>(n, &mut stream_rng(seed, LANE_ENV, 0))?;
                    Ok(proc::flat_rand_path(&env, &grid).to_csv())
                }
                _ => {
                    let u = sample_haar::<f64, _>(&spec, &mut stream_rng(seed, LANE_MATRIX, 0))?;
                    let w = squared_moduli(&u)?;
                    if config.statistic.is_one_param() {
                        let env = sample_environment::<f64, _>(
                            n,
                            &mut stream_rng(seed, LANE_ENV, 0),
                        )?;
                        let (_, rand) = proc::column_mass_paths(&w.first_column(), &env, &grid)?;
                        Ok(rand.to_csv())
                    } else {
                        let env = sample_environment::<f64, _>(
                            n,
                            &mut stream_rng(seed, LANE_FIXED, 0),
                        )?;
                        let path = proc::interaction_path(&w, &env, &grid)?;
                        Ok(path.to_csv())
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_probe(
    kind: String,
    n_text: String,
    replicates: Option<usize>,
    seed: u64,
    group: EnsembleArg,
    s: Option<f64>,
    t: Option<f64>,
    out_dir: PathBuf,
) -> Result<bool> {
    let ns: Vec<usize> = n_text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::config(format!("bad n '{p}'"))))
        .collect::<Result<_>>()?;
    if ns.is_empty() {
        return Err(Error::config("at least one n is required"));
    }

    if kind == "conjecture-1" || kind == "conjecture-2" {
        let which = if kind.ends_with('1') { 1 } else { 2 };
        let reps = replicates.unwrap_or(DEFAULT_REPLICATES);
        let report = conjecture_probe::<f64>(which, group.into(), &ns, reps, seed)?;
        println!("{}", report.banner);
        for r in &report.reports {
            println!(
                "  n={}: max |z| = {:.3} over {} comparisons",
                r.config.ensemble.n, r.max_abs_z, r.comparisons
            );
        }
        write_file(&out_dir.join(format!("probe-{kind}.csv")), &report.to_csv())?;
        write_file(&out_dir.join(format!("probe-{kind}.json")), &report.to_json())?;
        // Evidence only: never a statistical failure.
        return Ok(true);
    }

    let probe_kind = ProbeKind::parse(&kind)?;
    if ns.len() != 1 {
        return Err(Error::config("moment probes take a single n"));
    }
    let default_reps = match probe_kind {
        ProbeKind::SixthMoment | ProbeKind::TightnessSixth => 20_000,
        ProbeKind::ConditionalVariance => 100_000,
        _ => DEFAULT_REPLICATES,
    };
    let mut cfg = ProbeConfig::new(
        probe_kind,
        EnsembleSpec::new(group.into(), ns[0])?,
        replicates.unwrap_or(default_reps),
        seed,
    );
    if probe_kind == ProbeKind::ConditionalVariance {
        cfg.point = Some(Point::two(s.unwrap_or(0.5), t.unwrap_or(0.5)));
        cfg.ensemble = EnsembleSpec::new(group.into(), ns[0])?;
    } else if s.is_some() || t.is_some() {
        return Err(Error::config("--s/--t apply only to the conditional-variance probe"));
    }

    let report = moment_probe::<f64>(&cfg)?;
    if report.rows.is_empty() {
        println!(
            "{}: estimate {} +- {} vs target {} (z = {:+.3}) -> {:?}",
            kind,
            report.estimate,
            report.se,
            report.target_finite_n.unwrap_or(f64::NAN),
            report.z,
            report.verdict
        );
    } else {
        for row in &report.rows {
            println!(
                "{} ({}, {}): sixth moment {:.6e} +- {:.1e}, ratio {:.4}",
                kind, row.s, row.t, row.sixth_moment, row.se, row.ratio
            );
        }
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
    write_file(&out_dir.join(format!("probe-{kind}.csv")), &report.to_csv())?;
    write_file(&out_dir.join(format!("probe-{kind}.json")), &report.to_json())?;
    Ok(report.passed())
}
