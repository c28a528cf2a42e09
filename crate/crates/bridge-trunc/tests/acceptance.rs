//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its headline numbers (run with `--nocapture` to see them). The suite is
//! fully seeded; statistical tolerances are 4 standard errors unless a
//! criterion states otherwise.

use std::time::Instant;

use bridge_trunc::ensembles::{
    dft_matrix, sample_haar, sample_permutation, squared_moduli, EnsembleKind, EnsembleSpec,
};
use bridge_trunc::environment::{normalized_counting, sample_environment};
use bridge_trunc::limits::kernel_identity_residual;
use bridge_trunc::processes::{interaction_path, rand_truncation_path, Grid};
use bridge_trunc::rng::{stream_rng, LANE_AUX, LANE_ENV, LANE_MATRIX};
use bridge_trunc::stats::config::Point;
use bridge_trunc::stats::engine::{run_subordination_check, SubordinationConfig};
use bridge_trunc::stats::probes::{moment_probe, ProbeConfig, ProbeKind};
use bridge_trunc::stats::report::ExperimentReport;
use bridge_trunc::stats::{
    preset_config, run_experiment, ExperimentConfig, PresetRun, StatisticKind,
};

const SUITE_SEED: u64 = 20260810;

fn run_preset(name: &str, kind: Option<EnsembleKind>) -> Vec<ExperimentReport> {
    match preset_config(name, SUITE_SEED, kind).unwrap() {
        PresetRun::Experiments(configs) => configs
            .iter()
            .map(|c| run_experiment::<f64>(c).unwrap_or_else(|e| panic!("{name}: {e}")))
            .collect(),
        _ => panic!("{name} is not an experiment preset"),
    }
}

fn assert_pass(name: &str, report: &ExperimentReport) {
    assert!(
        report.passed(),
        "{name} ({} {}): max |z| = {} exceeds {}",
        report.config.statistic.name(),
        report.config.ensemble.kind.name(),
        report.max_abs_z,
        report.config.z_threshold
    );
}

fn variance_at(report: &ExperimentReport, s: f64, t: Option<f64>) -> (f64, f64) {
    let c = report
        .covariances
        .iter()
        .find(|c| {
            c.point_a.s == s && c.point_a.t == t && c.point_b.s == s && c.point_b.t == t
        })
        .expect("diagonal comparison present");
    (c.estimate, c.se)
}

#[test]
fn criterion_01_exact_algebra() {
    let start = Instant::now();

    // Interaction-path route agreement over 50 random instances; the path
    // constructor itself enforces 1e-8 agreement and errors otherwise.
    for i in 0..50u64 {
        let n = 5 + (i as usize * 7) % 36;
        let spec = EnsembleSpec::new(EnsembleKind::HaarUnitary, n).unwrap();
        let u = sample_haar::<f64, _>(&spec, &mut stream_rng(SUITE_SEED, LANE_MATRIX, i)).unwrap();
        let w = squared_moduli(&u).unwrap();
        let env = sample_environment::<f64, _>(n, &mut stream_rng(SUITE_SEED, LANE_ENV, i)).unwrap();
        let grid = Grid::new([4, 10, 20][i as usize % 3]).unwrap();
        interaction_path(&w, &env, &grid).unwrap();
    }

    // The count decomposition of the flat-matrix truncation, pathwise:
    // masked mass = n s t + norm(S) norm(S') + sqrt(n)(s norm(S') + t norm(S)).
    let mut worst = 0.0f64;
    for (j, n) in [37usize, 64, 100].into_iter().enumerate() {
        let w = squared_moduli(&dft_matrix::<f64>(n).unwrap()).unwrap();
        let env =
            sample_environment::<f64, _>(n, &mut stream_rng(SUITE_SEED, LANE_ENV, 100 + j as u64))
                .unwrap();
        let grid = Grid::new(20).unwrap();
        let path = rand_truncation_path(&w, &env, &grid).unwrap();
        let root = (n as f64).sqrt();
        for k in 0..=20 {
            for l in 0..=20 {
                let s: f64 = grid.point(k);
                let t: f64 = grid.point(l);
                let ns = normalized_counting(env.row_marks(), s).unwrap();
                let nt = normalized_counting(env.col_marks(), t).unwrap();
                let decomposed = n as f64 * s * t + ns * nt + root * (s * nt + t * ns);
                worst = worst.max((path.value(k, l) - decomposed).abs());
            }
        }
    }
    assert!(worst <= 1e-10, "decomposition deviation {}", worst);

    // Kernel identity on 100 random point pairs.
    let mut rng = stream_rng(SUITE_SEED, LANE_AUX, 0);
    let mut worst_residual = 0.0f64;
    for _ in 0..100 {
        let p: (f64, f64) = (
            bridge_trunc::Scalar::standard_uniform(&mut rng),
            bridge_trunc::Scalar::standard_uniform(&mut rng),
        );
        let q: (f64, f64) = (
            bridge_trunc::Scalar::standard_uniform(&mut rng),
            bridge_trunc::Scalar::standard_uniform(&mut rng),
        );
        worst_residual = worst_residual.max(kernel_identity_residual(p, q).unwrap().abs());
    }
    assert!(worst_residual <= 1e-12, "kernel identity residual {}", worst_residual);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 1 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 1 (exact algebra): PASS - decomposition dev {worst:.2e}, \
         identity residual {worst_residual:.2e}, {elapsed:.1} s"
    );
}

#[test]
fn criterion_02_unitarity_and_stochasticity() {
    let start = Instant::now();
    let plan: [(EnsembleKind, &[(usize, usize)]); 4] = [
        (EnsembleKind::HaarUnitary, &[(10, 30), (100, 18), (500, 2)]),
        (EnsembleKind::HaarOrthogonal, &[(10, 30), (100, 18), (500, 2)]),
        (EnsembleKind::Dft, &[(10, 30), (100, 15), (500, 5)]),
        (EnsembleKind::Permutation, &[(10, 20), (100, 20), (500, 10)]),
    ];
    let mut total = 0usize;
    let mut worst_unitarity = 0.0f64;
    let mut worst_sum = 0.0f64;
    for (kind, sizes) in plan {
        for &(n, count) in sizes {
            for rep in 0..count {
                let idx = (total + rep) as u64;
                let matrix = match kind {
                    EnsembleKind::Dft => dft_matrix::<f64>(n).unwrap(),
                    EnsembleKind::Permutation => sample_permutation::<f64, _>(
                        n,
                        &mut stream_rng(SUITE_SEED, LANE_MATRIX, idx),
                    )
                    .unwrap(),
                    _ => {
                        let spec = EnsembleSpec::new(kind, n).unwrap();
                        sample_haar::<f64, _>(&spec, &mut stream_rng(SUITE_SEED, LANE_MATRIX, idx))
                            .unwrap()
                    }
                };
                worst_unitarity = worst_unitarity.max(matrix.unitarity_defect());
                let w = squared_moduli(&matrix).unwrap();
                for s in w.row_sums().into_iter().chain(w.col_sums()) {
                    worst_sum = worst_sum.max((s - 1.0).abs());
                }
            }
            total += count;
        }
    }
    assert_eq!(total, 200);
    assert!(worst_unitarity <= 1e-10, "worst unitarity defect {}", worst_unitarity);
    assert!(worst_sum <= 1e-12, "worst row/col sum deviation {}", worst_sum);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "criterion 2 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 2 (unitarity/stochasticity): PASS - 200 matrices, defect {worst_unitarity:.2e}, \
         sum dev {worst_sum:.2e}, {elapsed:.1} s"
    );
}

#[test]
fn criterion_03_brute_force_oracle_equivalence() {
    let start = Instant::now();
    let grid = Grid::new(20).unwrap();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let n = 2 + (i as usize) % 7;
        let spec = EnsembleSpec::new(EnsembleKind::HaarUnitary, n).unwrap();
        let u =
            sample_haar::<f64, _>(&spec, &mut stream_rng(SUITE_SEED, LANE_MATRIX, 500 + i)).unwrap();
        let w = squared_moduli(&u).unwrap();
        let env =
            sample_environment::<f64, _>(n, &mut stream_rng(SUITE_SEED, LANE_ENV, 500 + i)).unwrap();
        let sigma = sample_permutation::<f64, _>(n, &mut stream_rng(SUITE_SEED, LANE_AUX, 500 + i))
            .unwrap()
            .permutation()
            .unwrap()
            .to_vec();

        let masked = rand_truncation_path(&w, &env, &grid).unwrap();
        let inter = interaction_path(&w, &env, &grid).unwrap();
        let sub = bridge_trunc::processes::subordinated_path(&w, &env, &grid).unwrap();
        let copula = bridge_trunc::processes::empirical_copula_path(&env, &sigma, &grid).unwrap();

        for k in 0..=20 {
            for l in 0..=20 {
                let s: f64 = grid.point(k);
                let t: f64 = grid.point(l);
                let mut direct_masked = 0.0;
                let mut direct_inter = 0.0;
                let mut copula_count = 0.0;
                for a in 0..n {
                    let row_in = env.row_marks()[a] <= s;
                    let ra = if row_in { 1.0 - s } else { -s };
                    if env.row_marks()[a] <= s && env.col_marks()[sigma[a]] <= t {
                        copula_count += 1.0;
                    }
                    for b in 0..n {
                        let col_in = env.col_marks()[b] <= t;
                        if row_in && col_in {
                            direct_masked += w.get(a, b);
                        }
                        let cb = if col_in { 1.0 - t } else { -t };
                        direct_inter += (w.get(a, b) - 1.0 / n as f64) * ra * cb;
                    }
                }
                let p = bridge_trunc::environment::counting(env.row_marks(), s).unwrap();
                let q = bridge_trunc::environment::counting(env.col_marks(), t).unwrap();
                let mut direct_sub = 0.0;
                for a in 0..p {
                    for b in 0..q {
                        direct_sub += w.get(a, b);
                    }
                }
                let direct_copula =
                    (copula_count - n as f64 * s * t) / (n as f64).sqrt();

                worst = worst.max((masked.value(k, l) - direct_masked).abs());
                worst = worst.max((inter.value(k, l) - direct_inter).abs());
                worst = worst.max((sub.value(k, l) - direct_sub).abs());
                worst = worst.max((copula.value(k, l) - direct_copula).abs());
            }
        }
    }
    assert!(worst <= 1e-12, "worst deviation from brute force {}", worst);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 3 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 3 (brute-force equivalence): PASS - 100 instances, worst dev {worst:.2e}, \
         {elapsed:.1} s"
    );
}

#[test]
fn criterion_04_one_parameter_limits() {
    let start = Instant::now();
    for kind in [EnsembleKind::HaarUnitary, EnsembleKind::HaarOrthogonal] {
        let inv_bp = 1.0 / kind.beta_prime().unwrap();
        for (preset, target_at_half) in [
            ("lemma-3.1", inv_bp * 0.25),
            ("thm-3.2-annealed", (1.0 + inv_bp) * 0.25),
            ("thm-3.2-quenched", inv_bp * 0.25),
        ] {
            let reports = run_preset(preset, Some(kind));
            for report in &reports {
                assert_pass(preset, report);
                let (var, se) = variance_at(report, 0.5, None);
                assert!(
                    (var - target_at_half).abs() <= 4.0 * se,
                    "{preset} {}: Var(0.5) = {var} vs {target_at_half} (se {se})",
                    kind.name()
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 4 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 4 (one-parameter limits, both ensembles): PASS - {elapsed:.1} s"
    );
}

#[test]
fn criterion_05_flat_matrix_annealed() {
    let start = Instant::now();
    let reports = run_preset("thm-3.3-dft", None);
    let report = &reports[0];
    assert_pass("thm-3.3-dft", report);
    let (var, se) = variance_at(report, 0.5, Some(0.5));
    assert!((var - 0.125).abs() <= 4.0 * se, "Var(0.5,0.5) = {var} (se {se})");
    assert_eq!(report.covariances.len(), 15);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 5 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 5 (flat-matrix annealed limit): PASS - max |z| = {:.2}, {elapsed:.1} s",
        report.max_abs_z
    );
}

fn haar_two_parameter_block(kind: EnsembleKind) -> f64 {
    let start = Instant::now();
    let inv_bp = 1.0 / kind.beta_prime().unwrap();
    // Deterministic truncation, unnormalized.
    let det = &run_preset("thm-3.4-det", Some(kind))[0];
    assert_pass("thm-3.4-det", det);
    let (var, se) = variance_at(det, 0.5, Some(0.5));
    assert!(
        (var - inv_bp * 0.0625).abs() <= 4.0 * se,
        "det Var(0.5,0.5) = {var} vs {} (se {se})",
        inv_bp * 0.0625
    );
    // Quenched doubly centered truncation: conditional targets drive the
    // verdict; at the center point the frozen-environment fluctuation is
    // second order, so the kernel value itself must also match there.
    let quenched = &run_preset("thm-3.5-quenched", Some(kind))[0];
    assert_pass("thm-3.5-quenched", quenched);
    let (var, se) = variance_at(quenched, 0.5, Some(0.5));
    assert!(
        (var - inv_bp * 0.0625).abs() <= 4.0 * se,
        "quenched Var(0.5,0.5) = {var} vs {} (se {se})",
        inv_bp * 0.0625
    );
    // Annealed normalized truncation.
    let annealed = &run_preset("thm-3.5-annealed", Some(kind))[0];
    assert_pass("thm-3.5-annealed", annealed);
    let (var, se) = variance_at(annealed, 0.5, Some(0.5));
    assert!((var - 0.125).abs() <= 4.0 * se, "annealed Var(0.5,0.5) = {var} (se {se})");
    start.elapsed().as_secs_f64()
}

#[test]
fn criterion_06a_haar_two_parameter_unitary() {
    let elapsed = haar_two_parameter_block(EnsembleKind::HaarUnitary);
    assert!(elapsed < 1200.0, "criterion 6 (unitary) took {elapsed:.0} s");
    println!("ACCEPTANCE 6a (Haar unitary two-parameter limits): PASS - {elapsed:.0} s");
}

#[test]
fn criterion_06b_haar_two_parameter_orthogonal() {
    let elapsed = haar_two_parameter_block(EnsembleKind::HaarOrthogonal);
    assert!(elapsed < 1200.0, "criterion 6 (orthogonal) took {elapsed:.0} s");
    println!("ACCEPTANCE 6b (Haar orthogonal two-parameter limits): PASS - {elapsed:.0} s");
}

#[test]
fn criterion_07_permutation_two_parameter() {
    let start = Instant::now();
    let det = &run_preset("thm-3.6-permutation", None)[0];
    assert_pass("thm-3.6-permutation", det);
    let (var, se) = variance_at(det, 0.5, Some(0.5));
    assert!((var - 0.0625).abs() <= 4.0 * se, "det Var(0.5,0.5) = {var} (se {se})");

    let quenched = &run_preset("thm-3.7-quenched", None)[0];
    assert_pass("thm-3.7-quenched", quenched);
    let (var, se) = variance_at(quenched, 0.5, Some(0.5));
    assert!((var - 0.0625).abs() <= 4.0 * se, "quenched Var(0.5,0.5) = {var} (se {se})");

    let annealed = &run_preset("thm-3.7-annealed", None)[0];
    assert_pass("thm-3.7-annealed", annealed);
    let (var, se) = variance_at(annealed, 0.5, Some(0.5));
    assert!((var - 0.1875).abs() <= 4.0 * se, "annealed Var(0.5,0.5) = {var} (se {se})");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 7 took {elapsed:.1} s");
    println!("ACCEPTANCE 7 (permutation two-parameter limits): PASS - {elapsed:.1} s");
}

#[test]
fn criterion_08_subordination_equality_in_law() {
    let start = Instant::now();
    let run = preset_config("prop-4.1-subordination", SUITE_SEED, None).unwrap();
    let PresetRun::Subordination(cfg) = run else {
        panic!("expected the subordination preset");
    };
    let report = run_subordination_check::<f64>(&cfg).unwrap();
    for p in &report.points {
        assert!(
            p.ks_p_value > 0.01,
            "{}: KS p = {} below 0.01",
            p.point.label(),
            p.ks_p_value
        );
        assert!(p.mean_z.abs() <= 4.0, "{}: mean z = {}", p.point.label(), p.mean_z);
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "criterion 8 took {elapsed:.1} s");
    let min_p = report.points.iter().map(|p| p.ks_p_value).fold(1.0f64, f64::min);
    println!(
        "ACCEPTANCE 8 (subordination equality in law): PASS - min KS p = {min_p:.3}, {elapsed:.1} s"
    );
}

#[test]
fn criterion_09_moment_probes() {
    let start = Instant::now();
    let mut lines = Vec::new();

    for (kind, quoted) in
        [(EnsembleKind::HaarUnitary, 200.0 / 101.0), (EnsembleKind::HaarOrthogonal, 300.0 / 102.0)]
    {
        let cfg = ProbeConfig::new(
            ProbeKind::FourthMoment,
            EnsembleSpec::new(kind, 100).unwrap(),
            20_000,
            SUITE_SEED,
        );
        let report = moment_probe::<f64>(&cfg).unwrap();
        assert!(report.passed(), "fourth moment {}: z = {}", kind.name(), report.z);
        assert!((report.target_finite_n.unwrap() - quoted).abs() < 1e-12);
        lines.push(format!("fourth/{} z={:+.2}", kind.name(), report.z));
    }

    let cfg = ProbeConfig::new(
        ProbeKind::SixthMoment,
        EnsembleSpec::new(EnsembleKind::HaarUnitary, 100).unwrap(),
        20_000,
        SUITE_SEED,
    );
    let report = moment_probe::<f64>(&cfg).unwrap();
    assert!(report.passed(), "sixth moment: z = {}", report.z);
    let n = 100.0f64;
    assert!(
        (report.target_finite_n.unwrap() - 6.0 * n * n * n / (n * (n + 1.0) * (n + 2.0))).abs()
            < 1e-10
    );
    lines.push(format!("sixth/unitary z={:+.2}", report.z));

    for kind in [EnsembleKind::HaarUnitary, EnsembleKind::HaarOrthogonal] {
        let cfg = ProbeConfig::new(
            ProbeKind::QuadraticForm,
            EnsembleSpec::new(kind, 200).unwrap(),
            2000,
            SUITE_SEED,
        );
        let report = moment_probe::<f64>(&cfg).unwrap();
        assert!(report.passed(), "quadratic form {}: z = {}", kind.name(), report.z);
        assert!(
            (report.estimate - report.target_finite_n.unwrap()).abs() <= 4.0 * report.se
        );
        lines.push(format!("quadratic/{} z={:+.2}", kind.name(), report.z));
    }

    let mut cfg = ProbeConfig::new(
        ProbeKind::ConditionalVariance,
        EnsembleSpec::new(EnsembleKind::HaarUnitary, 100).unwrap(),
        100_000,
        SUITE_SEED,
    );
    cfg.point = Some(Point::two(0.5, 0.5));
    let report = moment_probe::<f64>(&cfg).unwrap();
    assert!((report.target_finite_n.unwrap() - 12.5625).abs() < 1e-12);
    assert!(report.passed(), "conditional variance: z = {}", report.z);
    lines.push(format!("cond-var z={:+.2}", report.z));

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "criterion 9 took {elapsed:.1} s");
    println!("ACCEPTANCE 9 (moment probes): PASS - {}, {elapsed:.1} s", lines.join(", "));
}

#[test]
fn criterion_10_empirical_copula() {
    let start = Instant::now();
    let reports = run_preset("sec-5.3-copula", None);
    assert_eq!(reports.len(), 2);
    for (label, report) in ["identity", "seeded"].iter().zip(&reports) {
        assert_pass("sec-5.3-copula", report);
        let (var, se) = variance_at(report, 0.5, Some(0.5));
        assert!(
            (var - 0.1875).abs() <= 4.0 * se,
            "{label}: Var(0.5,0.5) = {var} (se {se})"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 10 took {elapsed:.1} s");
    println!("ACCEPTANCE 10 (empirical copula, fixed permutations): PASS - {elapsed:.1} s");
}

#[test]
fn criterion_11_reproducibility_across_thread_counts() {
    let start = Instant::now();

    let configs = vec![
        ExperimentConfig::new(
            StatisticKind::DftAnnealed,
            EnsembleSpec::new(EnsembleKind::Dft, 100).unwrap(),
            400,
            20,
            SUITE_SEED,
        ),
        ExperimentConfig::new(
            StatisticKind::PermutationQuenched,
            EnsembleSpec::new(EnsembleKind::Permutation, 100).unwrap(),
            400,
            20,
            SUITE_SEED,
        ),
        ExperimentConfig::new(
            StatisticKind::VQuenched,
            EnsembleSpec::new(EnsembleKind::HaarUnitary, 30).unwrap(),
            400,
            20,
            SUITE_SEED,
        ),
    ];

    let run_all = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut out: Vec<String> =
                configs.iter().map(|c| run_experiment::<f64>(c).unwrap().to_json()).collect();
            let probe = ProbeConfig::new(
                ProbeKind::FourthMoment,
                EnsembleSpec::new(EnsembleKind::HaarUnitary, 50).unwrap(),
                2000,
                SUITE_SEED,
            );
            out.push(moment_probe::<f64>(&probe).unwrap().to_json());
            let sub = SubordinationConfig::new(
                EnsembleSpec::new(EnsembleKind::HaarUnitary, 40).unwrap(),
                200,
                SUITE_SEED,
            );
            out.push(run_subordination_check::<f64>(&sub).unwrap().to_json());
            out
        })
    };

    let single = run_all(1);
    let eight = run_all(8);
    assert_eq!(single.len(), eight.len());
    for (a, b) in single.iter().zip(&eight) {
        assert_eq!(a, b, "reports differ between 1 and 8 threads");
    }

    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 11 (byte-identical reports across thread counts): PASS - {} documents, \
         {elapsed:.1} s",
        single.len()
    );
}
