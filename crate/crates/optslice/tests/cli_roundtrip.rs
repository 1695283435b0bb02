//! End-to-end checks of the CLI commands: file outputs, manifests, config
//! and grid serialization round-trips, and exit-code classification.

// Test fixtures tweak a default config field by field.
#![allow(clippy::field_reassign_with_default)]

use std::fs;
use std::path::{Path, PathBuf};

use optslice::cli::{self, Overrides};
use optslice::config::{ActionSpaceChoice, ExperimentConfig};
use optslice::slices::LandscapeGrid;
use optslice::Error;

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("optslice_it_{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn tiny_slice_config(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "slice".to_string();
    cfg.seed = 11;
    cfg.out_dir = out.to_string_lossy().into_owned();
    cfg.task.horizons = vec![15];
    cfg.slice.resolution = 17;
    cfg.slice.episodes = 2;
    cfg.slice.count = 2;
    cfg
}

fn manifest_outputs(dir: &Path) -> Vec<String> {
    let manifest = fs::read_to_string(dir.join("manifest.txt")).expect("manifest written");
    assert!(manifest.contains("config_hash: "));
    assert!(manifest.contains("version: "));
    manifest
        .lines()
        .filter_map(|l| l.strip_prefix("output: "))
        .map(str::to_string)
        .collect()
}

#[test]
fn config_files_round_trip_through_disk() {
    let dir = temp_dir("config_roundtrip");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "theory".to_string();
    cfg.task.action_spaces = vec![ActionSpaceChoice::Spline(5), ActionSpaceChoice::Torque];
    cfg.theory.d_values = vec![2, 20];
    cfg.policy.w_values = vec![0.1, 10.0];
    let path = dir.join("roundtrip.cfg");
    fs::write(&path, cfg.to_config_string()).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded, cfg);
}

#[test]
fn slice_command_writes_self_describing_grids() {
    let dir = temp_dir("slice_cmd");
    let cfg = tiny_slice_config(&dir);
    cli::dispatch(&cfg).unwrap();

    let outputs = manifest_outputs(&dir);
    assert!(outputs.iter().any(|o| o == "slice_00.csv"));
    for name in &outputs {
        assert!(dir.join(name).exists(), "missing output {name}");
    }

    // The CSV + metadata documents reconstruct the grid bit-exactly:
    // re-serializing the parsed grid reproduces the files byte for byte.
    let csv = fs::read_to_string(dir.join("slice_00.csv")).unwrap();
    let meta = fs::read_to_string(dir.join("slice_00.meta")).unwrap();
    let grid = LandscapeGrid::from_documents(&csv, &meta).unwrap();
    assert_eq!(grid.to_csv_string(), csv);
    assert_eq!(grid.to_meta_string(), meta);
    assert_eq!(grid.resolution(), 17);

    // SVG and PPM artifacts have their expected magic bytes.
    let svg = fs::read(dir.join("slice_00.svg")).unwrap();
    assert!(svg.starts_with(b"<svg"));
    let ppm = fs::read(dir.join("slice_00.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n17 17\n255\n"));
}

#[test]
fn sweep_command_reports_growing_kappa() {
    let dir = temp_dir("sweep_cmd");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "sweep-T".to_string();
    cfg.seed = 3;
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.task.horizons = vec![1, 5, 10];
    cfg.slice.resolution = 9;
    cfg.slice.episodes = 1;
    cli::dispatch(&cfg).unwrap();

    let summary = fs::read_to_string(dir.join("sweep_summary.csv")).unwrap();
    let mut kappas = Vec::new();
    for line in summary.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "torque");
        kappas.push(cols[2].parse::<f64>().unwrap());
    }
    assert_eq!(kappas.len(), 3);
    assert!(kappas[0] < kappas[1] && kappas[1] < kappas[2], "{kappas:?}");
    assert!(dir.join("hessian_torque_T10.txt").exists());
}

#[test]
fn policy_command_emits_landscape_and_extrema() {
    let dir = temp_dir("policy_cmd");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "policy-landscape".to_string();
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.task.horizons = vec![50];
    cfg.policy.theta_min = -0.5;
    cfg.policy.theta_max = 0.5;
    cfg.policy.theta_step = 0.05;
    cfg.policy.angles = 4;
    cli::dispatch(&cfg).unwrap();

    let landscape = fs::read_to_string(dir.join("policy_landscape.csv")).unwrap();
    assert!(landscape.starts_with("mode,w,theta,value\n"));
    // 21 theta points for one mode and one weight.
    assert_eq!(landscape.lines().count(), 1 + 21);
    assert!(dir.join("policy_extrema.csv").exists());
    assert!(dir.join("policy_landscape.svg").exists());
}

#[test]
fn termination_command_covers_both_objectives() {
    let dir = temp_dir("termination_cmd");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "termination".to_string();
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.task.horizons = vec![12];
    cfg.task.terminations =
        vec![optslice::pendulum::TerminationMode::None, optslice::pendulum::TerminationMode::Plain];
    cfg.slice.resolution = 9;
    cfg.slice.episodes = 1;
    cfg.slice.extent = 6.0;
    cli::dispatch(&cfg).unwrap();
    for stem in ["traj_cost_none", "traj_cost_plain", "traj_reward_none", "traj_reward_plain"] {
        assert!(dir.join(format!("{stem}.csv")).exists(), "missing {stem}");
    }
}

#[test]
fn opt_compare_command_writes_tables_and_plot() {
    let dir = temp_dir("opt_cmd");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "opt-compare".to_string();
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.task.horizons = vec![5];
    cfg.optimizer.population = 8;
    cfg.optimizer.max_evals = 160;
    cfg.optimizer.runs = 2;
    cfg.optimizer.variants = vec!["torque-cost".to_string()];
    cli::dispatch(&cfg).unwrap();

    let summary = fs::read_to_string(dir.join("opt_compare_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let table = fs::read_to_string(dir.join("compare_torque-cost.csv")).unwrap();
    // 160 evals at population 8 := 20 generations.
    assert_eq!(table.lines().count(), 1 + 20);
    assert!(dir.join("run_torque-cost_00.csv").exists());
    assert!(dir.join("opt_compare.svg").exists());
}

#[test]
fn theory_command_reports_kappa_statistics() {
    let dir = temp_dir("theory_cmd");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "theory".to_string();
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.theory.d_values = vec![6];
    cfg.theory.k_values = vec![1, 3, 6];
    cfg.theory.bases = 25;
    cfg.theory.functions = vec!["bimodal".to_string()];
    cfg.slice.resolution = 9;
    cli::dispatch(&cfg).unwrap();

    let summary = fs::read_to_string(dir.join("theory_kappa_summary.csv")).unwrap();
    let rows: Vec<Vec<String>> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // k = 1: every slice is rank-deficient; k = d: kappa is exactly one.
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 1.0);
    assert!((rows[2][2].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    assert!(dir.join("kd_d6_k3.csv").exists());
    assert!(dir.join("bimodal_origin_d6.csv").exists());
    assert!(dir.join("bimodal_mode_d6.csv").exists());
}

#[test]
fn hessian_report_command_matches_closed_form() {
    let dir = temp_dir("hessian_cmd");
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "hessian-report".to_string();
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.hessian.objective = "quadratic_k(5,2,0.01)".to_string();
    cli::dispatch(&cfg).unwrap();

    let doc = fs::read_to_string(dir.join("hessian_report.txt")).unwrap();
    assert!(doc.contains("dimension: 5"));
    let kappa_line = doc
        .lines()
        .find(|l| l.starts_with("kappa: "))
        .expect("kappa line");
    let kappa: f64 = optslice::util::parse_f64(kappa_line.trim_start_matches("kappa: ")).unwrap();
    assert!((kappa - 100.0).abs() / 100.0 < 1e-3, "kappa = {kappa}");
}

#[test]
fn run_entrypoint_and_reproduce_all() {
    let base = temp_dir("run_entry");
    let configs = base.join("configs");
    fs::create_dir_all(&configs).unwrap();

    let out_a = base.join("a");
    let cfg_a = tiny_slice_config(&out_a);
    fs::write(configs.join("a_slice.cfg"), cfg_a.to_config_string()).unwrap();

    let mut cfg_b = ExperimentConfig::default();
    cfg_b.experiment = "hessian-report".to_string();
    cfg_b.out_dir = base.join("b").to_string_lossy().into_owned();
    cfg_b.hessian.objective = "quadratic_k(3,1,0.5)".to_string();
    fs::write(configs.join("b_hessian.cfg"), cfg_b.to_config_string()).unwrap();

    // Single command through the argv entry point, with a seed override.
    let args: Vec<String> = vec![
        "slice".into(),
        "--config".into(),
        configs.join("a_slice.cfg").to_string_lossy().into_owned(),
        "--seed".into(),
        "99".into(),
        "--workers".into(),
        "2".into(),
    ];
    cli::run(&args).unwrap();
    let manifest = fs::read_to_string(out_a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed: 99"));

    // Directory-driven reproduction with an output redirect.
    let redirected = base.join("all");
    cli::reproduce_all(
        &configs,
        &Overrides {
            seed: None,
            out: Some(redirected.to_string_lossy().into_owned()),
            workers: None,
        },
    )
    .unwrap();
    assert!(redirected.exists());

    // Errors classify as config problems (exit code 2).
    let err = cli::run(&[
        "slice".to_string(),
        "--config".to_string(),
        base.join("missing.cfg").to_string_lossy().into_owned(),
    ])
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn out_dir_resolution_uses_environment_base() {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "slice".to_string();
    cfg.out_dir = "explicit/dir".to_string();
    assert_eq!(cli::resolve_out_dir(&cfg), PathBuf::from("explicit/dir"));

    cfg.out_dir.clear();
    std::env::set_var(cli::OUT_DIR_ENV, "/tmp/optslice_env_base");
    assert_eq!(
        cli::resolve_out_dir(&cfg),
        PathBuf::from("/tmp/optslice_env_base/slice")
    );
    std::env::remove_var(cli::OUT_DIR_ENV);
    assert_eq!(cli::resolve_out_dir(&cfg), PathBuf::from("out/slice"));
}
