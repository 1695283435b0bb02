//! Experiment driver behind the `optslice` binary: one subcommand per
//! landscape figure family, all driven by declarative configs, deterministic
//! under `--seed`, with atomically written outputs and a manifest per run.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    slice_condition_number, HessianReport, DEFAULT_STEP_ANALYTIC, DEFAULT_STEP_PENDULUM,
};
use crate::config::{parse_variant, termination_mode_name, BasisMode, ExperimentConfig};
use crate::objectives::{make_objective, ObjectiveHandle, ObjectiveKind, QuadraticKSpec};
use crate::optimize::{cmaes_minimize, compare_runs, comparison_csv, CmaesConfig, OptimizerRun};
use crate::pendulum::{trajectory_objective, policy_objective, ObjectiveMode};
use crate::render::{
    contour_svg, default_levels, heightmap_image, line_chart_svg, marching_squares, Colormap,
    DEFAULT_CONTOUR_LEVELS,
};
use crate::slices::{
    evaluate_grid, gaussian_blur, sample_orthonormal_basis, sample_unnormalized_basis,
    LandscapeGrid, SlicePlane,
};
use crate::util::{fmt_f64, fnv1a64, linspace, median, mix_seed, write_atomic};
use crate::{Error, Result};

/// Environment variable holding the default output base directory.
pub const OUT_DIR_ENV: &str = "OPTSLICE_OUT";

const USAGE: &str = "\
usage: optslice <command> --config PATH [--seed N] [--out DIR] [--workers N]
       optslice reproduce-all [--configs DIR] [--seed N] [--out DIR] [--workers N]

commands:
  slice             random 2D slices of a trajectory objective
  sweep-T           Hessian conditioning across trajectory lengths
  policy-landscape  P-controller policy sweeps over theta (and w)
  termination       trajectory landscapes under termination variants
  opt-compare       CMA-ES convergence comparison across task variants
  theory            analytic test-function slices and slice-kappa statistics
  hessian-report    conditioning report for one task or analytic objective
  reproduce-all     run every config in a directory

flags:
  --config PATH     experiment config file
  --configs DIR     config directory for reproduce-all (default: configs)
  --seed N          override the config seed
  --out DIR         override the output directory
  --workers N       worker-thread hint (0 = all cores)

The default output base directory is $OPTSLICE_OUT, falling back to ./out.
";

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub workers: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
    }
}

/// Entry point for the binary.
pub fn run(args: &[String]) -> Result<()> {
    if args.is_empty() {
        print!("{USAGE}");
        return Err(Error::invalid("no command given"));
    }
    let command = args[0].as_str();
    if command == "help" || command == "--help" || command == "-h" {
        print!("{USAGE}");
        return Ok(());
    }

    let mut config_path: Option<PathBuf> = None;
    let mut configs_dir = PathBuf::from("configs");
    let mut overrides = Overrides::default();
    let mut i = 1;
    while i < args.len() {
        let flag = args[i].as_str();
        let value = args
            .get(i + 1)
            .ok_or_else(|| Error::invalid(format!("flag {flag} needs a value")))?;
        match flag {
            "--config" => config_path = Some(PathBuf::from(value)),
            "--configs" => configs_dir = PathBuf::from(value),
            "--seed" => {
                overrides.seed = Some(
                    value
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad seed `{value}`")))?,
                )
            }
            "--out" => overrides.out = Some(value.clone()),
            "--workers" => {
                overrides.workers = Some(
                    value
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad worker count `{value}`")))?,
                )
            }
            other => return Err(Error::invalid(format!("unknown flag `{other}`"))),
        }
        i += 2;
    }

    if command == "reproduce-all" {
        return reproduce_all(&configs_dir, &overrides);
    }

    let path = config_path
        .ok_or_else(|| Error::invalid("missing --config PATH (see `optslice help`)"))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    overrides.apply(&mut cfg);
    if cfg.experiment != command {
        // The subcommand wins; configs carry a default for reproduce-all.
        cfg.experiment = command.to_string();
    }
    dispatch(&cfg)
}

/// Runs the command named by `cfg.experiment` with the configured worker
/// pool, writing outputs and a manifest into the resolved directory.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<()> {
    let dir = resolve_out_dir(cfg);
    let work = || -> Result<Vec<PathBuf>> {
        match cfg.experiment.as_str() {
            "slice" => cmd_slice(cfg, &dir),
            "sweep-T" => cmd_sweep_t(cfg, &dir),
            "policy-landscape" => cmd_policy_landscape(cfg, &dir),
            "termination" => cmd_termination(cfg, &dir),
            "opt-compare" => cmd_opt_compare(cfg, &dir),
            "theory" => cmd_theory(cfg, &dir),
            "hessian-report" => cmd_hessian_report(cfg, &dir),
            other => Err(Error::config(format!("unknown experiment `{other}`"))),
        }
    };
    let files = if cfg.workers == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::numeric(format!("worker pool: {e}")))?
            .install(work)?
    };
    write_manifest(cfg, &dir, &files)
}

/// Output directory resolution: explicit config/override path, then
/// `$OPTSLICE_OUT/<experiment>`, then `out/<experiment>`.
pub fn resolve_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    if !cfg.out_dir.is_empty() {
        return PathBuf::from(&cfg.out_dir);
    }
    let base = std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| "out".to_string());
    Path::new(&base).join(&cfg.experiment)
}

fn write_manifest(cfg: &ExperimentConfig, dir: &Path, files: &[PathBuf]) -> Result<()> {
    let mut manifest = String::new();
    manifest.push_str(&format!("command: {}\n", cfg.experiment));
    manifest.push_str(&format!("version: {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!(
        "config_hash: {:016x}\n",
        fnv1a64(cfg.to_config_string().as_bytes())
    ));
    manifest.push_str(&format!("seed: {}\n", cfg.seed));
    for file in files {
        let name = file
            .strip_prefix(dir)
            .unwrap_or(file)
            .to_string_lossy()
            .into_owned();
        manifest.push_str(&format!("output: {name}\n"));
    }
    write_atomic(&dir.join("manifest.txt"), manifest.as_bytes())?;
    Ok(())
}

fn emit(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    files.push(path);
    Ok(())
}

fn sample_basis(mode: BasisMode, d: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    match mode {
        BasisMode::Orthonormal => sample_orthonormal_basis(d, seed),
        BasisMode::Unnormalized => sample_unnormalized_basis(d, seed),
    }
}

fn sanitize(label: &str) -> String {
    label.replace([':', '/'], "_")
}

/// Writes a grid's CSV, metadata, contour SVG and heightmap PPM under a
/// common stem. Rendering uses the blurred grid when `sigma > 0`.
fn render_grid(
    dir: &Path,
    stem: &str,
    grid: &LandscapeGrid,
    sigma: f64,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    emit(dir, &format!("{stem}.csv"), grid.to_csv_string().as_bytes(), files)?;
    emit(dir, &format!("{stem}.meta"), grid.to_meta_string().as_bytes(), files)?;
    let view = if sigma > 0.0 {
        gaussian_blur(grid, sigma)
    } else {
        grid.clone()
    };
    let levels = default_levels(&view, DEFAULT_CONTOUR_LEVELS);
    let contours = marching_squares(&view, &levels);
    emit(dir, &format!("{stem}.svg"), &contour_svg(&contours, None), files)?;
    match heightmap_image(&view, Colormap::Viridis) {
        Ok(ppm) => emit(dir, &format!("{stem}.ppm"), &ppm, files)?,
        // Constant grids have no height range; skip the heightmap rather
        // than failing the whole figure.
        Err(Error::UndefinedResult(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

/// `slice`: random slices of the primary task's objective around its
/// optimum, one grid per slice seed.
pub fn cmd_slice(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let task = cfg.task.primary();
    let f = trajectory_objective(&task);
    let center = f
        .known_optimum()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; f.dimension()]);
    let mut files = Vec::new();
    for s in 0..cfg.slice.count {
        let (u, v) = sample_basis(cfg.slice.basis, f.dimension(), mix_seed(cfg.seed, &[s as u64, 0]))?;
        let plane = SlicePlane::new(
            center.clone(),
            u,
            v,
            cfg.slice.extent,
            cfg.slice.resolution,
        )?;
        let grid = evaluate_grid(&f, &plane, cfg.slice.episodes, mix_seed(cfg.seed, &[s as u64, 1]))?;
        render_grid(dir, &format!("slice_{s:02}"), &grid, cfg.slice.sigma, &mut files)?;
    }
    Ok(files)
}

/// `sweep-T`: per-horizon Hessian reports and slice grids for each action
/// space, plus a `T,action_space,kappa,separability` summary table.
pub fn cmd_sweep_t(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut summary = String::from("T,action_space,kappa,separability\n");
    let h = if cfg.hessian.step > 0.0 {
        cfg.hessian.step
    } else {
        DEFAULT_STEP_PENDULUM
    };
    for (ci, &choice) in cfg.task.action_spaces.iter().enumerate() {
        let label = sanitize(&choice.label());
        for (ti, &horizon) in cfg.task.horizons.iter().enumerate() {
            let task = cfg.task.build(horizon, choice, cfg.task.terminations[0]);
            let f = trajectory_objective(&task);
            let x = vec![0.0; f.dimension()];
            let report = HessianReport::from_objective(&f, &x, h, cfg.hessian.rank_tol)?;
            emit(
                dir,
                &format!("hessian_{label}_T{horizon}.txt"),
                report.to_document().as_bytes(),
                &mut files,
            )?;
            summary.push_str(&format!(
                "{horizon},{},{},{}\n",
                choice.label(),
                fmt_f64(report.kappa),
                fmt_f64(report.separability_index)
            ));

            // A slice needs at least two action dimensions; the T = 1 case
            // still gets its (1x1) Hessian report above.
            if f.dimension() >= 2 {
                let (u, v) = sample_basis(
                    cfg.slice.basis,
                    f.dimension(),
                    mix_seed(cfg.seed, &[ci as u64, ti as u64, 0]),
                )?;
                let plane =
                    SlicePlane::new(x.clone(), u, v, cfg.slice.extent, cfg.slice.resolution)?;
                let grid = evaluate_grid(
                    &f,
                    &plane,
                    cfg.slice.episodes,
                    mix_seed(cfg.seed, &[ci as u64, ti as u64, 1]),
                )?;
                render_grid(
                    dir,
                    &format!("slice_{label}_T{horizon}"),
                    &grid,
                    cfg.slice.sigma,
                    &mut files,
                )?;
            }
        }
    }
    emit(dir, "sweep_summary.csv", summary.as_bytes(), &mut files)?;
    Ok(files)
}

/// Detected grid extrema: interior points below (minima) or above (maxima)
/// both neighbors.
fn grid_extrema(values: &[f64], minima: bool) -> Vec<usize> {
    let mut found = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let better = if minima {
            values[i] < values[i - 1] && values[i] < values[i + 1]
        } else {
            values[i] > values[i - 1] && values[i] > values[i + 1]
        };
        if better {
            found.push(i);
        }
    }
    found
}

/// Evaluated theta sweep for one (termination mode, weight) pair.
#[derive(Clone, Debug)]
pub struct PolicySweep {
    pub mode: crate::pendulum::TerminationMode,
    pub weight: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    /// Indices of detected local minima (cost) or maxima (reward).
    pub extrema: Vec<usize>,
    /// Index of the global best on the grid.
    pub best: usize,
}

/// Runs the policy-landscape sweeps described by the config. Exposed for
/// the acceptance suite as well as the CLI.
pub fn policy_sweeps(cfg: &ExperimentConfig) -> Result<Vec<PolicySweep>> {
    let steps =
        ((cfg.policy.theta_max - cfg.policy.theta_min) / cfg.policy.theta_step).round() as usize;
    let thetas: Vec<f64> = (0..=steps)
        .map(|i| cfg.policy.theta_min + i as f64 * cfg.policy.theta_step)
        .collect();
    let angles = linspace(-1.0, 1.0, cfg.policy.angles.max(1));
    let horizon = cfg.task.horizons[0];
    let minimizing = cfg.task.objective == ObjectiveMode::Cost;

    let mut sweeps = Vec::new();
    for &mode in &cfg.task.terminations {
        for &weight in &cfg.policy.w_values {
            let mut task_cfg = cfg.task.clone();
            task_cfg.weight = weight;
            let task = task_cfg.build(horizon, crate::config::ActionSpaceChoice::Torque, mode);
            let values: Vec<f64> = thetas
                .par_iter()
                .map(|&theta| policy_objective(theta, &task, &angles))
                .collect();
            let extrema = grid_extrema(&values, minimizing);
            let best = if minimizing {
                values
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite policy values"))
                    .map(|(i, _)| i)
                    .expect("nonempty sweep")
            } else {
                values
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite policy values"))
                    .map(|(i, _)| i)
                    .expect("nonempty sweep")
            };
            sweeps.push(PolicySweep {
                mode,
                weight,
                thetas: thetas.clone(),
                values,
                extrema,
                best,
            });
        }
    }
    Ok(sweeps)
}

/// `policy-landscape`: theta sweeps of the P-controller objective for each
/// termination mode and weight, with detected local extrema.
pub fn cmd_policy_landscape(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let sweeps = policy_sweeps(cfg)?;
    let minimizing = cfg.task.objective == ObjectiveMode::Cost;
    let mut files = Vec::new();

    let mut landscape = String::from("mode,w,theta,value\n");
    let mut extrema = String::from("mode,w,theta,value,type\n");
    let kind = if minimizing { "min" } else { "max" };
    let mut series = Vec::new();
    for sweep in &sweeps {
        let mode = termination_mode_name(sweep.mode);
        for (theta, value) in sweep.thetas.iter().zip(&sweep.values) {
            landscape.push_str(&format!(
                "{mode},{},{},{}\n",
                fmt_f64(sweep.weight),
                fmt_f64(*theta),
                fmt_f64(*value)
            ));
        }
        for &idx in &sweep.extrema {
            extrema.push_str(&format!(
                "{mode},{},{},{},{kind}\n",
                fmt_f64(sweep.weight),
                fmt_f64(sweep.thetas[idx]),
                fmt_f64(sweep.values[idx])
            ));
        }
        series.push((
            format!("{mode} w={}", sweep.weight),
            sweep
                .thetas
                .iter()
                .zip(&sweep.values)
                .map(|(&t, &v)| (t, v))
                .collect::<Vec<_>>(),
        ));
    }
    emit(dir, "policy_landscape.csv", landscape.as_bytes(), &mut files)?;
    emit(dir, "policy_extrema.csv", extrema.as_bytes(), &mut files)?;
    emit(dir, "policy_landscape.svg", &line_chart_svg(&series, false), &mut files)?;
    Ok(files)
}

/// `termination`: trajectory-objective slices over the same plane for every
/// (cost/reward) x (termination mode) variant in the config.
pub fn cmd_termination(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let horizon = cfg.task.horizons[0];
    let choice = cfg.task.action_spaces[0];
    let mut files = Vec::new();
    for objective in [ObjectiveMode::Cost, ObjectiveMode::Reward] {
        for &mode in &cfg.task.terminations {
            let mut task = cfg.task.build(horizon, choice, mode);
            task.objective = objective;
            let f = trajectory_objective(&task);
            let dim = f.dimension();
            // One shared plane across variants so the figures compare the
            // same slice under different treatments.
            let (u, v) = sample_basis(cfg.slice.basis, dim, mix_seed(cfg.seed, &[0]))?;
            let plane = SlicePlane::new(
                vec![0.0; dim],
                u,
                v,
                cfg.slice.extent,
                cfg.slice.resolution,
            )?;
            let grid = evaluate_grid(&f, &plane, cfg.slice.episodes, mix_seed(cfg.seed, &[1]))?;
            let objective_name = match objective {
                ObjectiveMode::Cost => "cost",
                ObjectiveMode::Reward => "reward",
            };
            render_grid(
                dir,
                &format!("traj_{objective_name}_{}", termination_mode_name(mode)),
                &grid,
                cfg.slice.sigma,
                &mut files,
            )?;
        }
    }
    Ok(files)
}

/// One variant's aggregated CMA-ES runs.
#[derive(Clone, Debug)]
pub struct VariantRuns {
    pub label: String,
    pub runs: Vec<OptimizerRun>,
    pub final_mean_dist: f64,
}

/// Runs the configured CMA-ES comparison; exposed for the acceptance suite.
pub fn opt_compare_runs(cfg: &ExperimentConfig) -> Result<Vec<VariantRuns>> {
    let horizon = cfg.task.horizons[0];
    let mut variants = Vec::new();
    for (vi, label) in cfg.optimizer.variants.iter().enumerate() {
        let (choice, objective) = parse_variant(label)?;
        let mut task = cfg.task.build(horizon, choice, cfg.task.terminations[0]);
        task.objective = objective;
        let f = trajectory_objective(&task);
        let x0 = vec![cfg.optimizer.x0; f.dimension()];
        let runs: Vec<OptimizerRun> = (0..cfg.optimizer.runs)
            .into_par_iter()
            .map(|r| {
                let run_cfg = CmaesConfig {
                    population: cfg.optimizer.population,
                    sigma0: cfg.optimizer.sigma0,
                    max_evals: cfg.optimizer.max_evals,
                    seed: mix_seed(cfg.seed, &[vi as u64, r as u64]),
                };
                cmaes_minimize(&f, &x0, &run_cfg)
            })
            .collect::<Result<_>>()?;
        let table = compare_runs(&runs, f.known_optimum())?;
        let final_mean_dist = table.last().expect("nonempty history").mean_dist;
        variants.push(VariantRuns {
            label: label.clone(),
            runs,
            final_mean_dist,
        });
    }
    Ok(variants)
}

/// `opt-compare`: CMA-ES convergence per task variant, with per-variant
/// comparison tables, a final-distance summary, and a convergence plot.
pub fn cmd_opt_compare(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let variants = opt_compare_runs(cfg)?;
    let mut files = Vec::new();
    let mut summary = String::from("variant,final_mean_dist,final_std_dist\n");
    let mut series = Vec::new();
    for variant in &variants {
        let table = compare_runs(&variant.runs, None)?;
        let last = table.last().expect("nonempty table");
        summary.push_str(&format!(
            "{},{},{}\n",
            variant.label,
            fmt_f64(last.mean_dist),
            fmt_f64(last.std_dist)
        ));
        emit(
            dir,
            &format!("compare_{}.csv", sanitize(&variant.label)),
            comparison_csv(&table).as_bytes(),
            &mut files,
        )?;
        for (r, run) in variant.runs.iter().enumerate() {
            emit(
                dir,
                &format!("run_{}_{r:02}.csv", sanitize(&variant.label)),
                run.history_csv().as_bytes(),
                &mut files,
            )?;
        }
        series.push((
            variant.label.clone(),
            table
                .iter()
                .map(|row| (row.evals as f64, row.mean_dist))
                .collect::<Vec<_>>(),
        ));
    }
    emit(dir, "opt_compare_summary.csv", summary.as_bytes(), &mut files)?;
    emit(dir, "opt_compare.svg", &line_chart_svg(&series, true), &mut files)?;
    Ok(files)
}

/// `theory`: slice-kappa statistics for the intrinsic-dimensionality
/// quadratic plus slices of the multimodal test functions.
pub fn cmd_theory(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();

    let mut detail = String::from("d,k,rep,kappa\n");
    let mut summary = String::from("d,k,median_kappa,infinite_fraction\n");
    for &d in &cfg.theory.d_values {
        for &k in &cfg.theory.k_values {
            if k > d {
                continue;
            }
            let spec = QuadraticKSpec::new(d, k, cfg.theory.eps)?;
            let f = make_objective(ObjectiveKind::QuadraticK(spec))?;
            let center = vec![0.0; d];
            let kappas: Vec<f64> = (0..cfg.theory.bases)
                .into_par_iter()
                .map(|rep| {
                    let (u, v) = sample_basis(
                        cfg.slice.basis,
                        d,
                        mix_seed(cfg.seed, &[d as u64, k as u64, rep as u64]),
                    )?;
                    Ok(slice_condition_number(&f, &center, &u, &v, DEFAULT_STEP_ANALYTIC)?.kappa)
                })
                .collect::<Result<_>>()?;
            for (rep, kappa) in kappas.iter().enumerate() {
                detail.push_str(&format!("{d},{k},{rep},{}\n", fmt_f64(*kappa)));
            }
            let infinite = kappas.iter().filter(|k| k.is_infinite()).count();
            summary.push_str(&format!(
                "{d},{k},{},{}\n",
                fmt_f64(median(&kappas)),
                fmt_f64(infinite as f64 / kappas.len().max(1) as f64)
            ));

            let (u, v) = sample_basis(cfg.slice.basis, d, mix_seed(cfg.seed, &[d as u64, k as u64, 0]))?;
            let plane =
                SlicePlane::new(center.clone(), u, v, cfg.slice.extent, cfg.slice.resolution)?;
            let grid = evaluate_grid(&f, &plane, 1, cfg.seed)?;
            render_grid(dir, &format!("kd_d{d}_k{k}"), &grid, cfg.slice.sigma, &mut files)?;
        }
    }
    emit(dir, "theory_kappa.csv", detail.as_bytes(), &mut files)?;
    emit(dir, "theory_kappa_summary.csv", summary.as_bytes(), &mut files)?;

    for name in &cfg.theory.functions {
        for &d in &cfg.theory.d_values {
            let (kind, centers): (ObjectiveKind, Vec<(&str, Vec<f64>)>) = match name.as_str() {
                "rastrigin" => (
                    ObjectiveKind::Rastrigin { dimension: d },
                    vec![("origin", vec![0.0; d])],
                ),
                "bimodal" => (
                    ObjectiveKind::Bimodal { dimension: d },
                    vec![("origin", vec![0.0; d]), ("mode", vec![1.0; d])],
                ),
                other => {
                    return Err(Error::config(format!(
                        "theory.functions: unknown function `{other}`"
                    )))
                }
            };
            let f = make_objective(kind)?;
            for (center_name, center) in centers {
                let (u, v) = sample_basis(
                    cfg.slice.basis,
                    d,
                    mix_seed(cfg.seed, &[0xF0, d as u64]),
                )?;
                let plane =
                    SlicePlane::new(center, u, v, cfg.slice.extent, cfg.slice.resolution)?;
                let grid = evaluate_grid(&f, &plane, 1, cfg.seed)?;
                render_grid(
                    dir,
                    &format!("{name}_{center_name}_d{d}"),
                    &grid,
                    cfg.slice.sigma,
                    &mut files,
                )?;
            }
        }
    }
    Ok(files)
}

/// `hessian-report`: conditioning report for the configured analytic
/// objective (at its known optimum) or the primary pendulum task (at the
/// all-zeros optimum).
pub fn cmd_hessian_report(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let (f, default_step): (ObjectiveHandle, f64) = if cfg.hessian.objective.is_empty() {
        let task = cfg.task.primary();
        (trajectory_objective(&task), DEFAULT_STEP_PENDULUM)
    } else {
        let kind: ObjectiveKind = cfg.hessian.objective.parse()?;
        (make_objective(kind)?, DEFAULT_STEP_ANALYTIC)
    };
    let x = f
        .known_optimum()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; f.dimension()]);
    let h = if cfg.hessian.step > 0.0 {
        cfg.hessian.step
    } else {
        default_step
    };
    let report = HessianReport::from_objective(&f, &x, h, cfg.hessian.rank_tol)?;
    let mut files = Vec::new();
    emit(dir, "hessian_report.txt", report.to_document().as_bytes(), &mut files)?;
    Ok(files)
}

/// `reproduce-all`: run every `*.cfg` in a directory (sorted by name). An
/// `--out` override becomes the base directory for each config's own
/// relative output path.
pub fn reproduce_all(configs_dir: &Path, overrides: &Overrides) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs_dir)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", configs_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "cfg"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::config(format!(
            "no .cfg files in {}",
            configs_dir.display()
        )));
    }
    for path in &entries {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = overrides.workers {
            cfg.workers = workers;
        }
        if let Some(base) = &overrides.out {
            // Redirect each config's outputs under the base, keyed by the
            // config file name so absolute `out` paths cannot escape it.
            let leaf = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| cfg.experiment.clone());
            cfg.out_dir = Path::new(base).join(leaf).to_string_lossy().into_owned();
        }
        eprintln!("reproduce-all: {} ({})", path.display(), cfg.experiment);
        dispatch(&cfg)?;
    }
    Ok(())
}
