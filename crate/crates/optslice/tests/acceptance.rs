//! Acceptance suite: one test per criterion. Each test prints a single
//! `criterion NN <name>: PASS` line when its assertions hold, so a full run
//! doubles as a checklist.

// Test fixtures tweak a default config field by field.
#![allow(clippy::field_reassign_with_default)]

use optslice::analysis::{
    condition_number, jacobi_eigen, numeric_hessian, slice_condition_number,
    slice_restriction_matrix, HessianReport, DEFAULT_EIGEN_TOL, DEFAULT_RANK_TOL,
    DEFAULT_STEP_ANALYTIC, DEFAULT_STEP_PENDULUM,
};
use optslice::cli;
use optslice::config::ExperimentConfig;
use optslice::objectives::{make_objective, ObjectiveKind, QuadraticKSpec};
use optslice::optimize::{cmaes_minimize, CmaesConfig};
use optslice::pendulum::{
    rollout, target_angle_closed_form, trajectory_objective, ActionSpace, ObjectiveMode,
    PendulumState, PendulumTask, TerminationMode,
};
use optslice::slices::{
    evaluate_grid, gaussian_blur, sample_orthonormal_basis, LandscapeGrid, SlicePlane,
    DEFAULT_BLUR_SIGMA, DEFAULT_EPISODES, DEFAULT_RESOLUTION,
};
use optslice::util::mix_seed;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn pass(line: &str) {
    println!("{line}: PASS");
}

fn quadratic(d: usize, k: usize, eps: f64) -> optslice::ObjectiveHandle {
    make_objective(ObjectiveKind::QuadraticK(
        QuadraticKSpec::new(d, k, eps).unwrap(),
    ))
    .unwrap()
}

/// Criterion 1: the slice condition number never exceeds the full condition
/// number 1/eps beyond relative tolerance 1e-3, across dimensions and
/// 500 random orthonormal bases per setting.
#[test]
fn criterion_01_slice_kappa_is_bounded_by_full_kappa() {
    for &eps in &[0.01, 0.1] {
        let full_kappa = 1.0 / eps;
        let bound = full_kappa * (1.0 + 1e-3);
        for &d in &[3usize, 10, 50] {
            let k = d.div_ceil(2);
            let f = quadratic(d, k, eps);
            let center = vec![0.0; d];
            for rep in 0..500u64 {
                let seed = mix_seed(0xACC1, &[d as u64, (eps * 1000.0) as u64, rep]);
                let (u, v) = sample_orthonormal_basis(d, seed).unwrap();
                let c =
                    slice_condition_number(&f, &center, &u, &v, DEFAULT_STEP_ANALYTIC).unwrap();
                assert!(
                    c.kappa.is_finite() && c.kappa <= bound,
                    "kappa_2d = {} exceeds bound {bound} (d={d}, k={k}, eps={eps}, rep={rep})",
                    c.kappa
                );
            }
        }
    }
    pass("criterion 01 slice_kappa_bounded_by_full_kappa");
}

/// Criterion 2: restriction-matrix extremes. k = 1 gives a singular
/// restriction (det < 1e-12, kappa flagged infinite); k = d gives the
/// identity with kappa = 1 within 1e-6. Both the analytic restriction
/// matrix and the numeric slice Hessian agree.
#[test]
fn criterion_02_restriction_matrix_extremes() {
    let d = 10;
    let f_k1 = quadratic(d, 1, 0.0);
    let f_kd = quadratic(d, d, 0.0);
    let center = vec![0.0; d];
    for rep in 0..100u64 {
        let (u, v) = sample_orthonormal_basis(d, mix_seed(0xACC2, &[rep])).unwrap();

        let a = slice_restriction_matrix(&u, &v, 1).unwrap();
        let det = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
        assert!(det.abs() < 1e-12, "det(A) = {det} at rep {rep}");
        let eigen = jacobi_eigen(&a, DEFAULT_EIGEN_TOL).unwrap();
        let c = condition_number(&eigen.values, DEFAULT_RANK_TOL).unwrap();
        assert!(c.kappa.is_infinite(), "k=1 kappa should be infinite");
        let numeric =
            slice_condition_number(&f_k1, &center, &u, &v, DEFAULT_STEP_ANALYTIC).unwrap();
        assert!(numeric.kappa.is_infinite(), "k=1 numeric kappa infinite");

        let a = slice_restriction_matrix(&u, &v, d).unwrap();
        let eigen = jacobi_eigen(&a, DEFAULT_EIGEN_TOL).unwrap();
        let c = condition_number(&eigen.values, DEFAULT_RANK_TOL).unwrap();
        assert!((c.kappa - 1.0).abs() < 1e-6, "k=d kappa = {}", c.kappa);
        let numeric =
            slice_condition_number(&f_kd, &center, &u, &v, DEFAULT_STEP_ANALYTIC).unwrap();
        assert!(
            (numeric.kappa - 1.0).abs() < 1e-6,
            "k=d numeric kappa = {}",
            numeric.kappa
        );
    }
    pass("criterion 02 restriction_matrix_extremes");
}

/// Criterion 3: kappa = 1/eps closed form. Analytic and numeric Hessians of
/// the intrinsic-dimensionality quadratic agree on kappa = 100 at
/// eps = 0.01 within 0.1%.
#[test]
fn criterion_03_kappa_closed_form_agreement() {
    let spec = QuadraticKSpec::new(5, 2, 0.01).unwrap();
    let f = quadratic(5, 2, 0.01);
    assert_eq!(spec.condition_number(), 100.0);

    let analytic = HessianReport::from_matrix(&spec.hessian(), DEFAULT_RANK_TOL).unwrap();
    assert!(
        (analytic.kappa - 100.0).abs() / 100.0 < 1e-3,
        "analytic kappa = {}",
        analytic.kappa
    );

    let numeric =
        HessianReport::from_objective(&f, &[0.0; 5], DEFAULT_STEP_ANALYTIC, DEFAULT_RANK_TOL)
            .unwrap();
    assert!(
        (numeric.kappa - 100.0).abs() / 100.0 < 1e-3,
        "numeric kappa = {}",
        numeric.kappa
    );
    pass("criterion 03 kappa_closed_form_agreement");
}

fn pendulum_kappa(horizon: usize, space: ActionSpace, objective: ObjectiveMode) -> HessianReport {
    let mut task = PendulumTask::new(horizon);
    task.action_space = space;
    task.objective = objective;
    let f = trajectory_objective(&task);
    let x = vec![0.0; f.dimension()];
    HessianReport::from_objective(&f, &x, DEFAULT_STEP_PENDULUM, DEFAULT_RANK_TOL).unwrap()
}

/// Criterion 4: torque-task conditioning grows strictly with the horizon,
/// and the target-angle parameterization is better conditioned than raw
/// torques at T = 100.
#[test]
fn criterion_04_conditioning_grows_with_horizon() {
    let horizons = [1usize, 5, 10, 25, 50, 100];
    let mut last = 0.0;
    let mut torque_at_100 = 0.0;
    for &t in &horizons {
        let report = pendulum_kappa(t, ActionSpace::torque(), ObjectiveMode::Cost);
        assert!(
            report.kappa.is_finite() && report.kappa > last,
            "kappa(T={t}) = {} not above previous {last}",
            report.kappa
        );
        last = report.kappa;
        if t == 100 {
            torque_at_100 = report.kappa;
        }
    }
    let angle = pendulum_kappa(100, ActionSpace::target_angle(), ObjectiveMode::Cost);
    assert!(
        angle.kappa < torque_at_100,
        "target-angle kappa {} not below torque kappa {torque_at_100}",
        angle.kappa
    );
    pass("criterion 04 conditioning_grows_with_horizon");
}

/// Criterion 5: the cost Hessian and the negated-reward Hessian coincide at
/// the optimum (relative Frobenius difference below 1e-3 at T = 100).
#[test]
fn criterion_05_cost_and_reward_hessians_match_at_optimum() {
    let mut cost_task = PendulumTask::new(100);
    cost_task.objective = ObjectiveMode::Cost;
    let mut reward_task = cost_task.clone();
    reward_task.objective = ObjectiveMode::Reward;

    let cost = trajectory_objective(&cost_task);
    let reward = trajectory_objective(&reward_task); // already negated
    let x = vec![0.0; 100];
    let h_cost = numeric_hessian(&cost, &x, DEFAULT_STEP_PENDULUM).unwrap();
    let h_reward = numeric_hessian(&reward, &x, DEFAULT_STEP_PENDULUM).unwrap();
    let rel = h_cost.frobenius_distance(&h_reward) / h_cost.frobenius_norm();
    assert!(rel < 1e-3, "relative Frobenius difference {rel}");
    pass("criterion 05 cost_reward_hessian_equality_at_optimum");
}

/// Criterion 6: the PD rollout matches the closed-form angle recursion to
/// 1e-12 over 1000 random target sequences at T = 50.
#[test]
fn criterion_06_pd_rollout_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut task = PendulumTask::new(50);
        task.action_space = ActionSpace::target_angle();
        task.initial_state = PendulumState::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let targets: Vec<f64> = (0..50).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let traj = rollout(&task, &targets).unwrap();
        let oracle = target_angle_closed_form(&targets, task.initial_state, &task.params);
        for (got, want) in traj.states.iter().zip(&oracle) {
            worst = worst.max((got.alpha - want.alpha).abs());
        }
    }
    assert!(worst < 1e-12, "max state deviation {worst}");
    pass("criterion 06 pd_closed_form_equivalence");
}

/// Topographic prominence of each strict local optimum (values oriented so
/// higher is better): height above the best saddle separating it from any
/// strictly higher point.
fn prominences(values: &[f64]) -> Vec<(usize, f64)> {
    let mut result = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if !(values[i] > values[i - 1] && values[i] > values[i + 1]) {
            continue;
        }
        let walk = |indices: &mut dyn Iterator<Item = usize>| -> Option<f64> {
            let mut lowest = values[i];
            for j in indices {
                lowest = lowest.min(values[j]);
                if values[j] > values[i] {
                    return Some(lowest);
                }
            }
            None
        };
        let left = walk(&mut (0..i).rev());
        let right = walk(&mut (i + 1..values.len()));
        let saddle = match (left, right) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None, // global optimum
        };
        let prominence = match saddle {
            Some(s) => values[i] - s,
            None => f64::INFINITY,
        };
        result.push((i, prominence));
    }
    result
}

/// Criterion 7: policy landscape structure at T = 200, w = 1, theta step
/// 0.01 on [-1, 1], with 10 evenly spaced start angles.
///
/// (a) Without termination the global cost minimum lies within 0.1 of
///     theta = -0.1. (b) Plain termination introduces a local cost minimum
///     within 0.15 of theta = 0.5 that is absent without termination.
/// (c) Rewards plus termination leave a single basin: undamped-oscillation
///     resonances put shallow ripples on the grid, so unimodality is
///     checked at basin scale, counting only optima whose topographic
///     prominence exceeds 5% of the landscape's value range.
#[test]
fn criterion_07_policy_landscape_structure() {
    let mut cfg = ExperimentConfig::default();
    cfg.task.horizons = vec![200];
    cfg.task.objective = ObjectiveMode::Cost;
    cfg.task.terminations = vec![TerminationMode::None, TerminationMode::Plain];
    let sweeps = cli::policy_sweeps(&cfg).unwrap();
    let no_term = &sweeps[0];
    let plain = &sweeps[1];

    // (a) global minimum near theta = -0.1.
    let best_theta = no_term.thetas[no_term.best];
    assert!(
        (best_theta - (-0.1)).abs() <= 0.1,
        "global cost minimum at theta = {best_theta}"
    );

    // (b) termination adds a basin near theta = 0.5.
    let near_half = |sweep: &cli::PolicySweep| {
        sweep
            .extrema
            .iter()
            .any(|&i| (sweep.thetas[i] - 0.5).abs() <= 0.15)
    };
    assert!(
        !near_half(no_term),
        "unexpected minimum near theta = 0.5 without termination"
    );
    assert!(
        near_half(plain),
        "no local minimum near theta = 0.5 under plain termination"
    );

    // (c) reward + termination: single basin beyond ripple prominence.
    let mut reward_cfg = ExperimentConfig::default();
    reward_cfg.task.horizons = vec![200];
    reward_cfg.task.objective = ObjectiveMode::Reward;
    reward_cfg.task.terminations = vec![TerminationMode::Plain];
    let reward = &cli::policy_sweeps(&reward_cfg).unwrap()[0];
    let (min, max) = reward
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let threshold = 0.05 * (max - min);
    let basins: Vec<(usize, f64)> = prominences(&reward.values)
        .into_iter()
        .filter(|&(_, p)| p > threshold)
        .collect();
    assert_eq!(
        basins.len(),
        1,
        "expected one reward basin, found {basins:?} (threshold {threshold})"
    );
    assert!(
        (reward.thetas[basins[0].0] - (-0.1)).abs() <= 0.1,
        "reward basin at theta = {}",
        reward.thetas[basins[0].0]
    );
    pass("criterion 07 policy_landscape_structure");
}

/// Criterion 8: CMA-ES ordering at T = 100 with lambda = 100, 10 seeds and
/// a fixed 30000-evaluation budget: target angles beat torques on cost, and
/// cost beats reward for the torque parameterization, in mean final
/// distance to the known optimum.
#[test]
fn criterion_08_optimizer_ordering() {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 42;
    cfg.task.horizons = vec![100];
    cfg.optimizer.population = 100;
    cfg.optimizer.sigma0 = 0.5;
    cfg.optimizer.max_evals = 30_000;
    cfg.optimizer.runs = 10;
    cfg.optimizer.x0 = 1.0;
    cfg.optimizer.variants = vec![
        "torque-cost".to_string(),
        "target_angle-cost".to_string(),
        "torque-reward".to_string(),
    ];
    let variants = cli::opt_compare_runs(&cfg).unwrap();
    let dist = |label: &str| {
        variants
            .iter()
            .find(|v| v.label == label)
            .map(|v| v.final_mean_dist)
            .expect("variant present")
    };
    let torque_cost = dist("torque-cost");
    let angle_cost = dist("target_angle-cost");
    let torque_reward = dist("torque-reward");
    assert!(
        angle_cost < torque_cost,
        "angle-cost {angle_cost} not below torque-cost {torque_cost}"
    );
    assert!(
        torque_cost < torque_reward,
        "torque-cost {torque_cost} not below torque-reward {torque_reward}"
    );
    pass("criterion 08 optimizer_ordering");
}

/// Criterion 9: visualization protocol defaults (100x100 grid, 10 episodes
/// per point, blur sigma 1.0), exact constant preservation under blur, and
/// byte-reproducible grids under a fixed seed.
#[test]
fn criterion_09_visualization_protocol() {
    assert_eq!(DEFAULT_RESOLUTION, 100);
    assert_eq!(DEFAULT_EPISODES, 10);
    assert_eq!(DEFAULT_BLUR_SIGMA, 1.0);
    let defaults = optslice::config::SliceConfig::default();
    assert_eq!(defaults.resolution, 100);
    assert_eq!(defaults.episodes, 10);
    assert_eq!(defaults.sigma, 1.0);

    let plane = SlicePlane::new(
        vec![0.0; 2],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        1.0,
        32,
    )
    .unwrap();
    let constant = LandscapeGrid {
        values: vec![1.2345; 32 * 32],
        plane,
        episodes_per_point: 1,
        seed: 0,
        normalized: false,
        blurred_sigma: None,
    };
    let blurred = gaussian_blur(&constant, DEFAULT_BLUR_SIGMA);
    for (a, b) in constant.values.iter().zip(&blurred.values) {
        assert_eq!(a.to_bits(), b.to_bits(), "blur must preserve constants");
    }

    // Byte reproducibility of the slice command under a fixed seed.
    let base = std::env::temp_dir().join("optslice_criterion09");
    let _ = std::fs::remove_dir_all(&base);
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 7;
    cfg.task.horizons = vec![20];
    cfg.slice.resolution = 21;
    cfg.slice.count = 2;
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    let files_a = cli::cmd_slice(&cfg, &dir_a).unwrap();
    let files_b = cli::cmd_slice(&cfg, &dir_b).unwrap();
    assert_eq!(files_a.len(), files_b.len());
    for (fa, fb) in files_a.iter().zip(&files_b) {
        let a = std::fs::read(fa).unwrap();
        let b = std::fs::read(fb).unwrap();
        assert_eq!(a, b, "artifacts differ: {fa:?} vs {fb:?}");
    }
    let mut other = cfg.clone();
    other.seed = 8;
    let files_c = cli::cmd_slice(&other, &base.join("c")).unwrap();
    let a0 = std::fs::read(&files_a[0]).unwrap();
    let c0 = std::fs::read(&files_c[0]).unwrap();
    assert_ne!(a0, c0, "different seeds must change the grid");
    let _ = std::fs::remove_dir_all(&base);
    pass("criterion 09 visualization_protocol");
}

/// Discrete convexity check: nonnegative second differences along every
/// row, column and both main diagonals. Returns the number of violations
/// below the tolerance.
fn convexity_violations(grid: &LandscapeGrid, tol: f64) -> usize {
    let res = grid.resolution();
    let mut violations = 0;
    let mut check_line = |points: &[f64]| {
        for w in points.windows(3) {
            if w[0] - 2.0 * w[1] + w[2] < -tol {
                violations += 1;
            }
        }
    };
    for i in 0..res {
        let row: Vec<f64> = (0..res).map(|j| grid.value(i, j)).collect();
        check_line(&row);
        let col: Vec<f64> = (0..res).map(|j| grid.value(j, i)).collect();
        check_line(&col);
    }
    let diag: Vec<f64> = (0..res).map(|i| grid.value(i, i)).collect();
    check_line(&diag);
    let anti: Vec<f64> = (0..res).map(|i| grid.value(i, res - 1 - i)).collect();
    check_line(&anti);
    violations
}

/// Criterion 10: convexity specificity. Quadratic slices pass the discrete
/// convexity check on every line; 2D Rastrigin slices fail it, confirming
/// the check discriminates.
#[test]
fn criterion_10_convexity_specificity() {
    for &(d, k, eps) in &[(10usize, 1usize, 0.0), (10, 5, 0.0), (10, 10, 0.0), (10, 5, 0.01)] {
        let f = quadratic(d, k, eps);
        for rep in 0..5u64 {
            let (u, v) = sample_orthonormal_basis(d, mix_seed(0xACCA, &[d as u64, k as u64, rep]))
                .unwrap();
            let plane = SlicePlane::new(vec![0.0; d], u, v, 2.0, 41).unwrap();
            let grid = evaluate_grid(&f, &plane, 1, 0).unwrap();
            assert_eq!(
                convexity_violations(&grid, 1e-9),
                0,
                "quadratic slice must be convex (d={d}, k={k}, eps={eps}, rep={rep})"
            );
        }
    }

    let rastrigin = make_objective(ObjectiveKind::Rastrigin { dimension: 2 }).unwrap();
    let (u, v) = sample_orthonormal_basis(2, 0xACCB).unwrap();
    let plane = SlicePlane::new(vec![0.0; 2], u, v, 2.0, 101).unwrap();
    let grid = evaluate_grid(&rastrigin, &plane, 1, 0).unwrap();
    assert!(
        convexity_violations(&grid, 1e-6) > 0,
        "Rastrigin slice should violate convexity"
    );
    pass("criterion 10 convexity_specificity");
}

/// Criterion 11: CMA-ES sanity. The 10-dimensional sphere reaches
/// best_f < 1e-10 within 20000 evaluations for 10 out of 10 seeds.
#[test]
fn criterion_11_cmaes_sphere_sanity() {
    let f = quadratic(10, 10, 0.0);
    for seed in 0..10 {
        let cfg = CmaesConfig {
            population: 100,
            sigma0: 0.5,
            max_evals: 20_000,
            seed,
        };
        let run = cmaes_minimize(&f, &[1.0; 10], &cfg).unwrap();
        assert!(
            run.best_f < 1e-10,
            "seed {seed}: best_f = {} after {} evals",
            run.best_f,
            run.history.last().unwrap().evals
        );
    }
    pass("criterion 11 cmaes_sphere_sanity");
}
