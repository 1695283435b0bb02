//! Property tests for the pendulum rollout machinery and the analytic
//! objectives.

use optslice::objectives::{quadratic_k_eval, QuadraticKSpec};
use optslice::pendulum::{
    control_point_count, rollout, spline_expand, target_angle_closed_form, trajectory_objective,
    ActionSpace, ObjectiveMode, PendulumState, PendulumTask, TerminationConfig, TerminationMode,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pd_rollout_agrees_with_closed_form(
        targets in prop::collection::vec(-2.0f64..2.0, 30),
        alpha0 in -1.0f64..1.0,
        omega0 in -1.0f64..1.0,
    ) {
        let mut task = PendulumTask::new(30);
        task.action_space = ActionSpace::target_angle();
        task.initial_state = PendulumState::new(alpha0, omega0);
        let traj = rollout(&task, &targets).unwrap();
        let oracle = target_angle_closed_form(&targets, task.initial_state, &task.params);
        for (got, want) in traj.states.iter().zip(&oracle) {
            prop_assert!((got.alpha - want.alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn reward_totals_respect_the_upper_bound(
        actions in prop::collection::vec(-5.0f64..5.0, 25),
        weight in 0.0f64..3.0,
    ) {
        let mut task = PendulumTask::new(25);
        task.objective = ObjectiveMode::Reward;
        task.action_weight = weight;
        let traj = rollout(&task, &actions).unwrap();
        let bound = (1.0 + weight) * 25.0;
        prop_assert!(traj.total > 0.0 && traj.total <= bound * (1.0 + 1e-12));
        for &v in &traj.per_step_values {
            prop_assert!(v > 0.0 && v <= (1.0 + weight) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cost_totals_are_nonnegative_and_zero_only_at_rest(
        actions in prop::collection::vec(-3.0f64..3.0, 20),
    ) {
        let task = PendulumTask::new(20);
        let traj = rollout(&task, &actions).unwrap();
        prop_assert!(traj.total >= 0.0);
        let all_zero = actions.iter().all(|&a| a == 0.0);
        if all_zero {
            prop_assert_eq!(traj.total, 0.0);
        } else {
            // Any nonzero torque contributes w * tau^2 > 0 from rest.
            prop_assert!(traj.total > 0.0);
        }
    }

    #[test]
    fn plain_termination_never_increases_reward(
        scale in 0.1f64..10.0,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let mut terminated = PendulumTask::new(40);
        terminated.objective = ObjectiveMode::Reward;
        terminated.termination = TerminationConfig::enabled(TerminationMode::Plain);
        let mut free = terminated.clone();
        free.termination.enabled = false;

        let actions: Vec<f64> = (0..40)
            .map(|i| scale * ((i as f64) * 0.7 + phase).sin())
            .collect();
        let capped = rollout(&terminated, &actions).unwrap().total;
        let full = rollout(&free, &actions).unwrap().total;
        prop_assert!(capped <= full + 1e-12);
    }

    #[test]
    fn rollouts_are_bit_reproducible(
        actions in prop::collection::vec(-2.0f64..2.0, 15),
    ) {
        let mut task = PendulumTask::new(15);
        task.objective = ObjectiveMode::Reward;
        let a = rollout(&task, &actions).unwrap();
        let b = rollout(&task, &actions).unwrap();
        prop_assert_eq!(a.total.to_bits(), b.total.to_bits());
    }

    #[test]
    fn quadratic_k_scales_quadratically(
        x in prop::collection::vec(-10.0f64..10.0, 6),
        c in -4.0f64..4.0,
    ) {
        let spec = QuadraticKSpec::new(6, 2, 0.05).unwrap();
        let base = quadratic_k_eval(&x, &spec).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let got = quadratic_k_eval(&scaled, &spec).unwrap();
        prop_assert!((got - c * c * base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn spline_interpolates_its_knots(
        points in prop::collection::vec(-2.0f64..2.0, 5),
    ) {
        let spacing = 5;
        let horizon = 20;
        prop_assert_eq!(control_point_count(horizon, spacing), points.len());
        let targets = spline_expand(&points, horizon, spacing).unwrap();
        // Knots at multiples of the spacing reproduce their control points.
        for (knot, expected) in points.iter().enumerate().take(horizon / spacing + 1) {
            let t = knot * spacing;
            if t < horizon {
                prop_assert!((targets[t] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trajectory_objective_matches_rollout(
        actions in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let task = PendulumTask::new(12);
        let f = trajectory_objective(&task);
        let direct = rollout(&task, &actions).unwrap().total;
        prop_assert_eq!(f.evaluate(&actions, 0).to_bits(), direct.to_bits());
    }
}

#[test]
fn termination_counts_completed_steps() {
    // Constant strong torque: find the crossing step and check the value
    // bookkeeping against a manual simulation.
    let mut task = PendulumTask::new(30);
    task.termination = TerminationConfig::enabled(TerminationMode::Plain);
    let actions = vec![6.0; 30];
    let traj = rollout(&task, &actions).unwrap();
    let n = traj.terminated_at.expect("must terminate");
    assert_eq!(traj.per_step_values.len(), n);
    assert_eq!(traj.torques.len(), n + 1);
    assert!(traj.states[n + 1].alpha.abs() > task.termination.threshold);
    for state in &traj.states[..=n] {
        assert!(state.alpha.abs() <= task.termination.threshold);
    }
}
