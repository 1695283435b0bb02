//! Inverted-pendulum dynamics and the trajectory/policy optimization
//! objectives built on top of them.
//!
//! The pendulum starts upright (angle measured as deviation from vertical),
//! so the optimal action sequence of the balancing task is all zeros and the
//! cost landscape has a known optimum at the origin of action space.

use crate::objectives::ObjectiveHandle;
use crate::{Error, Result};

/// Physical constants of the simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendulumParams {
    /// Integration timestep (s).
    pub delta: f64,
    /// Pendulum length.
    pub length: f64,
    /// Gravity force.
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            delta: 0.1,
            length: 0.2,
            gravity: 0.981,
        }
    }
}

/// Pendulum state: angular deviation from upright and angular velocity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PendulumState {
    pub alpha: f64,
    pub omega: f64,
}

impl PendulumState {
    pub fn new(alpha: f64, omega: f64) -> Self {
        PendulumState { alpha, omega }
    }
}

/// How optimizer actions are interpreted by the rollout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSpaceKind {
    /// Actions are joint torques applied directly.
    Torque,
    /// Actions are target angles converted to torques by a PD controller.
    TargetAngle,
    /// Actions are spline control points defining per-step target angles.
    SplineTargetAngle,
}

/// Action-space configuration. The PD gains default to `kp = 1`, `kd = -1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionSpace {
    pub kind: ActionSpaceKind,
    pub kp: f64,
    pub kd: f64,
    /// Control-point interval in timesteps; only used by the spline kind.
    pub spline_spacing: usize,
}

impl ActionSpace {
    pub fn torque() -> Self {
        ActionSpace {
            kind: ActionSpaceKind::Torque,
            kp: 1.0,
            kd: -1.0,
            spline_spacing: 10,
        }
    }

    pub fn target_angle() -> Self {
        ActionSpace {
            kind: ActionSpaceKind::TargetAngle,
            ..ActionSpace::torque()
        }
    }

    pub fn spline_target_angle(spacing: usize) -> Self {
        ActionSpace {
            kind: ActionSpaceKind::SplineTargetAngle,
            spline_spacing: spacing,
            ..ActionSpace::torque()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ActionSpaceKind::SplineTargetAngle && self.spline_spacing < 2 {
            return Err(Error::invalid("spline spacing must be >= 2"));
        }
        Ok(())
    }
}

/// What happens when a rollout leaves the permitted angle range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationMode {
    /// No adjustment beyond stopping accumulation.
    None,
    /// Same as `None`; kept as an explicit "terminate and do nothing" mode.
    Plain,
    /// Adds a per-step bonus for every completed non-terminal step (reward
    /// objectives).
    AliveBonus,
    /// Adds a per-remaining-step penalty after termination (cost objectives).
    Penalty,
}

/// Early-termination configuration. Disabled by default; the threshold
/// follows the balancing experiments (`|alpha| > 2.0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminationConfig {
    pub enabled: bool,
    pub threshold: f64,
    pub mode: TerminationMode,
    /// Per-step reward addition for non-terminal steps.
    pub alive_bonus: f64,
    /// Per-remaining-step cost addition after termination. The default is
    /// the squared threshold, a lower bound on the cost of sitting at the
    /// termination boundary.
    pub penalty_per_step: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        TerminationConfig {
            enabled: false,
            threshold: 2.0,
            mode: TerminationMode::None,
            alive_bonus: 1.0,
            penalty_per_step: 4.0,
        }
    }
}

impl TerminationConfig {
    pub fn disabled() -> Self {
        TerminationConfig::default()
    }

    pub fn enabled(mode: TerminationMode) -> Self {
        TerminationConfig {
            enabled: true,
            mode,
            ..TerminationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold <= 0.0 {
            return Err(Error::invalid("termination threshold must be positive"));
        }
        if self.alive_bonus < 0.0 || self.penalty_per_step < 0.0 {
            return Err(Error::invalid(
                "alive bonus and termination penalty must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Whether per-step terms are accumulated as quadratic costs or
/// exponentiated rewards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveMode {
    Cost,
    Reward,
}

/// Full description of one pendulum optimization experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct PendulumTask {
    pub params: PendulumParams,
    /// Planning horizon T in timesteps.
    pub horizon: usize,
    /// Action-cost weight w.
    pub action_weight: f64,
    pub action_space: ActionSpace,
    pub objective: ObjectiveMode,
    pub termination: TerminationConfig,
    pub initial_state: PendulumState,
}

impl PendulumTask {
    /// A cost-minimization balancing task from the upright rest state.
    pub fn new(horizon: usize) -> Self {
        PendulumTask {
            params: PendulumParams::default(),
            horizon,
            action_weight: 1.0,
            action_space: ActionSpace::torque(),
            objective: ObjectiveMode::Cost,
            termination: TerminationConfig::disabled(),
            initial_state: PendulumState::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if self.action_weight < 0.0 {
            return Err(Error::invalid("action weight must be nonnegative"));
        }
        self.action_space.validate()?;
        self.termination.validate()
    }

    /// Length of the optimized action vector: the horizon for torque and
    /// target-angle actions, the control-point count for spline actions.
    pub fn action_dimension(&self) -> usize {
        match self.action_space.kind {
            ActionSpaceKind::SplineTargetAngle => {
                control_point_count(self.horizon, self.action_space.spline_spacing)
            }
            _ => self.horizon,
        }
    }

    /// True when the pendulum starts balanced at rest, in which case the
    /// all-zero action vector is the exact optimum.
    pub fn starts_at_optimum(&self) -> bool {
        self.initial_state.alpha == 0.0 && self.initial_state.omega == 0.0
    }
}

/// Number of spline control points covering a horizon of `t` steps.
pub fn control_point_count(t: usize, spacing: usize) -> usize {
    t.div_ceil(spacing) + 1
}

/// One semi-implicit integration step: the velocity is updated first and the
/// new velocity advances the angle.
pub fn step(state: PendulumState, torque: f64, params: &PendulumParams) -> PendulumState {
    let omega = state.omega
        + params.delta * (torque + 0.5 * params.length * params.gravity * state.alpha.sin());
    let alpha = state.alpha + params.delta * omega;
    PendulumState { alpha, omega }
}

/// PD torque for a target angle, evaluated on the state preceding the step:
/// `kp * (target - alpha) + kd * omega`.
pub fn pd_torque(target: f64, state: &PendulumState, space: &ActionSpace) -> f64 {
    debug_assert!(space.kind != ActionSpaceKind::Torque);
    space.kp * (target - state.alpha) + space.kd * state.omega
}

/// Uniform Catmull-Rom evaluation on one segment with local parameter
/// `t` in `[0, 1]`.
fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

/// Expands spline control points into per-timestep targets by uniform
/// Catmull-Rom interpolation. Control points are spaced `spacing` timesteps
/// apart; boundary segments duplicate the endpoint control points.
pub fn spline_expand(control_points: &[f64], horizon: usize, spacing: usize) -> Result<Vec<f64>> {
    if spacing < 2 {
        return Err(Error::invalid("spline spacing must be >= 2"));
    }
    let expected = control_point_count(horizon, spacing);
    if control_points.len() != expected {
        return Err(Error::invalid(format!(
            "spline_expand: expected {expected} control points for horizon {horizon}, got {}",
            control_points.len()
        )));
    }
    let n_segments = control_points.len() - 1;
    let point = |i: isize| -> f64 {
        let clamped = i.clamp(0, (control_points.len() - 1) as isize);
        control_points[clamped as usize]
    };
    let mut targets = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let u = t as f64 / spacing as f64;
        let segment = (u.floor() as usize).min(n_segments - 1);
        let local = u - segment as f64;
        let s = segment as isize;
        targets.push(catmull_rom(
            point(s - 1),
            point(s),
            point(s + 1),
            point(s + 2),
            local,
        ));
    }
    Ok(targets)
}

/// Full record of a simulated trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Visited states; index 0 is the initial state. Includes the state of
    /// the step that crossed the termination threshold, if any.
    pub states: Vec<PendulumState>,
    /// Torque applied at each simulated step.
    pub torques: Vec<f64>,
    /// Instantaneous cost or reward terms for the accumulated steps.
    pub per_step_values: Vec<f64>,
    /// Number of completed non-terminal steps; the crossing step is
    /// `terminated_at + 1` and contributed no value.
    pub terminated_at: Option<usize>,
    /// Accumulated objective value including termination adjustments.
    pub total: f64,
}

fn simulate(task: &PendulumTask, mut torque_for: impl FnMut(usize, &PendulumState) -> f64) -> Trajectory {
    let horizon = task.horizon;
    let w = task.action_weight;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut torques = Vec::with_capacity(horizon);
    let mut per_step_values = Vec::with_capacity(horizon);
    let mut terminated_at = None;
    let mut total = 0.0;

    states.push(task.initial_state);
    for t in 0..horizon {
        let prev = states[t];
        let torque = torque_for(t, &prev);
        let next = step(prev, torque, &task.params);
        states.push(next);
        torques.push(torque);

        if task.termination.enabled && next.alpha.abs() > task.termination.threshold {
            // The crossing step contributes no cost or reward.
            terminated_at = Some(t);
            break;
        }
        let value = match task.objective {
            ObjectiveMode::Cost => next.alpha * next.alpha + w * torque * torque,
            ObjectiveMode::Reward => {
                (-next.alpha * next.alpha).exp() + w * (-torque * torque).exp()
            }
        };
        per_step_values.push(value);
        total += value;
    }

    if task.termination.enabled {
        let completed = terminated_at.unwrap_or(horizon) as f64;
        match task.termination.mode {
            TerminationMode::AliveBonus => total += task.termination.alive_bonus * completed,
            TerminationMode::Penalty => {
                total += task.termination.penalty_per_step * (horizon as f64 - completed)
            }
            TerminationMode::None | TerminationMode::Plain => {}
        }
    }

    Trajectory {
        states,
        torques,
        per_step_values,
        terminated_at,
        total,
    }
}

/// Simulates the task under the given action vector and accumulates the
/// per-step objective. Actions are torques, per-step target angles, or
/// spline control points depending on the task's action space.
pub fn rollout(task: &PendulumTask, actions: &[f64]) -> Result<Trajectory> {
    task.validate()?;
    let expected = task.action_dimension();
    if actions.len() != expected {
        return Err(Error::invalid(format!(
            "rollout: expected {expected} actions, got {}",
            actions.len()
        )));
    }
    match task.action_space.kind {
        ActionSpaceKind::Torque => Ok(simulate(task, |t, _prev| actions[t])),
        ActionSpaceKind::TargetAngle => Ok(simulate(task, |t, prev| {
            pd_torque(actions[t], prev, &task.action_space)
        })),
        ActionSpaceKind::SplineTargetAngle => {
            let targets =
                spline_expand(actions, task.horizon, task.action_space.spline_spacing)?;
            Ok(simulate(task, |t, prev| {
                pd_torque(targets[t], prev, &task.action_space)
            }))
        }
    }
}

/// P-controller policy output: `theta * alpha`.
pub fn p_policy_action(theta: f64, state: &PendulumState) -> f64 {
    theta * state.alpha
}

/// Runs one closed-loop episode with the P-controller policy from the given
/// initial angle (zero initial velocity).
pub fn policy_rollout(theta: f64, task: &PendulumTask, initial_angle: f64) -> Trajectory {
    let mut episode_task = task.clone();
    episode_task.initial_state = PendulumState::new(initial_angle, 0.0);
    simulate(&episode_task, |_t, prev| p_policy_action(theta, prev))
}

/// Mean episode total of the P-controller policy over a set of initial
/// angles. Episodes are summed in fixed index order, so the result is
/// deterministic. The task must use the torque action space (the policy
/// outputs torques directly).
pub fn policy_objective(theta: f64, task: &PendulumTask, initial_angles: &[f64]) -> f64 {
    assert!(!initial_angles.is_empty(), "policy_objective: no episodes");
    assert_eq!(
        task.action_space.kind,
        ActionSpaceKind::Torque,
        "policy_objective requires the torque action space"
    );
    let sum: f64 = initial_angles
        .iter()
        .map(|&a| policy_rollout(theta, task, a).total)
        .sum();
    sum / initial_angles.len() as f64
}

/// Default episode start angles for policy evaluation: evenly spaced on
/// `[-1, 1]` rad, covering both basins of attraction.
pub fn default_policy_angles() -> Vec<f64> {
    crate::util::linspace(-1.0, 1.0, 10)
}

/// Wraps the task as a minimizable [`ObjectiveHandle`] over the action
/// vector. Reward-mode totals are negated so that every handle is minimized;
/// tasks starting balanced at rest carry the all-zeros known optimum.
pub fn trajectory_objective(task: &PendulumTask) -> ObjectiveHandle {
    let dimension = task.action_dimension();
    let sign = match task.objective {
        ObjectiveMode::Cost => 1.0,
        ObjectiveMode::Reward => -1.0,
    };
    let known_optimum = task.starts_at_optimum().then(|| vec![0.0; dimension]);
    let eval_task = task.clone();
    let mut handle = ObjectiveHandle::new(dimension, move |actions, _seed| {
        sign * rollout(&eval_task, actions)
            .expect("action dimension enforced by handle")
            .total
    });
    if let Some(optimum) = known_optimum {
        handle = handle.with_known_optimum(optimum);
    }
    handle
}

/// Closed-form angle recursion for the target-angle parameterization with
/// `kp = 1`, `kd = -1`:
/// `alpha_t = (1 - d^2) alpha_{t-1} + (d - d^2) omega_{t-1}
///           + d^2 (target_t + 0.5 l g sin(alpha_{t-1}))`.
///
/// Used as the independent oracle for the PD-equivalence check.
pub fn target_angle_closed_form(
    targets: &[f64],
    initial: PendulumState,
    params: &PendulumParams,
) -> Vec<PendulumState> {
    let d = params.delta;
    let mut states = vec![initial];
    for &target in targets {
        let prev = states[states.len() - 1];
        let alpha = (1.0 - d * d) * prev.alpha
            + (d - d * d) * prev.omega
            + d * d * (target + 0.5 * params.length * params.gravity * prev.alpha.sin());
        let omega = (alpha - prev.alpha) / d;
        states.push(PendulumState { alpha, omega });
    }
    states
}
