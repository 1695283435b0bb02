//! Declarative experiment configuration: a flat `key = value` text format
//! with `[section]` headers. Every field has a default, unknown keys are
//! rejected, and a parsed config round-trips losslessly through
//! [`ExperimentConfig::to_config_string`].

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::pendulum::{
    ActionSpace, ObjectiveMode, PendulumState, PendulumTask, TerminationConfig, TerminationMode,
};
use crate::util::parse_f64;
use crate::{Error, Result};

/// Action-space choice as written in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSpaceChoice {
    Torque,
    TargetAngle,
    /// Spline with the given control-point spacing.
    Spline(usize),
}

impl ActionSpaceChoice {
    pub fn to_action_space(self) -> ActionSpace {
        match self {
            ActionSpaceChoice::Torque => ActionSpace::torque(),
            ActionSpaceChoice::TargetAngle => ActionSpace::target_angle(),
            ActionSpaceChoice::Spline(spacing) => ActionSpace::spline_target_angle(spacing),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ActionSpaceChoice::Torque => "torque".to_string(),
            ActionSpaceChoice::TargetAngle => "target_angle".to_string(),
            ActionSpaceChoice::Spline(spacing) => format!("spline:{spacing}"),
        }
    }
}

impl FromStr for ActionSpaceChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(spacing) = s.strip_prefix("spline:") {
            let spacing: usize = spacing
                .parse()
                .map_err(|_| Error::config(format!("bad spline spacing `{spacing}`")))?;
            return Ok(ActionSpaceChoice::Spline(spacing));
        }
        match s {
            "torque" => Ok(ActionSpaceChoice::Torque),
            "target_angle" => Ok(ActionSpaceChoice::TargetAngle),
            other => Err(Error::config(format!("unknown action space `{other}`"))),
        }
    }
}

impl fmt::Display for ActionSpaceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

fn objective_mode_name(mode: ObjectiveMode) -> &'static str {
    match mode {
        ObjectiveMode::Cost => "cost",
        ObjectiveMode::Reward => "reward",
    }
}

fn parse_objective_mode(s: &str) -> Result<ObjectiveMode> {
    match s.trim() {
        "cost" => Ok(ObjectiveMode::Cost),
        "reward" => Ok(ObjectiveMode::Reward),
        other => Err(Error::config(format!("unknown objective kind `{other}`"))),
    }
}

pub fn termination_mode_name(mode: TerminationMode) -> &'static str {
    match mode {
        TerminationMode::None => "none",
        TerminationMode::Plain => "plain",
        TerminationMode::AliveBonus => "alive_bonus",
        TerminationMode::Penalty => "penalty",
    }
}

fn parse_termination_mode(s: &str) -> Result<TerminationMode> {
    match s.trim() {
        "none" => Ok(TerminationMode::None),
        "plain" => Ok(TerminationMode::Plain),
        "alive_bonus" => Ok(TerminationMode::AliveBonus),
        "penalty" => Ok(TerminationMode::Penalty),
        other => Err(Error::config(format!("unknown termination mode `{other}`"))),
    }
}

/// Random-basis flavor for slice planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisMode {
    Orthonormal,
    Unnormalized,
}

impl BasisMode {
    pub fn label(&self) -> &'static str {
        match self {
            BasisMode::Orthonormal => "orthonormal",
            BasisMode::Unnormalized => "unnormalized",
        }
    }
}

/// Pendulum task parameters. List-valued fields support sweep commands;
/// single-task commands use the first entry.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskConfig {
    pub horizons: Vec<usize>,
    pub weight: f64,
    pub action_spaces: Vec<ActionSpaceChoice>,
    pub objective: ObjectiveMode,
    pub terminations: Vec<TerminationMode>,
    pub threshold: f64,
    pub alive_bonus: f64,
    pub penalty_per_step: f64,
    pub initial_alpha: f64,
    pub initial_omega: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            horizons: vec![100],
            weight: 1.0,
            action_spaces: vec![ActionSpaceChoice::Torque],
            objective: ObjectiveMode::Cost,
            terminations: vec![TerminationMode::None],
            threshold: 2.0,
            alive_bonus: 1.0,
            penalty_per_step: 4.0,
            initial_alpha: 0.0,
            initial_omega: 0.0,
        }
    }
}

impl TaskConfig {
    /// Builds the task for one (horizon, action space, termination) choice.
    pub fn build(
        &self,
        horizon: usize,
        action_space: ActionSpaceChoice,
        termination: TerminationMode,
    ) -> PendulumTask {
        let mut task = PendulumTask::new(horizon);
        task.action_weight = self.weight;
        task.action_space = action_space.to_action_space();
        task.objective = self.objective;
        task.termination = TerminationConfig {
            enabled: termination != TerminationMode::None,
            threshold: self.threshold,
            mode: termination,
            alive_bonus: self.alive_bonus,
            penalty_per_step: self.penalty_per_step,
        };
        task.initial_state = PendulumState::new(self.initial_alpha, self.initial_omega);
        task
    }

    /// The task for single-task commands: first entry of each list.
    pub fn primary(&self) -> PendulumTask {
        self.build(self.horizons[0], self.action_spaces[0], self.terminations[0])
    }
}

/// Slice-grid parameters following the visualization protocol defaults
/// (100x100 grid, 10 episodes per point, blur sigma 1).
#[derive(Clone, Debug, PartialEq)]
pub struct SliceConfig {
    pub extent: f64,
    pub resolution: usize,
    pub episodes: usize,
    /// Blur width; zero disables filtering.
    pub sigma: f64,
    pub basis: BasisMode,
    /// Number of independent slice planes to draw.
    pub count: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            extent: 2.0,
            resolution: crate::slices::DEFAULT_RESOLUTION,
            episodes: crate::slices::DEFAULT_EPISODES,
            sigma: crate::slices::DEFAULT_BLUR_SIGMA,
            basis: BasisMode::Orthonormal,
            count: 4,
        }
    }
}

/// Policy-landscape sweep parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyConfig {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_step: f64,
    /// Action-cost weights to sweep as a second axis.
    pub w_values: Vec<f64>,
    /// Number of episode start angles, evenly spaced on [-1, 1].
    pub angles: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            theta_min: -1.0,
            theta_max: 1.0,
            theta_step: 0.01,
            w_values: vec![1.0],
            angles: 10,
        }
    }
}

/// CMA-ES driver parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub population: usize,
    pub sigma0: f64,
    pub max_evals: usize,
    /// Independent seeded runs per variant.
    pub runs: usize,
    /// Initial mean: every coordinate set to this value.
    pub x0: f64,
    /// Task variants as `<action_space>-<objective>` labels.
    pub variants: Vec<String>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population: 100,
            sigma0: 0.5,
            max_evals: 60_000,
            runs: 10,
            x0: 1.0,
            variants: vec![
                "torque-cost".to_string(),
                "target_angle-cost".to_string(),
                "torque-reward".to_string(),
            ],
        }
    }
}

/// Analytic test-function sweep parameters for the theory figures.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConfig {
    pub d_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub eps: f64,
    /// Random bases per (d, k) pair for the slice-kappa statistics.
    pub bases: usize,
    /// Multimodal functions to slice (`rastrigin`, `bimodal`).
    pub functions: Vec<String>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            d_values: vec![10],
            k_values: vec![1, 5, 10],
            eps: 0.0,
            bases: 200,
            functions: vec!["rastrigin".to_string(), "bimodal".to_string()],
        }
    }
}

/// Hessian-report parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianConfig {
    /// Finite-difference step; zero selects the per-objective default.
    pub step: f64,
    pub rank_tol: f64,
    /// Analytic objective to analyze instead of the pendulum task, e.g.
    /// `quadratic_k(5,2,0.01)`. Empty string selects the task.
    pub objective: String,
}

impl Default for HessianConfig {
    fn default() -> Self {
        HessianConfig {
            step: 0.0,
            rank_tol: crate::analysis::DEFAULT_RANK_TOL,
            objective: String::new(),
        }
    }
}

/// Complete experiment description, parsed from and serialized to the flat
/// config format.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Which command this config drives (`slice`, `sweep-T`, ...).
    pub experiment: String,
    pub seed: u64,
    pub out_dir: String,
    /// Worker-count hint; zero means "use all cores".
    pub workers: usize,
    pub task: TaskConfig,
    pub slice: SliceConfig,
    pub policy: PolicyConfig,
    pub optimizer: OptimizerConfig,
    pub theory: TheoryConfig,
    pub hessian: HessianConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "slice".to_string(),
            seed: 42,
            out_dir: String::new(),
            workers: 0,
            task: TaskConfig::default(),
            slice: SliceConfig::default(),
            policy: PolicyConfig::default(),
            optimizer: OptimizerConfig::default(),
            theory: TheoryConfig::default(),
            hessian: HessianConfig::default(),
        }
    }
}

fn join<T: fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list<T, F>(value: &str, parse_one: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::config(format!("empty list `{value}`")));
    }
    items.into_iter().map(parse_one).collect()
}

/// Like [`parse_list`], but the sentinel `none` yields an empty list. Used
/// by theory keys whose sweeps can be switched off entirely.
fn parse_list_or_none<T, F>(value: &str, parse_one: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    if value.trim() == "none" {
        return Ok(Vec::new());
    }
    parse_list(value, parse_one)
}

fn join_or_none(joined: String) -> String {
    if joined.is_empty() {
        "none".to_string()
    } else {
        joined
    }
}

fn parse_usize(value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("bad integer `{value}`")))
}

fn parse_float(value: &str) -> Result<f64> {
    parse_f64(value.trim()).ok_or_else(|| Error::config(format!("bad float `{value}`")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        let mut seen: HashSet<String> = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let qualified = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !seen.insert(qualified.clone()) {
                return Err(Error::config(format!("duplicate key `{qualified}`")));
            }
            cfg.apply(&qualified, value)
                .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.to_string(),
            "seed" => self.seed = parse_usize(value)? as u64,
            "out" => self.out_dir = value.to_string(),
            "workers" => self.workers = parse_usize(value)?,

            "task.horizons" => self.task.horizons = parse_list(value, parse_usize)?,
            "task.weight" => self.task.weight = parse_float(value)?,
            "task.action_spaces" => {
                self.task.action_spaces = parse_list(value, |s| s.parse())?
            }
            "task.objective" => self.task.objective = parse_objective_mode(value)?,
            "task.terminations" => {
                self.task.terminations = parse_list(value, parse_termination_mode)?
            }
            "task.threshold" => self.task.threshold = parse_float(value)?,
            "task.alive_bonus" => self.task.alive_bonus = parse_float(value)?,
            "task.penalty_per_step" => self.task.penalty_per_step = parse_float(value)?,
            "task.initial_alpha" => self.task.initial_alpha = parse_float(value)?,
            "task.initial_omega" => self.task.initial_omega = parse_float(value)?,

            "slice.extent" => self.slice.extent = parse_float(value)?,
            "slice.resolution" => self.slice.resolution = parse_usize(value)?,
            "slice.episodes" => self.slice.episodes = parse_usize(value)?,
            "slice.sigma" => self.slice.sigma = parse_float(value)?,
            "slice.basis" => {
                self.slice.basis = match value {
                    "orthonormal" => BasisMode::Orthonormal,
                    "unnormalized" => BasisMode::Unnormalized,
                    other => return Err(Error::config(format!("unknown basis mode `{other}`"))),
                }
            }
            "slice.count" => self.slice.count = parse_usize(value)?,

            "policy.theta_min" => self.policy.theta_min = parse_float(value)?,
            "policy.theta_max" => self.policy.theta_max = parse_float(value)?,
            "policy.theta_step" => self.policy.theta_step = parse_float(value)?,
            "policy.w_values" => self.policy.w_values = parse_list(value, parse_float)?,
            "policy.angles" => self.policy.angles = parse_usize(value)?,

            "optimizer.population" => self.optimizer.population = parse_usize(value)?,
            "optimizer.sigma0" => self.optimizer.sigma0 = parse_float(value)?,
            "optimizer.max_evals" => self.optimizer.max_evals = parse_usize(value)?,
            "optimizer.runs" => self.optimizer.runs = parse_usize(value)?,
            "optimizer.x0" => self.optimizer.x0 = parse_float(value)?,
            "optimizer.variants" => {
                self.optimizer.variants = parse_list(value, |s| Ok(s.to_string()))?
            }

            "theory.d_values" => self.theory.d_values = parse_list(value, parse_usize)?,
            "theory.k_values" => self.theory.k_values = parse_list_or_none(value, parse_usize)?,
            "theory.eps" => self.theory.eps = parse_float(value)?,
            "theory.bases" => self.theory.bases = parse_usize(value)?,
            "theory.functions" => {
                self.theory.functions = parse_list_or_none(value, |s| Ok(s.to_string()))?
            }

            "hessian.step" => self.hessian.step = parse_float(value)?,
            "hessian.rank_tol" => self.hessian.rank_tol = parse_float(value)?,
            "hessian.objective" => self.hessian.objective = value.to_string(),

            other => return Err(Error::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(Error::config("experiment name is empty"));
        }
        if self.task.horizons.is_empty() || self.task.horizons.contains(&0) {
            return Err(Error::config("task.horizons must be positive"));
        }
        if self.slice.resolution < 2 {
            return Err(Error::config("slice.resolution must be >= 2"));
        }
        if self.slice.episodes == 0 {
            return Err(Error::config("slice.episodes must be >= 1"));
        }
        if !(self.slice.extent > 0.0) {
            return Err(Error::config("slice.extent must be positive"));
        }
        if self.slice.count == 0 {
            return Err(Error::config("slice.count must be >= 1"));
        }
        if !(self.policy.theta_step > 0.0) || self.policy.theta_min >= self.policy.theta_max {
            return Err(Error::config("bad policy theta range"));
        }
        if self.optimizer.population < 4 {
            return Err(Error::config("optimizer.population must be >= 4"));
        }
        if self.optimizer.runs == 0 {
            return Err(Error::config("optimizer.runs must be >= 1"));
        }
        for variant in &self.optimizer.variants {
            parse_variant(variant)?;
        }
        Ok(())
    }

    /// Serializes every field; parsing the result reproduces the config
    /// exactly.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("experiment = {}\n", self.experiment));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("out = {}\n", self.out_dir));
        out.push_str(&format!("workers = {}\n", self.workers));

        out.push_str("\n[task]\n");
        out.push_str(&format!("horizons = {}\n", join(&self.task.horizons)));
        out.push_str(&format!("weight = {}\n", self.task.weight));
        out.push_str(&format!(
            "action_spaces = {}\n",
            join(&self.task.action_spaces)
        ));
        out.push_str(&format!(
            "objective = {}\n",
            objective_mode_name(self.task.objective)
        ));
        let terminations: Vec<&str> = self
            .task
            .terminations
            .iter()
            .map(|&m| termination_mode_name(m))
            .collect();
        out.push_str(&format!("terminations = {}\n", terminations.join(",")));
        out.push_str(&format!("threshold = {}\n", self.task.threshold));
        out.push_str(&format!("alive_bonus = {}\n", self.task.alive_bonus));
        out.push_str(&format!(
            "penalty_per_step = {}\n",
            self.task.penalty_per_step
        ));
        out.push_str(&format!("initial_alpha = {}\n", self.task.initial_alpha));
        out.push_str(&format!("initial_omega = {}\n", self.task.initial_omega));

        out.push_str("\n[slice]\n");
        out.push_str(&format!("extent = {}\n", self.slice.extent));
        out.push_str(&format!("resolution = {}\n", self.slice.resolution));
        out.push_str(&format!("episodes = {}\n", self.slice.episodes));
        out.push_str(&format!("sigma = {}\n", self.slice.sigma));
        out.push_str(&format!("basis = {}\n", self.slice.basis.label()));
        out.push_str(&format!("count = {}\n", self.slice.count));

        out.push_str("\n[policy]\n");
        out.push_str(&format!("theta_min = {}\n", self.policy.theta_min));
        out.push_str(&format!("theta_max = {}\n", self.policy.theta_max));
        out.push_str(&format!("theta_step = {}\n", self.policy.theta_step));
        out.push_str(&format!("w_values = {}\n", join(&self.policy.w_values)));
        out.push_str(&format!("angles = {}\n", self.policy.angles));

        out.push_str("\n[optimizer]\n");
        out.push_str(&format!("population = {}\n", self.optimizer.population));
        out.push_str(&format!("sigma0 = {}\n", self.optimizer.sigma0));
        out.push_str(&format!("max_evals = {}\n", self.optimizer.max_evals));
        out.push_str(&format!("runs = {}\n", self.optimizer.runs));
        out.push_str(&format!("x0 = {}\n", self.optimizer.x0));
        out.push_str(&format!(
            "variants = {}\n",
            self.optimizer.variants.join(",")
        ));

        out.push_str("\n[theory]\n");
        out.push_str(&format!("d_values = {}\n", join(&self.theory.d_values)));
        out.push_str(&format!("k_values = {}\n", join_or_none(join(&self.theory.k_values))));
        out.push_str(&format!("eps = {}\n", self.theory.eps));
        out.push_str(&format!("bases = {}\n", self.theory.bases));
        out.push_str(&format!(
            "functions = {}\n",
            join_or_none(self.theory.functions.join(","))
        ));

        out.push_str("\n[hessian]\n");
        out.push_str(&format!("step = {}\n", self.hessian.step));
        out.push_str(&format!("rank_tol = {}\n", self.hessian.rank_tol));
        out.push_str(&format!("objective = {}\n", self.hessian.objective));
        out
    }
}

/// Parses an optimizer variant label `<action_space>-<objective>`, e.g.
/// `torque-cost` or `target_angle-reward`.
pub fn parse_variant(label: &str) -> Result<(ActionSpaceChoice, ObjectiveMode)> {
    let (space, objective) = label
        .rsplit_once('-')
        .ok_or_else(|| Error::config(format!("bad variant `{label}`, expected `<space>-<objective>`")))?;
    Ok((space.parse()?, parse_objective_mode(objective)?))
}
