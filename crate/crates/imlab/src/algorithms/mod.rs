//! The imitation-learning procedures.
//!
//! Every algorithm consumes `(mdp, expert oracle, learner, hyperparameters)`
//! and returns a final policy plus a [`RunTrace`]: per-iteration exact cost,
//! measured disagreement, expert-query and dataset accounting, and a store
//! of policy snapshots so bound checks can be replayed later. Runs are
//! single-threaded and bit-deterministic given the seed.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::expert::ExpertOracle;
use crate::learners::Learner;
use crate::mdp::TabularMdp;
use crate::policy::Policy;

mod aggrevate;
mod bc;
mod dagger;
mod forward;
mod rail;
mod searn;
mod smile;

pub use aggrevate::aggrevate;
pub use bc::supervised_bc;
pub use dagger::{dagger, ValidationMode};
pub use forward::forward_training;
pub use rail::rail;
pub use searn::searn;
pub use smile::smile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoId {
    SupervisedBc,
    ForwardTraining,
    Searn,
    Smile,
    Rail,
    Dagger,
    DaggerCoaching,
    Aggrevate,
}

impl AlgoId {
    pub const ALL: [AlgoId; 8] = [
        AlgoId::SupervisedBc,
        AlgoId::ForwardTraining,
        AlgoId::Searn,
        AlgoId::Smile,
        AlgoId::Rail,
        AlgoId::Dagger,
        AlgoId::DaggerCoaching,
        AlgoId::Aggrevate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgoId::SupervisedBc => "supervised_bc",
            AlgoId::ForwardTraining => "forward_training",
            AlgoId::Searn => "searn",
            AlgoId::Smile => "smile",
            AlgoId::Rail => "rail",
            AlgoId::Dagger => "dagger",
            AlgoId::DaggerCoaching => "dagger_coaching",
            AlgoId::Aggrevate => "aggrevate",
        }
    }

    /// Theorem id whose bound this algorithm instantiates, if any.
    pub fn theorem(&self) -> Option<u8> {
        match self {
            AlgoId::SupervisedBc => Some(1),
            AlgoId::ForwardTraining => Some(2),
            AlgoId::Searn => Some(3),
            AlgoId::Smile => Some(4),
            AlgoId::Rail => None,
            AlgoId::Dagger => Some(5),
            AlgoId::DaggerCoaching => Some(6),
            AlgoId::Aggrevate => Some(7),
        }
    }
}

impl std::fmt::Display for AlgoId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AlgoId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgoId::ALL
            .iter()
            .find(|a| a.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

/// Expert-mixing schedule for AggreVaTe's executed policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSchedule {
    /// Pure expert on the first iteration, the learned policy afterwards.
    ExpertFirstIteration,
    /// `initial * decay^(i-1)` at iteration `i`.
    Geometric { initial: f64, decay: f64 },
}

impl BetaSchedule {
    pub fn value(&self, iteration: usize) -> f64 {
        match *self {
            BetaSchedule::ExpertFirstIteration => {
                if iteration == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            BetaSchedule::Geometric { initial, decay } => {
                (initial * decay.powi(iteration as i32 - 1)).clamp(0.0, 1.0)
            }
        }
    }
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::ExpertFirstIteration
    }
}

/// Coaching schedule: how strongly the coach trusts the learner's own
/// scores when proposing hope actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSchedule {
    Constant { value: f64 },
    /// `initial * decay^(i-1)` at iteration `i`.
    Geometric { initial: f64, decay: f64 },
}

impl LambdaSchedule {
    pub fn value(&self, iteration: usize) -> f64 {
        match *self {
            LambdaSchedule::Constant { value } => value,
            LambdaSchedule::Geometric { initial, decay } => {
                initial * decay.powi(iteration as i32 - 1)
            }
        }
    }
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Geometric { initial: 1.0, decay: 0.9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Number of iterations `N`.
    pub iterations: usize,
    /// Mixing parameter: SMILe's geometric rate and SEARN's interpolation
    /// weight (also echoed into the AggreVaTe bound report).
    pub alpha: f64,
    #[serde(default)]
    pub beta: BetaSchedule,
    /// Trajectories per iteration; RAIL reads it as the per-call query
    /// budget of the active learner.
    pub rollouts_per_iter: usize,
    #[serde(default)]
    pub lambda: LambdaSchedule,
    pub seed: u64,
}

impl Hyperparameters {
    pub fn new(iterations: usize, alpha: f64, rollouts_per_iter: usize, seed: u64) -> Self {
        Hyperparameters {
            iterations,
            alpha,
            beta: BetaSchedule::ExpertFirstIteration,
            rollouts_per_iter,
            lambda: LambdaSchedule::default(),
            seed,
        }
    }

    /// The recommended SMILe configuration for horizon `t`:
    /// `alpha = 1/t^2`, `N = ceil(2 t^2 ln t)`.
    pub fn smile_defaults(t: usize, rollouts_per_iter: usize, seed: u64) -> Self {
        let t_f = t as f64;
        let alpha = 1.0 / (t_f * t_f);
        let iterations = (2.0 * t_f * t_f * t_f.ln()).ceil().max(1.0) as usize;
        Hyperparameters::new(iterations, alpha, rollouts_per_iter, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        if self.rollouts_per_iter == 0 {
            return Err(Error::InvalidArgument("rollouts_per_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the audit trail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Iteration index, starting at 1.
    pub iteration: usize,
    /// Snapshot id of the policy executed to gather this iteration's data,
    /// when that policy is stored (mixture iterates of SMILe/SEARN are
    /// reconstructed from their components instead).
    pub executed_policy: Option<usize>,
    /// Snapshot id of the policy trained this iteration.
    pub trained_policy: usize,
    /// Exact cost of the algorithm's current policy object.
    pub exact_j: f64,
    /// Exact disagreement of the trained policy with the expert, measured
    /// under the distribution it was trained on.
    pub eps: f64,
    /// Expert queries served so far (cumulative).
    pub expert_queries: u64,
    /// Records collected so far (cumulative).
    pub dataset_size: usize,
    /// Wall-clock duration of the iteration, floored to milliseconds.
    pub wall_ms: u64,
}

/// Full audit trail of one algorithm run. Self-contained: it embeds every
/// policy snapshot (and the expert policy) needed to re-evaluate bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algo: AlgoId,
    pub env_label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub env: Option<EnvSpec>,
    pub hp: Hyperparameters,
    pub expert_label: String,
    pub expert_policy: Policy,
    pub iterations: Vec<IterationRecord>,
    /// Snapshot id of the returned policy.
    pub final_policy: usize,
    /// Policy store; snapshot ids index into it.
    pub policies: Vec<Policy>,
    /// Per-iteration hope-action targets (coached runs only), stored as
    /// snapshot ids of non-stationary policies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hope_targets: Option<Vec<usize>>,
    pub expert_queries_total: u64,
}

impl RunTrace {
    pub fn policy(&self, id: usize) -> Result<&Policy> {
        self.policies
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy snapshot {id}")))
    }

    pub fn final_policy_ref(&self) -> Result<&Policy> {
        self.policy(self.final_policy)
    }

    /// Monotonicity of the cumulative counters plus snapshot resolvability.
    pub fn validate(&self) -> Result<()> {
        let mut prev_q = 0;
        let mut prev_n = 0;
        for rec in &self.iterations {
            if rec.expert_queries < prev_q || rec.dataset_size < prev_n {
                return Err(Error::InvalidArgument(
                    "trace counters must be non-decreasing".into(),
                ));
            }
            prev_q = rec.expert_queries;
            prev_n = rec.dataset_size;
            self.policy(rec.trained_policy)?;
            if let Some(id) = rec.executed_policy {
                self.policy(id)?;
            }
        }
        self.policy(self.final_policy)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let trace: RunTrace = serde_json::from_str(text)?;
        trace.validate()?;
        Ok(trace)
    }
}

/// Shared bookkeeping while an algorithm runs.
pub(crate) struct TraceBuilder {
    algo: AlgoId,
    hp: Hyperparameters,
    expert_label: String,
    expert_policy: Policy,
    iterations: Vec<IterationRecord>,
    policies: Vec<Policy>,
    hope_targets: Vec<usize>,
    iter_started: Instant,
}

impl TraceBuilder {
    pub fn new(algo: AlgoId, hp: &Hyperparameters, expert: &ExpertOracle) -> Self {
        TraceBuilder {
            algo,
            hp: hp.clone(),
            expert_label: expert.label().to_string(),
            expert_policy: expert.policy().clone(),
            iterations: Vec::new(),
            policies: Vec::new(),
            hope_targets: Vec::new(),
            iter_started: Instant::now(),
        }
    }

    pub fn store(&mut self, policy: Policy) -> usize {
        self.policies.push(policy);
        self.policies.len() - 1
    }

    pub fn store_hope_target(&mut self, policy: Policy) {
        let id = self.store(policy);
        self.hope_targets.push(id);
    }

    pub fn begin_iteration(&mut self) {
        self.iter_started = Instant::now();
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        iteration: usize,
        executed_policy: Option<usize>,
        trained_policy: usize,
        exact_j: f64,
        eps: f64,
        expert_queries: u64,
        dataset_size: usize,
    ) {
        let wall_ms = self.iter_started.elapsed().as_millis() as u64;
        self.iterations.push(IterationRecord {
            iteration,
            executed_policy,
            trained_policy,
            exact_j,
            eps,
            expert_queries,
            dataset_size,
            wall_ms,
        });
    }

    pub fn finish(self, expert: &ExpertOracle, final_policy: usize) -> RunTrace {
        RunTrace {
            algo: self.algo,
            env_label: String::new(),
            env: None,
            hp: self.hp,
            expert_label: self.expert_label,
            expert_policy: self.expert_policy,
            iterations: self.iterations,
            final_policy,
            policies: self.policies,
            hope_targets: if self.hope_targets.is_empty() {
                None
            } else {
                Some(self.hope_targets)
            },
            expert_queries_total: expert.query_count(),
        }
    }
}

/// Expected per-step probability that independent draws from `policy` and
/// `reference` disagree, under the given schedule. Coincides with the
/// exact 0-1 surrogate loss when `reference` is deterministic.
pub(crate) fn trace_eps(
    mdp: &TabularMdp,
    policy: &Policy,
    reference: &Policy,
    sched: &crate::mdp::StateDistributionSchedule,
) -> f64 {
    let mut p1 = vec![0.0; mdp.num_actions];
    let mut p2 = vec![0.0; mdp.num_actions];
    let mut total = 0.0;
    for (t, dist) in sched.per_step.iter().enumerate() {
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            policy.fill_action_probs(t, s, &mut p1);
            reference.fill_action_probs(t, s, &mut p2);
            let overlap: f64 = p1.iter().zip(&p2).map(|(a, b)| a * b).sum();
            total += mass * (1.0 - overlap);
        }
    }
    total / mdp.horizon as f64
}

/// The stationary sub-policy `policy` applies at step `t`.
pub(crate) fn sub_policy_at(policy: &Policy, t: usize) -> Policy {
    match policy {
        Policy::NonStationary { steps } => steps[t].clone(),
        other => other.clone(),
    }
}

/// Dispatches to the named algorithm.
pub fn run_algorithm(
    algo: AlgoId,
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    match algo {
        AlgoId::SupervisedBc => supervised_bc(mdp, expert, learner, hp),
        AlgoId::ForwardTraining => forward_training(mdp, expert, learner, hp),
        AlgoId::Searn => searn(mdp, expert, learner, hp),
        AlgoId::Smile => smile(mdp, expert, learner, hp),
        AlgoId::Rail => rail(mdp, expert, learner, hp),
        AlgoId::Dagger => dagger(mdp, expert, learner, hp, false),
        AlgoId::DaggerCoaching => dagger(mdp, expert, learner, hp, true),
        AlgoId::Aggrevate => aggrevate(mdp, expert, learner, hp),
    }
}
