//! Tabular finite-horizon MDPs and exact policy evaluation.
//!
//! All quantities here are computed by dynamic programming, not sampling:
//! per-step state distributions, expected total cost, and cost-to-go
//! tables. Seeded Monte-Carlo rollouts are provided alongside and are
//! checked against the exact recursions in the test suites.
//!
//! Conventions: steps are 0-based (`t = 0..horizon`), `cost[s][a]` is a
//! per-step cost in `[0, 1]`, and every algorithm in this crate minimizes
//! the expected total cost `J`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{MixingMode, Policy};
use crate::rng::Stream;

pub const CONSTRUCTION_TOL: f64 = 1e-12;
pub const DERIVED_TOL: f64 = 1e-10;

/// A finite MDP `(states, actions, transition, cost, initial)` with a fixed
/// decision horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Initial state distribution, length `num_states`.
    pub initial: Vec<f64>,
    /// Per-step cost, indexed `[s][a]`, each entry in `[0, 1]`.
    pub cost: Vec<Vec<f64>>,
    /// Transition probabilities, indexed `[s][a][s']`; rows sum to one.
    pub transition: Vec<Vec<Vec<f64>>>,
}

/// One violated construction constraint, naming the offending index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub constraint: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.constraint)
    }
}

/// Checks every construction invariant of `mdp` and reports all violations.
pub fn validate_mdp(mdp: &TabularMdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: String, constraint: String| {
        out.push(Violation { location, constraint });
    };

    if mdp.num_states == 0 {
        push("num_states".into(), "must be positive".into());
    }
    if mdp.num_actions == 0 {
        push("num_actions".into(), "must be positive".into());
    }
    if mdp.horizon == 0 {
        push("horizon".into(), "must be positive".into());
    }
    if mdp.initial.len() != mdp.num_states {
        push("initial".into(), format!("length {} != num_states", mdp.initial.len()));
    } else {
        if mdp.initial.iter().any(|&p| p < 0.0) {
            push("initial".into(), "negative entry".into());
        }
        let sum: f64 = mdp.initial.iter().sum();
        if (sum - 1.0).abs() > CONSTRUCTION_TOL {
            push("initial".into(), format!("sums to {sum}, expected 1 within 1e-12"));
        }
    }
    if mdp.cost.len() != mdp.num_states {
        push("cost".into(), "wrong number of state rows".into());
    } else {
        for (s, row) in mdp.cost.iter().enumerate() {
            if row.len() != mdp.num_actions {
                push(format!("cost[{s}]"), "wrong number of action columns".into());
                continue;
            }
            for (a, &c) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&c) {
                    push(format!("cost[{s}][{a}]"), format!("value {c} outside [0, 1]"));
                }
            }
        }
    }
    if mdp.transition.len() != mdp.num_states {
        push("transition".into(), "wrong number of state rows".into());
    } else {
        for (s, per_action) in mdp.transition.iter().enumerate() {
            if per_action.len() != mdp.num_actions {
                push(format!("transition[{s}]"), "wrong number of action rows".into());
                continue;
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != mdp.num_states {
                    push(format!("transition[{s}][{a}]"), "wrong successor count".into());
                    continue;
                }
                if row.iter().any(|&p| p < 0.0) {
                    push(format!("transition[{s}][{a}]"), "negative probability".into());
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > CONSTRUCTION_TOL {
                    push(
                        format!("transition[{s}][{a}]"),
                        format!("row sums to {sum}, expected 1 within 1e-12"),
                    );
                }
            }
        }
    }
    out
}

impl TabularMdp {
    /// Errors unless all construction invariants hold.
    pub fn checked(self) -> Result<Self> {
        let violations = validate_mdp(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidMdp(msgs.join("; ")))
        }
    }

    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        policy.validate_for(self.num_states, self.num_actions, self.horizon)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mdp: TabularMdp = serde_json::from_str(text)?;
        mdp.checked()
    }
}

/// Per-step state distributions `d^t` for `t = 0..horizon` and their mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDistributionSchedule {
    pub per_step: Vec<Vec<f64>>,
    pub average: Vec<f64>,
}

impl StateDistributionSchedule {
    pub fn horizon(&self) -> usize {
        self.per_step.len()
    }
}

/// A single sampled episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub costs: Vec<f64>,
    pub total_cost: f64,
}

/// Expected cost-to-go table: `get(t, s, a)` is the cost of taking `a` in
/// `s` at step `t` and then following the evaluated policy to the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub horizon: usize,
    pub num_states: usize,
    pub num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    #[inline]
    pub fn get(&self, t: usize, s: usize, a: usize) -> f64 {
        self.values[(t * self.num_states + s) * self.num_actions + a]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Exact per-step state distributions induced by `policy`.
///
/// Mixtures decompose into a weighted sum of component schedules
/// (trajectory-level mixing).
pub fn exact_state_distributions(
    mdp: &TabularMdp,
    policy: &Policy,
) -> Result<StateDistributionSchedule> {
    exact_state_distributions_with(mdp, policy, MixingMode::PerTrajectory)
}

pub fn exact_state_distributions_with(
    mdp: &TabularMdp,
    policy: &Policy,
    mixing: MixingMode,
) -> Result<StateDistributionSchedule> {
    mdp.check_policy(policy)?;
    Ok(state_distributions_unchecked(mdp, policy, mixing))
}

fn state_distributions_unchecked(
    mdp: &TabularMdp,
    policy: &Policy,
    mixing: MixingMode,
) -> StateDistributionSchedule {
    if mixing == MixingMode::PerTrajectory {
        if let Policy::Mixture { weights, components } = policy {
            let mut per_step = vec![vec![0.0; mdp.num_states]; mdp.horizon];
            let mut average = vec![0.0; mdp.num_states];
            for (w, comp) in weights.iter().zip(components) {
                let sched = state_distributions_unchecked(mdp, comp, mixing);
                for (acc, d) in per_step.iter_mut().zip(&sched.per_step) {
                    for (x, y) in acc.iter_mut().zip(d) {
                        *x += w * y;
                    }
                }
                for (x, y) in average.iter_mut().zip(&sched.average) {
                    *x += w * y;
                }
            }
            return StateDistributionSchedule { per_step, average };
        }
    }

    let mut per_step = Vec::with_capacity(mdp.horizon);
    let mut current = mdp.initial.clone();
    let mut probs = vec![0.0; mdp.num_actions];
    for t in 0..mdp.horizon {
        per_step.push(current.clone());
        if t + 1 == mdp.horizon {
            break;
        }
        let mut next = vec![0.0; mdp.num_states];
        for s in 0..mdp.num_states {
            let mass = current[s];
            if mass == 0.0 {
                continue;
            }
            policy.fill_action_probs(t, s, &mut probs);
            for (a, &pa) in probs.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let row = &mdp.transition[s][a];
                let w = mass * pa;
                for (sp, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        next[sp] += w * p;
                    }
                }
            }
        }
        current = next;
    }
    let mut average = vec![0.0; mdp.num_states];
    for d in &per_step {
        for (x, y) in average.iter_mut().zip(d) {
            *x += y;
        }
    }
    let inv_t = 1.0 / mdp.horizon as f64;
    for x in &mut average {
        *x *= inv_t;
    }
    StateDistributionSchedule { per_step, average }
}

/// Exact expected total cost `J(policy)` over one episode.
pub fn exact_cost(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    mdp.check_policy(policy)?;
    Ok(exact_cost_unchecked(mdp, policy))
}

pub(crate) fn exact_cost_unchecked(mdp: &TabularMdp, policy: &Policy) -> f64 {
    if let Policy::Mixture { weights, components } = policy {
        return weights
            .iter()
            .zip(components)
            .map(|(w, c)| w * exact_cost_unchecked(mdp, c))
            .sum();
    }
    let sched = state_distributions_unchecked(mdp, policy, MixingMode::PerTrajectory);
    let mut probs = vec![0.0; mdp.num_actions];
    let mut total = 0.0;
    for (t, dist) in sched.per_step.iter().enumerate() {
        for s in 0..mdp.num_states {
            let mass = dist[s];
            if mass == 0.0 {
                continue;
            }
            policy.fill_action_probs(t, s, &mut probs);
            let step_cost: f64 = probs
                .iter()
                .zip(&mdp.cost[s])
                .map(|(&pa, &c)| pa * c)
                .sum();
            total += mass * step_cost;
        }
    }
    total
}

/// State values `V[t][s]` for `t = 0..=horizon` under `policy`
/// (`V[horizon]` is all zeros). Mixtures are rejected; evaluate components
/// separately.
pub fn state_values(mdp: &TabularMdp, policy: &Policy) -> Result<Vec<Vec<f64>>> {
    mdp.check_policy(policy)?;
    if policy.is_mixture() {
        return Err(Error::MixtureUnsupported("state_values"));
    }
    Ok(state_values_unchecked(mdp, policy))
}

pub(crate) fn state_values_unchecked(mdp: &TabularMdp, policy: &Policy) -> Vec<Vec<f64>> {
    let t_max = mdp.horizon;
    let mut values = vec![vec![0.0; mdp.num_states]; t_max + 1];
    let mut probs = vec![0.0; mdp.num_actions];
    for t in (0..t_max).rev() {
        for s in 0..mdp.num_states {
            policy.fill_action_probs(t, s, &mut probs);
            let mut v = 0.0;
            for (a, &pa) in probs.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let future: f64 = mdp.transition[s][a]
                    .iter()
                    .zip(&values[t + 1])
                    .map(|(&p, &vf)| p * vf)
                    .sum();
                v += pa * (mdp.cost[s][a] + future);
            }
            values[t][s] = v;
        }
    }
    values
}

/// Exact cost-to-go table under `policy` by backward recursion.
pub fn q_values(mdp: &TabularMdp, policy: &Policy) -> Result<QTable> {
    mdp.check_policy(policy)?;
    if policy.is_mixture() {
        return Err(Error::MixtureUnsupported("q_values"));
    }
    let values_by_step = state_values_unchecked(mdp, policy);
    let mut values = vec![0.0; mdp.horizon * mdp.num_states * mdp.num_actions];
    for t in 0..mdp.horizon {
        for s in 0..mdp.num_states {
            for a in 0..mdp.num_actions {
                let future: f64 = mdp.transition[s][a]
                    .iter()
                    .zip(&values_by_step[t + 1])
                    .map(|(&p, &vf)| p * vf)
                    .sum();
                values[(t * mdp.num_states + s) * mdp.num_actions + a] =
                    mdp.cost[s][a] + future;
            }
        }
    }
    Ok(QTable {
        horizon: mdp.horizon,
        num_states: mdp.num_states,
        num_actions: mdp.num_actions,
        values,
    })
}

/// Samples one episode. Deterministic given the seed; a mixture draws one
/// component for the whole trajectory.
pub fn rollout(mdp: &TabularMdp, policy: &Policy, rng_seed: u64) -> Result<Trajectory> {
    mdp.check_policy(policy)?;
    let mut stream = Stream::new(rng_seed);
    Ok(rollout_from_stream(mdp, policy, &mut stream, MixingMode::PerTrajectory))
}

pub fn rollout_with(
    mdp: &TabularMdp,
    policy: &Policy,
    rng_seed: u64,
    mixing: MixingMode,
) -> Result<Trajectory> {
    mdp.check_policy(policy)?;
    let mut stream = Stream::new(rng_seed);
    Ok(rollout_from_stream(mdp, policy, &mut stream, mixing))
}

/// Draw order per trajectory: mixture component, then for each step the
/// action followed by the successor state.
pub(crate) fn rollout_from_stream(
    mdp: &TabularMdp,
    policy: &Policy,
    stream: &mut Stream,
    mixing: MixingMode,
) -> Trajectory {
    let resolved = match mixing {
        MixingMode::PerTrajectory => policy.resolve_component(stream),
        MixingMode::PerStep => policy,
    };
    let mut states = Vec::with_capacity(mdp.horizon);
    let mut actions = Vec::with_capacity(mdp.horizon);
    let mut costs = Vec::with_capacity(mdp.horizon);
    let mut s = stream.sample_index(&mdp.initial);
    for t in 0..mdp.horizon {
        let acting: &Policy = match mixing {
            MixingMode::PerTrajectory => resolved,
            MixingMode::PerStep => policy.resolve_component(stream),
        };
        let a = acting.sample_action(t, s, stream);
        states.push(s);
        actions.push(a);
        costs.push(mdp.cost[s][a]);
        if t + 1 < mdp.horizon {
            s = stream.sample_index(&mdp.transition[s][a]);
        }
    }
    let total_cost = costs.iter().sum();
    Trajectory { states, actions, costs, total_cost }
}

/// Monte-Carlo estimate of `J(policy)`: mean total cost over `n_rollouts`
/// episodes plus the standard error of the mean (reported as 0 for a single
/// rollout). Rollout `i` uses a stream derived from `(rng_seed, i)`.
pub fn monte_carlo_cost(
    mdp: &TabularMdp,
    policy: &Policy,
    n_rollouts: usize,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    if n_rollouts == 0 {
        return Err(Error::InvalidArgument("n_rollouts must be at least 1".into()));
    }
    mdp.check_policy(policy)?;
    let base = Stream::new(rng_seed);
    let mut totals = Vec::with_capacity(n_rollouts);
    for i in 0..n_rollouts {
        let mut stream = base.derive(i as u64);
        let traj = rollout_from_stream(mdp, policy, &mut stream, MixingMode::PerTrajectory);
        totals.push(traj.total_cost);
    }
    let n = n_rollouts as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let std_error = if n_rollouts == 1 {
        0.0
    } else {
        let var = totals.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok((mean, std_error))
}
