//! Classification-reduction layer: labeled datasets, the learner contract,
//! a tabular learner, an error-injection wrapper, and the i.i.d. active
//! learner.
//!
//! Datasets are append-only snapshots of `(state, step, action[, costs])`
//! records. The tabular learner makes the empirical risk minimizer exact —
//! majority vote for plain labels, per-action mean-cost argmin for
//! cost-sensitive records — so the surrounding algorithm, not
//! approximation error, is what the bound checks measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expert::{flip_policy, ExpertOracle};
use crate::mdp::{StateDistributionSchedule, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

/// One labeled example. `costs`, when present, holds per-action cost
/// observations; entries are `None` for actions this record did not
/// observe (cost-to-go samples observe a single explored action).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(rename = "s")]
    pub state: usize,
    #[serde(rename = "t")]
    pub step: usize,
    #[serde(rename = "a")]
    pub action: usize,
    #[serde(rename = "q", skip_serializing_if = "Option::is_none", default)]
    pub costs: Option<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub provenance: String,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(provenance: impl Into<String>) -> Self {
        Dataset { provenance: provenance.into(), records: Vec::new() }
    }

    pub fn push_label(&mut self, state: usize, step: usize, action: usize) {
        self.records.push(Record { state, step, action, costs: None });
    }

    pub fn push_cost_vector(&mut self, state: usize, step: usize, costs: Vec<f64>) {
        let action = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.records.push(Record {
            state,
            step,
            action,
            costs: Some(costs.into_iter().map(Some).collect()),
        });
    }

    /// Single-action cost-to-go observation: `costs[action] = value`.
    pub fn push_cost_sample(
        &mut self,
        state: usize,
        step: usize,
        action: usize,
        value: f64,
        num_actions: usize,
    ) {
        let mut costs = vec![None; num_actions];
        costs[action] = Some(value);
        self.records.push(Record { state, step, action, costs: Some(costs) });
    }

    /// Appends every record of `other` (aggregation never mutates existing
    /// records).
    pub fn extend_from(&mut self, other: &Dataset) {
        self.records.extend(other.records.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_cost_sensitive(&self) -> bool {
        self.records.first().map_or(false, |r| r.costs.is_some())
    }

    /// Index ranges and homogeneity (cost vectors on all records or none).
    pub fn validate(&self, num_states: usize, num_actions: usize, horizon: usize) -> Result<()> {
        let cost_mode = self.is_cost_sensitive();
        for (i, r) in self.records.iter().enumerate() {
            if r.state >= num_states || r.action >= num_actions || r.step >= horizon {
                return Err(Error::InvalidArgument(format!(
                    "record {i} has out-of-range indices"
                )));
            }
            if r.costs.is_some() != cost_mode {
                return Err(Error::InvalidArgument(format!(
                    "record {i} breaks cost-vector homogeneity"
                )));
            }
            if let Some(costs) = &r.costs {
                if costs.len() != num_actions {
                    return Err(Error::InvalidArgument(format!(
                        "record {i} cost vector has wrong length"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Output of training: the induced policy plus a score table usable by
/// coaching (`scores[s][a]`, higher is better).
#[derive(Clone, Debug)]
pub struct Trained {
    pub policy: Policy,
    pub scores: Vec<Vec<f64>>,
}

impl Trained {
    pub fn score(&self, state: usize, action: usize) -> f64 {
        self.scores[state][action]
    }
}

/// Anything that can turn a dataset into a policy. Training must be a pure
/// function of the dataset (in record order) and the learner's own
/// configuration.
pub trait Learner: Sync {
    fn train(&self, data: &Dataset, num_states: usize, num_actions: usize) -> Result<Trained>;
}

/// One-action-per-state learner. Seen states get the majority label (or
/// the argmin of mean observed cost for cost-sensitive data), ties toward
/// the lowest action index. Unseen states fall back to `default_action`,
/// or to a uniform action distribution when `uniform_fallback` is set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TabularLearner {
    pub smoothing: f64,
    pub default_action: usize,
    pub uniform_fallback: bool,
}

impl Default for TabularLearner {
    fn default() -> Self {
        TabularLearner { smoothing: 0.0, default_action: 0, uniform_fallback: false }
    }
}

impl Learner for TabularLearner {
    fn train(&self, data: &Dataset, num_states: usize, num_actions: usize) -> Result<Trained> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.default_action >= num_actions {
            return Err(Error::InvalidArgument("default_action out of range".into()));
        }
        // Horizon bound is irrelevant for training; validate lazily with a
        // permissive step bound.
        data.validate(num_states, num_actions, usize::MAX)?;

        let mut seen = vec![false; num_states];
        let mut actions = vec![self.default_action; num_states];
        let mut scores = vec![vec![1.0 / num_actions as f64; num_actions]; num_states];

        if data.is_cost_sensitive() {
            let mut sums = vec![vec![0.0; num_actions]; num_states];
            let mut counts = vec![vec![0usize; num_actions]; num_states];
            for r in &data.records {
                let costs = r.costs.as_ref().expect("cost-sensitive record");
                for (a, c) in costs.iter().enumerate() {
                    if let Some(v) = c {
                        sums[r.state][a] += v;
                        counts[r.state][a] += 1;
                        seen[r.state] = true;
                    }
                }
            }
            for s in 0..num_states {
                if !seen[s] {
                    continue;
                }
                let mut best_a = None;
                let mut best_cost = f64::INFINITY;
                let mut worst_mean: f64 = f64::NEG_INFINITY;
                for a in 0..num_actions {
                    if counts[s][a] == 0 {
                        continue;
                    }
                    let mean = sums[s][a] / counts[s][a] as f64;
                    worst_mean = worst_mean.max(mean);
                    if mean < best_cost {
                        best_cost = mean;
                        best_a = Some(a);
                    }
                }
                actions[s] = best_a.expect("seen state has an observed action");
                for a in 0..num_actions {
                    scores[s][a] = if counts[s][a] > 0 {
                        -(sums[s][a] / counts[s][a] as f64)
                    } else {
                        // Unobserved actions rank below every observed one.
                        -(worst_mean + 1.0)
                    };
                }
            }
        } else {
            let mut counts = vec![vec![0.0_f64; num_actions]; num_states];
            for r in &data.records {
                counts[r.state][r.action] += 1.0;
                seen[r.state] = true;
            }
            for s in 0..num_states {
                if !seen[s] {
                    continue;
                }
                let mut best_a = 0;
                let mut best_count = f64::NEG_INFINITY;
                for a in 0..num_actions {
                    if counts[s][a] > best_count {
                        best_count = counts[s][a];
                        best_a = a;
                    }
                }
                actions[s] = best_a;
                let total: f64 =
                    counts[s].iter().sum::<f64>() + self.smoothing * num_actions as f64;
                for a in 0..num_actions {
                    scores[s][a] = (counts[s][a] + self.smoothing) / total;
                }
            }
        }

        let policy = if self.uniform_fallback && seen.iter().any(|&v| !v) {
            let probs = (0..num_states)
                .map(|s| {
                    if seen[s] {
                        let mut row = vec![0.0; num_actions];
                        row[actions[s]] = 1.0;
                        row
                    } else {
                        vec![1.0 / num_actions as f64; num_actions]
                    }
                })
                .collect();
            Policy::Stochastic { probs }
        } else {
            Policy::Deterministic { actions, num_actions }
        };
        Ok(Trained { policy, scores })
    }
}

/// Wraps a learner so its trained policy disagrees with the inner one at
/// exactly `flip_rate` per decision, with flips going to a uniformly
/// random other action. The flip is materialized as an explicit stochastic
/// policy, so the achieved disagreement is exact rather than sampled.
#[derive(Clone, Debug)]
pub struct ErrorInjectedLearner<L> {
    pub inner: L,
    pub flip_rate: f64,
}

impl<L: Learner> ErrorInjectedLearner<L> {
    pub fn new(inner: L, flip_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip_rate) {
            return Err(Error::InvalidArgument(format!(
                "flip_rate {flip_rate} outside [0, 1]"
            )));
        }
        Ok(ErrorInjectedLearner { inner, flip_rate })
    }
}

impl<L: Learner> Learner for ErrorInjectedLearner<L> {
    fn train(&self, data: &Dataset, num_states: usize, num_actions: usize) -> Result<Trained> {
        let trained = self.inner.train(data, num_states, num_actions)?;
        Ok(Trained {
            policy: flip_policy(&trained.policy, self.flip_rate),
            scores: trained.scores,
        })
    }
}

/// Trains `config` on `dataset`, returning the induced stationary policy.
pub fn train_tabular(
    dataset: &Dataset,
    config: &TabularLearner,
    num_states: usize,
    num_actions: usize,
) -> Result<Policy> {
    config.train(dataset, num_states, num_actions).map(|t| t.policy)
}

/// I.i.d. active learner: draws `budget` states from the supplied
/// schedule (step sampled uniformly, then a state from that step's
/// distribution, so the state marginal is exactly the schedule average),
/// queries the expert on each, and trains on the labeled set.
///
/// `eps_target` and `delta` are accuracy/confidence requests recorded in
/// the dataset provenance; the achieved error is whatever the budget buys
/// and is measured rather than guaranteed.
#[allow(clippy::too_many_arguments)]
pub fn active_learn(
    eps_target: f64,
    delta: f64,
    dist: &StateDistributionSchedule,
    expert: &ExpertOracle,
    budget: usize,
    rng_seed: u64,
    learner: &dyn Learner,
    num_states: usize,
    num_actions: usize,
) -> Result<(Policy, Dataset)> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let horizon = dist.horizon();
    if horizon == 0 {
        return Err(Error::InvalidArgument("empty distribution schedule".into()));
    }
    for (t, d) in dist.per_step.iter().enumerate() {
        let sum: f64 = d.iter().sum();
        if d.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "per-step distribution {t} is not a probability vector"
            )));
        }
    }
    let base = Stream::new(rng_seed);
    let mut data = Dataset::new(format!("active_learn:eps={eps_target},delta={delta}"));
    for i in 0..budget {
        let mut stream = base.derive(i as u64);
        let t = stream.below(horizon);
        let s = stream.sample_index(&dist.per_step[t]);
        let a = expert.query(s, t)?;
        data.push_label(s, t, a);
    }
    let trained = learner.train(&data, num_states, num_actions)?;
    Ok((trained.policy, data))
}

/// Exact expected 0-1 disagreement between `policy` and the deterministic
/// `expert` under the supplied per-step distributions:
/// `(1/T) * sum_t sum_s d^t[s] * P(policy_t(s) != expert_t(s))`.
pub fn measured_eps(
    mdp: &TabularMdp,
    policy: &Policy,
    expert: &Policy,
    dist: &StateDistributionSchedule,
) -> Result<f64> {
    if !expert.is_deterministic() {
        return Err(Error::InvalidPolicy("measured_eps needs a deterministic expert".into()));
    }
    mdp.check_policy(policy)?;
    mdp.check_policy(expert)?;
    if dist.horizon() != mdp.horizon {
        return Err(Error::DimensionMismatch("schedule horizon != mdp horizon".into()));
    }
    let mut total = 0.0;
    for (t, d) in dist.per_step.iter().enumerate() {
        for (s, &mass) in d.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let star = expert.deterministic_action(t, s).expect("deterministic expert");
            total += mass * (1.0 - policy.action_prob(t, s, star));
        }
    }
    Ok(total / mdp.horizon as f64)
}
