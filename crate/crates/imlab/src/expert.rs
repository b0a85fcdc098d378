//! Expert policies and action-query accounting.
//!
//! The expert is realized by finite-horizon backward induction over the
//! MDP ([`optimal_policy`]), optionally corrupted into a stochastic policy
//! that errs at a chosen rate. All action queries go through
//! [`ExpertOracle::query`], which counts them; that counter is the
//! query-complexity measurement the algorithm harnesses report.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::mdp::{q_values, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

/// Deterministic non-stationary policy minimizing expected cost-to-go,
/// ties broken toward the lowest action index.
pub fn optimal_policy(mdp: &TabularMdp) -> Policy {
    let t_max = mdp.horizon;
    let mut values = vec![0.0; mdp.num_states];
    let mut steps: Vec<Policy> = Vec::with_capacity(t_max);
    for _t in (0..t_max).rev() {
        let mut actions = vec![0usize; mdp.num_states];
        let mut new_values = vec![0.0; mdp.num_states];
        for s in 0..mdp.num_states {
            let mut best_a = 0;
            let mut best_q = f64::INFINITY;
            for a in 0..mdp.num_actions {
                let future: f64 = mdp.transition[s][a]
                    .iter()
                    .zip(&values)
                    .map(|(&p, &v)| p * v)
                    .sum();
                let q = mdp.cost[s][a] + future;
                if q < best_q {
                    best_q = q;
                    best_a = a;
                }
            }
            actions[s] = best_a;
            new_values[s] = best_q;
        }
        steps.push(Policy::Deterministic { actions, num_actions: mdp.num_actions });
        values = new_values;
    }
    steps.reverse();
    Policy::NonStationary { steps }
}

/// Answers action queries for a fixed policy, counting every query served.
///
/// The counter is atomic so harnesses may query concurrently; stochastic
/// oracles (from [`corrupt_expert`]) sample deterministically from a stream
/// keyed by the query's sequence number.
#[derive(Debug)]
pub struct ExpertOracle {
    policy: Policy,
    label: String,
    queries: AtomicU64,
    stream: Stream,
}

impl ExpertOracle {
    pub fn new(policy: Policy, label: impl Into<String>, seed: u64) -> Self {
        ExpertOracle { policy, label: label.into(), queries: AtomicU64::new(0), stream: Stream::new(seed) }
    }

    /// Optimal expert for `mdp`.
    pub fn optimal(mdp: &TabularMdp) -> Self {
        Self::new(optimal_policy(mdp), "optimal", 0)
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// Returns the expert's action for `(state, t)` and increments the
    /// query counter by exactly one.
    pub fn query(&self, state: usize, t: usize) -> Result<usize> {
        if state >= self.policy.num_states() {
            return Err(Error::InvalidArgument(format!("state {state} out of range")));
        }
        if let Policy::NonStationary { steps } = &self.policy {
            if t >= steps.len() {
                return Err(Error::InvalidArgument(format!("step {t} out of range")));
            }
        }
        let n = self.queries.fetch_add(1, Ordering::Relaxed);
        if let Some(a) = self.policy.deterministic_action(t, state) {
            return Ok(a);
        }
        let mut stream = self.stream.derive(n);
        Ok(self.policy.sample_action(t, state, &mut stream))
    }
}

/// Wraps a deterministic policy into an oracle that plays the original
/// action with probability `1 - error_rate` and a uniformly random other
/// action otherwise. The corrupted policy is materialized as an explicit
/// stochastic table so exact evaluation applies to it directly.
pub fn corrupt_expert(policy: &Policy, error_rate: f64, rng_seed: u64) -> Result<ExpertOracle> {
    if !(0.0..=1.0).contains(&error_rate) {
        return Err(Error::InvalidArgument(format!(
            "error_rate {error_rate} outside [0, 1]"
        )));
    }
    if !policy.is_deterministic() {
        return Err(Error::InvalidPolicy("corrupt_expert needs a deterministic policy".into()));
    }
    let corrupted = flip_policy(policy, error_rate);
    let label = format!("corrupted:rate={error_rate}");
    Ok(ExpertOracle::new(corrupted, label, rng_seed))
}

/// Stochastic version of `policy` whose sampled action disagrees with the
/// original at exactly `rate` per decision (flips go to a uniformly random
/// other action). With a single action the policy is unchanged.
pub(crate) fn flip_policy(policy: &Policy, rate: f64) -> Policy {
    match policy {
        Policy::Deterministic { actions, num_actions } => {
            if *num_actions == 1 || rate == 0.0 {
                return policy.clone();
            }
            let off = rate / (*num_actions as f64 - 1.0);
            let probs = actions
                .iter()
                .map(|&chosen| {
                    (0..*num_actions)
                        .map(|a| if a == chosen { 1.0 - rate } else { off })
                        .collect()
                })
                .collect();
            Policy::Stochastic { probs }
        }
        Policy::Stochastic { probs } => {
            let num_actions = probs.first().map_or(0, |r| r.len());
            if num_actions <= 1 || rate == 0.0 {
                return policy.clone();
            }
            // Keep each action's mass scaled by (1-rate) and spread the
            // flipped mass of every other action uniformly onto it.
            let scale = rate / (num_actions as f64 - 1.0);
            let mut corrected = Vec::with_capacity(probs.len());
            for row in probs {
                let mut new_row = vec![0.0; num_actions];
                for (a, &p) in row.iter().enumerate() {
                    new_row[a] += (1.0 - rate) * p;
                    for (b, slot) in new_row.iter_mut().enumerate() {
                        if b != a {
                            *slot += p * scale;
                        }
                    }
                }
                corrected.push(new_row);
            }
            Policy::Stochastic { probs: corrected }
        }
        Policy::NonStationary { steps } => Policy::NonStationary {
            steps: steps.iter().map(|p| flip_policy(p, rate)).collect(),
        },
        Policy::Mixture { weights, components } => Policy::Mixture {
            weights: weights.clone(),
            components: components.iter().map(|p| flip_policy(p, rate)).collect(),
        },
    }
}

/// Worst-case one-step cost-to-go disadvantage of deviating from `expert`
/// once, maximized over every step, every state reachable with positive
/// probability under arbitrary action sequences, and every action.
pub fn compute_u(mdp: &TabularMdp, expert: &Policy) -> Result<f64> {
    if !expert.is_deterministic() {
        return Err(Error::InvalidPolicy("compute_u needs a deterministic expert".into()));
    }
    let q = q_values(mdp, expert)?;
    let mut reachable: Vec<bool> = mdp.initial.iter().map(|&p| p > 0.0).collect();
    let mut u: f64 = 0.0;
    for t in 0..mdp.horizon {
        for s in 0..mdp.num_states {
            if !reachable[s] {
                continue;
            }
            let expert_action = expert
                .deterministic_action(t, s)
                .expect("deterministic expert");
            let baseline = q.get(t, s, expert_action);
            for a in 0..mdp.num_actions {
                u = u.max(q.get(t, s, a) - baseline);
            }
        }
        if t + 1 < mdp.horizon {
            let mut next = vec![false; mdp.num_states];
            for s in 0..mdp.num_states {
                if !reachable[s] {
                    continue;
                }
                for a in 0..mdp.num_actions {
                    for (sp, &p) in mdp.transition[s][a].iter().enumerate() {
                        if p > 0.0 {
                            next[sp] = true;
                        }
                    }
                }
            }
            reachable = next;
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::exact_cost;

    fn two_action_single_state(horizon: usize) -> TabularMdp {
        TabularMdp {
            num_states: 1,
            num_actions: 2,
            horizon,
            initial: vec![1.0],
            cost: vec![vec![0.0, 1.0]],
            transition: vec![vec![vec![1.0], vec![1.0]]],
        }
    }

    #[test]
    fn optimal_prefers_zero_cost_action() {
        let mdp = two_action_single_state(4);
        let pol = optimal_policy(&mdp);
        for t in 0..4 {
            assert_eq!(pol.deterministic_action(t, 0), Some(0));
        }
        assert_eq!(exact_cost(&mdp, &pol).unwrap(), 0.0);
    }

    #[test]
    fn equal_costs_tie_break_to_action_zero() {
        let mut mdp = two_action_single_state(3);
        mdp.cost = vec![vec![0.5, 0.5]];
        let pol = optimal_policy(&mdp);
        for t in 0..3 {
            assert_eq!(pol.deterministic_action(t, 0), Some(0));
        }
    }

    #[test]
    fn query_counting_is_exact() {
        let mdp = two_action_single_state(3);
        let oracle = ExpertOracle::optimal(&mdp);
        assert_eq!(oracle.query_count(), 0);
        oracle.query(0, 0).unwrap();
        assert_eq!(oracle.query_count(), 1);
        for _ in 0..9 {
            oracle.query(0, 2).unwrap();
        }
        assert_eq!(oracle.query_count(), 10);
    }

    #[test]
    fn optimal_oracle_answers_zero_cost_action_everywhere() {
        let mdp = two_action_single_state(5);
        let oracle = ExpertOracle::optimal(&mdp);
        for t in 0..5 {
            assert_eq!(oracle.query(0, t).unwrap(), 0);
        }
    }

    #[test]
    fn query_rejects_out_of_range() {
        let mdp = two_action_single_state(3);
        let oracle = ExpertOracle::optimal(&mdp);
        assert!(oracle.query(5, 0).is_err());
        assert!(oracle.query(0, 3).is_err());
    }

    #[test]
    fn corrupt_zero_rate_is_identity() {
        let mdp = two_action_single_state(3);
        let clean = optimal_policy(&mdp);
        let oracle = corrupt_expert(&clean, 0.0, 7).unwrap();
        assert_eq!(exact_cost(&mdp, oracle.policy()).unwrap(), 0.0);
        for t in 0..3 {
            assert_eq!(oracle.query(0, t).unwrap(), 0);
        }
    }

    #[test]
    fn corrupt_full_rate_always_flips_binary_actions() {
        let mdp = two_action_single_state(3);
        let clean = optimal_policy(&mdp);
        let oracle = corrupt_expert(&clean, 1.0, 7).unwrap();
        for t in 0..3 {
            assert_eq!(oracle.query(0, t).unwrap(), 1);
        }
        assert_eq!(exact_cost(&mdp, oracle.policy()).unwrap(), 3.0);
    }

    #[test]
    fn corruption_cost_gap_matches_exact_dp() {
        let mdp = two_action_single_state(6);
        let clean = optimal_policy(&mdp);
        let oracle = corrupt_expert(&clean, 0.1, 1).unwrap();
        let j = exact_cost(&mdp, oracle.policy()).unwrap();
        // Each step pays 1 with probability 0.1.
        assert!((j - 0.6).abs() < 1e-12);
        assert_eq!(oracle.label(), "corrupted:rate=0.1");
    }

    #[test]
    fn u_is_one_when_switching_costs_one() {
        let mdp = two_action_single_state(3);
        let expert = optimal_policy(&mdp);
        let u = compute_u(&mdp, &expert).unwrap();
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u_is_zero_when_all_actions_equal() {
        let mut mdp = two_action_single_state(3);
        mdp.cost = vec![vec![0.4, 0.4]];
        let expert = optimal_policy(&mdp);
        assert_eq!(compute_u(&mdp, &expert).unwrap(), 0.0);
    }

    #[test]
    fn u_ignores_unreachable_states() {
        // State 1 is unreachable; its huge disadvantage must not count.
        let mdp = TabularMdp {
            num_states: 2,
            num_actions: 2,
            horizon: 4,
            initial: vec![1.0, 0.0],
            cost: vec![vec![0.0, 0.2], vec![0.0, 1.0]],
            transition: vec![
                vec![vec![1.0, 0.0], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
        };
        let expert = optimal_policy(&mdp);
        let u = compute_u(&mdp, &expert).unwrap();
        assert!((u - 0.2).abs() < 1e-12);
    }
}
