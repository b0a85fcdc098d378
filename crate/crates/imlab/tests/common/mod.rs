//! Independent oracles shared by the integration suites.
//!
//! Everything here recomputes quantities by brute force — full
//! state/action path enumeration, exhaustive policy enumeration — and
//! deliberately avoids the library's dynamic-programming code paths.

#![allow(dead_code)]

use std::sync::Mutex;

use imlab::learners::{Dataset, Learner, TabularLearner, Trained};
use imlab::mdp::TabularMdp;
use imlab::policy::Policy;

/// Expected total cost by enumerating every (state, action) path with its
/// probability. Mixtures decompose by their weights.
pub fn brute_force_cost(mdp: &TabularMdp, policy: &Policy) -> f64 {
    if let Policy::Mixture { weights, components } = policy {
        return weights
            .iter()
            .zip(components)
            .map(|(w, c)| w * brute_force_cost(mdp, c))
            .sum();
    }
    let mut total = 0.0;
    for s0 in 0..mdp.num_states {
        let p0 = mdp.initial[s0];
        if p0 > 0.0 {
            total += p0 * walk_cost(mdp, policy, 0, s0, 0.0);
        }
    }
    total
}

fn walk_cost(mdp: &TabularMdp, policy: &Policy, t: usize, s: usize, acc: f64) -> f64 {
    if t == mdp.horizon {
        return acc;
    }
    let mut out = 0.0;
    for a in 0..mdp.num_actions {
        let pa = policy.action_prob(t, s, a);
        if pa == 0.0 {
            continue;
        }
        let step_acc = acc + mdp.cost[s][a];
        if t + 1 == mdp.horizon {
            out += pa * step_acc;
        } else {
            for (sp, &p) in mdp.transition[s][a].iter().enumerate() {
                if p > 0.0 {
                    out += pa * p * walk_cost(mdp, policy, t + 1, sp, step_acc);
                }
            }
        }
    }
    out
}

/// Per-step state occupancy by the same path enumeration.
pub fn brute_force_distributions(mdp: &TabularMdp, policy: &Policy) -> Vec<Vec<f64>> {
    if let Policy::Mixture { weights, components } = policy {
        let mut acc = vec![vec![0.0; mdp.num_states]; mdp.horizon];
        for (w, c) in weights.iter().zip(components) {
            let d = brute_force_distributions(mdp, c);
            for (row, drow) in acc.iter_mut().zip(&d) {
                for (x, y) in row.iter_mut().zip(drow) {
                    *x += w * y;
                }
            }
        }
        return acc;
    }
    let mut occupancy = vec![vec![0.0; mdp.num_states]; mdp.horizon];
    for s0 in 0..mdp.num_states {
        let p0 = mdp.initial[s0];
        if p0 > 0.0 {
            walk_occupancy(mdp, policy, 0, s0, p0, &mut occupancy);
        }
    }
    occupancy
}

fn walk_occupancy(
    mdp: &TabularMdp,
    policy: &Policy,
    t: usize,
    s: usize,
    prob: f64,
    occupancy: &mut [Vec<f64>],
) {
    occupancy[t][s] += prob;
    if t + 1 == mdp.horizon {
        return;
    }
    for a in 0..mdp.num_actions {
        let pa = policy.action_prob(t, s, a);
        if pa == 0.0 {
            continue;
        }
        for (sp, &p) in mdp.transition[s][a].iter().enumerate() {
            if p > 0.0 {
                walk_occupancy(mdp, policy, t + 1, sp, prob * pa * p, occupancy);
            }
        }
    }
}

/// Expected cost-to-go of taking `a` at `(t, s)` and then following
/// `policy`, by enumerating continuations.
pub fn brute_force_q(mdp: &TabularMdp, policy: &Policy, t: usize, s: usize, a: usize) -> f64 {
    let mut out = mdp.cost[s][a];
    if t + 1 < mdp.horizon {
        let mut future = 0.0;
        for (sp, &p) in mdp.transition[s][a].iter().enumerate() {
            if p > 0.0 {
                future += p * walk_cost(mdp, policy, t + 1, sp, 0.0);
            }
        }
        out += future;
    }
    out
}

/// Every deterministic non-stationary policy, enumerated by counting in
/// base `num_actions` over the `(step, state)` table. The count is
/// `num_actions ^ (num_states * horizon)`; keep it small.
pub fn all_deterministic_policies(mdp: &TabularMdp) -> Vec<Policy> {
    let cells = mdp.num_states * mdp.horizon;
    let total = (mdp.num_actions as u64).pow(cells as u32);
    let mut out = Vec::with_capacity(total as usize);
    for code in 0..total {
        let mut rem = code;
        let mut steps = Vec::with_capacity(mdp.horizon);
        for _t in 0..mdp.horizon {
            let mut actions = Vec::with_capacity(mdp.num_states);
            for _s in 0..mdp.num_states {
                actions.push((rem % mdp.num_actions as u64) as usize);
                rem /= mdp.num_actions as u64;
            }
            steps.push(Policy::Deterministic { actions, num_actions: mdp.num_actions });
        }
        out.push(Policy::NonStationary { steps });
    }
    out
}

/// Learner wrapper that keeps a copy of the last dataset it was trained
/// on, so tests can inspect what an algorithm aggregated.
pub struct CapturingLearner<L> {
    pub inner: L,
    pub last_dataset: Mutex<Option<Dataset>>,
}

impl<L> CapturingLearner<L> {
    pub fn new(inner: L) -> Self {
        CapturingLearner { inner, last_dataset: Mutex::new(None) }
    }

    pub fn take(&self) -> Option<Dataset> {
        self.last_dataset.lock().unwrap().clone()
    }
}

impl Default for CapturingLearner<TabularLearner> {
    fn default() -> Self {
        Self::new(TabularLearner::default())
    }
}

impl<L: Learner> Learner for CapturingLearner<L> {
    fn train(
        &self,
        data: &Dataset,
        num_states: usize,
        num_actions: usize,
    ) -> imlab::Result<Trained> {
        *self.last_dataset.lock().unwrap() = Some(data.clone());
        self.inner.train(data, num_states, num_actions)
    }
}

/// Deterministic stationary policy with pseudo-random actions.
pub fn random_deterministic_policy(
    num_states: usize,
    num_actions: usize,
    stream: &mut imlab::rng::Stream,
) -> Policy {
    let actions = (0..num_states).map(|_| stream.below(num_actions)).collect();
    Policy::Deterministic { actions, num_actions }
}

/// Stochastic stationary policy with pseudo-random rows.
pub fn random_stochastic_policy(
    num_states: usize,
    num_actions: usize,
    stream: &mut imlab::rng::Stream,
) -> Policy {
    let probs = (0..num_states)
        .map(|_| {
            let raw: Vec<f64> = (0..num_actions).map(|_| 0.05 + stream.next_f64()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / sum).collect()
        })
        .collect();
    Policy::Stochastic { probs }
}
