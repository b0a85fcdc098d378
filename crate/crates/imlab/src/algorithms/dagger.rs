//! Dataset aggregation: run the current policy, label everything it
//! visits, retrain on the union of all labels, keep the best snapshot.
//!
//! With `coaching` enabled the labels come from hope actions
//! `argmax_a [lambda_i * score_i(s, a) - C_t(s, a)]`, where the score is
//! the learner's own confidence and `C_t(s, a)` is the expert's exact
//! cost-to-go disadvantage at `(t, s, a)`.

use crate::error::Result;
use crate::expert::ExpertOracle;
use crate::learners::{Dataset, Learner, Trained};
use crate::mdp::{
    exact_cost, exact_state_distributions, monte_carlo_cost, q_values, QTable, TabularMdp,
};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{trace_eps, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

/// How the best snapshot is selected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValidationMode {
    /// Exact dynamic-programming cost (the default; available in simulation).
    Exact,
    /// Held-out Monte-Carlo estimate over `n` rollouts.
    Rollouts { n: usize },
}

pub fn dagger(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
    coaching: bool,
) -> Result<(Policy, RunTrace)> {
    dagger_validated(mdp, expert, learner, hp, coaching, ValidationMode::Exact)
}

pub fn dagger_validated(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
    coaching: bool,
    validation: ValidationMode,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    let algo = if coaching { AlgoId::DaggerCoaching } else { AlgoId::Dagger };
    let mut tb = TraceBuilder::new(algo, hp, expert);
    let master = Stream::new(hp.seed);
    let q_expert: Option<QTable> = if coaching {
        Some(q_values(mdp, expert.policy())?)
    } else {
        None
    };

    let mut data = Dataset::new(algo.name());
    let mut executed: Policy = expert.policy().clone();
    let mut last_trained: Option<Trained> = None;
    // (snapshot id, validation score, policy)
    let mut best: Option<(usize, f64, Policy)> = None;

    for i in 1..=hp.iterations {
        tb.begin_iteration();
        let iter_stream = master.derive(i as u64);
        let exec_sched = exact_state_distributions(mdp, &executed)?;
        let executed_id = tb.store(executed.clone());

        let hope = if coaching {
            let q = q_expert.as_ref().expect("coaching precomputes q");
            let table = hope_table(
                mdp,
                q,
                last_trained.as_ref(),
                hp.lambda.value(i),
            );
            tb.store_hope_target(hope_policy(&table, mdp.num_actions));
            Some(table)
        } else {
            None
        };

        // Sample trajectories under the executed policy; iteration 1 runs
        // the expert itself, so its actions are served as live queries.
        let mut visited: Vec<(usize, usize, usize)> = Vec::new();
        for k in 0..hp.rollouts_per_iter {
            let mut stream = iter_stream.derive(k as u64);
            let resolved = executed.resolve_component(&mut stream);
            let mut s = stream.sample_index(&mdp.initial);
            for t in 0..mdp.horizon {
                let a = if i == 1 {
                    expert.query(s, t)?
                } else {
                    resolved.sample_action(t, s, &mut stream)
                };
                visited.push((s, t, a));
                if t + 1 < mdp.horizon {
                    s = stream.sample_index(&mdp.transition[s][a]);
                }
            }
        }

        for (s, t, executed_action) in visited {
            let label = match &hope {
                Some(table) => table[t][s],
                None => {
                    if i == 1 {
                        // The executed query already is the expert action.
                        executed_action
                    } else {
                        expert.query(s, t)?
                    }
                }
            };
            data.push_label(s, t, label);
        }

        let trained = learner.train(&data, mdp.num_states, mdp.num_actions)?;
        let j = exact_cost(mdp, &trained.policy)?;
        let eps = trace_eps(mdp, &trained.policy, expert.policy(), &exec_sched);
        let tid = tb.store(trained.policy.clone());
        tb.record(i, Some(executed_id), tid, j, eps, expert.query_count(), data.len());

        let score = match validation {
            ValidationMode::Exact => j,
            ValidationMode::Rollouts { n } => {
                monte_carlo_cost(mdp, &trained.policy, n, hp.seed ^ (i as u64) << 32)?.0
            }
        };
        if best.as_ref().map_or(true, |(_, s, _)| score < *s) {
            best = Some((tid, score, trained.policy.clone()));
        }
        executed = trained.policy.clone();
        last_trained = Some(trained);
    }

    let (best_id, _, best_policy) = best.expect("at least one iteration");
    let trace = tb.finish(expert, best_id);
    Ok((best_policy, trace))
}

/// Hope action per `(t, s)`: argmax over actions of
/// `lambda * score(s, a) - C_t(s, a)`, ties toward the lowest index.
/// Before any learner exists the scores are uniform, which makes the hope
/// action the expert-greedy one.
fn hope_table(
    mdp: &TabularMdp,
    q_expert: &QTable,
    trained: Option<&Trained>,
    lambda: f64,
) -> Vec<Vec<usize>> {
    let uniform = 1.0 / mdp.num_actions as f64;
    (0..mdp.horizon)
        .map(|t| {
            (0..mdp.num_states)
                .map(|s| {
                    let min_q = (0..mdp.num_actions)
                        .map(|a| q_expert.get(t, s, a))
                        .fold(f64::INFINITY, f64::min);
                    let mut best_a = 0;
                    let mut best_v = f64::NEG_INFINITY;
                    for a in 0..mdp.num_actions {
                        let score = trained.map_or(uniform, |tr| tr.score(s, a));
                        let v = lambda * score - (q_expert.get(t, s, a) - min_q);
                        if v > best_v {
                            best_v = v;
                            best_a = a;
                        }
                    }
                    best_a
                })
                .collect()
        })
        .collect()
}

fn hope_policy(table: &[Vec<usize>], num_actions: usize) -> Policy {
    Policy::NonStationary {
        steps: table
            .iter()
            .map(|row| Policy::Deterministic { actions: row.clone(), num_actions })
            .collect(),
    }
}
