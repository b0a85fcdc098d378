//! Cost-to-go aggregation: interrupt the learner at a random step, explore
//! one action, let the expert finish, and record the realized cost-to-go.

use crate::error::Result;
use crate::expert::ExpertOracle;
use crate::learners::{Dataset, Learner};
use crate::mdp::{exact_cost, exact_state_distributions, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{trace_eps, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

/// Each iteration executes `beta_i * expert + (1 - beta_i) * learned`
/// (component drawn once per sub-rollout) for `hp.rollouts_per_iter`
/// sub-rollouts, aggregates `(s, t, a, cost-to-go)` records, trains a
/// cost-sensitive classifier on the aggregate, and finally returns the
/// snapshot with the best exact cost.
pub fn aggrevate(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    let mut tb = TraceBuilder::new(AlgoId::Aggrevate, hp, expert);
    let master = Stream::new(hp.seed);

    let mut data = Dataset::new("aggrevate");
    let mut current = Policy::uniform(mdp.num_states, mdp.num_actions);
    let mut best: Option<(usize, f64, Policy)> = None;

    for i in 1..=hp.iterations {
        tb.begin_iteration();
        let beta_i = hp.beta.value(i);
        let executed = mixed_policy(beta_i, expert.policy(), &current)?;
        let exec_sched = exact_state_distributions(mdp, &executed)?;
        let executed_id = tb.store(executed.clone());

        let iter_stream = master.derive(i as u64);
        for j in 0..hp.rollouts_per_iter {
            let mut stream = iter_stream.derive(j as u64);
            let t_star = stream.below(mdp.horizon);
            // One component draw per sub-rollout.
            let use_expert = stream.next_f64() < beta_i;
            let mut s = stream.sample_index(&mdp.initial);
            for t in 0..t_star {
                let a = if use_expert {
                    expert.query(s, t)?
                } else {
                    current.sample_action(t, s, &mut stream)
                };
                s = stream.sample_index(&mdp.transition[s][a]);
            }
            let explore = stream.below(mdp.num_actions);
            let mut q_hat = mdp.cost[s][explore];
            if t_star + 1 < mdp.horizon {
                let mut cur = stream.sample_index(&mdp.transition[s][explore]);
                for t in t_star + 1..mdp.horizon {
                    let a = expert.query(cur, t)?;
                    q_hat += mdp.cost[cur][a];
                    if t + 1 < mdp.horizon {
                        cur = stream.sample_index(&mdp.transition[cur][a]);
                    }
                }
            }
            data.push_cost_sample(s, t_star, explore, q_hat, mdp.num_actions);
        }

        let trained = learner.train(&data, mdp.num_states, mdp.num_actions)?;
        let j_exact = exact_cost(mdp, &trained.policy)?;
        let eps = trace_eps(mdp, &trained.policy, expert.policy(), &exec_sched);
        let tid = tb.store(trained.policy.clone());
        tb.record(i, Some(executed_id), tid, j_exact, eps, expert.query_count(), data.len());

        if best.as_ref().map_or(true, |(_, s, _)| j_exact < *s) {
            best = Some((tid, j_exact, trained.policy.clone()));
        }
        current = trained.policy;
    }

    let (best_id, _, best_policy) = best.expect("at least one iteration");
    let trace = tb.finish(expert, best_id);
    Ok((best_policy, trace))
}

fn mixed_policy(beta: f64, expert: &Policy, learned: &Policy) -> Result<Policy> {
    if beta >= 1.0 {
        Ok(expert.clone())
    } else if beta <= 0.0 {
        Ok(learned.clone())
    } else {
        Policy::mixture(vec![beta, 1.0 - beta], vec![expert.clone(), learned.clone()])
    }
}
