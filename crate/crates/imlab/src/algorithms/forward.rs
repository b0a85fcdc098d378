//! Forward training: one sub-policy per step, trained on the state
//! distribution the already-trained prefix induces.

use crate::error::{Error, Result};
use crate::expert::ExpertOracle;
use crate::learners::{Dataset, Learner};
use crate::mdp::{exact_cost, exact_state_distributions, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{sub_policy_at, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

/// Trains the step-`i` sub-policy on states reached at step `i` when the
/// trained prefix runs steps `0..i` and the expert runs the rest (those
/// expert steps are served as live queries). Requires
/// `hp.iterations == mdp.horizon`; the returned non-stationary policy
/// never queries the expert.
pub fn forward_training(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    if hp.iterations != mdp.horizon {
        return Err(Error::InvalidArgument(format!(
            "forward training needs iterations == horizon ({} != {})",
            hp.iterations, mdp.horizon
        )));
    }
    let t_max = mdp.horizon;
    let mut tb = TraceBuilder::new(AlgoId::ForwardTraining, hp, expert);
    let master = Stream::new(hp.seed);
    let mut subs: Vec<Policy> = Vec::with_capacity(t_max);
    let mut records_total = 0;

    for i in 0..t_max {
        tb.begin_iteration();
        // Composite in effect while sampling this iteration: trained subs
        // for steps < i, the expert from step i on.
        let sampling_composite = composite(&subs, expert.policy(), t_max);
        let prev_sched = exact_state_distributions(mdp, &sampling_composite)?;

        let iter_stream = master.derive(i as u64);
        let mut data = Dataset::new(format!("forward_training:step={i}"));
        for k in 0..hp.rollouts_per_iter {
            let mut stream = iter_stream.derive(k as u64);
            let mut s = stream.sample_index(&mdp.initial);
            for t in 0..t_max {
                let a = if t < i {
                    subs[t].sample_action(t, s, &mut stream)
                } else {
                    expert.query(s, t)?
                };
                if t == i {
                    data.push_label(s, t, a);
                }
                if t + 1 < t_max {
                    s = stream.sample_index(&mdp.transition[s][a]);
                }
            }
        }
        records_total += data.len();

        let trained = learner.train(&data, mdp.num_states, mdp.num_actions)?;
        // Disagreement of the new sub-policy with the expert at step i,
        // under the distribution it was trained on.
        let eps = {
            let mut p = vec![0.0; mdp.num_actions];
            let mut q = vec![0.0; mdp.num_actions];
            let mut total = 0.0;
            for (s, &mass) in prev_sched.per_step[i].iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                trained.policy.fill_action_probs(i, s, &mut p);
                expert.policy().fill_action_probs(i, s, &mut q);
                let overlap: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
                total += mass * (1.0 - overlap);
            }
            total
        };

        subs.push(trained.policy);
        let current = composite(&subs, expert.policy(), t_max);
        let j = exact_cost(mdp, &current)?;
        let tid = tb.store(subs[i].clone());
        tb.record(i + 1, None, tid, j, eps, expert.query_count(), records_total);
    }

    let final_policy = Policy::non_stationary(subs)?;
    let id = tb.store(final_policy.clone());
    let trace = tb.finish(expert, id);
    Ok((final_policy, trace))
}

/// Non-stationary policy using `subs` for the trained prefix and the
/// expert's sub-policies afterwards.
fn composite(subs: &[Policy], expert: &Policy, horizon: usize) -> Policy {
    let steps = (0..horizon)
        .map(|t| {
            if t < subs.len() {
                subs[t].clone()
            } else {
                sub_policy_at(expert, t)
            }
        })
        .collect();
    Policy::NonStationary { steps }
}
