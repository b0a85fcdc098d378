//! Stochastic mixing: train on the current mixture's distribution, add the
//! new policy with a geometrically shrinking weight, and finally remove
//! the expert component.

use crate::error::{Error, Result};
use crate::expert::ExpertOracle;
use crate::learners::{Dataset, Learner};
use crate::mdp::{exact_cost, exact_state_distributions, StateDistributionSchedule, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{trace_eps, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

/// Mixture weights after `n` iterations with rate `alpha`: the expert
/// keeps `(1-alpha)^n` and the `j`-th learned policy `alpha (1-alpha)^(j-1)`.
pub fn smile_weights(alpha: f64, n: usize) -> (f64, Vec<f64>) {
    let mut expert_w = 1.0;
    let mut learned = Vec::with_capacity(n);
    for _ in 0..n {
        learned.push(alpha * expert_w);
        expert_w *= 1.0 - alpha;
    }
    (expert_w, learned)
}

/// Learned-component weights after removing the expert and renormalizing.
pub fn smile_unmixed_weights(alpha: f64, n: usize) -> Vec<f64> {
    let (expert_w, mut learned) = smile_weights(alpha, n);
    let rest = 1.0 - expert_w;
    for w in &mut learned {
        *w /= rest;
    }
    // Exact renormalization against accumulated rounding.
    let sum: f64 = learned.iter().sum();
    for w in &mut learned {
        *w /= sum;
    }
    learned
}

/// Runs SMILe for `hp.iterations` rounds with rate `hp.alpha` (use
/// [`Hyperparameters::smile_defaults`] for the recommended schedule) and
/// returns the unmixed policy: the learned components with the expert's
/// weight removed and the remainder renormalized.
pub fn smile(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    if hp.alpha >= 1.0 {
        return Err(Error::InvalidArgument("smile needs alpha in (0, 1)".into()));
    }
    let alpha = hp.alpha;
    let n = hp.iterations;
    let mut tb = TraceBuilder::new(AlgoId::Smile, hp, expert);
    let master = Stream::new(hp.seed);

    let mut learned: Vec<Policy> = Vec::with_capacity(n);
    let mut learned_ids: Vec<usize> = Vec::with_capacity(n);
    let mut expert_w = 1.0;
    let mut learned_w: Vec<f64> = Vec::with_capacity(n);
    // Running mixture state: schedule and cost of the current iterate.
    // Adding component i moves exactly `alpha * (1-alpha)^(i-1)` of mass
    // from the expert onto the new policy; previously added components
    // keep their weights.
    let expert_sched = exact_state_distributions(mdp, expert.policy())?;
    let j_star = exact_cost(mdp, expert.policy())?;
    let mut mix_sched = expert_sched.clone();
    let mut mix_j = j_star;
    let mut records_total = 0;

    for i in 1..=n {
        tb.begin_iteration();
        let iter_stream = master.derive(i as u64);
        let mut data = Dataset::new(format!("smile:iter={i}"));
        for k in 0..hp.rollouts_per_iter {
            let mut stream = iter_stream.derive(k as u64);
            // Draw the trajectory's component from the current mixture.
            let comp = draw_component(expert_w, &learned_w, &mut stream);
            let mut s = stream.sample_index(&mdp.initial);
            for t in 0..mdp.horizon {
                let a = match comp {
                    None => {
                        // Expert component: the executed query doubles as
                        // the label.
                        let a = expert.query(s, t)?;
                        data.push_label(s, t, a);
                        a
                    }
                    Some(idx) => {
                        let label = expert.query(s, t)?;
                        data.push_label(s, t, label);
                        learned[idx].sample_action(t, s, &mut stream)
                    }
                };
                if t + 1 < mdp.horizon {
                    s = stream.sample_index(&mdp.transition[s][a]);
                }
            }
        }
        records_total += data.len();

        let trained = learner.train(&data, mdp.num_states, mdp.num_actions)?;
        // Disagreement with the expert under the distribution the policy
        // was trained on (the previous mixture's schedule).
        let eps = trace_eps(mdp, &trained.policy, expert.policy(), &mix_sched);

        let new_sched = exact_state_distributions(mdp, &trained.policy)?;
        let new_j = exact_cost(mdp, &trained.policy)?;
        let w_new = alpha * expert_w;
        mix_j += w_new * (new_j - j_star);
        shift_schedule(&mut mix_sched, &expert_sched, &new_sched, w_new);

        learned_w.push(w_new);
        expert_w *= 1.0 - alpha;
        let tid = tb.store(trained.policy.clone());
        learned_ids.push(tid);
        learned.push(trained.policy);
        tb.record(i, None, tid, mix_j, eps, expert.query_count(), records_total);
    }

    let weights = smile_unmixed_weights(alpha, n);
    let final_policy = Policy::mixture(weights, learned)?;
    let id = tb.store(final_policy.clone());
    let trace = tb.finish(expert, id);
    Ok((final_policy, trace))
}

/// `None` means the expert component.
fn draw_component(expert_w: f64, learned_w: &[f64], stream: &mut Stream) -> Option<usize> {
    let total: f64 = expert_w + learned_w.iter().sum::<f64>();
    let u = stream.next_f64() * total;
    if u < expert_w {
        return None;
    }
    let mut cum = expert_w;
    for (i, &w) in learned_w.iter().enumerate() {
        cum += w;
        if u < cum {
            return Some(i);
        }
    }
    if learned_w.is_empty() {
        None
    } else {
        Some(learned_w.len() - 1)
    }
}

/// Moves `w` of probability mass from the expert's schedule onto the new
/// component's schedule.
fn shift_schedule(
    mix: &mut StateDistributionSchedule,
    expert: &StateDistributionSchedule,
    new: &StateDistributionSchedule,
    w: f64,
) {
    for ((m, e), n) in mix.per_step.iter_mut().zip(&expert.per_step).zip(&new.per_step) {
        for ((x, ye), yn) in m.iter_mut().zip(e).zip(n) {
            *x += w * (yn - ye);
        }
    }
    for ((x, ye), yn) in mix.average.iter_mut().zip(&expert.average).zip(&new.average) {
        *x += w * (yn - ye);
    }
}
