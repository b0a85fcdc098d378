//! Active imitation by reduction: one active-learner call per step index,
//! each targeting the exact state distribution of the previous policy.

use crate::error::{Error, Result};
use crate::expert::ExpertOracle;
use crate::learners::{active_learn, Learner};
use crate::mdp::{exact_cost, exact_state_distributions, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{trace_eps, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

// Accuracy/confidence requests passed through to the active learner; they
// are recorded, not guaranteed (the budget is what matters).
const RAIL_EPS_TARGET: f64 = 0.05;
const RAIL_DELTA: f64 = 0.1;

/// Runs `horizon` active-learning calls, each sampling
/// `hp.rollouts_per_iter` labeled states i.i.d. from the previous
/// policy's exact distribution. Starts from the uniform policy and
/// returns the last iterate; the trace shows how early the intermediate
/// stationary policies become useful.
pub fn rail(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    if hp.iterations != mdp.horizon {
        return Err(Error::InvalidArgument(format!(
            "rail needs iterations == horizon ({} != {})",
            hp.iterations, mdp.horizon
        )));
    }
    let budget = hp.rollouts_per_iter;
    let mut tb = TraceBuilder::new(AlgoId::Rail, hp, expert);
    let master = Stream::new(hp.seed);
    let mut current = Policy::uniform(mdp.num_states, mdp.num_actions);
    let mut records_total = 0;
    let mut final_id = 0;

    for t in 1..=mdp.horizon {
        tb.begin_iteration();
        let dist = exact_state_distributions(mdp, &current)?;
        let executed_id = tb.store(current.clone());
        let call_seed = master.derive(t as u64).next_u64();
        let (pol, data) = active_learn(
            RAIL_EPS_TARGET,
            RAIL_DELTA / t as f64,
            &dist,
            expert,
            budget,
            call_seed,
            learner,
            mdp.num_states,
            mdp.num_actions,
        )?;
        records_total += data.len();
        let j = exact_cost(mdp, &pol)?;
        let eps = trace_eps(mdp, &pol, expert.policy(), &dist);
        let tid = tb.store(pol.clone());
        final_id = tid;
        tb.record(t, Some(executed_id), tid, j, eps, expert.query_count(), records_total);
        current = pol;
    }

    let trace = tb.finish(expert, final_id);
    Ok((current, trace))
}
