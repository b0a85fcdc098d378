//! Supervised imitation: behavior cloning from expert trajectories.

use crate::error::Result;
use crate::expert::ExpertOracle;
use crate::learners::{Dataset, Learner};
use crate::mdp::{exact_cost, exact_state_distributions, TabularMdp};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{trace_eps, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

/// Collects `rollouts_per_iter` expert trajectories (states from the
/// expert's own distribution, labels from its action queries), trains
/// once, and returns the resulting stationary policy. The trace has
/// exactly one iteration.
pub fn supervised_bc(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    let mut tb = TraceBuilder::new(AlgoId::SupervisedBc, hp, expert);
    tb.begin_iteration();

    let master = Stream::new(hp.seed);
    let mut data = Dataset::new("supervised_bc");
    for k in 0..hp.rollouts_per_iter {
        let mut stream = master.derive(k as u64);
        let mut s = stream.sample_index(&mdp.initial);
        for t in 0..mdp.horizon {
            let a = expert.query(s, t)?;
            data.push_label(s, t, a);
            if t + 1 < mdp.horizon {
                s = stream.sample_index(&mdp.transition[s][a]);
            }
        }
    }

    let trained = learner.train(&data, mdp.num_states, mdp.num_actions)?;
    let expert_sched = exact_state_distributions(mdp, expert.policy())?;
    let eps = trace_eps(mdp, &trained.policy, expert.policy(), &expert_sched);
    let j = exact_cost(mdp, &trained.policy)?;
    let id = tb.store(trained.policy.clone());
    tb.record(1, None, id, j, eps, expert.query_count(), data.len());
    let trace = tb.finish(expert, id);
    Ok((trained.policy, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::build_cliffwalk;
    use crate::learners::TabularLearner;

    #[test]
    fn perfect_learner_matches_expert_on_covered_states() {
        let mdp = build_cliffwalk(6, 1.0, 5).unwrap();
        let expert = ExpertOracle::optimal(&mdp);
        let hp = Hyperparameters::new(1, 0.5, 4, 3);
        let (pol, trace) = supervised_bc(&mdp, &expert, &TabularLearner::default(), &hp).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.iterations[0].eps, 0.0);
        assert_eq!(exact_cost(&mdp, &pol).unwrap(), 0.0);
        // One query per visited state.
        assert_eq!(expert.query_count(), 4 * 5);
        assert_eq!(trace.expert_queries_total, 4 * 5);
    }

    #[test]
    fn zero_trajectories_is_an_error() {
        let mdp = build_cliffwalk(6, 1.0, 5).unwrap();
        let expert = ExpertOracle::optimal(&mdp);
        let hp = Hyperparameters::new(1, 0.5, 0, 3);
        assert!(supervised_bc(&mdp, &expert, &TabularLearner::default(), &hp).is_err());
    }
}
