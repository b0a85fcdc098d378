//! Cost-sensitive reduction with mixture iterates: start from the expert,
//! repeatedly train a classifier on per-action cost-to-go examples from
//! the current mixture, interpolate it in stochastically, and return the
//! mixture with the expert component removed.

use crate::error::{Error, Result};
use crate::expert::ExpertOracle;
use crate::learners::{Dataset, Learner};
use crate::mdp::{
    exact_cost, exact_state_distributions, state_values, StateDistributionSchedule, TabularMdp,
};
use crate::policy::Policy;
use crate::rng::Stream;

use super::{trace_eps, AlgoId, Hyperparameters, RunTrace, TraceBuilder};

/// Below this `|S| * |A| * T` size, per-action cost-to-go is computed
/// exactly from component value tables instead of Monte-Carlo
/// continuations.
const EXACT_COST_TO_GO_LIMIT: usize = 200_000;
/// Continuation rollouts per action in Monte-Carlo mode.
const MC_CONTINUATIONS: usize = 5;

/// SEARN's interpolation weight is `hp.alpha`. Returns the final mixture
/// with the expert component renormalized away; errors if the expert still
/// carries all the mass (iterations * alpha too small).
pub fn searn(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    learner: &dyn Learner,
    hp: &Hyperparameters,
) -> Result<(Policy, RunTrace)> {
    hp.validate()?;
    mdp.check_policy(expert.policy())?;
    let beta = hp.alpha;
    let n = hp.iterations;
    let mut tb = TraceBuilder::new(AlgoId::Searn, hp, expert);
    let master = Stream::new(hp.seed);
    let exact_mode = mdp.num_states * mdp.num_actions * mdp.horizon <= EXACT_COST_TO_GO_LIMIT;

    // Component 0 is the expert; weights stay aligned with components.
    let mut components: Vec<Policy> = vec![expert.policy().clone()];
    let mut weights: Vec<f64> = vec![1.0];
    // Value tables per component, for exact continuation costs.
    let mut value_tables: Vec<Vec<Vec<f64>>> = vec![state_values(mdp, expert.policy())?];
    let mut mix_sched = exact_state_distributions(mdp, expert.policy())?;
    let mut mix_j = exact_cost(mdp, expert.policy())?;
    let mut records_total = 0;

    for i in 1..=n {
        tb.begin_iteration();
        let iter_stream = master.derive(i as u64);
        let mut data = Dataset::new(format!("searn:iter={i}"));
        for k in 0..hp.rollouts_per_iter {
            let mut stream = iter_stream.derive(k as u64);
            let comp = stream.sample_index(&weights);
            let mut s = stream.sample_index(&mdp.initial);
            for t in 0..mdp.horizon {
                // Cost vector for every action at (s, t) under the mixture.
                let costs: Vec<f64> = (0..mdp.num_actions)
                    .map(|a| {
                        if exact_mode {
                            Ok(exact_action_cost(mdp, &value_tables, &weights, s, t, a))
                        } else {
                            mc_action_cost(
                                mdp, expert, &components, &weights, s, t, a, &mut stream,
                            )
                        }
                    })
                    .collect::<Result<_>>()?;
                data.push_cost_vector(s, t, costs);
                let a = if comp == 0 {
                    expert.query(s, t)?
                } else {
                    components[comp].sample_action(t, s, &mut stream)
                };
                if t + 1 < mdp.horizon {
                    s = stream.sample_index(&mdp.transition[s][a]);
                }
            }
        }
        records_total += data.len();

        let trained = learner.train(&data, mdp.num_states, mdp.num_actions)?;
        let eps = trace_eps(mdp, &trained.policy, expert.policy(), &mix_sched);

        let new_sched = exact_state_distributions(mdp, &trained.policy)?;
        let new_j = exact_cost(mdp, &trained.policy)?;
        mix_j = (1.0 - beta) * mix_j + beta * new_j;
        blend(&mut mix_sched, &new_sched, beta);
        value_tables.push(state_values(mdp, &trained.policy)?);

        for w in &mut weights {
            *w *= 1.0 - beta;
        }
        weights.push(beta);
        let tid = tb.store(trained.policy.clone());
        components.push(trained.policy);
        tb.record(i, None, tid, mix_j, eps, expert.query_count(), records_total);
    }

    let expert_mass = weights[0];
    if expert_mass >= 1.0 - 1e-12 {
        return Err(Error::InvalidArgument(
            "searn cannot renormalize: the expert still carries all mixture mass \
             (iterations * alpha too small)"
                .into(),
        ));
    }
    let mut unmixed: Vec<f64> = weights[1..].iter().map(|w| w / (1.0 - expert_mass)).collect();
    let sum: f64 = unmixed.iter().sum();
    for w in &mut unmixed {
        *w /= sum;
    }
    let final_policy = Policy::mixture(unmixed, components[1..].to_vec())?;
    let id = tb.store(final_policy.clone());
    let trace = tb.finish(expert, id);
    Ok((final_policy, trace))
}

/// Exact cost of taking `a` at `(s, t)` and then following the mixture
/// (fresh component draw): `cost[s][a] + sum_s' B(s,a,s') V_mix[t+1][s']`.
fn exact_action_cost(
    mdp: &TabularMdp,
    value_tables: &[Vec<Vec<f64>>],
    weights: &[f64],
    s: usize,
    t: usize,
    a: usize,
) -> f64 {
    let mut future = 0.0;
    for (sp, &p) in mdp.transition[s][a].iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let v_mix: f64 = weights
            .iter()
            .zip(value_tables)
            .map(|(w, table)| w * table[t + 1][sp])
            .sum();
        future += p * v_mix;
    }
    mdp.cost[s][a] + future
}

/// Monte-Carlo continuation estimate of the same quantity; each
/// continuation draws a fresh component (the expert component is served
/// through live queries).
#[allow(clippy::too_many_arguments)]
fn mc_action_cost(
    mdp: &TabularMdp,
    expert: &ExpertOracle,
    components: &[Policy],
    weights: &[f64],
    s: usize,
    t: usize,
    a: usize,
    stream: &mut Stream,
) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..MC_CONTINUATIONS {
        let mut acc = mdp.cost[s][a];
        if t + 1 < mdp.horizon {
            let comp = stream.sample_index(weights);
            let mut cur = stream.sample_index(&mdp.transition[s][a]);
            for tau in t + 1..mdp.horizon {
                let act = if comp == 0 {
                    expert.query(cur, tau)?
                } else {
                    components[comp].sample_action(tau, cur, stream)
                };
                acc += mdp.cost[cur][act];
                if tau + 1 < mdp.horizon {
                    cur = stream.sample_index(&mdp.transition[cur][act]);
                }
            }
        }
        total += acc;
    }
    Ok(total / MC_CONTINUATIONS as f64)
}

fn blend(mix: &mut StateDistributionSchedule, new: &StateDistributionSchedule, beta: f64) {
    for (m, n) in mix.per_step.iter_mut().zip(&new.per_step) {
        for (x, y) in m.iter_mut().zip(n) {
            *x = (1.0 - beta) * *x + beta * y;
        }
    }
    for (x, y) in mix.average.iter_mut().zip(&new.average) {
        *x = (1.0 - beta) * *x + beta * y;
    }
}
