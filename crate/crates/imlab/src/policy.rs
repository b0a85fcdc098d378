//! Decision rules over tabular state/action spaces.
//!
//! A [`Policy`] is deterministic or stochastic, stationary or per-step, or a
//! weighted mixture of other policies. Mixtures use trajectory-level
//! semantics by default: one component is drawn per episode and then fixed.
//! Per-step re-drawing is available through [`MixingMode::PerStep`] for
//! experimentation but nothing in this crate uses it by default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

pub const WEIGHT_TOL: f64 = 1e-12;

/// How a mixture resolves its components during evaluation or rollout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingMode {
    /// Draw one component per trajectory, then follow it to the horizon.
    PerTrajectory,
    /// Re-draw a component at every step.
    PerStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// One action per state, applied at every step.
    Deterministic { actions: Vec<usize>, num_actions: usize },
    /// One action distribution per state, applied at every step.
    Stochastic { probs: Vec<Vec<f64>> },
    /// One stationary sub-policy per step, exactly `horizon` of them.
    NonStationary { steps: Vec<Policy> },
    /// Weighted components; weights sum to one.
    Mixture { weights: Vec<f64>, components: Vec<Policy> },
}

impl Policy {
    pub fn deterministic(actions: Vec<usize>, num_actions: usize) -> Result<Self> {
        let p = Policy::Deterministic { actions, num_actions };
        p.validate_shape()?;
        Ok(p)
    }

    pub fn stochastic(probs: Vec<Vec<f64>>) -> Result<Self> {
        let p = Policy::Stochastic { probs };
        p.validate_shape()?;
        Ok(p)
    }

    pub fn non_stationary(steps: Vec<Policy>) -> Result<Self> {
        let p = Policy::NonStationary { steps };
        p.validate_shape()?;
        Ok(p)
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<Policy>) -> Result<Self> {
        let p = Policy::Mixture { weights, components };
        p.validate_shape()?;
        Ok(p)
    }

    /// Uniform stochastic stationary policy.
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let row = vec![1.0 / num_actions as f64; num_actions];
        Policy::Stochastic { probs: vec![row; num_states] }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Policy::Deterministic { actions, .. } => actions.len(),
            Policy::Stochastic { probs } => probs.len(),
            Policy::NonStationary { steps } => steps.first().map_or(0, |p| p.num_states()),
            Policy::Mixture { components, .. } => {
                components.first().map_or(0, |p| p.num_states())
            }
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Policy::Deterministic { num_actions, .. } => *num_actions,
            Policy::Stochastic { probs } => probs.first().map_or(0, |r| r.len()),
            Policy::NonStationary { steps } => steps.first().map_or(0, |p| p.num_actions()),
            Policy::Mixture { components, .. } => {
                components.first().map_or(0, |p| p.num_actions())
            }
        }
    }

    pub fn is_mixture(&self) -> bool {
        matches!(self, Policy::Mixture { .. })
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, Policy::Deterministic { .. } | Policy::Stochastic { .. })
    }

    /// Structural validity that does not depend on an MDP: index ranges,
    /// row normalization within `1e-12`, consistent spaces across nested
    /// policies, and sub-policies of a non-stationary policy being
    /// stationary.
    pub fn validate_shape(&self) -> Result<()> {
        match self {
            Policy::Deterministic { actions, num_actions } => {
                if *num_actions == 0 {
                    return Err(Error::InvalidPolicy("num_actions must be positive".into()));
                }
                for (s, &a) in actions.iter().enumerate() {
                    if a >= *num_actions {
                        return Err(Error::InvalidPolicy(format!(
                            "action {a} at state {s} out of range (num_actions {num_actions})"
                        )));
                    }
                }
                Ok(())
            }
            Policy::Stochastic { probs } => {
                let width = probs.first().map_or(0, |r| r.len());
                if width == 0 {
                    return Err(Error::InvalidPolicy("empty action distribution".into()));
                }
                for (s, row) in probs.iter().enumerate() {
                    if row.len() != width {
                        return Err(Error::InvalidPolicy(format!(
                            "ragged probability row at state {s}"
                        )));
                    }
                    if row.iter().any(|&p| p < 0.0) {
                        return Err(Error::InvalidPolicy(format!(
                            "negative probability at state {s}"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > WEIGHT_TOL {
                        return Err(Error::InvalidPolicy(format!(
                            "probability row at state {s} sums to {sum}"
                        )));
                    }
                }
                Ok(())
            }
            Policy::NonStationary { steps } => {
                if steps.is_empty() {
                    return Err(Error::InvalidPolicy("non-stationary policy has no steps".into()));
                }
                let (ns, na) = (steps[0].num_states(), steps[0].num_actions());
                for (t, sub) in steps.iter().enumerate() {
                    if !sub.is_stationary() {
                        return Err(Error::InvalidPolicy(format!(
                            "sub-policy at step {t} is not stationary"
                        )));
                    }
                    if sub.num_states() != ns || sub.num_actions() != na {
                        return Err(Error::InvalidPolicy(format!(
                            "sub-policy at step {t} has mismatched spaces"
                        )));
                    }
                    sub.validate_shape()?;
                }
                Ok(())
            }
            Policy::Mixture { weights, components } => {
                if weights.len() != components.len() || components.is_empty() {
                    return Err(Error::InvalidPolicy(
                        "mixture weights and components must be non-empty and aligned".into(),
                    ));
                }
                if weights.iter().any(|&w| w < 0.0) {
                    return Err(Error::InvalidPolicy("negative mixture weight".into()));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::InvalidPolicy(format!("mixture weights sum to {sum}")));
                }
                let (ns, na) = (components[0].num_states(), components[0].num_actions());
                for (k, c) in components.iter().enumerate() {
                    if c.num_states() != ns || c.num_actions() != na {
                        return Err(Error::InvalidPolicy(format!(
                            "mixture component {k} has mismatched spaces"
                        )));
                    }
                    c.validate_shape()?;
                }
                Ok(())
            }
        }
    }

    /// Validity against a concrete space: `num_states`/`num_actions` must
    /// match, and a non-stationary policy must have exactly `horizon` steps.
    pub fn validate_for(&self, num_states: usize, num_actions: usize, horizon: usize) -> Result<()> {
        self.validate_shape()?;
        if self.num_states() != num_states || self.num_actions() != num_actions {
            return Err(Error::DimensionMismatch(format!(
                "policy over {}x{} states/actions, mdp has {}x{}",
                self.num_states(),
                self.num_actions(),
                num_states,
                num_actions
            )));
        }
        self.check_horizon(horizon)
    }

    fn check_horizon(&self, horizon: usize) -> Result<()> {
        match self {
            Policy::NonStationary { steps } => {
                if steps.len() != horizon {
                    return Err(Error::InvalidPolicy(format!(
                        "non-stationary policy has {} steps, horizon is {horizon}",
                        steps.len()
                    )));
                }
                Ok(())
            }
            Policy::Mixture { components, .. } => {
                components.iter().try_for_each(|c| c.check_horizon(horizon))
            }
            _ => Ok(()),
        }
    }

    /// Probability of taking `a` in state `s` at step `t` (0-based).
    /// For mixtures this is the weight-averaged marginal.
    pub fn action_prob(&self, t: usize, s: usize, a: usize) -> f64 {
        match self {
            Policy::Deterministic { actions, .. } => {
                if actions[s] == a {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::Stochastic { probs } => probs[s][a],
            Policy::NonStationary { steps } => steps[t].action_prob(t, s, a),
            Policy::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.action_prob(t, s, a))
                .sum(),
        }
    }

    /// Writes the action distribution at `(t, s)` into `buf`.
    pub fn fill_action_probs(&self, t: usize, s: usize, buf: &mut [f64]) {
        match self {
            Policy::Deterministic { actions, .. } => {
                buf.fill(0.0);
                buf[actions[s]] = 1.0;
            }
            Policy::Stochastic { probs } => buf.copy_from_slice(&probs[s]),
            Policy::NonStationary { steps } => steps[t].fill_action_probs(t, s, buf),
            Policy::Mixture { weights, components } => {
                buf.fill(0.0);
                let mut tmp = vec![0.0; buf.len()];
                for (w, c) in weights.iter().zip(components) {
                    c.fill_action_probs(t, s, &mut tmp);
                    for (b, v) in buf.iter_mut().zip(&tmp) {
                        *b += w * v;
                    }
                }
            }
        }
    }

    /// The single action taken at `(t, s)` if this policy is deterministic
    /// there, else `None`.
    pub fn deterministic_action(&self, t: usize, s: usize) -> Option<usize> {
        match self {
            Policy::Deterministic { actions, .. } => Some(actions[s]),
            Policy::Stochastic { probs } => {
                let row = &probs[s];
                let a = row.iter().position(|&p| p == 1.0)?;
                Some(a)
            }
            Policy::NonStationary { steps } => steps[t].deterministic_action(t, s),
            Policy::Mixture { .. } => None,
        }
    }

    /// True when every reachable decision is deterministic.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Policy::Deterministic { .. } => true,
            Policy::Stochastic { probs } => probs
                .iter()
                .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1),
            Policy::NonStationary { steps } => steps.iter().all(|p| p.is_deterministic()),
            Policy::Mixture { .. } => false,
        }
    }

    /// Samples an action at `(t, s)`; mixtures must be resolved first.
    pub fn sample_action(&self, t: usize, s: usize, stream: &mut Stream) -> usize {
        match self {
            Policy::Deterministic { actions, .. } => actions[s],
            Policy::Stochastic { probs } => stream.sample_index(&probs[s]),
            Policy::NonStationary { steps } => steps[t].sample_action(t, s, stream),
            Policy::Mixture { .. } => {
                panic!("sample_action on an unresolved mixture; use resolve_component first")
            }
        }
    }

    /// Draws a concrete (non-mixture) component, descending nested mixtures.
    pub fn resolve_component<'a>(&'a self, stream: &mut Stream) -> &'a Policy {
        let mut current = self;
        while let Policy::Mixture { weights, components } = current {
            current = &components[stream.sample_index(weights)];
        }
        current
    }
}
