//! # imlab — an imitation-learning laboratory for tabular MDPs
//!
//! Everything here runs on small finite-horizon MDPs where policy
//! evaluation is exact dynamic programming, so the classical regret
//! bounds of imitation learning can be checked as executable inequalities
//! instead of trusted prose.
//!
//! The crate is organized around seven pieces:
//!
//! * [`mdp`] — tabular MDPs, policies, exact state distributions and
//!   costs, cost-to-go tables, seeded rollouts.
//! * [`expert`] — the expert policy (backward induction, optionally
//!   corrupted) and query accounting.
//! * [`learners`] — datasets, the learner contract, the exact tabular
//!   learner, error injection, and the i.i.d. active learner.
//! * [`algorithms`] — behavior cloning, forward training, SEARN, SMILe,
//!   RAIL, DAgger (plain and coached), and AggreVaTe, each returning a
//!   policy plus a per-iteration audit trail.
//! * [`analysis`] — theorem bound reports, policy disadvantages, the
//!   mistake decomposition, and compounding-exponent fits.
//! * [`envs`] — gridworld, cliff-walk, and random environment generators.
//! * [`cli`] — the experiment runner behind the `imlab` binary.
//!
//! Start with the runnable examples (`cargo run --example <name>`); there
//! is one per major capability:
//!
//! | example | shows |
//! |---|---|
//! | `exact_evaluation` | exact DP vs Monte-Carlo estimates |
//! | `behavior_cloning` | supervised imitation and its quadratic bound |
//! | `forward_training` | per-step training and the linear bound |
//! | `dagger` | dataset aggregation, coaching, convergence |
//! | `smile` | geometric mixing and expert unmixing |
//! | `searn` | cost-sensitive reduction with mixture iterates |
//! | `rail` | active imitation over induced distributions |
//! | `aggrevate` | cost-to-go aggregation |
//! | `compounding` | quadratic-vs-linear regret growth fits |
//! | `experiment_grid` | the config-driven runner and CSV artifacts |

pub mod algorithms;
pub mod analysis;
pub mod cli;
pub mod envs;
pub mod error;
pub mod expert;
pub mod learners;
pub mod mdp;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use mdp::{
    exact_cost, exact_state_distributions, monte_carlo_cost, q_values, rollout, validate_mdp,
    QTable, StateDistributionSchedule, TabularMdp, Trajectory,
};
pub use policy::{MixingMode, Policy};
