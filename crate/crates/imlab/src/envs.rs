//! Seeded generators for the desk-scale environment families.
//!
//! Three families cover the experiment suites:
//!
//! * `gridworld` — slip-perturbed shortest-path navigation with an
//!   absorbing goal; the multi-algorithm comparison arena.
//! * `cliffwalk` — a zero-cost corridor over a costly recovery ladder.
//!   The expert walks the corridor and knows how to climb out after a
//!   fall; a learner that never saw the ladder keeps sliding to the
//!   bottom, which is what separates quadratic from linear regret growth.
//! * `random` — dense or sparse random dynamics for oracle checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::rng::Stream;

/// Rungs on the cliff-walk recovery ladder. A fall lands at the bottom
/// rung; climbing out takes one step per rung.
pub const CLIFF_DEPTH: usize = 3;

/// Generator description for one environment instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EnvSpec {
    Gridworld {
        width: usize,
        height: usize,
        goal: [usize; 2],
        slip: f64,
        horizon: usize,
        /// Distance-normalized per-step costs instead of the flat cost of 1.
        #[serde(default)]
        shaped: bool,
    },
    Cliffwalk { length: usize, fall_cost: f64, horizon: usize },
    Random { num_states: usize, num_actions: usize, density: f64, seed: u64, horizon: usize },
}

impl EnvSpec {
    pub fn build(&self) -> Result<TabularMdp> {
        match *self {
            EnvSpec::Gridworld { width, height, goal, slip, horizon, shaped } => {
                build_gridworld_with(width, height, (goal[0], goal[1]), slip, horizon, shaped)
            }
            EnvSpec::Cliffwalk { length, fall_cost, horizon } => {
                build_cliffwalk(length, fall_cost, horizon)
            }
            EnvSpec::Random { num_states, num_actions, density, seed, horizon } => {
                build_random_mdp(num_states, num_actions, density, seed, horizon)
            }
        }
    }

    pub fn horizon(&self) -> usize {
        match *self {
            EnvSpec::Gridworld { horizon, .. }
            | EnvSpec::Cliffwalk { horizon, .. }
            | EnvSpec::Random { horizon, .. } => horizon,
        }
    }

    pub fn with_horizon(&self, horizon: usize) -> EnvSpec {
        let mut spec = self.clone();
        match &mut spec {
            EnvSpec::Gridworld { horizon: h, .. }
            | EnvSpec::Cliffwalk { horizon: h, .. }
            | EnvSpec::Random { horizon: h, .. } => *h = horizon,
        }
        spec
    }

    /// Compact identifier used in CSV rows and artifact names. Never
    /// contains commas or whitespace.
    pub fn label(&self) -> String {
        match *self {
            EnvSpec::Gridworld { width, height, goal, slip, .. } => {
                format!("gridworld_{width}x{height}_g{}-{}_s{slip}", goal[0], goal[1])
            }
            EnvSpec::Cliffwalk { length, fall_cost, .. } => {
                format!("cliffwalk_l{length}_f{fall_cost}")
            }
            EnvSpec::Random { num_states, num_actions, density, seed, .. } => {
                format!("random_s{num_states}_a{num_actions}_d{density}_seed{seed}")
            }
        }
    }
}

/// Grid navigation with the default flat cost of 1 per non-goal step; see
/// [`build_gridworld_with`].
pub fn build_gridworld(
    width: usize,
    height: usize,
    goal: (usize, usize),
    slip: f64,
    horizon: usize,
) -> Result<TabularMdp> {
    build_gridworld_with(width, height, goal, slip, horizon, false)
}

/// Grid navigation. Actions are N/E/S/W (indices 0..4); moving off the
/// grid stays in place; with probability `slip` the move goes to one of
/// the two perpendicular directions (`slip/2` each). Episodes start in the
/// top-left cell; the goal is absorbing and free. Non-goal steps cost 1,
/// or `manhattan_distance(s, goal) / max_distance` when `shaped` is set
/// (shaped costs make the optimal action independent of the step index).
pub fn build_gridworld_with(
    width: usize,
    height: usize,
    goal: (usize, usize),
    slip: f64,
    horizon: usize,
    shaped: bool,
) -> Result<TabularMdp> {
    if width == 0 || height == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("gridworld dimensions must be positive".into()));
    }
    if goal.0 >= width || goal.1 >= height {
        return Err(Error::InvalidArgument(format!(
            "goal ({}, {}) outside {width}x{height} grid",
            goal.0, goal.1
        )));
    }
    if !(0.0..1.0).contains(&slip) {
        return Err(Error::InvalidArgument(format!("slip {slip} outside [0, 1)")));
    }
    let num_states = width * height;
    let num_actions = 4;
    let goal_idx = goal.1 * width + goal.0;
    let step = |x: usize, y: usize, dir: usize| -> usize {
        let (nx, ny) = match dir {
            0 => (x as isize, y as isize - 1),
            1 => (x as isize + 1, y as isize),
            2 => (x as isize, y as isize + 1),
            _ => (x as isize - 1, y as isize),
        };
        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
            y * width + x
        } else {
            ny as usize * width + nx as usize
        }
    };
    let max_dist = (width - 1 + height - 1).max(1) as f64;
    let mut transition = vec![vec![vec![0.0; num_states]; num_actions]; num_states];
    let mut cost = vec![vec![0.0; num_actions]; num_states];
    for y in 0..height {
        for x in 0..width {
            let s = y * width + x;
            let dist = x.abs_diff(goal.0) + y.abs_diff(goal.1);
            let step_cost = if shaped { dist as f64 / max_dist } else { 1.0 };
            for a in 0..num_actions {
                if s == goal_idx {
                    transition[s][a][goal_idx] = 1.0;
                    continue;
                }
                cost[s][a] = step_cost;
                let perpendicular = if a % 2 == 0 { [1, 3] } else { [0, 2] };
                transition[s][a][step(x, y, a)] += 1.0 - slip;
                for p in perpendicular {
                    transition[s][a][step(x, y, p)] += slip / 2.0;
                }
            }
        }
    }
    let mut initial = vec![0.0; num_states];
    initial[0] = 1.0;
    TabularMdp { num_states, num_actions, horizon, initial, cost, transition }.checked()
}

/// Corridor index `i` (positions `0..length`).
pub fn cliff_corridor(i: usize) -> usize {
    i
}

/// Ladder rung at depth `r` in `1..=CLIFF_DEPTH` (shared by all corridor
/// positions).
pub fn cliff_rung(length: usize, r: usize) -> usize {
    length + r - 1
}

/// Corridor over a recovery ladder. Two actions everywhere.
///
/// On the corridor, action 0 advances (the end cell is absorbing) and
/// action 1 falls to the bottom rung of the ladder. Corridor steps are
/// free. On a rung at depth `r`, action 1 climbs one rung (depth 1 exits
/// back to the corridor start) and action 0 slides one rung deeper (the
/// bottom is absorbing under slides); being on a rung costs
/// `fall_cost * r / CLIFF_DEPTH` per step regardless of the action. A
/// policy that falls once and keeps choosing action 0 therefore pays
/// `fall_cost` per remaining step, while the expert walks the corridor
/// for free and, if dropped onto the ladder, climbs straight out.
pub fn build_cliffwalk(length: usize, fall_cost: f64, horizon: usize) -> Result<TabularMdp> {
    if length < 2 {
        return Err(Error::InvalidArgument("cliffwalk length must be at least 2".into()));
    }
    if !(fall_cost > 0.0 && fall_cost <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fall_cost {fall_cost} outside (0, 1]"
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let num_states = length + CLIFF_DEPTH;
    let num_actions = 2;
    let mut transition = vec![vec![vec![0.0; num_states]; num_actions]; num_states];
    let mut cost = vec![vec![0.0; num_actions]; num_states];
    for i in 0..length {
        let c = cliff_corridor(i);
        let next = cliff_corridor((i + 1).min(length - 1));
        transition[c][0][next] = 1.0;
        transition[c][1][cliff_rung(length, CLIFF_DEPTH)] = 1.0;
    }
    for r in 1..=CLIFF_DEPTH {
        let s = cliff_rung(length, r);
        let rung_cost = fall_cost * r as f64 / CLIFF_DEPTH as f64;
        cost[s][0] = rung_cost;
        cost[s][1] = rung_cost;
        let deeper = cliff_rung(length, (r + 1).min(CLIFF_DEPTH));
        let up = if r == 1 { cliff_corridor(0) } else { cliff_rung(length, r - 1) };
        transition[s][0][deeper] = 1.0;
        transition[s][1][up] = 1.0;
    }
    let mut initial = vec![0.0; num_states];
    initial[cliff_corridor(0)] = 1.0;
    TabularMdp { num_states, num_actions, horizon, initial, cost, transition }.checked()
}

/// Random dynamics: every `(s, a)` row has `ceil(density * num_states)`
/// distinct successors with normalized positive weights, costs are uniform
/// in `[0, 1]`, and the initial distribution is uniform. Deterministic
/// given the seed.
pub fn build_random_mdp(
    num_states: usize,
    num_actions: usize,
    density: f64,
    seed: u64,
    horizon: usize,
) -> Result<TabularMdp> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("spaces and horizon must be positive".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {density} outside (0, 1]")));
    }
    let successors = (density * num_states as f64).ceil() as usize;
    if successors == 0 {
        return Err(Error::InvalidArgument(
            "density * num_states must be at least 1".into(),
        ));
    }
    let base = Stream::new(seed);
    let mut transition = vec![vec![vec![0.0; num_states]; num_actions]; num_states];
    let mut cost = vec![vec![0.0; num_actions]; num_states];
    for s in 0..num_states {
        for a in 0..num_actions {
            let mut stream = base.derive((s * num_actions + a) as u64);
            // Partial Fisher-Yates over the state indices.
            let mut pool: Vec<usize> = (0..num_states).collect();
            let mut weights = Vec::with_capacity(successors);
            let mut chosen = Vec::with_capacity(successors);
            for k in 0..successors {
                let j = k + stream.below(num_states - k);
                pool.swap(k, j);
                chosen.push(pool[k]);
                weights.push(1e-9 + (1.0 - 1e-9) * stream.next_f64());
            }
            let total: f64 = weights.iter().sum();
            for (sp, w) in chosen.into_iter().zip(weights) {
                transition[s][a][sp] = w / total;
            }
            // Renormalize exactly against accumulated rounding.
            let row_sum: f64 = transition[s][a].iter().sum();
            for v in &mut transition[s][a] {
                *v /= row_sum;
            }
            cost[s][a] = stream.next_f64();
        }
    }
    let initial = vec![1.0 / num_states as f64; num_states];
    TabularMdp { num_states, num_actions, horizon, initial, cost, transition }.checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::optimal_policy;
    use crate::mdp::{exact_cost, validate_mdp};
    use crate::policy::Policy;

    #[test]
    fn one_cell_gridworld_is_a_free_absorbing_goal() {
        let mdp = build_gridworld(1, 1, (0, 0), 0.0, 4).unwrap();
        let pol = optimal_policy(&mdp);
        assert_eq!(exact_cost(&mdp, &pol).unwrap(), 0.0);
    }

    #[test]
    fn two_cell_gridworld_costs_one_step() {
        let mdp = build_gridworld(2, 1, (1, 0), 0.0, 3).unwrap();
        let pol = optimal_policy(&mdp);
        assert_eq!(pol.deterministic_action(0, 0), Some(1)); // east
        assert_eq!(exact_cost(&mdp, &pol).unwrap(), 1.0);
    }

    #[test]
    fn gridworld_with_slip_is_valid() {
        let mdp = build_gridworld(5, 5, (4, 4), 0.1, 12).unwrap();
        assert!(validate_mdp(&mdp).is_empty());
    }

    #[test]
    fn gridworld_rejects_bad_goal() {
        assert!(build_gridworld(3, 3, (3, 0), 0.0, 5).is_err());
    }

    #[test]
    fn cliff_expert_never_pays() {
        for horizon in [3, 10, 25, 40] {
            let mdp = build_cliffwalk(25, 1.0, horizon).unwrap();
            let pol = optimal_policy(&mdp);
            assert_eq!(exact_cost(&mdp, &pol).unwrap(), 0.0);
        }
    }

    #[test]
    fn falling_at_step_one_and_staying_costs_t_minus_one() {
        let length = 10;
        let horizon = 7;
        let fall_cost = 0.5;
        let mdp = build_cliffwalk(length, fall_cost, horizon).unwrap();
        // Falls from the corridor, then slides on the ladder forever.
        let mut actions = vec![0usize; mdp.num_states];
        for i in 0..length {
            actions[cliff_corridor(i)] = 1;
        }
        let pol = Policy::deterministic(actions, 2).unwrap();
        let j = exact_cost(&mdp, &pol).unwrap();
        assert!((j - (horizon as f64 - 1.0) * fall_cost).abs() < 1e-12);
    }

    #[test]
    fn cliff_expert_climbs_out() {
        let length = 6;
        let mdp = build_cliffwalk(length, 1.0, 12).unwrap();
        let expert = optimal_policy(&mdp);
        // Early in the episode the expert climbs from every rung.
        for r in 1..=CLIFF_DEPTH {
            assert_eq!(expert.deterministic_action(0, cliff_rung(length, r)), Some(1));
        }
        // And it always advances on the corridor.
        for t in 0..12 {
            assert_eq!(expert.deterministic_action(t, cliff_corridor(0)), Some(0));
        }
    }

    #[test]
    fn cliff_is_valid() {
        let mdp = build_cliffwalk(25, 1.0, 40).unwrap();
        assert!(validate_mdp(&mdp).is_empty());
    }

    #[test]
    fn random_density_one_single_state_self_loops() {
        let mdp = build_random_mdp(1, 2, 1.0, 5, 4).unwrap();
        assert_eq!(mdp.transition[0][0][0], 1.0);
        assert_eq!(mdp.transition[0][1][0], 1.0);
    }

    #[test]
    fn random_mdp_is_seed_deterministic() {
        let a = build_random_mdp(4, 3, 0.7, 42, 6).unwrap();
        let b = build_random_mdp(4, 3, 0.7, 42, 6).unwrap();
        assert_eq!(a, b);
        let c = build_random_mdp(4, 3, 0.7, 43, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_mdp_passes_validation() {
        for seed in 0..5 {
            let mdp = build_random_mdp(6, 3, 0.5, seed, 8).unwrap();
            assert!(validate_mdp(&mdp).is_empty());
        }
    }

    #[test]
    fn env_spec_round_trips_and_builds() {
        let spec = EnvSpec::Cliffwalk { length: 25, fall_cost: 1.0, horizon: 20 };
        let text = serde_json::to_string(&spec).unwrap();
        let back: EnvSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        assert!(spec.build().is_ok());
    }
}
