use crate::costfield::bfs_cost_to_goal;
use crate::error::Result;
use crate::grid::{step, Action, Cell, State};
use crate::instance::ProblemInstance;
use crate::tokenizer::{build_observation, ActionHistory, ObservationBundle, ObservationContext};

use super::planner::{prioritized_plan, Plan, DEFAULT_MAX_RESTARTS};

/// An executed expert episode.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub instance: ProblemInstance,
    pub plan: Plan,
    /// `states[t]` for `t = 0..=makespan`.
    pub states: Vec<State>,
    /// `actions[t][i]`: resolved action of agent `i` between `t` and `t + 1`.
    pub actions: Vec<Vec<Action>>,
    /// `observations[t][i]`: observation of agent `i` in `states[t]`.
    pub observations: Vec<Vec<ObservationBundle>>,
}

impl Trajectory {
    /// Number of executed steps (the plan's makespan).
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn paths(&self) -> Vec<Vec<Cell>> {
        (0..self.instance.n_agents())
            .map(|i| self.states.iter().map(|s| s.positions[i]).collect())
            .collect()
    }
}

/// Plans the instance and replays the plan through [`step`], recording every
/// agent's observation at every step, including steps spent waiting on the
/// goal.
pub fn run_expert_episode(instance: &ProblemInstance, seed: u64) -> Result<Trajectory> {
    let plan = prioritized_plan(instance, seed, DEFAULT_MAX_RESTARTS)?;
    let costfields = instance
        .agents
        .iter()
        .map(|a| bfs_cost_to_goal(&instance.map, a.goal))
        .collect::<Result<Vec<_>>>()?;

    let n = instance.n_agents();
    let mut history = ActionHistory::new(n);
    let mut state = instance.initial_state();
    let mut states = vec![state.clone()];
    let mut actions = Vec::with_capacity(plan.makespan);
    let mut observations = Vec::with_capacity(plan.makespan + 1);

    let observe_all = |state: &State, history: &ActionHistory| -> Result<Vec<ObservationBundle>> {
        let ctx = ObservationContext { instance, costfields: &costfields, history };
        (0..n).map(|i| build_observation(state, i, &ctx, None)).collect()
    };

    for t in 0..plan.makespan {
        observations.push(observe_all(&state, &history)?);
        let joint = plan.joint_action(t);
        let (next, resolved) = step(&state, &joint, &instance.map)?;
        debug_assert_eq!(resolved, joint, "a valid plan never triggers conflict resolution");
        history.push_joint(&resolved);
        actions.push(resolved);
        states.push(next.clone());
        state = next;
    }
    observations.push(observe_all(&state, &history)?);

    Ok(Trajectory { instance: instance.clone(), plan, states, actions, observations })
}
