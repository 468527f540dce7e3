use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costfield::component_labels;
use crate::error::{CoreError, Result};
use crate::grid::{Cell, GridMap, State};

/// Number of goal draws per agent before giving up.
pub const GOAL_RESAMPLE_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentSpec {
    pub start: Cell,
    pub goal: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub map: GridMap,
    pub agents: Vec<AgentSpec>,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn new(map: GridMap, agents: Vec<AgentSpec>, seed: u64) -> Result<Self> {
        let instance = Self { map, agents, seed };
        instance.validate()?;
        Ok(instance)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn initial_state(&self) -> State {
        State::new(self.agents.iter().map(|a| a.start).collect())
    }

    pub fn goals(&self) -> Vec<Cell> {
        self.agents.iter().map(|a| a.goal).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let labels = component_labels(&self.map);
        let mut starts = std::collections::HashSet::new();
        let mut goals = std::collections::HashSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            if !self.map.is_free(a.start) || !self.map.is_free(a.goal) {
                return Err(CoreError::InvalidInstance(format!("agent {i} has a blocked start or goal")));
            }
            if !starts.insert(a.start) {
                return Err(CoreError::InvalidInstance(format!("duplicate start {}", a.start)));
            }
            if !goals.insert(a.goal) {
                return Err(CoreError::InvalidInstance(format!("duplicate goal {}", a.goal)));
            }
            let label = |c: Cell| labels[self.map.index(c).unwrap()];
            if label(a.start) != label(a.goal) {
                return Err(CoreError::InvalidInstance(format!("agent {i} cannot reach its goal")));
            }
        }
        Ok(())
    }
}

/// Draws starts and goals uniformly without replacement from the free cells.
///
/// Goals are redrawn until they lie in the same connected component as the
/// paired start.
pub fn generate_instance(map: &GridMap, n_agents: usize, seed: u64) -> Result<ProblemInstance> {
    let mut free = map.free_cells();
    if n_agents > free.len() {
        return Err(CoreError::TooManyAgents { requested: n_agents, free: free.len() });
    }
    let labels = component_labels(map);
    let label = |c: Cell| labels[map.index(c).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    free.shuffle(&mut rng);
    let starts = &free[..n_agents];

    let mut goal_pool = map.free_cells();
    let mut agents = Vec::with_capacity(n_agents);
    for (agent, &start) in starts.iter().enumerate() {
        let mut chosen = None;
        for _ in 0..GOAL_RESAMPLE_LIMIT {
            if goal_pool.is_empty() {
                break;
            }
            let k = rng.random_range(0..goal_pool.len());
            if label(goal_pool[k]) == label(start) {
                chosen = Some(goal_pool.swap_remove(k));
                break;
            }
        }
        let goal = chosen.ok_or(CoreError::NoReachableGoal { agent, tries: GOAL_RESAMPLE_LIMIT })?;
        agents.push(AgentSpec { start, goal });
    }
    Ok(ProblemInstance { map: map.clone(), agents, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfield::bfs_cost_to_goal;

    #[test]
    fn full_occupancy() {
        let map = GridMap::empty(5, 5);
        let inst = generate_instance(&map, 25, 3).unwrap();
        let mut starts: Vec<Cell> = inst.agents.iter().map(|a| a.start).collect();
        starts.sort();
        assert_eq!(starts, map.free_cells());
        inst.validate().unwrap();
    }

    #[test]
    fn deterministic() {
        let map = GridMap::empty(9, 9);
        assert_eq!(generate_instance(&map, 6, 11).unwrap(), generate_instance(&map, 6, 11).unwrap());
        assert_ne!(generate_instance(&map, 6, 11).unwrap(), generate_instance(&map, 6, 12).unwrap());
    }

    #[test]
    fn too_many_agents() {
        let map = GridMap::from_ascii(&[".@", "@."]).unwrap();
        assert!(matches!(generate_instance(&map, 3, 0), Err(CoreError::TooManyAgents { .. })));
    }

    #[test]
    fn goals_stay_in_start_component() {
        let map = GridMap::from_ascii(&["...@...", "...@...", "...@...", "...@..."]).unwrap();
        for seed in 0..50 {
            let inst = generate_instance(&map, 4, seed).unwrap();
            for a in &inst.agents {
                let field = bfs_cost_to_goal(&map, a.goal).unwrap();
                assert!(field.is_reachable(a.start), "seed {seed}: {a:?}");
            }
        }
    }

    #[test]
    fn isolated_start_can_exhaust_resampling() {
        let mut map = GridMap::empty(60, 60);
        map.set(Cell::new(0, 1), crate::grid::Tile::Obstacle);
        map.set(Cell::new(1, 0), crate::grid::Tile::Obstacle);
        let n = map.free_count();
        let failures = (0..10)
            .filter(|&seed| matches!(generate_instance(&map, n, seed), Err(CoreError::NoReachableGoal { .. })))
            .count();
        assert!(failures > 0);
    }
}
