//! Prioritized planning with space-time A*.
//!
//! Agents are planned one at a time in a random priority order. Each agent
//! searches over `(cell, time)` against a reservation table holding the paths
//! of the agents planned before it; an agent that has arrived keeps its goal
//! cell reserved forever. When any agent fails the order is reshuffled and
//! planning restarts.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::costfield::{bfs_cost_to_goal, CostField};
use crate::error::{CoreError, Result};
use crate::grid::{validate_plan, Action, Cell, GridMap};
use crate::instance::ProblemInstance;

pub const DEFAULT_MAX_RESTARTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    /// One position per time step, starting at the agent's start and ending
    /// at its goal. The agent waits at its goal after the path ends.
    pub paths: Vec<Vec<Cell>>,
    pub makespan: usize,
    pub sum_of_costs: usize,
}

impl Plan {
    fn from_paths(paths: Vec<Vec<Cell>>) -> Self {
        let makespan = paths.iter().map(|p| p.len() - 1).max().unwrap_or(0);
        let sum_of_costs = paths.iter().map(|p| p.len() - 1).sum();
        Self { paths, makespan, sum_of_costs }
    }

    /// Position of `agent` at time `t`, holding the last cell after arrival.
    pub fn position(&self, agent: usize, t: usize) -> Cell {
        let path = &self.paths[agent];
        path[t.min(path.len() - 1)]
    }

    /// Joint action taken between `t` and `t + 1`.
    pub fn joint_action(&self, t: usize) -> Vec<Action> {
        (0..self.paths.len())
            .map(|i| Action::between(self.position(i, t), self.position(i, t + 1)).expect("unit moves"))
            .collect()
    }
}

#[derive(Default)]
struct Reservations {
    vertex: HashSet<(Cell, usize)>,
    /// `(from, to, t)`: a reserved move arriving at `to` at time `t`.
    edge: HashSet<(Cell, Cell, usize)>,
    /// Goal cells occupied from the given time onwards.
    parked: HashMap<Cell, usize>,
    last_use: HashMap<Cell, usize>,
    horizon: usize,
}

impl Reservations {
    fn reserve(&mut self, path: &[Cell]) {
        for (t, &cell) in path.iter().enumerate() {
            self.vertex.insert((cell, t));
            let last = self.last_use.entry(cell).or_insert(0);
            *last = (*last).max(t);
            if t > 0 {
                self.edge.insert((path[t - 1], cell, t));
            }
        }
        let arrival = path.len() - 1;
        self.parked.insert(path[arrival], arrival);
        self.horizon = self.horizon.max(arrival);
    }

    fn blocked(&self, cell: Cell, t: usize) -> bool {
        self.vertex.contains(&(cell, t)) || self.parked.get(&cell).is_some_and(|&from| t >= from)
    }

    fn swap(&self, from: Cell, to: Cell, t: usize) -> bool {
        from != to && self.edge.contains(&(to, from, t))
    }

    fn can_stop_at(&self, goal: Cell, t: usize) -> bool {
        self.last_use.get(&goal).is_none_or(|&last| last < t)
    }
}

fn space_time_astar(
    map: &GridMap,
    start: Cell,
    field: &CostField,
    reservations: &Reservations,
    max_time: usize,
) -> Option<Vec<Cell>> {
    let goal = field.goal;
    let h = |c: Cell| field.dist(c).map(|d| d as usize);
    let h0 = h(start)?;
    // Beyond the last reservation the world is static, so later time steps
    // collapse onto one search layer.
    let layer = |t: usize| t.min(reservations.horizon + 1);

    let mut nodes: Vec<(Cell, usize, Option<usize>)> = vec![(start, 0, None)];
    let mut open = BinaryHeap::new();
    let mut closed = HashSet::new();
    open.push(Reverse((h0, h0, 0usize)));

    while let Some(Reverse((_, _, id))) = open.pop() {
        let (cell, t, _) = nodes[id];
        if !closed.insert((cell, layer(t))) {
            continue;
        }
        if cell == goal && reservations.can_stop_at(goal, t) {
            let mut path = Vec::with_capacity(t + 1);
            let mut cur = Some(id);
            while let Some(i) = cur {
                path.push(nodes[i].0);
                cur = nodes[i].2;
            }
            path.reverse();
            return Some(path);
        }
        if t >= max_time {
            continue;
        }
        let nt = t + 1;
        for action in Action::ALL {
            let next = cell.offset(action);
            if !map.is_free(next) || closed.contains(&(next, layer(nt))) {
                continue;
            }
            if reservations.blocked(next, nt) || reservations.swap(cell, next, nt) {
                continue;
            }
            let Some(hn) = h(next) else { continue };
            nodes.push((next, nt, Some(id)));
            open.push(Reverse((nt + hn, hn, nodes.len() - 1)));
        }
    }
    None
}

/// Plans collision-free paths for every agent.
///
/// Returns [`CoreError::Unsolved`] once `max_restarts` reshuffled attempts
/// (after the first) have all failed.
pub fn prioritized_plan(instance: &ProblemInstance, seed: u64, max_restarts: usize) -> Result<Plan> {
    let map = &instance.map;
    let fields = instance
        .agents
        .iter()
        .map(|a| bfs_cost_to_goal(map, a.goal))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..instance.n_agents()).collect();
    let base_time = map.free_count() + 1;

    for _attempt in 0..=max_restarts {
        order.shuffle(&mut rng);
        let mut reservations = Reservations::default();
        let mut paths = vec![Vec::new(); instance.n_agents()];
        let mut failed = false;
        for &agent in &order {
            let max_time = reservations.horizon + base_time;
            match space_time_astar(map, instance.agents[agent].start, &fields[agent], &reservations, max_time) {
                Some(path) => {
                    reservations.reserve(&path);
                    paths[agent] = path;
                }
                None => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            continue;
        }
        if validate_plan(instance, &paths)?.ok {
            return Ok(Plan::from_paths(paths));
        }
    }
    Err(CoreError::Unsolved { restarts: max_restarts })
}
