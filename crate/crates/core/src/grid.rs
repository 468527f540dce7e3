//! Occupancy grid, agent state and the joint transition function.
//!
//! Coordinates are `(row, col)` with row 0 at the top. `Up` decreases the row,
//! `Right` increases the column.

use std::collections::HashMap;
use std::fmt;

use crate::error::{CoreError, Result};
use crate::instance::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn offset(self, action: Action) -> Cell {
        let (dr, dc) = action.delta();
        Cell::new(self.row + dr, self.col + dc)
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn chebyshev(self, other: Cell) -> u32 {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Action {
    Up = 0,
    Right = 1,
    Down = 2,
    Left = 3,
    Wait = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Up,
        Action::Right,
        Action::Down,
        Action::Left,
        Action::Wait,
    ];
    /// The four moves in tie-break order.
    pub const MOVES: [Action; 4] = [Action::Up, Action::Right, Action::Down, Action::Left];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.get(code as usize).copied()
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (-1, 0),
            Action::Right => (0, 1),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Wait => (0, 0),
        }
    }

    /// The action that moves `from` to `to`, if they are equal or 4-adjacent.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        let d = (to.row - from.row, to.col - from.col);
        Action::ALL.into_iter().find(|a| a.delta() == d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tile {
    Free,
    Obstacle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Tile>,
    pub name: String,
}

impl GridMap {
    pub fn new(width: usize, height: usize, cells: Vec<Tile>, name: impl Into<String>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CoreError::InvalidMap(format!("empty dimensions {width}x{height}")));
        }
        if cells.len() != width * height {
            return Err(CoreError::InvalidMap(format!(
                "{} cells for a {width}x{height} map",
                cells.len()
            )));
        }
        Ok(Self { width, height, cells, name: name.into() })
    }

    pub fn filled(width: usize, height: usize, tile: Tile, name: impl Into<String>) -> Result<Self> {
        Self::new(width, height, vec![tile; width * height], name)
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::filled(width, height, Tile::Free, format!("empty-{width}x{height}"))
            .expect("non-zero dimensions")
    }

    /// Builds a map from rows of `.` (free) and `@` (obstacle). Test helper.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(width * height);
        for (r, line) in rows.iter().enumerate() {
            if line.len() != width {
                return Err(CoreError::DimensionMismatch(format!("row {r} has {} chars", line.len())));
            }
            for (c, ch) in line.chars().enumerate() {
                cells.push(match ch {
                    '.' => Tile::Free,
                    '@' => Tile::Obstacle,
                    _ => return Err(CoreError::UnknownCellChar { ch, row: r, col: c }),
                });
            }
        }
        Self::new(width, height, cells, "ascii")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.cells
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row >= 0 && cell.col >= 0 && (cell.row as usize) < self.height && (cell.col as usize) < self.width
    }

    pub fn index(&self, cell: Cell) -> Option<usize> {
        self.in_bounds(cell)
            .then(|| cell.row as usize * self.width + cell.col as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index / self.width) as i32, (index % self.width) as i32)
    }

    pub fn tile(&self, cell: Cell) -> Option<Tile> {
        self.index(cell).map(|i| self.cells[i])
    }

    /// True when `cell` is on the map and not an obstacle.
    pub fn is_free(&self, cell: Cell) -> bool {
        matches!(self.tile(cell), Some(Tile::Free))
    }

    pub fn set(&mut self, cell: Cell, tile: Tile) {
        if let Some(i) = self.index(cell) {
            self.cells[i] = tile;
        }
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i] == Tile::Free)
            .map(|i| self.cell_at(i))
            .collect()
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|t| **t == Tile::Free).count()
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.len() - self.free_count()
    }

    /// Free 4-neighbours of `cell`, in Up, Right, Down, Left order.
    pub fn free_neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        Action::MOVES
            .into_iter()
            .map(move |a| cell.offset(a))
            .filter(move |c| self.is_free(*c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub positions: Vec<Cell>,
    pub step: u32,
}

impl State {
    pub fn new(positions: Vec<Cell>) -> Self {
        Self { positions, step: 0 }
    }

    pub fn validate(&self, map: &GridMap) -> Result<()> {
        let mut seen = HashMap::with_capacity(self.positions.len());
        for (agent, &pos) in self.positions.iter().enumerate() {
            if !map.is_free(pos) {
                return Err(CoreError::StateInvalid(format!("agent {agent} at blocked cell {pos}")));
            }
            if let Some(other) = seen.insert(pos, agent) {
                return Err(CoreError::StateInvalid(format!("agents {other} and {agent} share {pos}")));
            }
        }
        Ok(())
    }
}

/// Applies a joint action, converting every conflicting move into `Wait`.
///
/// Moves into obstacles or off the map wait. Then, until nothing changes,
/// agents that share a target cell, agents that would swap cells, and agents
/// that target the cell of an agent resolved to `Wait` are all set to `Wait`.
/// Returns the next state and the resolved joint action.
pub fn step(state: &State, joint: &[Action], map: &GridMap) -> Result<(State, Vec<Action>)> {
    if joint.len() != state.positions.len() {
        return Err(CoreError::StateInvalid(format!(
            "{} actions for {} agents",
            joint.len(),
            state.positions.len()
        )));
    }
    state.validate(map)?;
    let resolved = resolve_conflicts(&state.positions, joint, map);
    let positions = state
        .positions
        .iter()
        .zip(&resolved)
        .map(|(p, a)| p.offset(*a))
        .collect();
    Ok((State { positions, step: state.step + 1 }, resolved))
}

pub(crate) fn resolve_conflicts(positions: &[Cell], joint: &[Action], map: &GridMap) -> Vec<Action> {
    let mut resolved: Vec<Action> = positions
        .iter()
        .zip(joint)
        .map(|(p, &a)| if map.is_free(p.offset(a)) { a } else { Action::Wait })
        .collect();
    let occupant: HashMap<Cell, usize> = positions.iter().enumerate().map(|(i, p)| (*p, i)).collect();

    loop {
        let mut changed = false;
        let targets: Vec<Cell> = positions.iter().zip(&resolved).map(|(p, a)| p.offset(*a)).collect();

        let mut claims: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (i, t) in targets.iter().enumerate() {
            claims.entry(*t).or_default().push(i);
        }
        for agents in claims.values().filter(|a| a.len() > 1) {
            for &i in agents {
                if resolved[i] != Action::Wait {
                    resolved[i] = Action::Wait;
                    changed = true;
                }
            }
        }

        for i in 0..positions.len() {
            if resolved[i] == Action::Wait {
                continue;
            }
            if let Some(&j) = occupant.get(&targets[i]) {
                let swap = targets[j] == positions[i] && resolved[j] != Action::Wait;
                if swap || resolved[j] == Action::Wait {
                    resolved[i] = Action::Wait;
                    if swap {
                        resolved[j] = Action::Wait;
                    }
                    changed = true;
                }
            }
        }

        if !changed {
            return resolved;
        }
    }
}

pub fn is_success(state: &State, instance: &ProblemInstance) -> bool {
    state
        .positions
        .iter()
        .zip(&instance.agents)
        .all(|(p, a)| *p == a.goal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    VertexCollision,
    EdgeCollision,
    ObstacleEntry,
    Teleport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
    pub agents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Checks a set of paths against the MAPF constraints.
///
/// Paths shorter than the longest one are treated as waiting at their final
/// cell.
pub fn validate_plan(instance: &ProblemInstance, paths: &[Vec<Cell>]) -> Result<ValidationReport> {
    if paths.len() != instance.agents.len() {
        return Err(CoreError::InvalidInstance(format!(
            "{} paths for {} agents",
            paths.len(),
            instance.agents.len()
        )));
    }
    for (i, (path, agent)) in paths.iter().zip(&instance.agents).enumerate() {
        match path.first() {
            None => return Err(CoreError::EmptyPath(i)),
            Some(&p) if p != agent.start => {
                return Err(CoreError::WrongStart { agent: i, expected: agent.start, found: p })
            }
            _ => {}
        }
    }

    let map = &instance.map;
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    let at = |i: usize, t: usize| paths[i][t.min(paths[i].len() - 1)];
    let mut violations = Vec::new();

    for t in 0..horizon {
        for (i, path) in paths.iter().enumerate() {
            if t < path.len() {
                if !map.is_free(path[t]) {
                    violations.push(Violation { step: t, kind: ViolationKind::ObstacleEntry, agents: vec![i] });
                }
                if t > 0 && path[t - 1].manhattan(path[t]) > 1 {
                    violations.push(Violation { step: t, kind: ViolationKind::Teleport, agents: vec![i] });
                }
            }
        }

        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        for i in 0..paths.len() {
            cells.entry(at(i, t)).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = cells.into_values().filter(|g| g.len() > 1).collect();
        groups.sort();
        for agents in groups {
            violations.push(Violation { step: t, kind: ViolationKind::VertexCollision, agents });
        }

        if t > 0 {
            for i in 0..paths.len() {
                let (a0, a1) = (at(i, t - 1), at(i, t));
                if a0 == a1 {
                    continue;
                }
                for j in i + 1..paths.len() {
                    if at(j, t - 1) == a1 && at(j, t) == a0 {
                        violations.push(Violation {
                            step: t,
                            kind: ViolationKind::EdgeCollision,
                            agents: vec![i, j],
                        });
                    }
                }
            }
        }
    }

    Ok(ValidationReport { ok: violations.is_empty(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::AgentSpec;

    fn instance_with(map: GridMap, agents: &[(Cell, Cell)]) -> ProblemInstance {
        ProblemInstance {
            map,
            agents: agents.iter().map(|&(start, goal)| AgentSpec { start, goal }).collect(),
            seed: 0,
        }
    }

    #[test]
    fn swap_resolves_to_wait() {
        let map = GridMap::empty(3, 3);
        let state = State::new(vec![Cell::new(0, 0), Cell::new(0, 1)]);
        let (next, resolved) = step(&state, &[Action::Right, Action::Left], &map).unwrap();
        assert_eq!(resolved, vec![Action::Wait, Action::Wait]);
        assert_eq!(next.positions, state.positions);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn off_map_move_waits() {
        let map = GridMap::empty(3, 3);
        let state = State::new(vec![Cell::new(0, 0)]);
        let (_, resolved) = step(&state, &[Action::Up], &map).unwrap();
        assert_eq!(resolved, vec![Action::Wait]);
    }

    #[test]
    fn shared_target_both_wait() {
        let map = GridMap::empty(3, 3);
        let state = State::new(vec![Cell::new(0, 0), Cell::new(0, 2)]);
        let (next, resolved) = step(&state, &[Action::Right, Action::Left], &map).unwrap();
        assert_eq!(resolved, vec![Action::Wait, Action::Wait]);
        assert_eq!(next.positions, state.positions);
    }

    #[test]
    fn obstacle_move_waits() {
        let map = GridMap::from_ascii(&[".@", ".."]).unwrap();
        let state = State::new(vec![Cell::new(0, 0)]);
        let (_, resolved) = step(&state, &[Action::Right], &map).unwrap();
        assert_eq!(resolved, vec![Action::Wait]);
    }

    #[test]
    fn chained_wait_propagates() {
        // 0 -> blocked by wall, 1 follows 0, 2 follows 1.
        let map = GridMap::from_ascii(&["...@"]).unwrap();
        let state = State::new(vec![Cell::new(0, 2), Cell::new(0, 1), Cell::new(0, 0)]);
        let joint = [Action::Right, Action::Right, Action::Right];
        let (next, resolved) = step(&state, &joint, &map).unwrap();
        assert_eq!(resolved, vec![Action::Wait; 3]);
        assert_eq!(next.positions, state.positions);
    }

    #[test]
    fn train_of_agents_moves_together() {
        let map = GridMap::empty(4, 1);
        let state = State::new(vec![Cell::new(0, 2), Cell::new(0, 1), Cell::new(0, 0)]);
        let (next, resolved) = step(&state, &[Action::Right; 3], &map).unwrap();
        assert_eq!(resolved, vec![Action::Right; 3]);
        assert_eq!(next.positions, vec![Cell::new(0, 3), Cell::new(0, 2), Cell::new(0, 1)]);
    }

    #[test]
    fn invalid_state_rejected() {
        let map = GridMap::empty(3, 3);
        let state = State::new(vec![Cell::new(1, 1), Cell::new(1, 1)]);
        assert!(matches!(step(&state, &[Action::Wait; 2], &map), Err(CoreError::StateInvalid(_))));
    }

    #[test]
    fn success_checks() {
        let map = GridMap::empty(3, 3);
        let inst = instance_with(map.clone(), &[(Cell::new(0, 0), Cell::new(0, 2))]);
        assert!(is_success(&State::new(vec![Cell::new(0, 2)]), &inst));
        assert!(!is_success(&State::new(vec![Cell::new(0, 1)]), &inst));
        let none = instance_with(map, &[]);
        assert!(is_success(&State::new(vec![]), &none));
    }

    #[test]
    fn vertex_collision_detected() {
        let inst = instance_with(
            GridMap::empty(3, 3),
            &[(Cell::new(0, 0), Cell::new(0, 1)), (Cell::new(0, 2), Cell::new(1, 1))],
        );
        let paths = vec![vec![Cell::new(0, 0), Cell::new(0, 1)], vec![Cell::new(0, 2), Cell::new(0, 1)]];
        let report = validate_plan(&inst, &paths).unwrap();
        assert!(!report.ok);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].step, 1);
        assert_eq!(report.violations[0].kind, ViolationKind::VertexCollision);
        assert_eq!(report.violations[0].agents, vec![0, 1]);
    }

    #[test]
    fn edge_collision_detected() {
        let (x, y) = (Cell::new(0, 0), Cell::new(0, 1));
        let inst = instance_with(GridMap::empty(2, 1), &[(x, y), (y, x)]);
        let report = validate_plan(&inst, &[vec![x, y], vec![y, x]]).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::EdgeCollision);
        assert_eq!(report.violations[0].step, 1);
    }

    #[test]
    fn shorter_paths_wait_at_end() {
        let inst = instance_with(
            GridMap::empty(3, 1),
            &[(Cell::new(0, 0), Cell::new(0, 1)), (Cell::new(0, 2), Cell::new(0, 1))],
        );
        let paths = vec![vec![Cell::new(0, 0), Cell::new(0, 1)], vec![Cell::new(0, 2), Cell::new(0, 2), Cell::new(0, 1)]];
        let report = validate_plan(&inst, &paths).unwrap();
        assert_eq!(report.count(ViolationKind::VertexCollision), 1);
        assert_eq!(report.violations[0].step, 2);
    }

    #[test]
    fn obstacle_and_teleport_detected() {
        let map = GridMap::from_ascii(&[".@."]).unwrap();
        let inst = instance_with(map, &[(Cell::new(0, 0), Cell::new(0, 2))]);
        let report = validate_plan(&inst, &[vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(0, 2)]]).unwrap();
        assert_eq!(report.count(ViolationKind::ObstacleEntry), 1);
        let report = validate_plan(&inst, &[vec![Cell::new(0, 0), Cell::new(0, 2)]]).unwrap();
        assert_eq!(report.count(ViolationKind::Teleport), 1);
    }

    #[test]
    fn valid_path_ok() {
        let inst = instance_with(GridMap::empty(3, 3), &[(Cell::new(0, 0), Cell::new(2, 2))]);
        let path = vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 1), Cell::new(2, 1), Cell::new(2, 2)];
        assert!(validate_plan(&inst, &[path]).unwrap().ok);
    }

    #[test]
    fn path_errors() {
        let inst = instance_with(GridMap::empty(3, 3), &[(Cell::new(0, 0), Cell::new(2, 2))]);
        assert!(matches!(validate_plan(&inst, &[vec![]]), Err(CoreError::EmptyPath(0))));
        assert!(matches!(
            validate_plan(&inst, &[vec![Cell::new(1, 1)]]),
            Err(CoreError::WrongStart { agent: 0, .. })
        ));
    }
}
