use std::collections::VecDeque;

use crate::error::{CoreError, Result};
use crate::grid::{Cell, GridMap};

/// Shortest 4-connected distance from every cell to one goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostField {
    pub goal: Cell,
    width: usize,
    height: usize,
    dist: Vec<Option<u32>>,
}

impl CostField {
    /// `None` for obstacles, off-map cells and cells that cannot reach the goal.
    pub fn dist(&self, cell: Cell) -> Option<u32> {
        if cell.row < 0 || cell.col < 0 || cell.row as usize >= self.height || cell.col as usize >= self.width {
            return None;
        }
        self.dist[cell.row as usize * self.width + cell.col as usize]
    }

    pub fn is_reachable(&self, cell: Cell) -> bool {
        self.dist(cell).is_some()
    }
}

pub fn bfs_cost_to_goal(map: &GridMap, goal: Cell) -> Result<CostField> {
    let gi = match map.index(goal) {
        Some(i) if map.is_free(goal) => i,
        _ => return Err(CoreError::GoalOnObstacle(goal)),
    };
    let mut dist = vec![None; map.width() * map.height()];
    dist[gi] = Some(0);
    let mut queue = VecDeque::from([goal]);
    while let Some(cell) = queue.pop_front() {
        let d = dist[map.index(cell).unwrap()].unwrap();
        for n in map.free_neighbors(cell) {
            let ni = map.index(n).unwrap();
            if dist[ni].is_none() {
                dist[ni] = Some(d + 1);
                queue.push_back(n);
            }
        }
    }
    Ok(CostField { goal, width: map.width(), height: map.height(), dist })
}

/// Labels each free cell with its 4-connected component id; obstacles get `None`.
pub fn component_labels(map: &GridMap) -> Vec<Option<usize>> {
    let mut labels = vec![None; map.width() * map.height()];
    let mut next = 0;
    for start in map.free_cells() {
        let si = map.index(start).unwrap();
        if labels[si].is_some() {
            continue;
        }
        labels[si] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(cell) = queue.pop_front() {
            for n in map.free_neighbors(cell) {
                let ni = map.index(n).unwrap();
                if labels[ni].is_none() {
                    labels[ni] = Some(next);
                    queue.push_back(n);
                }
            }
        }
        next += 1;
    }
    labels
}

/// Size of the largest 4-connected free component.
pub fn largest_component(map: &GridMap) -> usize {
    let mut sizes = std::collections::HashMap::new();
    for label in component_labels(map).into_iter().flatten() {
        *sizes.entry(label).or_insert(0usize) += 1;
    }
    sizes.into_values().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Action;

    #[test]
    fn goal_is_zero_and_empty_is_manhattan() {
        let map = GridMap::empty(7, 5);
        let goal = Cell::new(2, 4);
        let field = bfs_cost_to_goal(&map, goal).unwrap();
        assert_eq!(field.dist(goal), Some(0));
        for cell in map.free_cells() {
            assert_eq!(field.dist(cell), Some(cell.manhattan(goal)));
        }
        assert_eq!(field.dist(Cell::new(-1, 0)), None);
    }

    #[test]
    fn walled_off_is_unreachable() {
        let map = GridMap::from_ascii(&["..@.", "..@.", "..@."]).unwrap();
        let field = bfs_cost_to_goal(&map, Cell::new(0, 0)).unwrap();
        assert_eq!(field.dist(Cell::new(1, 3)), None);
        assert_eq!(field.dist(Cell::new(2, 1)), Some(3));
    }

    #[test]
    fn goal_on_obstacle() {
        let map = GridMap::from_ascii(&[".@"]).unwrap();
        assert!(matches!(bfs_cost_to_goal(&map, Cell::new(0, 1)), Err(CoreError::GoalOnObstacle(_))));
    }

    #[test]
    fn neighbour_distances_differ_by_at_most_one() {
        let map = GridMap::from_ascii(&[
            "....@...",
            ".@@.@.@.",
            ".@..@.@.",
            ".@.@@.@.",
            "........",
        ])
        .unwrap();
        let field = bfs_cost_to_goal(&map, Cell::new(0, 7)).unwrap();
        for u in map.free_cells() {
            for a in Action::MOVES {
                let v = u.offset(a);
                if let (Some(du), Some(dv)) = (field.dist(u), field.dist(v)) {
                    assert!(du.abs_diff(dv) <= 1);
                }
            }
        }
    }
}
