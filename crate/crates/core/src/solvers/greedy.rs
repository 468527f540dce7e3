use crate::costfield::CostField;
use crate::error::{CoreError, Result};
use crate::grid::{Action, Cell, GridMap};

/// Steepest descent on a cost field.
///
/// Picks the move into the free neighbour with the smallest distance, if that
/// distance is strictly below the current one. Ties go to the earlier of
/// Up, Right, Down, Left. Returns `Wait` when no move improves.
pub fn greedy_action(field: &CostField, pos: Cell, map: &GridMap) -> Result<Action> {
    let here = field.dist(pos).ok_or(CoreError::UnreachablePosition(pos))?;
    let mut best = (here, Action::Wait);
    for action in Action::MOVES {
        let next = pos.offset(action);
        if !map.is_free(next) {
            continue;
        }
        if let Some(d) = field.dist(next) {
            if d < best.0 {
                best = (d, action);
            }
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfield::bfs_cost_to_goal;

    #[test]
    fn at_goal_waits() {
        let map = GridMap::empty(5, 5);
        let goal = Cell::new(2, 2);
        let field = bfs_cost_to_goal(&map, goal).unwrap();
        assert_eq!(greedy_action(&field, goal, &map).unwrap(), Action::Wait);
    }

    #[test]
    fn goal_to_the_right() {
        let map = GridMap::empty(5, 5);
        let field = bfs_cost_to_goal(&map, Cell::new(2, 4)).unwrap();
        assert_eq!(greedy_action(&field, Cell::new(2, 1), &map).unwrap(), Action::Right);
    }

    #[test]
    fn tie_prefers_up() {
        let map = GridMap::empty(5, 5);
        let field = bfs_cost_to_goal(&map, Cell::new(0, 0)).unwrap();
        assert_eq!(greedy_action(&field, Cell::new(3, 3), &map).unwrap(), Action::Up);
    }

    #[test]
    fn unreachable_position() {
        let map = GridMap::from_ascii(&[".@."]).unwrap();
        let field = bfs_cost_to_goal(&map, Cell::new(0, 0)).unwrap();
        assert!(greedy_action(&field, Cell::new(0, 2), &map).is_err());
    }

    #[test]
    fn never_proposes_blocked_moves() {
        let map = GridMap::from_ascii(&["..@..", ".@@.@", ".....", "@.@.."]).unwrap();
        for goal in map.free_cells() {
            let field = bfs_cost_to_goal(&map, goal).unwrap();
            for pos in map.free_cells() {
                let a = greedy_action(&field, pos, &map).unwrap();
                assert!(map.is_free(pos.offset(a)));
                if pos != goal {
                    assert_ne!(a, Action::Wait);
                }
            }
        }
    }
}
