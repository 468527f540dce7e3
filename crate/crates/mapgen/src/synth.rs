//! Synthetic map families: random obstacles, mazes and warehouses.

use mapf_core::costfield::largest_component;
use mapf_core::grid::{Cell, GridMap, Tile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MapgenError, Result};

pub const MAX_DENSITY: f64 = 0.6;
pub const MIN_LARGEST_COMPONENT: f64 = 0.8;
pub const RANDOM_ATTEMPTS: usize = 100;
pub const MAZE_LOOP_FRACTION: f64 = 0.1;

/// Independent per-cell obstacles, redrawn until the largest Free component
/// holds at least 80% of the Free cells.
pub fn gen_random(w: usize, h: usize, density: f64, seed: u64) -> Result<GridMap> {
    if !(0.0..=MAX_DENSITY).contains(&density) {
        return Err(MapgenError::InvalidConfig(format!("obstacle density {density} outside [0, {MAX_DENSITY}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_ATTEMPTS {
        let cells = (0..w * h).map(|_| if rng.random_bool(density) { Tile::Obstacle } else { Tile::Free }).collect();
        let map = GridMap::new(w, h, cells, format!("random_{w}x{h}_s{seed}"))?;
        let free = map.free_count();
        if free > 0 && largest_component(&map) as f64 >= MIN_LARGEST_COMPONENT * free as f64 {
            return Ok(map);
        }
    }
    Err(MapgenError::Degenerate { attempts: RANDOM_ATTEMPTS })
}

/// Recursive-backtracker maze on the odd lattice, then 10% of the remaining
/// interior walls between two rooms knocked out to create loops.
pub fn gen_maze(w: usize, h: usize, seed: u64) -> Result<GridMap> {
    if w < 5 || h < 5 || w % 2 == 0 || h % 2 == 0 {
        return Err(MapgenError::BadDimensions { width: w, height: h });
    }
    let mut map = GridMap::filled(w, h, Tile::Obstacle, format!("maze_{w}x{h}_s{seed}"))?;
    carve_perfect_maze(&mut map, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let mut walls: Vec<Cell> = (1..h as i32 - 1)
        .flat_map(|r| (1..w as i32 - 1).map(move |c| Cell::new(r, c)))
        .filter(|c| (c.row % 2 == 1) != (c.col % 2 == 1) && !map.is_free(*c))
        .collect();
    walls.shuffle(&mut rng);
    let remove = (walls.len() as f64 * MAZE_LOOP_FRACTION).round() as usize;
    for c in &walls[..remove] {
        map.set(*c, Tile::Free);
    }
    Ok(map)
}

/// The loop-free maze before wall removal.
pub fn carve_perfect_maze(map: &mut GridMap, rng: &mut ChaCha8Rng) {
    let start = Cell::new(1, 1);
    map.set(start, Tile::Free);
    let mut stack = vec![start];
    while let Some(&cur) = stack.last() {
        let mut options: Vec<(Cell, Cell)> = [(-2, 0), (0, 2), (2, 0), (0, -2)]
            .iter()
            .map(|&(dr, dc)| (Cell::new(cur.row + dr, cur.col + dc), Cell::new(cur.row + dr / 2, cur.col + dc / 2)))
            .filter(|(next, _)| {
                next.row > 0
                    && next.col > 0
                    && (next.row as usize) < map.height() - 1
                    && (next.col as usize) < map.width() - 1
                    && !map.is_free(*next)
            })
            .collect();
        if options.is_empty() {
            stack.pop();
            continue;
        }
        options.shuffle(rng);
        let (next, wall) = options[0];
        map.set(wall, Tile::Free);
        map.set(next, Tile::Free);
        stack.push(next);
    }
}

/// Rows of `1 × shelf_len` shelves separated by aisles of width `aisle_w`,
/// with a free ring of width `aisle_w` around the block.
///
/// Height is `aisle_w·(rows+1) + rows`, width `aisle_w·(cols+1) + cols·shelf_len`;
/// the defaults give 33×46.
pub fn gen_warehouse(rows: usize, cols: usize, shelf_len: usize, aisle_w: usize) -> Result<GridMap> {
    if rows == 0 || cols == 0 || shelf_len == 0 || aisle_w == 0 {
        return Err(MapgenError::InvalidConfig("warehouse parameters must be positive".into()));
    }
    let height = aisle_w * (rows + 1) + rows;
    let width = aisle_w * (cols + 1) + cols * shelf_len;
    let mut map = GridMap::filled(width, height, Tile::Free, format!("warehouse_{height}x{width}"))?;
    for r in 0..rows {
        let row = aisle_w * (r + 1) + r;
        for c in 0..cols {
            let col0 = aisle_w * (c + 1) + c * shelf_len;
            for k in 0..shelf_len {
                map.set(Cell::new(row as i32, (col0 + k) as i32), Tile::Obstacle);
            }
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarehouseParams {
    pub rows: usize,
    pub cols: usize,
    pub shelf_len: usize,
    pub aisle_w: usize,
}

impl Default for WarehouseParams {
    fn default() -> Self {
        Self { rows: 16, cols: 5, shelf_len: 8, aisle_w: 1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_basics() {
        assert_eq!(gen_random(9, 7, 0.0, 1).unwrap().free_count(), 63);
        assert_eq!(gen_random(21, 21, 0.3, 5).unwrap(), gen_random(21, 21, 0.3, 5).unwrap());
        assert!(gen_random(5, 5, 0.7, 0).is_err());
        for seed in 0..20 {
            let m = gen_random(21, 21, 0.3, seed).unwrap();
            let frac = m.obstacle_count() as f64 / 441.0;
            assert!((frac - 0.3).abs() <= 0.05 + 0.03, "seed {seed}: {frac}");
            assert!(largest_component(&m) as f64 >= 0.8 * m.free_count() as f64);
        }
    }

    #[test]
    fn maze_properties() {
        assert!(matches!(gen_maze(6, 7, 0), Err(MapgenError::BadDimensions { .. })));
        assert!(matches!(gen_maze(3, 7, 0), Err(MapgenError::BadDimensions { .. })));
        for (w, h) in [(5, 5), (21, 17), (31, 31)] {
            let m = gen_maze(w, h, 3).unwrap();
            assert_eq!(largest_component(&m), m.free_count());
            assert_eq!(m, gen_maze(w, h, 3).unwrap());
            // Pillars on even/even lattice points and the border stay walls.
            for r in (0..h as i32).step_by(2) {
                for c in (0..w as i32).step_by(2) {
                    assert!(!m.is_free(Cell::new(r, c)));
                }
            }
        }
    }

    #[test]
    fn perfect_maze_is_a_tree() {
        let mut map = GridMap::filled(21, 15, Tile::Obstacle, "m").unwrap();
        carve_perfect_maze(&mut map, &mut ChaCha8Rng::seed_from_u64(4));
        // Every room is open, corridors are 1 wide: edges = nodes - 1.
        let rooms = 10 * 7;
        let free = map.free_count();
        assert_eq!(free - rooms, rooms - 1);
        assert_eq!(largest_component(&map), free);
        for r in 0..14 {
            for c in 0..20 {
                let block = [(r, c), (r + 1, c), (r, c + 1), (r + 1, c + 1)];
                assert!(!block.iter().all(|&(r, c)| map.is_free(Cell::new(r, c))));
            }
        }
    }

    #[test]
    fn warehouse_default_shape() {
        let p = WarehouseParams::default();
        let m = gen_warehouse(p.rows, p.cols, p.shelf_len, p.aisle_w).unwrap();
        assert_eq!((m.height(), m.width()), (33, 46));
        assert_eq!(m.obstacle_count(), 16 * 5 * 8);
        for c in 0..46 {
            assert!(m.is_free(Cell::new(0, c)) && m.is_free(Cell::new(32, c)));
        }
        for r in 0..33 {
            assert!(m.is_free(Cell::new(r, 0)) && m.is_free(Cell::new(r, 45)));
        }
        assert_eq!(largest_component(&m), m.free_count());
    }
}
