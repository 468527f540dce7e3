use std::fmt::Write;

use mapf_core::grid::{Cell, GridMap, Tile};

use crate::error::{MapgenError, Result};
use crate::osm::BBox;
use crate::raster::RasterConfig;

/// Tiles with fewer Free cells than this fraction are dropped.
pub const MIN_FREE_FRACTION: f64 = 0.05;

/// A generated map plus its geographic extent, when it has one.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTile {
    pub map: GridMap,
    pub bbox: Option<BBox>,
}

/// Cuts full, non-overlapping `tile_size` squares in row-major order, named
/// `{name}_r{row}_c{col}`.
pub fn tile(map: &GridMap, config: &RasterConfig) -> Result<Vec<GridMap>> {
    Ok(tile_with_origin(map, config)?.into_iter().map(|(_, m)| m).collect())
}

/// As [`tile`], also returning each tile's top-left `(row, col)` in `map`.
pub fn tile_with_origin(map: &GridMap, config: &RasterConfig) -> Result<Vec<((usize, usize), GridMap)>> {
    config.validate()?;
    let ts = config.tile_size;
    if map.width() < ts || map.height() < ts {
        return Err(MapgenError::MapTooSmall { width: map.width(), height: map.height(), tile: ts });
    }
    let mut out = Vec::new();
    for tr in 0..map.height() / ts {
        for tc in 0..map.width() / ts {
            let mut cells = Vec::with_capacity(ts * ts);
            for r in 0..ts {
                for c in 0..ts {
                    cells.push(map.tile(Cell::new((tr * ts + r) as i32, (tc * ts + c) as i32)).unwrap_or(Tile::Obstacle));
                }
            }
            let free = cells.iter().filter(|t| **t == Tile::Free).count();
            if (free as f64) < MIN_FREE_FRACTION * (ts * ts) as f64 {
                continue;
            }
            out.push(((tr * ts, tc * ts), GridMap::new(ts, ts, cells, format!("{}_r{tr}_c{tc}", map.name))?));
        }
    }
    Ok(out)
}

/// CSV listing of generated maps; bbox columns are empty for synthetic maps.
pub fn manifest_csv(tiles: &[MapTile]) -> String {
    let mut s = String::from("name,width,height,free_fraction,min_lat,min_lon,max_lat,max_lon\n");
    for t in tiles {
        let m = &t.map;
        let frac = m.free_count() as f64 / (m.width() * m.height()).max(1) as f64;
        let bbox = t
            .bbox
            .map(|b| format!("{},{},{},{}", b.min_lat, b.min_lon, b.max_lat, b.max_lon))
            .unwrap_or_else(|| ",,,".into());
        writeln!(s, "{},{},{},{frac:.4},{bbox}", m.name, m.width(), m.height()).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(ts: usize) -> RasterConfig {
        RasterConfig { tile_size: ts, ..RasterConfig::default() }
    }

    #[test]
    fn counts_and_names() {
        let mut map = GridMap::empty(512, 512);
        map.name = "city".into();
        let tiles = tile(&map, &cfg(256)).unwrap();
        assert_eq!(tiles.len(), 4);
        let names: Vec<_> = tiles.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["city_r0_c0", "city_r0_c1", "city_r1_c0", "city_r1_c1"]);
        // Partial tiles are not emitted.
        assert_eq!(tile(&GridMap::empty(40, 33), &cfg(16)).unwrap().len(), 4);
    }

    #[test]
    fn sparse_tiles_are_dropped() {
        let map = GridMap::filled(64, 32, Tile::Obstacle, "x").unwrap();
        assert!(tile(&map, &cfg(32)).unwrap().is_empty());
        let mut map = map;
        // 51 free cells = 4.98% of a 32×32 tile: dropped; 52 kept.
        for i in 0..51 {
            map.set(Cell::new(i / 32, i % 32), Tile::Free);
        }
        for i in 0..52 {
            map.set(Cell::new(i / 32, 32 + i % 32), Tile::Free);
        }
        let tiles = tile(&map, &cfg(32)).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0].name, "x_r0_c1");
    }

    #[test]
    fn too_small() {
        assert!(matches!(tile(&GridMap::empty(20, 10), &cfg(16)), Err(MapgenError::MapTooSmall { .. })));
    }

    #[test]
    fn manifest_lists_each_map() {
        let mut map = GridMap::empty(3, 2);
        map.set(Cell::new(0, 0), Tile::Obstacle);
        let csv = manifest_csv(&[MapTile { map, bbox: None }]);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().ends_with(",3,2,0.8333,,,,"));
    }
}
