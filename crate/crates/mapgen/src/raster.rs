//! Projection and rasterization of OSM features onto a grid.

use mapf_core::grid::{Cell, GridMap, Tile};

use crate::error::{MapgenError, Result};
use crate::osm::{GeoFeatures, LatLon};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const DEFAULT_TILE_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterConfig {
    /// Meters per cell.
    pub resolution: f64,
    pub tile_size: usize,
    /// Square kernel radius of the morphological cleanup, in cells.
    pub kernel_radius: usize,
    /// Majority-filter the Free/Obstacle boundary after cleanup.
    pub smoothing: bool,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self { resolution: 1.0, tile_size: DEFAULT_TILE_SIZE, kernel_radius: 1, smoothing: false }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(MapgenError::InvalidConfig(format!("resolution {}", self.resolution)));
        }
        if self.tile_size < 16 {
            return Err(MapgenError::InvalidConfig(format!("tile size {} below 16", self.tile_size)));
        }
        Ok(())
    }
}

/// Equirectangular projection about the bounding-box centre, expressed in
/// fractional cell coordinates with row 0 at the northern edge.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    lat0: f64,
    lon0: f64,
    cos_lat0: f64,
    half_w: f64,
    half_h: f64,
    resolution: f64,
    pub rows: usize,
    pub cols: usize,
}

impl Projection {
    pub fn new(f: &GeoFeatures, resolution: f64) -> Result<Self> {
        let b = f.bbox;
        let lat0 = 0.5 * (b.min_lat + b.max_lat);
        let lon0 = 0.5 * (b.min_lon + b.max_lon);
        let cos_lat0 = lat0.to_radians().cos();
        let width_m = (b.max_lon - b.min_lon).to_radians() * cos_lat0 * EARTH_RADIUS_M;
        let height_m = (b.max_lat - b.min_lat).to_radians() * EARTH_RADIUS_M;
        if !(width_m > 0.0 && height_m > 0.0) {
            return Err(MapgenError::EmptyBBox);
        }
        Ok(Self {
            lat0,
            lon0,
            cos_lat0,
            half_w: width_m / 2.0,
            half_h: height_m / 2.0,
            resolution,
            rows: (height_m / resolution).ceil() as usize,
            cols: (width_m / resolution).ceil() as usize,
        })
    }

    /// `(row, col)` in fractional cells.
    pub fn project(&self, p: LatLon) -> (f64, f64) {
        let x = (p.lon - self.lon0).to_radians() * self.cos_lat0 * EARTH_RADIUS_M;
        let y = (p.lat - self.lat0).to_radians() * EARTH_RADIUS_M;
        ((self.half_h - y) / self.resolution, (x + self.half_w) / self.resolution)
    }

    /// Inverse of [`project`](Self::project).
    pub fn unproject(&self, row: f64, col: f64) -> LatLon {
        let y = self.half_h - row * self.resolution;
        let x = col * self.resolution - self.half_w;
        LatLon {
            lat: self.lat0 + (y / EARTH_RADIUS_M).to_degrees(),
            lon: self.lon0 + (x / (EARTH_RADIUS_M * self.cos_lat0)).to_degrees(),
        }
    }

    /// Geographic extent of the cell rectangle `[r0, r1) × [c0, c1)`.
    pub fn bbox_of(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> crate::osm::BBox {
        let nw = self.unproject(r0 as f64, c0 as f64);
        let se = self.unproject(r1 as f64, c1 as f64);
        crate::osm::BBox { min_lat: se.lat, min_lon: nw.lon, max_lat: nw.lat, max_lon: se.lon }
    }

    pub fn cell(&self, p: LatLon) -> Cell {
        let (r, c) = self.project(p);
        Cell::new(r.floor() as i32, c.floor() as i32)
    }
}

/// Cells on the segment `a`–`b` (inclusive), Bresenham order.
pub fn bresenham(a: Cell, b: Cell) -> Vec<Cell> {
    let (dx, dy) = ((b.col - a.col).abs(), -(b.row - a.row).abs());
    let (sx, sy) = ((b.col - a.col).signum(), (b.row - a.row).signum());
    let (mut x, mut y, mut err) = (a.col, a.row, dx + dy);
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push(Cell::new(y, x));
        if x == b.col && y == b.row {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn stamp_polyline(map: &mut GridMap, proj: &Projection, points: &[LatLon], radius: i32, tile: Tile) {
    for pair in points.windows(2) {
        for c in bresenham(proj.cell(pair[0]), proj.cell(pair[1])) {
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    let cell = Cell::new(c.row + dr, c.col + dc);
                    if map.in_bounds(cell) {
                        map.set(cell, tile);
                    }
                }
            }
        }
    }
}

/// Even-odd fill of a ring, sampled at cell centres.
fn fill_ring(map: &mut GridMap, proj: &Projection, ring: &[LatLon]) {
    let pts: Vec<(f64, f64)> = ring.iter().map(|&p| proj.project(p)).collect();
    let mut xs = Vec::new();
    for row in 0..map.height() {
        let y = row as f64 + 0.5;
        xs.clear();
        for e in pts.windows(2) {
            let ((y0, x0), (y1, x1)) = (e[0], e[1]);
            if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                xs.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for span in xs.chunks_exact(2) {
            let first = (span[0] - 0.5).ceil().max(0.0) as usize;
            for col in first..map.width() {
                if col as f64 + 0.5 >= span[1] {
                    break;
                }
                map.set(Cell::new(row as i32, col as i32), Tile::Obstacle);
            }
        }
    }
}

/// Starts from all-Obstacle, stamps walkable ways Free (Chebyshev radius
/// `width / 2` around the Bresenham centreline), then stamps obstacle rings
/// (filled) and obstacle lines, so obstacles win. Geometry outside the
/// bounding box is clipped.
pub fn rasterize(features: &GeoFeatures, config: &RasterConfig) -> Result<GridMap> {
    config.validate()?;
    let proj = Projection::new(features, config.resolution)?;
    let mut map = GridMap::filled(proj.cols, proj.rows, Tile::Obstacle, "osm")?;
    for way in &features.walkable {
        stamp_polyline(&mut map, &proj, &way.points, (way.width / 2) as i32, Tile::Free);
    }
    for ring in &features.obstacle_rings {
        fill_ring(&mut map, &proj, ring);
    }
    for line in &features.obstacle_lines {
        stamp_polyline(&mut map, &proj, line, 0, Tile::Obstacle);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osm::{BBox, WalkableWay};

    /// A bbox of `size` meters square at the equator-ish origin and a helper
    /// giving the lat/lon of fractional cell coordinates.
    fn frame(size: f64) -> (BBox, impl Fn(f64, f64) -> LatLon) {
        let deg = (size / EARTH_RADIUS_M).to_degrees();
        let b = BBox { min_lat: 0.0, min_lon: 0.0, max_lat: deg, max_lon: deg };
        let cos = (deg / 2.0).to_radians().cos();
        let at = move |row: f64, col: f64| LatLon {
            lat: deg - (row / EARTH_RADIUS_M).to_degrees(),
            lon: (col / (EARTH_RADIUS_M * cos)).to_degrees(),
        };
        (b, at)
    }

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        let line = bresenham(Cell::new(0, 0), Cell::new(3, 7));
        assert_eq!(line.first(), Some(&Cell::new(0, 0)));
        assert_eq!(line.last(), Some(&Cell::new(3, 7)));
        assert!(line.windows(2).all(|w| w[0].chebyshev(w[1]) == 1));
        assert_eq!(bresenham(Cell::new(2, 2), Cell::new(2, 2)), vec![Cell::new(2, 2)]);
    }

    #[test]
    fn footway_band_is_three_cells_tall() {
        let (bbox, at) = frame(19.5);
        let f = GeoFeatures {
            bbox,
            walkable: vec![WalkableWay { points: vec![at(10.5, -3.0), at(10.5, 25.0)], width: 3 }],
            obstacle_rings: vec![],
            obstacle_lines: vec![],
        };
        let map = rasterize(&f, &RasterConfig::default()).unwrap();
        assert_eq!((map.width(), map.height()), (20, 20));
        for row in 0..20 {
            let free = (0..20).filter(|&c| map.is_free(Cell::new(row, c))).count();
            assert_eq!(free, if (9..=11).contains(&row) { 20 } else { 0 }, "row {row}");
        }
    }

    #[test]
    fn buildings_win_over_walkways() {
        let (bbox, at) = frame(19.5);
        let ring = vec![at(8.2, 4.2), at(8.2, 7.8), at(14.8, 7.8), at(14.8, 4.2), at(8.2, 4.2)];
        let f = GeoFeatures {
            bbox,
            walkable: vec![WalkableWay { points: vec![at(10.5, 0.5), at(10.5, 19.5)], width: 5 }],
            obstacle_rings: vec![ring],
            obstacle_lines: vec![],
        };
        let map = rasterize(&f, &RasterConfig::default()).unwrap();
        // Band rows 8..=12; building covers cell centres rows 8..=14, cols 4..=7.
        for row in 8..=12 {
            for col in 0..20 {
                assert_eq!(map.is_free(Cell::new(row, col)), !(4..=7).contains(&col), "({row},{col})");
            }
        }
    }

    #[test]
    fn empty_bbox() {
        let f = GeoFeatures {
            bbox: BBox { min_lat: 1.0, min_lon: 1.0, max_lat: 1.0, max_lon: 2.0 },
            walkable: vec![],
            obstacle_rings: vec![],
            obstacle_lines: vec![],
        };
        assert!(matches!(rasterize(&f, &RasterConfig::default()), Err(MapgenError::EmptyBBox)));
    }
}
