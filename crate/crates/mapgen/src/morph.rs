//! Binary morphology on the Free mask.
//!
//! Square structuring element; cells outside the map are ignored (neither
//! Free nor Obstacle), which keeps dilation and erosion adjoint so that the
//! closing-then-opening filter is idempotent.

use mapf_core::grid::{GridMap, Tile};

use crate::raster::RasterConfig;

struct Mask {
    w: usize,
    h: usize,
    free: Vec<bool>,
}

impl Mask {
    fn of(map: &GridMap) -> Self {
        Self { w: map.width(), h: map.height(), free: map.tiles().iter().map(|t| *t == Tile::Free).collect() }
    }

    /// Separable box filter: `any` gives dilation, `all` erosion.
    fn box_filter(&self, r: usize, any: bool) -> Mask {
        let pass = |src: &[bool], len: usize, lines: usize, idx: &dyn Fn(usize, usize) -> usize| {
            let mut out = vec![false; src.len()];
            for line in 0..lines {
                for i in 0..len {
                    let lo = i.saturating_sub(r);
                    let hi = (i + r).min(len - 1);
                    let mut vals = (lo..=hi).map(|j| src[idx(line, j)]);
                    out[idx(line, i)] = if any { vals.any(|v| v) } else { vals.all(|v| v) };
                }
            }
            out
        };
        let (w, h) = (self.w, self.h);
        let rows = pass(&self.free, w, h, &|line, i| line * w + i);
        let cols = pass(&rows, h, w, &|line, i| i * w + line);
        Mask { w, h, free: cols }
    }

    fn dilate(&self, r: usize) -> Mask {
        self.box_filter(r, true)
    }

    fn erode(&self, r: usize) -> Mask {
        self.box_filter(r, false)
    }

    /// 3×3 majority over in-bounds cells, limited to `allowed`.
    fn majority(&self, allowed: &Mask) -> Mask {
        let mut out = vec![false; self.free.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                let (mut n, mut f) = (0, 0);
                for yy in y.saturating_sub(1)..=(y + 1).min(self.h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(self.w - 1) {
                        n += 1;
                        f += self.free[yy * self.w + xx] as usize;
                    }
                }
                out[y * self.w + x] = 2 * f > n && allowed.free[y * self.w + x];
            }
        }
        Mask { w: self.w, h: self.h, free: out }
    }

    fn apply(&self, map: &GridMap) -> GridMap {
        let mut out = map.clone();
        for (i, &f) in self.free.iter().enumerate() {
            out.set(map.cell_at(i), if f { Tile::Free } else { Tile::Obstacle });
        }
        out
    }
}

/// Closing then opening of the Free mask, optionally followed by a majority
/// filter that never frees cells outside the closing.
pub fn morph_clean(map: &GridMap, config: &RasterConfig) -> GridMap {
    let r = config.kernel_radius;
    if r == 0 && !config.smoothing || map.width() == 0 || map.height() == 0 {
        return map.clone();
    }
    let mask = Mask::of(map);
    let closed = mask.dilate(r).erode(r);
    let mut cleaned = closed.erode(r).dilate(r);
    if config.smoothing {
        cleaned = cleaned.majority(&closed);
    }
    cleaned.apply(map)
}

/// Closing of the Free mask alone.
pub fn closing(map: &GridMap, radius: usize) -> GridMap {
    Mask::of(map).dilate(radius).erode(radius).apply(map)
}
