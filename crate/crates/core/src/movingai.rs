//! MovingAI `.map` reader and writer.
//!
//! ```text
//! type octile
//! height H
//! width W
//! map
//! <H rows of W characters>
//! ```
//! `.` and `G` are passable; `@`, `O`, `T` and `W` are obstacles.

use crate::error::{CoreError, Result};
use crate::grid::{GridMap, Tile};

pub fn load_map(text: &str) -> Result<GridMap> {
    load_map_named(text, "")
}

pub fn load_map_named(text: &str, name: &str) -> Result<GridMap> {
    let mut lines = text.lines();
    let mut header = |expected: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| CoreError::MalformedHeader(format!("missing `{expected}` line")))?;
        let line = line.trim_end_matches('\r');
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(key) if key == expected => Ok(parts.collect::<Vec<_>>().join(" ")),
            _ => Err(CoreError::MalformedHeader(format!("expected `{expected}`, found {line:?}"))),
        }
    };

    let kind = header("type")?;
    if kind != "octile" {
        return Err(CoreError::MalformedHeader(format!("unsupported map type {kind:?}")));
    }
    let height = parse_dim(&header("height")?, "height")?;
    let width = parse_dim(&header("width")?, "width")?;
    header("map")?;

    let rows: Vec<&str> = lines.map(|l| l.trim_end_matches('\r')).collect();
    let rows: Vec<&str> = match rows.iter().rposition(|r| !r.is_empty()) {
        Some(last) => rows[..=last].to_vec(),
        None => Vec::new(),
    };
    if rows.len() != height {
        return Err(CoreError::DimensionMismatch(format!(
            "header height {height}, found {} rows",
            rows.len()
        )));
    }

    let mut cells = Vec::with_capacity(width * height);
    for (r, row) in rows.iter().enumerate() {
        let n = row.chars().count();
        if n != width {
            return Err(CoreError::DimensionMismatch(format!("row {r} has {n} cells, header width {width}")));
        }
        for (c, ch) in row.chars().enumerate() {
            cells.push(match ch {
                '.' | 'G' => Tile::Free,
                '@' | 'O' | 'T' | 'W' => Tile::Obstacle,
                _ => return Err(CoreError::UnknownCellChar { ch, row: r, col: c }),
            });
        }
    }
    GridMap::new(width, height, cells, name)
}

fn parse_dim(value: &str, what: &str) -> Result<usize> {
    match value.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(CoreError::MalformedHeader(format!("bad {what} {value:?}"))),
    }
}

/// Serializes with `.` for free cells and `@` for obstacles.
pub fn save_map(map: &GridMap) -> String {
    let mut out = String::with_capacity(map.width() * map.height() + map.height() + 48);
    out.push_str(&format!("type octile\nheight {}\nwidth {}\nmap\n", map.height(), map.width()));
    for row in map.tiles().chunks(map.width()) {
        out.extend(row.iter().map(|t| match t {
            Tile::Free => '.',
            Tile::Obstacle => '@',
        }));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use proptest::prelude::*;

    #[test]
    fn parses_small_map() {
        let map = load_map("type octile\nheight 2\nwidth 2\nmap\n.@\n..\n").unwrap();
        assert_eq!(map.obstacle_count(), 1);
        assert_eq!(map.tile(Cell::new(0, 1)), Some(Tile::Obstacle));
    }

    #[test]
    fn all_passable_chars() {
        let map = load_map("type octile\nheight 1\nwidth 6\nmap\n.G@OTW\n").unwrap();
        assert_eq!(map.free_count(), 2);
    }

    #[test]
    fn too_many_rows() {
        let err = load_map("type octile\nheight 2\nwidth 2\nmap\n..\n..\n..\n").unwrap_err();
        assert!(matches!(err, CoreError::DimensionMismatch(_)));
    }

    #[test]
    fn short_row() {
        let err = load_map("type octile\nheight 2\nwidth 2\nmap\n..\n.\n").unwrap_err();
        assert!(matches!(err, CoreError::DimensionMismatch(_)));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(load_map("height 2\n"), Err(CoreError::MalformedHeader(_))));
        assert!(matches!(
            load_map("type octile\nheight x\nwidth 2\nmap\n"),
            Err(CoreError::MalformedHeader(_))
        ));
    }

    #[test]
    fn unknown_char() {
        let err = load_map("type octile\nheight 1\nwidth 2\nmap\n.x\n").unwrap_err();
        assert!(matches!(err, CoreError::UnknownCellChar { ch: 'x', row: 0, col: 1 }));
    }

    #[test]
    fn all_free_17() {
        let body = format!("type octile\nheight 17\nwidth 17\nmap\n{}", format!("{}\n", ".".repeat(17)).repeat(17));
        assert_eq!(load_map(&body).unwrap().free_count(), 289);
    }

    #[test]
    fn one_by_one_bytes() {
        assert_eq!(save_map(&GridMap::empty(1, 1)), "type octile\nheight 1\nwidth 1\nmap\n.\n");
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..24, h in 1usize..24, bits in proptest::collection::vec(any::<bool>(), 576)) {
            let cells = (0..w * h).map(|i| if bits[i] { Tile::Obstacle } else { Tile::Free }).collect();
            let map = GridMap::new(w, h, cells, "").unwrap();
            let text = save_map(&map);
            prop_assert_eq!(&load_map(&text).unwrap(), &map);
            prop_assert_eq!(save_map(&map), text);
        }
    }
}
