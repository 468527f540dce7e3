//! Plain-text rendering of an episode.
//!
//! `@` obstacle, `.` free, `A`..`Z` agents (then `0`..`9`), the matching
//! lowercase letter a goal. An agent standing on its own goal is drawn in
//! its uppercase letter.

use mapf_core::{Cell, GridMap};

pub fn agent_symbol(i: usize) -> char {
    const SYMBOLS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    SYMBOLS.get(i).map_or('#', |&b| b as char)
}

fn goal_symbol(i: usize) -> char {
    agent_symbol(i).to_ascii_lowercase()
}

pub fn render_frame(map: &GridMap, positions: &[Cell], goals: &[Cell], color: bool) -> String {
    let mut out = String::with_capacity((map.width() + 1) * map.height());
    for r in 0..map.height() as i32 {
        for c in 0..map.width() as i32 {
            let cell = Cell::new(r, c);
            if let Some(i) = positions.iter().position(|&p| p == cell) {
                let ch = agent_symbol(i);
                if color {
                    out.push_str(&format!("\x1b[1;3{}m{ch}\x1b[0m", 1 + i % 6));
                } else {
                    out.push(ch);
                }
            } else if let Some(i) = goals.iter().position(|&g| g == cell) {
                out.push(goal_symbol(i));
            } else if map.is_free(cell) {
                out.push('.');
            } else {
                out.push('@');
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_agents_goals_and_walls() {
        let map = GridMap::from_ascii(&["..@", "..."]).unwrap();
        let s = render_frame(&map, &[Cell::new(0, 0)], &[Cell::new(1, 2)], false);
        assert_eq!(s, "A.@\n..a\n");
        let colored = render_frame(&map, &[Cell::new(0, 0)], &[Cell::new(1, 2)], true);
        assert!(colored.contains('\x1b'));
    }
}
