//! Egocentric 256-token observations.
//!
//! Layout (0-based positions):
//!
//! | positions | content |
//! |-----------|---------|
//! | 0..121    | 11×11 cost map around the ego agent, row-major |
//! | 121..251  | 13 agent segments of 10 tokens, slot 0 is the ego agent |
//! | 251..256  | always `Pad` |
//!
//! An agent segment is `[row, col, goal row, goal col, h1..h5, est]` where the
//! coordinates are relative to the ego agent, `h1..h5` are the agent's last
//! five executed actions (oldest first) and `est` is an estimate of its next
//! action.

mod observation;
mod samples;
mod vocab;

pub use observation::{
    build_observation, ActionHistory, ObservationBundle, ObservationContext, SlotGeometry, SreMeta,
};
pub use samples::{build_training_samples, extract_predicted_neighbor_actions, PositionSet, TrainingSample, WeightSets};
pub use vocab::{quantize_coord, Token, TokenId, Vocab};

pub const SEQ_LEN: usize = 256;
pub const FOV_RADIUS: i32 = 5;
pub const FOV_SIDE: usize = 11;
pub const MAP_TOKENS: usize = FOV_SIDE * FOV_SIDE;
pub const AGENT_SLOTS: usize = 13;
pub const SEGMENT_LEN: usize = 10;
pub const HISTORY_LEN: usize = 5;
pub const AGENT_BASE: usize = MAP_TOKENS;
pub const TAIL_PAD_BASE: usize = AGENT_BASE + AGENT_SLOTS * SEGMENT_LEN;

/// Offsets inside an agent segment.
pub const SEG_ROW: usize = 0;
pub const SEG_COL: usize = 1;
pub const SEG_GOAL_ROW: usize = 2;
pub const SEG_GOAL_COL: usize = 3;
pub const SEG_HISTORY: usize = 4;
pub const SEG_EST: usize = 9;

pub type Tokens = [TokenId; SEQ_LEN];

/// First position of agent slot `slot`.
pub const fn segment_start(slot: usize) -> usize {
    AGENT_BASE + slot * SEGMENT_LEN
}

/// `(row, col)` offset of cost-map position `k` relative to the ego cell.
pub fn map_offset(k: usize) -> (i32, i32) {
    debug_assert!(k < MAP_TOKENS);
    ((k / FOV_SIDE) as i32 - FOV_RADIUS, (k % FOV_SIDE) as i32 - FOV_RADIUS)
}

/// Position of the ego cell inside the cost map.
pub const MAP_CENTER: usize = MAP_TOKENS / 2;

const _: () = assert!(TAIL_PAD_BASE == 251);
const _: () = assert!(SEG_HISTORY + HISTORY_LEN == SEG_EST);
