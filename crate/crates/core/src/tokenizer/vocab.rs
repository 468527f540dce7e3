use crate::grid::Action;

pub type TokenId = u8;

/// Decoded meaning of a token id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    CostDelta(i8),
    Obstacle,
    Unreachable,
    Coord(i8),
    Action(Action),
    Pad,
}

/// The 60-token vocabulary.
///
/// | ids    | meaning |
/// |--------|---------|
/// | 0..=20  | cost delta −10..=+10 |
/// | 21     | obstacle |
/// | 22     | unreachable |
/// | 23..=53 | coordinate −15..=+15 |
/// | 54..=58 | actions Up, Right, Down, Left, Wait |
/// | 59     | pad |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocab;

impl Vocab {
    pub const SIZE: usize = 60;
    pub const MAX_COST_DELTA: i32 = 10;
    pub const MAX_COORD: i32 = 15;

    pub const COST_BASE: TokenId = 0;
    pub const OBSTACLE: TokenId = 21;
    pub const UNREACHABLE: TokenId = 22;
    pub const COORD_BASE: TokenId = 23;
    pub const ACTION_BASE: TokenId = 54;
    pub const PAD: TokenId = 59;

    /// Cost delta, clamped to ±10.
    pub fn cost_delta(delta: i64) -> TokenId {
        let d = delta.clamp(-(Self::MAX_COST_DELTA as i64), Self::MAX_COST_DELTA as i64) as i32;
        (Self::COST_BASE as i32 + d + Self::MAX_COST_DELTA) as TokenId
    }

    pub fn action(action: Action) -> TokenId {
        Self::ACTION_BASE + action.code()
    }

    pub fn decode(id: TokenId) -> Option<Token> {
        Some(match id {
            0..=20 => Token::CostDelta(id as i8 - Self::MAX_COST_DELTA as i8),
            Self::OBSTACLE => Token::Obstacle,
            Self::UNREACHABLE => Token::Unreachable,
            23..=53 => Token::Coord((id - Self::COORD_BASE) as i8 - Self::MAX_COORD as i8),
            54..=58 => Token::Action(Action::from_code(id - Self::ACTION_BASE)?),
            Self::PAD => Token::Pad,
            _ => return None,
        })
    }

    pub fn as_action(id: TokenId) -> Option<Action> {
        match Self::decode(id) {
            Some(Token::Action(a)) => Some(a),
            _ => None,
        }
    }

    pub fn as_coord(id: TokenId) -> Option<i32> {
        match Self::decode(id) {
            Some(Token::Coord(c)) => Some(c as i32),
            _ => None,
        }
    }
}

/// Coordinate token for `v`, saturating at ±15.
pub fn quantize_coord(v: i32) -> TokenId {
    let c = v.clamp(-Vocab::MAX_COORD, Vocab::MAX_COORD);
    (Vocab::COORD_BASE as i32 + c + Vocab::MAX_COORD) as TokenId
}
