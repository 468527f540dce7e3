use mapf_core::dataset::Record;
use mapf_core::tokenizer::{SreMeta, Tokens, TrainingSample, WeightSets, MAP_TOKENS, SEQ_LEN};
use mapf_core::Action;

/// One supervised example: input observation, slow target and fast target.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Tokens,
    pub meta: SreMeta,
    pub target: Tokens,
    pub action: Action,
    pub weights: WeightSets,
}

impl From<&Record> for Example {
    fn from(r: &Record) -> Self {
        Self { input: r.input, meta: r.sre_meta(), target: r.target, action: r.action, weights: r.weights() }
    }
}

impl From<&TrainingSample> for Example {
    fn from(s: &TrainingSample) -> Self {
        Self {
            input: s.input.tokens,
            meta: s.input.sre_meta,
            target: s.target_tokens,
            action: s.target_action,
            weights: s.weights,
        }
    }
}

pub const COST_MAP_WEIGHT: f64 = 0.5;
pub const ACTION_WEIGHT: f64 = 1.0;
pub const DEFAULT_WEIGHT: f64 = 0.5;

/// Slow-loss weight of position `k`: masked positions 0, cost map 0.5,
/// executed and estimated action positions 1, everything else 0.5.
pub fn position_weight(k: usize, w: &WeightSets) -> f64 {
    if w.masked.contains(k) {
        0.0
    } else if k < MAP_TOKENS {
        COST_MAP_WEIGHT
    } else if w.real_action.contains(k) || w.est_action.contains(k) {
        ACTION_WEIGHT
    } else {
        DEFAULT_WEIGHT
    }
}

pub fn position_weights(w: &WeightSets) -> [f64; SEQ_LEN] {
    std::array::from_fn(|k| position_weight(k, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mapf_core::tokenizer::PositionSet;

    #[test]
    fn weight_classes() {
        let w = WeightSets {
            masked: PositionSet::from_positions([200, 251]),
            real_action: PositionSet::from_positions([125]),
            est_action: PositionSet::from_positions([130]),
        };
        assert_eq!(position_weight(0, &w), 0.5);
        assert_eq!(position_weight(120, &w), 0.5);
        assert_eq!(position_weight(125, &w), 1.0);
        assert_eq!(position_weight(130, &w), 1.0);
        assert_eq!(position_weight(121, &w), 0.5);
        assert_eq!(position_weight(200, &w), 0.0);
        assert_eq!(position_weight(251, &w), 0.0);
    }
}
