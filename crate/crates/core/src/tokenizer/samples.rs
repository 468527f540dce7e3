use std::collections::BTreeMap;

use super::observation::ObservationBundle;
use super::vocab::Vocab;
use super::*;
use crate::grid::Action;
use crate::solvers::Trajectory;

/// A set of token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PositionSet([u64; SEQ_LEN / 64]);

impl PositionSet {
    pub fn insert(&mut self, k: usize) {
        self.0[k / 64] |= 1 << (k % 64);
    }

    pub fn remove(&mut self, k: usize) {
        self.0[k / 64] &= !(1 << (k % 64));
    }

    pub fn contains(&self, k: usize) -> bool {
        k < SEQ_LEN && self.0[k / 64] & (1 << (k % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..SEQ_LEN).filter(|&k| self.contains(k))
    }

    pub fn is_disjoint(&self, other: &PositionSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &PositionSet) -> PositionSet {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
        out
    }

    /// Bitmap bytes, bit `k % 8` of byte `k / 8` set for position `k`.
    pub fn to_bytes(&self) -> [u8; SEQ_LEN / 8] {
        let mut out = [0u8; SEQ_LEN / 8];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = (self.0[i / 8] >> ((i % 8) * 8)) as u8;
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; SEQ_LEN / 8]) -> Self {
        let mut words = [0u64; SEQ_LEN / 64];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        Self(words)
    }

    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::default();
        for k in positions {
            set.insert(k);
        }
        set
    }
}

/// Position classes of the slow-head loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeightSets {
    /// Positions ignored by the loss: every `Pad` position of the target.
    pub masked: PositionSet,
    /// History positions of occupied slots (executed actions).
    pub real_action: PositionSet,
    /// Estimated-action positions of occupied slots.
    pub est_action: PositionSet,
}

impl WeightSets {
    /// Weight sets for a target observation whose occupied slots are given by
    /// `occupied`. Masking takes precedence, so padded history entries are
    /// excluded from `real_action`.
    pub fn for_target(target: &Tokens, occupied: impl IntoIterator<Item = usize>) -> Self {
        let masked = PositionSet::from_positions((0..SEQ_LEN).filter(|&k| target[k] == Vocab::PAD));
        let mut real_action = PositionSet::default();
        let mut est_action = PositionSet::default();
        for slot in occupied {
            let s = segment_start(slot);
            for k in s + SEG_HISTORY..s + SEG_EST {
                if !masked.contains(k) {
                    real_action.insert(k);
                }
            }
            if !masked.contains(s + SEG_EST) {
                est_action.insert(s + SEG_EST);
            }
        }
        Self { masked, real_action, est_action }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSample {
    pub input: ObservationBundle,
    pub target_tokens: Tokens,
    pub target_action: Action,
    pub weights: WeightSets,
}

/// One sample per agent per step `t < makespan`: input `o_t`, slow target
/// `o_{t+1}`, fast target the executed action `a_t`. Steps where an agent
/// waits on its goal are kept.
pub fn build_training_samples(traj: &Trajectory) -> Vec<TrainingSample> {
    let mut samples = Vec::with_capacity(traj.len() * traj.instance.n_agents());
    for t in 0..traj.len() {
        for agent in 0..traj.instance.n_agents() {
            let input = traj.observations[t][agent].clone();
            let next = &traj.observations[t + 1][agent];
            let occupied = (0..AGENT_SLOTS).filter(|&s| next.slot_agents[s].is_some());
            samples.push(TrainingSample {
                input,
                target_tokens: next.tokens,
                target_action: traj.actions[t][agent],
                weights: WeightSets::for_target(&next.tokens, occupied),
            });
        }
    }
    samples
}

/// Reads the `est` token of every occupied neighbour slot of a predicted next
/// observation. Slots whose prediction is not an action token are skipped.
pub fn extract_predicted_neighbor_actions(
    pred_tokens: &Tokens,
    slot_agents: &[Option<usize>; AGENT_SLOTS],
) -> BTreeMap<usize, Action> {
    slot_agents
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(slot, agent)| {
            let agent = (*agent)?;
            let action = Vocab::as_action(pred_tokens[segment_start(slot) + SEG_EST])?;
            Some((agent, action))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extraction_reads_est_positions() {
        let mut tokens = [Vocab::PAD; SEQ_LEN];
        let mut slots = [None; AGENT_SLOTS];
        slots[0] = Some(3);
        slots[1] = Some(7);
        slots[2] = Some(9);
        tokens[segment_start(0) + SEG_EST] = Vocab::action(Action::Left);
        tokens[segment_start(1) + SEG_EST] = Vocab::action(Action::Right);
        let got = extract_predicted_neighbor_actions(&tokens, &slots);
        assert_eq!(got, BTreeMap::from([(7, Action::Right)]));
        assert!(extract_predicted_neighbor_actions(&tokens, &[None; AGENT_SLOTS]).is_empty());
    }

    #[test]
    fn weight_sets_for_three_slots() {
        let mut target = [Vocab::PAD; SEQ_LEN];
        for slot in 0..3 {
            let s = segment_start(slot);
            for k in s..s + SEGMENT_LEN {
                target[k] = Vocab::action(Action::Wait);
            }
        }
        for k in 0..MAP_TOKENS {
            target[k] = Vocab::cost_delta(0);
        }
        let w = WeightSets::for_target(&target, 0..3);
        assert_eq!(w.real_action.len(), 15);
        assert_eq!(w.est_action.len(), 3);
        assert!(w.real_action.is_disjoint(&w.est_action));
        assert!(w.real_action.union(&w.est_action).is_disjoint(&w.masked));
        assert_eq!(w.masked.len(), SEQ_LEN - MAP_TOKENS - 30);
    }

    #[test]
    fn padded_history_is_masked_not_weighted() {
        let mut target = [Vocab::cost_delta(0); SEQ_LEN];
        let s = segment_start(0);
        target[s + SEG_HISTORY] = Vocab::PAD;
        let w = WeightSets::for_target(&target, [0]);
        assert_eq!(w.real_action.len(), 4);
        assert!(w.masked.contains(s + SEG_HISTORY));
    }

    proptest! {
        #[test]
        fn bitmap_bytes_round_trip(positions in proptest::collection::vec(0usize..SEQ_LEN, 0..80)) {
            let set = PositionSet::from_positions(positions.iter().copied());
            prop_assert_eq!(PositionSet::from_bytes(&set.to_bytes()), set);
            for k in positions {
                prop_assert!(set.contains(k));
                prop_assert_eq!(set.to_bytes()[k / 8] >> (k % 8) & 1, 1);
            }
        }
    }
}
