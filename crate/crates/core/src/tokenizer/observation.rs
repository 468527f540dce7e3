use std::collections::{HashMap, VecDeque};

use super::vocab::{quantize_coord, TokenId, Vocab};
use super::*;
use crate::costfield::CostField;
use crate::error::{CoreError, Result};
use crate::grid::{Action, Cell, State};
use crate::instance::ProblemInstance;
use crate::solvers::greedy_action;

/// Last executed actions per agent, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionHistory {
    per_agent: Vec<VecDeque<Action>>,
}

impl ActionHistory {
    pub fn new(n_agents: usize) -> Self {
        Self { per_agent: vec![VecDeque::with_capacity(HISTORY_LEN); n_agents] }
    }

    pub fn push_joint(&mut self, joint: &[Action]) {
        for (h, &a) in self.per_agent.iter_mut().zip(joint) {
            if h.len() == HISTORY_LEN {
                h.pop_front();
            }
            h.push_back(a);
        }
    }

    pub fn of(&self, agent: usize) -> &VecDeque<Action> {
        &self.per_agent[agent]
    }

    /// History tokens for `agent`, left-padded with `Pad`.
    pub fn tokens(&self, agent: usize) -> [TokenId; HISTORY_LEN] {
        let h = &self.per_agent[agent];
        let mut out = [Vocab::PAD; HISTORY_LEN];
        let skip = HISTORY_LEN - h.len();
        for (i, a) in h.iter().enumerate() {
            out[skip + i] = Vocab::action(*a);
        }
        out
    }
}

/// Everything besides the joint state needed to build an observation.
#[derive(Debug, Clone, Copy)]
pub struct ObservationContext<'a> {
    pub instance: &'a ProblemInstance,
    /// One cost field per agent, towards that agent's goal.
    pub costfields: &'a [CostField],
    pub history: &'a ActionHistory,
}

/// Relative geometry of one occupied agent slot, `(row, col)` relative to the
/// ego cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotGeometry {
    pub pos: (i32, i32),
    /// Goal offset, clamped to the coordinate vocabulary.
    pub goal: (i32, i32),
}

impl SlotGeometry {
    pub fn displacement(&self) -> (i32, i32) {
        (self.goal.0 - self.pos.0, self.goal.1 - self.pos.1)
    }
}

/// Raw coordinates behind the spatial encoding. Cost-map offsets are fixed by
/// position (see [`map_offset`]), so only agent slots are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SreMeta {
    pub slots: [Option<SlotGeometry>; AGENT_SLOTS],
}

impl SreMeta {
    /// Recovers slot geometry from the coordinate tokens of each segment.
    /// A slot counts as occupied only if all four coordinate tokens decode.
    pub fn from_tokens(tokens: &Tokens) -> Self {
        let mut meta = SreMeta::default();
        for (slot, entry) in meta.slots.iter_mut().enumerate() {
            let s = segment_start(slot);
            let coords = [SEG_ROW, SEG_COL, SEG_GOAL_ROW, SEG_GOAL_COL].map(|o| Vocab::as_coord(tokens[s + o]));
            if let [Some(r), Some(c), Some(gr), Some(gc)] = coords {
                *entry = Some(SlotGeometry { pos: (r, c), goal: (gr, gc) });
            }
        }
        meta
    }

    pub fn occupied(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationBundle {
    pub tokens: Tokens,
    pub sre_meta: SreMeta,
    /// Global agent id in each slot.
    pub slot_agents: [Option<usize>; AGENT_SLOTS],
    pub ego: usize,
    pub step: u32,
}

impl ObservationBundle {
    /// Agent id → slot index for the occupied slots.
    pub fn slot_of(&self, agent: usize) -> Option<usize> {
        self.slot_agents.iter().position(|a| *a == Some(agent))
    }
}

/// Builds the observation of `ego`.
///
/// `est_override` replaces the greedy estimate in the `est` token of any
/// listed neighbour. It never applies to the ego slot.
pub fn build_observation(
    state: &State,
    ego: usize,
    ctx: &ObservationContext<'_>,
    est_override: Option<&HashMap<usize, Action>>,
) -> Result<ObservationBundle> {
    let ego_pos = *state.positions.get(ego).ok_or(CoreError::EgoNotInState(ego))?;
    let map = &ctx.instance.map;
    let mut tokens = [Vocab::PAD; SEQ_LEN];

    let field = &ctx.costfields[ego];
    let here = field.dist(ego_pos);
    for (k, token) in tokens[..MAP_TOKENS].iter_mut().enumerate() {
        let (dr, dc) = map_offset(k);
        let cell = Cell::new(ego_pos.row + dr, ego_pos.col + dc);
        *token = if !map.is_free(cell) {
            Vocab::OBSTACLE
        } else {
            match (field.dist(cell), here) {
                (Some(d), Some(h)) => Vocab::cost_delta(d as i64 - h as i64),
                _ => Vocab::UNREACHABLE,
            }
        };
    }

    let mut neighbours: Vec<(u32, usize)> = state
        .positions
        .iter()
        .enumerate()
        .filter(|&(j, p)| j != ego && p.chebyshev(ego_pos) <= FOV_RADIUS as u32)
        .map(|(j, p)| (p.chebyshev(ego_pos), j))
        .collect();
    neighbours.sort_unstable();

    let mut slot_agents = [None; AGENT_SLOTS];
    let mut sre_meta = SreMeta::default();
    let members = std::iter::once(ego).chain(neighbours.into_iter().map(|(_, j)| j));
    for (slot, agent) in members.take(AGENT_SLOTS).enumerate() {
        let pos = state.positions[agent];
        let goal = ctx.instance.agents[agent].goal;
        let rel = (pos.row - ego_pos.row, pos.col - ego_pos.col);
        let goal_rel = (
            (goal.row - ego_pos.row).clamp(-Vocab::MAX_COORD, Vocab::MAX_COORD),
            (goal.col - ego_pos.col).clamp(-Vocab::MAX_COORD, Vocab::MAX_COORD),
        );
        let est = match est_override.filter(|_| agent != ego).and_then(|m| m.get(&agent)) {
            Some(a) => *a,
            None => greedy_action(&ctx.costfields[agent], pos, map).unwrap_or(Action::Wait),
        };

        let s = segment_start(slot);
        tokens[s + SEG_ROW] = quantize_coord(rel.0);
        tokens[s + SEG_COL] = quantize_coord(rel.1);
        tokens[s + SEG_GOAL_ROW] = quantize_coord(goal_rel.0);
        tokens[s + SEG_GOAL_COL] = quantize_coord(goal_rel.1);
        tokens[s + SEG_HISTORY..s + SEG_EST].copy_from_slice(&ctx.history.tokens(agent));
        tokens[s + SEG_EST] = Vocab::action(est);

        slot_agents[slot] = Some(agent);
        sre_meta.slots[slot] = Some(SlotGeometry { pos: rel, goal: goal_rel });
    }

    Ok(ObservationBundle { tokens, sre_meta, slot_agents, ego, step: state.step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfield::bfs_cost_to_goal;
    use crate::grid::GridMap;
    use crate::instance::{generate_instance, AgentSpec};
    use crate::tokenizer::Token;

    fn fields(instance: &ProblemInstance) -> Vec<CostField> {
        instance.agents.iter().map(|a| bfs_cost_to_goal(&instance.map, a.goal).unwrap()).collect()
    }

    fn observe(instance: &ProblemInstance, state: &State, ego: usize, history: &ActionHistory) -> ObservationBundle {
        let costfields = fields(instance);
        let ctx = ObservationContext { instance, costfields: &costfields, history };
        build_observation(state, ego, &ctx, None).unwrap()
    }

    fn two_agents() -> ProblemInstance {
        let agents = vec![
            AgentSpec { start: Cell::new(4, 2), goal: Cell::new(0, 8) },
            AgentSpec { start: Cell::new(4, 4), goal: Cell::new(8, 0) },
        ];
        ProblemInstance::new(GridMap::empty(9, 9), agents, 0).unwrap()
    }

    #[test]
    fn center_is_zero_delta() {
        let inst = two_agents();
        let obs = observe(&inst, &inst.initial_state(), 0, &ActionHistory::new(2));
        assert_eq!(Vocab::decode(obs.tokens[MAP_CENTER]), Some(Token::CostDelta(0)));
        assert_eq!(obs.tokens.len(), 256);
        assert!(obs.tokens[TAIL_PAD_BASE..].iter().all(|&t| t == Vocab::PAD));
    }

    #[test]
    fn off_map_cells_are_obstacles() {
        let inst = two_agents();
        let obs = observe(&inst, &inst.initial_state(), 0, &ActionHistory::new(2));
        // ego at column 2: offsets -5..-3 fall off the map.
        assert_eq!(obs.tokens[0], Vocab::OBSTACLE);
        let right = MAP_CENTER + 1;
        assert_eq!(Vocab::decode(obs.tokens[right]), Some(Token::CostDelta(-1)));
    }

    #[test]
    fn neighbour_two_cells_right() {
        let inst = two_agents();
        let obs = observe(&inst, &inst.initial_state(), 0, &ActionHistory::new(2));
        let s = segment_start(1);
        assert_eq!(Vocab::as_coord(obs.tokens[s + SEG_ROW]), Some(0));
        assert_eq!(Vocab::as_coord(obs.tokens[s + SEG_COL]), Some(2));
        assert_eq!(obs.slot_agents[1], Some(1));
        assert_eq!(obs.sre_meta.slots[1], Some(SlotGeometry { pos: (0, 2), goal: (4, -2) }));
    }

    #[test]
    fn lone_agent_has_padded_slots() {
        let inst = ProblemInstance::new(
            GridMap::empty(20, 20),
            vec![
                AgentSpec { start: Cell::new(0, 0), goal: Cell::new(3, 3) },
                AgentSpec { start: Cell::new(19, 19), goal: Cell::new(10, 10) },
            ],
            0,
        )
        .unwrap();
        let mut history = ActionHistory::new(2);
        for _ in 0..HISTORY_LEN {
            history.push_joint(&[Action::Wait, Action::Wait]);
        }
        let obs = observe(&inst, &inst.initial_state(), 0, &history);
        let segment_tokens = &obs.tokens[AGENT_BASE..TAIL_PAD_BASE];
        assert_eq!(segment_tokens.len(), 130);
        assert_eq!(segment_tokens.iter().filter(|&&t| t == Vocab::PAD).count(), 120);
        assert!(obs.slot_agents[1..].iter().all(Option::is_none));
    }

    #[test]
    fn history_is_left_padded() {
        let mut history = ActionHistory::new(1);
        history.push_joint(&[Action::Up]);
        history.push_joint(&[Action::Left]);
        let t = history.tokens(0);
        assert_eq!(&t[..3], &[Vocab::PAD; 3]);
        assert_eq!(t[3], Vocab::action(Action::Up));
        assert_eq!(t[4], Vocab::action(Action::Left));
        for _ in 0..6 {
            history.push_joint(&[Action::Wait]);
        }
        assert_eq!(history.tokens(0), [Vocab::action(Action::Wait); 5]);
    }

    #[test]
    fn override_applies_to_neighbours_only() {
        let inst = two_agents();
        let costfields = fields(&inst);
        let history = ActionHistory::new(2);
        let ctx = ObservationContext { instance: &inst, costfields: &costfields, history: &history };
        let overrides = HashMap::from([(0, Action::Down), (1, Action::Up)]);
        let obs = build_observation(&inst.initial_state(), 0, &ctx, Some(&overrides)).unwrap();
        assert_eq!(obs.tokens[segment_start(1) + SEG_EST], Vocab::action(Action::Up));
        assert_eq!(obs.tokens[segment_start(0) + SEG_EST], Vocab::action(Action::Up));
        assert!(matches!(
            build_observation(&inst.initial_state(), 5, &ctx, None),
            Err(CoreError::EgoNotInState(5))
        ));
    }

    #[test]
    fn meta_recoverable_from_tokens() {
        let map = GridMap::empty(24, 24);
        for seed in 0..20 {
            let inst = generate_instance(&map, 30, seed).unwrap();
            let history = ActionHistory::new(30);
            for ego in 0..30 {
                let obs = observe(&inst, &inst.initial_state(), ego, &history);
                assert_eq!(SreMeta::from_tokens(&obs.tokens), obs.sre_meta);
            }
        }
    }

    #[test]
    fn slots_sorted_by_distance_then_id() {
        let agents = vec![
            AgentSpec { start: Cell::new(5, 5), goal: Cell::new(0, 0) },
            AgentSpec { start: Cell::new(5, 8), goal: Cell::new(0, 1) },
            AgentSpec { start: Cell::new(6, 6), goal: Cell::new(0, 2) },
            AgentSpec { start: Cell::new(4, 4), goal: Cell::new(0, 3) },
        ];
        let inst = ProblemInstance::new(GridMap::empty(12, 12), agents, 0).unwrap();
        let obs = observe(&inst, &inst.initial_state(), 0, &ActionHistory::new(4));
        assert_eq!(&obs.slot_agents[..4], &[Some(0), Some(2), Some(3), Some(1)]);
    }
}
