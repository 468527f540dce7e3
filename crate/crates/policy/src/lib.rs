//! Decentralized episode execution under the three work modes.
//!
//! * **Fast**: act on the fast head's argmax for the current observation.
//! * **Slow**: as Fast, but neighbours' `est` tokens come from the ego's own
//!   slow-head prediction of the previous step. Every `H`-th step is a resync
//!   step that uses greedy estimates instead.
//! * **Thinking**: read the real observation once per `H` steps; in between,
//!   feed the previous predicted observation back as input while still
//!   executing the chosen actions in the environment.
//!
//! Each agent keeps its own predictions; agents never see each other's.

use std::collections::{BTreeMap, HashMap};

use mapf_core::costfield::{bfs_cost_to_goal, CostField};
use mapf_core::grid::{is_success, step, Action, Cell, State};
use mapf_core::tokenizer::{
    build_observation, extract_predicted_neighbor_actions, ActionHistory, ObservationBundle, ObservationContext,
    SreMeta, Tokens, SEQ_LEN,
};
use mapf_core::{CoreError, ProblemInstance};
use mapf_neural::{forward, forward_action, ModelParams, NeuralError};
use ndarray::ArrayView1;
use thiserror::Error;

pub const DEFAULT_HORIZON: usize = 2;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("step limit must be positive")]
    ZeroStepLimit,
    #[error("{mode:?} mode needs a horizon of at least 2, got {horizon}")]
    InvalidHorizon { mode: Mode, horizon: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

pub type Result<T> = std::result::Result<T, PolicyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Fast,
    Slow,
    Thinking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeConfig {
    pub mode: Mode,
    /// Cycle length for Slow and Thinking; ignored by Fast.
    pub horizon: usize,
    /// Slow mode: use greedy estimates on every `horizon`-th step.
    pub greedy_resync: bool,
}

impl ModeConfig {
    pub fn fast() -> Self {
        Self { mode: Mode::Fast, horizon: DEFAULT_HORIZON, greedy_resync: true }
    }

    pub fn slow(horizon: usize) -> Self {
        Self { mode: Mode::Slow, horizon, greedy_resync: true }
    }

    pub fn thinking(horizon: usize) -> Self {
        Self { mode: Mode::Thinking, horizon, greedy_resync: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != Mode::Fast && self.horizon < 2 {
            return Err(PolicyError::InvalidHorizon { mode: self.mode, horizon: self.horizon });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps_used: usize,
    /// `paths[i][t]` for `t = 0..=steps_used`.
    pub paths: Vec<Vec<Cell>>,
    /// Last step at which some agent arrived at its goal for good.
    pub makespan: usize,
    /// Sum over agents of the arrival step after which it never leaves its goal.
    pub sum_of_costs: usize,
    /// Number of agent-steps where the executed action differed from the chosen one.
    pub collisions_resolved: usize,
}

/// Previous-step neighbour predictions of one ego agent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionCache {
    pub neighbor_actions: BTreeMap<usize, Action>,
    /// Steps taken in the current cycle.
    pub phase: usize,
}

impl PredictionCache {
    pub fn clear(&mut self) {
        self.neighbor_actions.clear();
    }

    fn overrides(&self) -> HashMap<usize, Action> {
        self.neighbor_actions.iter().map(|(&k, &v)| (k, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlowDecision {
    pub action: Action,
    pub predicted: Tokens,
    pub neighbor_actions: BTreeMap<usize, Action>,
}

/// Index of the largest logit; ties go to the lowest action code.
pub fn argmax_action(logits: ArrayView1<f64>) -> Action {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().take(Action::ALL.len()) {
        if v > logits[best] {
            best = i;
        }
    }
    Action::ALL[best]
}

/// Per-position argmax of the slow head.
pub fn predicted_tokens(slow_logits: &ndarray::Array2<f64>) -> Tokens {
    let mut out = [0u8; SEQ_LEN];
    for (k, row) in slow_logits.rows().into_iter().enumerate() {
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        out[k] = best as u8;
    }
    out
}

pub fn fast_decide(params: &ModelParams, obs: &ObservationBundle) -> Result<Action> {
    let logits = forward_action(params, &obs.tokens, &obs.sre_meta)?;
    Ok(argmax_action(logits.view()))
}

/// Decides and replaces the cache with this step's neighbour predictions.
/// `obs` must already carry the intended `est` tokens.
pub fn slow_decide(params: &ModelParams, obs: &ObservationBundle, cache: &mut PredictionCache) -> Result<SlowDecision> {
    let out = forward(params, &obs.tokens, &obs.sre_meta)?;
    let predicted = predicted_tokens(&out.slow_logits);
    let neighbor_actions = extract_predicted_neighbor_actions(&predicted, &obs.slot_agents);
    cache.neighbor_actions = neighbor_actions.clone();
    Ok(SlowDecision { action: argmax_action(out.action_logits.view()), predicted, neighbor_actions })
}

/// Per-agent state of a Thinking-mode cycle.
#[derive(Debug, Clone, Default)]
struct Imagination {
    tokens: Option<Tokens>,
}

struct Runner<'a> {
    instance: &'a ProblemInstance,
    params: &'a ModelParams,
    cfg: ModeConfig,
    costfields: Vec<CostField>,
    history: ActionHistory,
    caches: Vec<PredictionCache>,
    imagined: Vec<Imagination>,
}

impl Runner<'_> {
    fn observe(&self, state: &State, ego: usize, overrides: Option<&HashMap<usize, Action>>) -> Result<ObservationBundle> {
        let ctx = ObservationContext { instance: self.instance, costfields: &self.costfields, history: &self.history };
        Ok(build_observation(state, ego, &ctx, overrides)?)
    }

    fn decide(&mut self, state: &State, ego: usize, t: usize) -> Result<Action> {
        let h = self.cfg.horizon;
        match self.cfg.mode {
            Mode::Fast => fast_decide(self.params, &self.observe(state, ego, None)?),
            Mode::Slow => {
                let resync = self.cfg.greedy_resync && t % h == h - 1;
                let overrides = (!resync).then(|| self.caches[ego].overrides());
                let obs = self.observe(state, ego, overrides.as_ref())?;
                let cache = &mut self.caches[ego];
                cache.phase = t % h;
                Ok(slow_decide(self.params, &obs, cache)?.action)
            }
            Mode::Thinking => {
                let phase = t % h;
                let (tokens, meta) = match (phase, self.imagined[ego].tokens) {
                    (p, Some(tokens)) if p > 0 => (tokens, SreMeta::from_tokens(&tokens)),
                    _ => {
                        let obs = self.observe(state, ego, None)?;
                        (obs.tokens, obs.sre_meta)
                    }
                };
                let out = forward(self.params, &tokens, &meta)?;
                self.imagined[ego].tokens = Some(predicted_tokens(&out.slow_logits));
                Ok(argmax_action(out.action_logits.view()))
            }
        }
    }
}

/// Runs one episode until every agent is on its goal or `step_limit` steps
/// have been executed.
pub fn run_episode(instance: &ProblemInstance, params: &ModelParams, cfg: &ModeConfig, step_limit: usize) -> Result<EpisodeResult> {
    if step_limit == 0 {
        return Err(PolicyError::ZeroStepLimit);
    }
    cfg.validate()?;
    let n = instance.n_agents();
    let costfields = instance
        .agents
        .iter()
        .map(|a| bfs_cost_to_goal(&instance.map, a.goal))
        .collect::<mapf_core::Result<Vec<_>>>()?;
    let mut runner = Runner {
        instance,
        params,
        cfg: *cfg,
        costfields,
        history: ActionHistory::new(n),
        caches: vec![PredictionCache::default(); n],
        imagined: vec![Imagination::default(); n],
    };

    let mut state = instance.initial_state();
    let mut states = vec![state.clone()];
    let mut collisions = 0;
    let mut t = 0;
    while t < step_limit && !is_success(&state, instance) {
        let joint = (0..n).map(|i| runner.decide(&state, i, t)).collect::<Result<Vec<_>>>()?;
        let (next, resolved) = step(&state, &joint, &instance.map)?;
        collisions += joint.iter().zip(&resolved).filter(|(a, b)| a != b).count();
        runner.history.push_joint(&resolved);
        states.push(next.clone());
        state = next;
        t += 1;
    }

    let success = is_success(&state, instance);
    let paths: Vec<Vec<Cell>> = (0..n).map(|i| states.iter().map(|s| s.positions[i]).collect()).collect();
    let arrivals: Vec<usize> = paths
        .iter()
        .zip(&instance.agents)
        .map(|(path, a)| match path.iter().rposition(|&c| c != a.goal) {
            Some(last_off) => last_off + 1,
            None => 0,
        })
        .collect();
    Ok(EpisodeResult {
        success,
        steps_used: t,
        paths,
        makespan: arrivals.iter().copied().max().unwrap_or(0),
        sum_of_costs: arrivals.iter().sum(),
        collisions_resolved: collisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_action(array![0.0, 0.0, 0.0, 0.0, 1.0].view()), Action::Wait);
        assert_eq!(argmax_action(array![2.0, 2.0, 0.0, 0.0, 1.0].view()), Action::Up);
        assert_eq!(argmax_action(array![0.0, 0.0, 3.0, 3.0, 3.0].view()), Action::Down);
    }

    #[test]
    fn horizon_validation() {
        assert!(ModeConfig::thinking(1).validate().is_err());
        assert!(ModeConfig::slow(1).validate().is_err());
        assert!(ModeConfig::thinking(2).validate().is_ok());
        assert!(ModeConfig { horizon: 0, ..ModeConfig::fast() }.validate().is_ok());
    }
}
