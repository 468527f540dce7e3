use serde::Deserialize;

use mapf_policy::{Mode, ModeConfig};

use crate::error::{BenchError, Result};

pub const STEP_LIMITS: [usize; 2] = [128, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Empty,
    Random,
    Mazes,
    Warehouse,
    /// `.map` files from `map_dir`, sorted by file name.
    Files,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Empty => "empty",
            Family::Random => "random",
            Family::Mazes => "mazes",
            Family::Warehouse => "warehouse",
            Family::Files => "files",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct ModeSpec {
    pub mode: ModeName,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_horizon() -> usize {
    mapf_policy::DEFAULT_HORIZON
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Fast,
    Slow,
    Thinking,
}

impl ModeSpec {
    pub fn fast() -> Self {
        Self { mode: ModeName::Fast, horizon: 0 }
    }

    pub fn slow(horizon: usize) -> Self {
        Self { mode: ModeName::Slow, horizon }
    }

    pub fn thinking(horizon: usize) -> Self {
        Self { mode: ModeName::Thinking, horizon }
    }

    pub fn mode_config(&self) -> ModeConfig {
        match self.mode {
            ModeName::Fast => ModeConfig::fast(),
            ModeName::Slow => ModeConfig::slow(self.horizon),
            ModeName::Thinking => ModeConfig::thinking(self.horizon),
        }
    }

    /// Horizon as reported; Fast has none and reports 0.
    pub fn reported_horizon(&self) -> usize {
        if self.mode == ModeName::Fast {
            0
        } else {
            self.horizon
        }
    }

    pub fn label(&self) -> String {
        match self.mode {
            ModeName::Fast => "fast".into(),
            ModeName::Slow => format!("slow H={}", self.horizon),
            ModeName::Thinking => format!("thinking H={}", self.horizon),
        }
    }
}

impl ModeName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::Fast => "fast",
            ModeName::Slow => "slow",
            ModeName::Thinking => "thinking",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fast" => Some(ModeName::Fast),
            "slow" => Some(ModeName::Slow),
            "thinking" => Some(ModeName::Thinking),
            _ => None,
        }
    }

    pub fn policy_mode(self) -> Mode {
        match self {
            ModeName::Fast => Mode::Fast,
            ModeName::Slow => Mode::Slow,
            ModeName::Thinking => Mode::Thinking,
        }
    }
}

/// One evaluation suite: which maps, how many agents, which modes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub family: Family,
    #[serde(default = "default_side")]
    pub width: usize,
    #[serde(default = "default_side")]
    pub height: usize,
    /// Obstacle density for the random family.
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default)]
    pub map_dir: Option<String>,
    pub maps: usize,
    pub agent_counts: Vec<usize>,
    /// Instances per (map, agent count).
    #[serde(default = "one")]
    pub seeds: usize,
    pub step_limit: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub modes: Vec<ModeSpec>,
}

fn default_side() -> usize {
    17
}

fn default_density() -> f64 {
    0.2
}

fn one() -> usize {
    1
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Desk-scale default: 16 maps of 17×17, 4/8/16 agents.
    pub fn desk(family: Family) -> Self {
        Self {
            family,
            width: 17,
            height: 17,
            density: default_density(),
            map_dir: None,
            maps: 16,
            agent_counts: vec![4, 8, 16],
            seeds: 1,
            step_limit: 128,
            master_seed: 0,
            modes: vec![ModeSpec::fast(), ModeSpec::slow(2)],
        }
    }

    /// Small maze suite used for quick trend checks.
    pub fn mazes_smoke() -> Self {
        Self { width: 9, height: 9, maps: 8, agent_counts: vec![2, 4], ..Self::desk(Family::Mazes) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.agent_counts.is_empty() || self.agent_counts[0] == 0 || self.agent_counts.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("agent counts must be positive and ascending: {:?}", self.agent_counts));
        }
        if !STEP_LIMITS.contains(&self.step_limit) {
            return bad(format!("step limit {} not in {STEP_LIMITS:?}", self.step_limit));
        }
        if self.maps == 0 || self.seeds == 0 {
            return bad("maps and seeds must be positive".into());
        }
        if self.modes.is_empty() {
            return bad("no modes to run".into());
        }
        for m in &self.modes {
            m.mode_config().validate().map_err(|e| BenchError::Config(e.to_string()))?;
        }
        if self.family == Family::Files && self.map_dir.is_none() {
            return bad("family 'files' needs map_dir".into());
        }
        Ok(())
    }

    pub fn episode_count(&self) -> usize {
        self.maps * self.agent_counts.len() * self.seeds * self.modes.len()
    }
}
