use std::collections::BTreeMap;
use std::path::Path;

use mapf_core::movingai::load_map_named;
use mapf_core::{generate_instance, GridMap};
use mapf_mapgen::{gen_maze, gen_random, gen_warehouse, WarehouseParams};
use mapf_neural::io::write_params;
use mapf_neural::ModelParams;
use mapf_policy::run_episode;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{Family, ModeName, ModeSpec, SuiteConfig};
use crate::error::{BenchError, Result};

/// One executed episode; also one CSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeRecord {
    pub family: String,
    pub map: usize,
    pub agents: usize,
    /// Instance seed the episode was generated from.
    pub seed: u64,
    pub mode: ModeName,
    /// 0 for Fast.
    pub horizon: usize,
    pub success: bool,
    pub steps: usize,
}

/// Aggregate over all episodes sharing (family, agents, mode, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub family: String,
    pub agents: usize,
    pub mode: ModeName,
    pub horizon: usize,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean steps over successful episodes only; `None` if none succeeded.
    pub mean_steps: Option<f64>,
}

impl PointSummary {
    pub fn label(&self) -> String {
        match self.mode {
            ModeName::Fast => "fast".into(),
            m => format!("{} H={}", m.as_str(), self.horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub master_seed: u64,
    pub commit: String,
    /// SHA-256 of the serialized params.
    pub params_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub episodes: Vec<EpisodeRecord>,
    pub points: Vec<PointSummary>,
    pub provenance: Provenance,
}

impl SuiteResult {
    pub fn point(&self, family: &str, agents: usize, mode: ModeName, horizon: usize) -> Option<&PointSummary> {
        self.points
            .iter()
            .find(|p| p.family == family && p.agents == agents && p.mode == mode && p.horizon == horizon)
    }

    /// Success rate over every episode of one (mode, horizon).
    pub fn mode_success_rate(&self, mode: ModeName, horizon: usize) -> Option<f64> {
        let eps: Vec<_> = self.episodes.iter().filter(|e| e.mode == mode && e.horizon == horizon).collect();
        (!eps.is_empty()).then(|| eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64)
    }
}

/// Groups records by point. Order of `records` does not matter.
pub fn aggregate(records: &[EpisodeRecord]) -> Vec<PointSummary> {
    let mut groups: BTreeMap<(String, usize, ModeName, usize), (usize, usize, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.family.clone(), r.agents, r.mode, r.horizon)).or_default();
        g.0 += 1;
        if r.success {
            g.1 += 1;
            g.2 += r.steps;
        }
    }
    groups
        .into_iter()
        .map(|((family, agents, mode, horizon), (episodes, successes, steps))| PointSummary {
            family,
            agents,
            mode,
            horizon,
            episodes,
            successes,
            success_rate: successes as f64 / episodes as f64,
            mean_steps: (successes > 0).then(|| steps as f64 / successes as f64),
        })
        .collect()
}

/// Seed derivation: the first 8 bytes (little-endian) of
/// `SHA-256(master_seed | family | tag | fields...)`, every integer as u64 LE.
fn derive_seed(master: u64, family: Family, tag: &str, fields: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(family.name().as_bytes());
    h.update([0]);
    h.update(tag.as_bytes());
    for f in fields {
        h.update(f.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub fn map_seed(cfg: &SuiteConfig, map: usize) -> u64 {
    derive_seed(cfg.master_seed, cfg.family, "map", &[map as u64])
}

/// Instance seed for (map, agent count, seed index). Modes share it so that
/// every mode is evaluated on the same instances.
pub fn instance_seed(cfg: &SuiteConfig, map: usize, agents: usize, seed_idx: usize) -> u64 {
    derive_seed(cfg.master_seed, cfg.family, "instance", &[map as u64, agents as u64, seed_idx as u64])
}

pub fn params_hash(params: &ModelParams) -> String {
    let mut bytes = Vec::new();
    write_params(&mut bytes, params).expect("writing to memory cannot fail");
    hex::encode(Sha256::digest(&bytes))
}

/// Commit of the source tree this crate was built from, or "unknown".
pub fn git_commit() -> String {
    std::process::Command::new("git")
        .args(["-C", env!("CARGO_MANIFEST_DIR"), "rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub fn build_maps(cfg: &SuiteConfig) -> Result<Vec<GridMap>> {
    if cfg.family == Family::Files {
        let dir = cfg.map_dir.as_deref().ok_or_else(|| BenchError::Config("family 'files' needs map_dir".into()))?;
        return load_map_dir(Path::new(dir), cfg.maps);
    }
    (0..cfg.maps)
        .map(|i| {
            let seed = map_seed(cfg, i);
            Ok(match cfg.family {
                Family::Empty => GridMap::empty(cfg.width, cfg.height),
                Family::Random => gen_random(cfg.width, cfg.height, cfg.density, seed)?,
                Family::Mazes => gen_maze(cfg.width, cfg.height, seed)?,
                Family::Warehouse => {
                    let w = WarehouseParams::default();
                    gen_warehouse(w.rows, w.cols, w.shelf_len, w.aisle_w)?
                }
                Family::Files => unreachable!(),
            })
        })
        .collect()
}

fn load_map_dir(dir: &Path, count: usize) -> Result<Vec<GridMap>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "map"))
        .collect();
    paths.sort();
    if paths.len() < count {
        return Err(BenchError::Config(format!("{} has {} .map files, need {count}", dir.display(), paths.len())));
    }
    paths[..count]
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy();
            Ok(load_map_named(&std::fs::read_to_string(p)?, &name)?)
        })
        .collect()
}

pub fn check_params(params: &ModelParams) -> Result<()> {
    params.config.validate().map_err(|e| BenchError::ParamsIncompatible(e.to_string()))?;
    let expected = mapf_neural::params::Layout::new(&params.config).total;
    if params.weights.data.len() != expected {
        return Err(BenchError::ParamsIncompatible(format!(
            "{} weights, the configured architecture has {expected}",
            params.weights.data.len()
        )));
    }
    Ok(())
}

struct Job {
    map: usize,
    agents: usize,
    seed_idx: usize,
    mode: ModeSpec,
}

/// Runs every (map, agent count, seed, mode) episode on a pool of
/// `parallelism` threads. The result does not depend on `parallelism`.
pub fn run_suite(cfg: &SuiteConfig, params: &ModelParams, parallelism: usize) -> Result<SuiteResult> {
    cfg.validate()?;
    check_params(params)?;
    let maps = build_maps(cfg)?;
    let mut jobs = Vec::with_capacity(cfg.episode_count());
    for map in 0..cfg.maps {
        for &agents in &cfg.agent_counts {
            for seed_idx in 0..cfg.seeds {
                for &mode in &cfg.modes {
                    jobs.push(Job { map, agents, seed_idx, mode });
                }
            }
        }
    }
    let family = cfg.family.name().to_string();
    let run = |job: &Job| -> Result<EpisodeRecord> {
        let seed = instance_seed(cfg, job.map, job.agents, job.seed_idx);
        let instance = generate_instance(&maps[job.map], job.agents, seed)?;
        let out = run_episode(&instance, params, &job.mode.mode_config(), cfg.step_limit)?;
        Ok(EpisodeRecord {
            family: family.clone(),
            map: job.map,
            agents: job.agents,
            seed,
            mode: job.mode.mode,
            horizon: job.mode.reported_horizon(),
            success: out.success,
            steps: out.steps_used,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let episodes = pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    Ok(SuiteResult {
        points: aggregate(&episodes),
        episodes,
        provenance: Provenance { master_seed: cfg.master_seed, commit: git_commit(), params_hash: params_hash(params) },
    })
}

/// Sweeps the horizon for Slow and Thinking. The modes of `cfg` pick which
/// of the two are swept; with neither present, both are.
pub fn ablation_horizon(cfg: &SuiteConfig, params: &ModelParams, horizons: &[usize], parallelism: usize) -> Result<SuiteResult> {
    let mut modes: Vec<ModeName> = cfg.modes.iter().map(|m| m.mode).filter(|&m| m != ModeName::Fast).collect();
    modes.dedup();
    if modes.is_empty() {
        modes = vec![ModeName::Slow, ModeName::Thinking];
    }
    let mut sweep = cfg.clone();
    sweep.modes = modes.iter().flat_map(|&mode| horizons.iter().map(move |&horizon| ModeSpec { mode, horizon })).collect();
    run_suite(&sweep, params, parallelism)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SreDelta {
    pub family: String,
    pub mode: ModeName,
    pub horizon: usize,
    pub sr_with: f64,
    pub sr_without: f64,
    /// `sr_with - sr_without`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SreAblation {
    pub with_sre: SuiteResult,
    pub without_sre: SuiteResult,
    pub deltas: Vec<SreDelta>,
}

/// Paired suite for two models that differ only in the SRE flag.
pub fn ablation_sre(
    cfg: &SuiteConfig,
    params_with: &ModelParams,
    params_without: &ModelParams,
    parallelism: usize,
) -> Result<SreAblation> {
    let (a, b) = (&params_with.config, &params_without.config);
    let mut b_flag = b.clone();
    b_flag.use_sre = a.use_sre;
    if *a != b_flag {
        return Err(BenchError::ParamsIncompatible("the two models differ in more than the SRE flag".into()));
    }
    let with_sre = run_suite(cfg, params_with, parallelism)?;
    let without_sre = run_suite(cfg, params_without, parallelism)?;
    let family = cfg.family.name().to_string();
    let deltas = cfg
        .modes
        .iter()
        .filter_map(|m| {
            let h = m.reported_horizon();
            let sr_with = with_sre.mode_success_rate(m.mode, h)?;
            let sr_without = without_sre.mode_success_rate(m.mode, h)?;
            Some(SreDelta { family: family.clone(), mode: m.mode, horizon: h, sr_with, sr_without, delta: sr_with - sr_without })
        })
        .collect();
    Ok(SreAblation { with_sre, without_sre, deltas })
}
