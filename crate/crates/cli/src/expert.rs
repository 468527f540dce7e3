//! Expert dataset generation over a set of maps.

use mapf_core::dataset::Record;
use mapf_core::solvers::run_expert_episode;
use mapf_core::tokenizer::build_training_samples;
use mapf_core::{generate_instance, GridMap, ProblemInstance};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSpec {
    pub instances: usize,
    pub min_agents: usize,
    pub max_agents: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertStats {
    pub instances: usize,
    pub solved: usize,
    pub samples: usize,
}

impl ExpertStats {
    pub fn solve_rate(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.solved as f64 / self.instances as f64
        }
    }
}

/// Instance `i` uses map `i mod maps`, `min + i mod (max - min + 1)` agents
/// and seed `seed + i`.
pub fn instance(maps: &[GridMap], spec: &ExpertSpec, i: usize) -> mapf_core::Result<ProblemInstance> {
    let span = spec.max_agents - spec.min_agents + 1;
    let agents = spec.min_agents + i % span;
    generate_instance(&maps[i % maps.len()], agents, spec.seed.wrapping_add(i as u64))
}

/// Solves every instance with the expert and collects training records in
/// instance order. Instances the expert cannot solve, or that cannot be
/// generated, count as unsolved and contribute no samples.
pub fn generate(maps: &[GridMap], spec: &ExpertSpec) -> (Vec<Record>, ExpertStats) {
    assert!(!maps.is_empty() && spec.min_agents >= 1 && spec.min_agents <= spec.max_agents);
    let per_instance: Vec<Option<Vec<Record>>> = (0..spec.instances)
        .into_par_iter()
        .map(|i| {
            let inst = instance(maps, spec, i).ok()?;
            let traj = run_expert_episode(&inst, inst.seed).ok()?;
            Some(build_training_samples(&traj).iter().map(Record::from).collect())
        })
        .collect();
    let solved = per_instance.iter().filter(|r| r.is_some()).count();
    let records: Vec<Record> = per_instance.into_iter().flatten().flatten().collect();
    let stats = ExpertStats { instances: spec.instances, solved, samples: records.len() };
    (records, stats)
}
