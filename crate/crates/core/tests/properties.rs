use mapf_core::costfield::bfs_cost_to_goal;
use mapf_core::grid::{step, validate_plan, Action, GridMap, State, Tile};
use mapf_core::instance::generate_instance;
use mapf_core::solvers::{prioritized_plan, run_expert_episode};
use mapf_core::tokenizer::{
    build_observation, build_training_samples, ActionHistory, ObservationContext, Vocab, MAP_CENTER, SEQ_LEN,
    TAIL_PAD_BASE,
};
use mapf_core::Cell;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> GridMap {
    let cells = (0..w * h)
        .map(|_| if rng.random_bool(density) { Tile::Obstacle } else { Tile::Free })
        .collect();
    GridMap::new(w, h, cells, "random").unwrap()
}

fn random_joint(rng: &mut ChaCha8Rng, n: usize) -> Vec<Action> {
    (0..n).map(|_| Action::ALL[rng.random_range(0..5)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_trajectories_never_collide(seed in any::<u64>(), w in 5usize..10, h in 5usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, w, h, 0.2);
        let free = map.free_count();
        prop_assume!(free >= 2);
        let n = rng.random_range(1..=free.min(8));
        let Ok(instance) = generate_instance(&map, n, seed) else { return Ok(()) };
        let mut state = instance.initial_state();
        let mut states = vec![state.clone()];
        for _ in 0..30 {
            let joint = random_joint(&mut rng, n);
            let (next, resolved) = step(&state, &joint, &map).unwrap();
            next.validate(&map).unwrap();
            // Fixed point: replaying the resolved action resolves to itself.
            let (again, re_resolved) = step(&state, &resolved, &map).unwrap();
            prop_assert_eq!(&re_resolved, &resolved);
            prop_assert_eq!(&again, &next);
            states.push(next.clone());
            state = next;
        }
        let paths: Vec<Vec<Cell>> = (0..n).map(|i| states.iter().map(|s| s.positions[i]).collect()).collect();
        prop_assert!(validate_plan(&instance, &paths).unwrap().ok);
    }

    #[test]
    fn cost_field_is_one_lipschitz(seed in any::<u64>(), w in 3usize..14, h in 3usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, w, h, 0.3);
        let free = map.free_cells();
        prop_assume!(!free.is_empty());
        let goal = free[rng.random_range(0..free.len())];
        let field = bfs_cost_to_goal(&map, goal).unwrap();
        for u in &free {
            for a in Action::MOVES {
                if let (Some(du), Some(dv)) = (field.dist(*u), field.dist(u.offset(a))) {
                    prop_assert!(du.abs_diff(dv) <= 1);
                }
            }
        }
    }
}

#[test]
fn plans_validate_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut solved = 0;
    for seed in 0..200u64 {
        let map = random_map(&mut rng, 10, 10, 0.2);
        let n = rng.random_range(1..=6);
        let Ok(instance) = generate_instance(&map, n, seed) else { continue };
        if let Ok(plan) = prioritized_plan(&instance, seed, 20) {
            solved += 1;
            assert!(validate_plan(&instance, &plan.paths).unwrap().ok);
            for (path, agent) in plan.paths.iter().zip(&instance.agents) {
                assert_eq!(*path.last().unwrap(), agent.goal);
            }
            assert_eq!(plan, prioritized_plan(&instance, seed, 20).unwrap());
        }
    }
    assert!(solved > 150, "solved {solved}");
}

#[test]
fn expert_observations_are_well_formed() {
    let map = GridMap::empty(12, 12);
    for seed in 0..20 {
        let instance = generate_instance(&map, 6, seed).unwrap();
        let traj = run_expert_episode(&instance, seed).unwrap();
        for step_obs in &traj.observations {
            for obs in step_obs {
                assert_eq!(obs.tokens.len(), SEQ_LEN);
                assert_eq!(obs.tokens[MAP_CENTER], Vocab::cost_delta(0));
                assert!(obs.tokens[TAIL_PAD_BASE..].iter().all(|&t| t == Vocab::PAD));
            }
        }
        for sample in build_training_samples(&traj) {
            let w = sample.weights;
            assert!(w.real_action.is_disjoint(&w.est_action));
            assert!(w.real_action.union(&w.est_action).is_disjoint(&w.masked));
        }
    }
}

#[test]
fn slot_order_is_deterministic() {
    let map = GridMap::empty(10, 10);
    let instance = generate_instance(&map, 12, 5).unwrap();
    let fields: Vec<_> = instance.agents.iter().map(|a| bfs_cost_to_goal(&map, a.goal).unwrap()).collect();
    let history = ActionHistory::new(12);
    let ctx = ObservationContext { instance: &instance, costfields: &fields, history: &history };
    let state: State = instance.initial_state();
    for ego in 0..12 {
        let a = build_observation(&state, ego, &ctx, None).unwrap();
        let b = build_observation(&state, ego, &ctx, None).unwrap();
        assert_eq!(a, b);
    }
}
