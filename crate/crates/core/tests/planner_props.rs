mod common;

use std::collections::BTreeSet;

use common::{random_scenario, v};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rescue_spatap::planner::{
    coordinate_targets, make_planner, spatap_ext_plan, PlannerConfig, PlannerKind, PriorityList,
};
use rescue_spatap::simulator::{available_moves, step};
use rescue_spatap::world::{Params, Scenario, Vertex, VertexId, WorldGraph, WorldState};

const DETERMINISTIC: [PlannerKind; 4] = [
    PlannerKind::Greedy,
    PlannerKind::SingleAgent,
    PlannerKind::Spatap,
    PlannerKind::SpatapExt,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lone_agent_closes_in_on_a_single_fire(seed in any::<u64>(), n in 2usize..20, extra in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Params { p: 0.0, horizon: 40, ..Params::default() };
        let scenario = random_scenario(&mut rng, n, extra, 1, 1, params);
        let fire = *scenario.ignitions.iter().next().unwrap();
        let dist = scenario.graph.bfs(fire);
        for kind in DETERMINISTIC {
            let mut planner = make_planner(kind, &scenario, &PlannerConfig::default(), None, 0).unwrap();
            let mut state = scenario.initial_state();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut steps = 0;
            while !state.burning.is_empty() {
                let before = dist[state.agent_positions[0].index()].unwrap();
                let plan = planner.plan(&state).unwrap();
                state = step(&scenario, &state, &plan.action, &mut rng).unwrap();
                let after = dist[state.agent_positions[0].index()].unwrap();
                // starting on the fire means staying to put it out
                let want = before.saturating_sub(1);
                prop_assert_eq!(after, want, "{} moved from distance {} to {}", kind, before, after);
                steps += 1;
            }
            prop_assert_eq!(steps, dist[scenario.agent_starts[0].index()].unwrap().max(1));
        }
    }

    #[test]
    fn planners_emit_valid_actions(seed in any::<u64>(), n in 2usize..20, extra in 0usize..10, agents in 1usize..4, fires in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Params { p: 0.2, horizon: 8, ..Params::default() };
        let scenario = random_scenario(&mut rng, n, extra, agents, fires, params);
        for kind in [PlannerKind::Random, PlannerKind::Greedy, PlannerKind::SingleAgent, PlannerKind::Spatap, PlannerKind::SpatapExt] {
            let mut planner = make_planner(kind, &scenario, &PlannerConfig::default(), None, seed).unwrap();
            let mut state = scenario.initial_state();
            let mut env = ChaCha8Rng::seed_from_u64(seed ^ 1);
            for _ in 0..8 {
                let plan = planner.plan(&state).unwrap();
                prop_assert_eq!(plan.action.moves.len(), agents);
                for (i, (&from, &to)) in state.agent_positions.iter().zip(&plan.action.moves).enumerate() {
                    prop_assert!(available_moves(&scenario.graph, from).contains(&to), "{} agent {}", kind, i);
                }
                if kind != PlannerKind::Random && !state.burning.is_empty() {
                    let distinct: BTreeSet<_> = plan.targets.iter().collect();
                    prop_assert_eq!(plan.targets.len(), agents);
                    prop_assert!(distinct.len() <= agents.min(state.burning.len()), "{}", kind);
                }
                state = step(&scenario, &state, &plan.action, &mut env).unwrap();
            }
        }
    }

    #[test]
    fn spatap_ext_is_deterministic(seed in any::<u64>(), n in 2usize..25, agents in 1usize..4, fires in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = random_scenario(&mut rng, n, n / 2, agents, fires, Params::default());
        let state = scenario.initial_state();
        prop_assert_eq!(spatap_ext_plan(&scenario, &state).unwrap(), spatap_ext_plan(&scenario, &state).unwrap());
    }

    #[test]
    fn coordination_uses_as_many_targets_as_possible(seed in any::<u64>(), agents in 1usize..6, tasks in 1u32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lists: Vec<PriorityList> = (0..agents)
            .map(|_| {
                let mut t: Vec<VertexId> = (0..tasks).map(v).collect();
                for i in (1..t.len()).rev() {
                    t.swap(i, rng.gen_range(0..=i));
                }
                PriorityList { targets: t, hops_to_top: rng.gen_range(0..5) }
            })
            .collect();
        let out = coordinate_targets(&lists).unwrap();
        let distinct: BTreeSet<_> = out.iter().collect();
        prop_assert_eq!(distinct.len(), agents.min(tasks as usize));
    }
}

#[test]
fn colocated_agents_split_between_equal_fires() {
    // fires at 1 and 2, both one hop from the shared start 0
    let vertices = vec![
        Vertex::road(0, 0.0, 0.0),
        Vertex::building(1, 100.0, -200.0, 0.0),
        Vertex::building(2, 100.0, 200.0, 0.0),
    ];
    let graph = WorldGraph::new(vertices, &[(v(0), v(1)), (v(0), v(2))]).unwrap();
    let scenario = Scenario::new(graph, BTreeSet::from([v(1), v(2)]), vec![v(0), v(0)], Params::default()).unwrap();
    for kind in DETERMINISTIC {
        let mut planner = make_planner(kind, &scenario, &PlannerConfig::default(), None, 0).unwrap();
        let plan = planner.plan(&scenario.initial_state()).unwrap();
        let moves: BTreeSet<_> = plan.action.moves.iter().copied().collect();
        assert_eq!(moves, BTreeSet::from([v(1), v(2)]), "{kind}");
    }
}

#[test]
fn no_fire_means_stay() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scenario = random_scenario(&mut rng, 8, 3, 2, 0, Params::default());
    let state = WorldState {
        burning: BTreeSet::new(),
        ..scenario.initial_state()
    };
    for kind in DETERMINISTIC {
        let mut planner = make_planner(kind, &scenario, &PlannerConfig::default(), None, 0).unwrap();
        assert_eq!(planner.plan(&state).unwrap().action.moves, state.agent_positions, "{kind}");
    }
}

#[test]
fn planner_names_parse() {
    for kind in PlannerKind::ALL {
        assert_eq!(kind.name().parse::<PlannerKind>().unwrap(), kind);
    }
    assert_eq!("spatap-ext".parse::<PlannerKind>().unwrap(), PlannerKind::SpatapExt);
    assert!("dcop".parse::<PlannerKind>().is_err());
}

#[test]
fn model_dump_writes_scenario_files() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let scenario = random_scenario(&mut rng, 12, 4, 2, 3, Params::default());
    let dir = tempfile::tempdir().unwrap();
    let config = PlannerConfig {
        dump_dir: Some(dir.path().to_path_buf()),
        ..PlannerConfig::default()
    };
    let mut planner = make_planner(PlannerKind::SpatapExt, &scenario, &config, None, 0).unwrap();
    planner.plan(&scenario.initial_state()).unwrap();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 4);
    for f in files {
        let text = std::fs::read_to_string(f.unwrap().path()).unwrap();
        Scenario::from_json(&text).unwrap();
    }
}
