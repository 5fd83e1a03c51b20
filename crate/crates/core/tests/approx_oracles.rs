mod common;

use std::collections::{BTreeSet, VecDeque};

use common::{floyd_warshall, random_graph, v};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rescue_spatap::approx::{build_static_task_model, cluster_tasks, dynamic_horizon, shortest_path_prune, StaticTaskModel};
use rescue_spatap::presence::single_agent_vi;
use rescue_spatap::world::{euclidean_distance, Params, Scenario, Vertex, VertexId, WorldGraph};

fn pick_tasks<R: Rng>(rng: &mut R, graph: &WorldGraph, count: usize) -> BTreeSet<VertexId> {
    let all: Vec<VertexId> = (0..graph.len() as u32).map(v).collect();
    all.choose_multiple(rng, count.min(all.len())).copied().collect()
}

/// Components of the "within d" relation among burning buildings, by BFS.
fn proximity_components(graph: &WorldGraph, burning: &BTreeSet<VertexId>, d: f64) -> BTreeSet<BTreeSet<VertexId>> {
    let mut left: BTreeSet<VertexId> = burning.clone();
    let mut out = BTreeSet::new();
    while let Some(&start) = left.iter().next() {
        left.remove(&start);
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let near: Vec<VertexId> = left
                .iter()
                .copied()
                .filter(|&w| euclidean_distance(graph.vertex(u), graph.vertex(w)) <= d)
                .collect();
            for w in near {
                left.remove(&w);
                comp.insert(w);
                queue.push_back(w);
            }
        }
        out.insert(comp);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn prune_matches_brute_force(seed in any::<u64>(), n in 2usize..30, extra in 0usize..25, count in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, n, extra, 0.5);
        let tasks = pick_tasks(&mut rng, &graph, count);
        let agent = v(rng.gen_range(0..n as u32));
        let fw = floyd_warshall(&graph);
        let sub = shortest_path_prune(&graph, agent, &tasks).unwrap();

        let mut ends: Vec<(usize, usize)> = tasks.iter().map(|t| (agent.index(), t.index())).collect();
        let tl: Vec<usize> = tasks.iter().map(|t| t.index()).collect();
        for i in 0..tl.len() {
            for j in i + 1..tl.len() {
                ends.push((tl[i], tl[j]));
            }
        }
        let kept: BTreeSet<VertexId> = sub.vertices().iter().copied().collect();
        for x in 0..n {
            let on_some = ends.iter().any(|&(a, b)| fw[a][x] + fw[x][b] == fw[a][b]);
            prop_assert_eq!(kept.contains(&v(x as u32)), on_some, "vertex {}", x);
        }
        // soundness: endpoint distances survive, and so does the distance
        // from a witnessing endpoint to each retained vertex
        for &(a, b) in &ends {
            let inside = common::bfs_within(&graph, &kept, v(a as u32));
            prop_assert_eq!(inside[b], fw[a][b]);
            for &x in &kept {
                if fw[a][x.index()] + fw[x.index()][b] == fw[a][b] {
                    prop_assert_eq!(inside[x.index()], fw[a][x.index()]);
                }
            }
        }
    }

    #[test]
    fn dynamic_horizon_is_distance_to_kth_task(seed in any::<u64>(), n in 2usize..30, extra in 0usize..25, count in 1usize..7, k in 1u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, n, extra, 0.5);
        let burning = pick_tasks(&mut rng, &graph, count);
        let agent = v(rng.gen_range(0..n as u32));
        let fw = floyd_warshall(&graph);
        let mut dists: Vec<u32> = burning.iter().map(|b| fw[agent.index()][b.index()]).collect();
        dists.sort();
        let stop = if dists.len() >= k as usize {
            dists[k as usize - 1]
        } else {
            (0..n).map(|x| fw[agent.index()][x]).max().unwrap()
        };
        let (h, visited) = dynamic_horizon(&graph, agent, &burning, k).unwrap();
        prop_assert_eq!(h, stop.max(1));
        for x in 0..n {
            prop_assert_eq!(visited.contains(v(x as u32)), fw[agent.index()][x] <= stop);
        }
    }

    #[test]
    fn clusters_match_proximity_components(seed in any::<u64>(), n in 2usize..30, extra in 0usize..20, count in 1usize..10, d in 10.0..120.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, n, extra, 0.6);
        let burning: BTreeSet<VertexId> = graph.buildings().choose_multiple(&mut rng, count).copied().collect();
        let clustered = cluster_tasks(&graph, &burning, d).unwrap();
        let got: BTreeSet<BTreeSet<VertexId>> = clustered.clusters.iter().map(|c| c.members.clone()).collect();
        prop_assert_eq!(&got, &proximity_components(&graph, &burning, d));

        let before: f64 = burning.iter().map(|&b| graph.area(b)).sum();
        let after: f64 = clustered.clusters.iter().map(|c| c.super_vertex.area).sum();
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
        for c in &clustered.clusters {
            let sum: f64 = c.members.iter().map(|&m| graph.area(m)).sum();
            prop_assert_eq!(c.super_vertex.area, sum);
            prop_assert_eq!(clustered.graph.area(c.super_vertex.id), sum);
            for &m in &c.members {
                prop_assert_eq!(clustered.map_vertex(m), c.super_vertex.id);
            }
        }
        // re-clustering the clustered graph changes nothing
        let again = clustered.recluster(&clustered.burning(), d).unwrap();
        prop_assert_eq!(&again.graph, &clustered.graph);
        prop_assert_eq!(again.burning(), clustered.burning());
    }

    #[test]
    fn static_model_keeps_found_tasks(seed in any::<u64>(), n in 2usize..30, extra in 0usize..20, count in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, n, extra, 0.6);
        let burning: BTreeSet<VertexId> = graph.buildings().choose_multiple(&mut rng, count).copied().collect();
        let agent = v(rng.gen_range(0..n as u32));
        let scenario = Scenario::new(graph.clone(), burning.clone(), vec![agent], Params::default()).unwrap();
        let model = build_static_task_model(&graph, agent, &burning, &scenario, 0).unwrap();
        let (h, visited) = dynamic_horizon(&graph, agent, &burning, 3).unwrap();
        prop_assert_eq!(model.horizon, h);
        let found: BTreeSet<VertexId> = burning.iter().copied().filter(|&b| visited.contains(b)).collect();
        prop_assert_eq!(&model.tasks, &found);
        prop_assert!(model.tasks.len() >= burning.len().min(3));
        prop_assert!(model.graph.len() <= graph.len());
        if visited.len() < graph.len() {
            prop_assert!(model.graph.len() < graph.len());
        }
    }
}

/// Agent at 0, fire at 4; the route 0-2-3-4 reaches it, 0-1 is a dead end.
fn two_route_world() -> Scenario {
    let vertices = vec![
        Vertex::road(0, 0.0, 0.0),
        Vertex::road(1, -100.0, 0.0),
        Vertex::road(2, 100.0, 0.0),
        Vertex::road(3, 200.0, 0.0),
        Vertex::building(4, 50.0, 300.0, 0.0),
    ];
    let graph = WorldGraph::new(vertices, &[(v(0), v(1)), (v(0), v(2)), (v(2), v(3)), (v(3), v(4))]).unwrap();
    Scenario::new(graph, BTreeSet::from([v(4)]), vec![v(0)], Params::default()).unwrap()
}

#[test]
fn two_routes_separate_on_third_sweep() {
    let s = two_route_world();
    let burning = s.ignitions.clone();
    for sweeps in 1..=5 {
        let model = StaticTaskModel::full(&s.graph, v(0), &burning, &s, sweeps).unwrap();
        let values = single_agent_vi(&model);
        let q1 = values.q(0, v(0), v(1)).unwrap();
        let q2 = values.q(0, v(0), v(2)).unwrap();
        if sweeps < 3 {
            assert_eq!(q1, q2, "sweep {sweeps}");
        } else {
            assert!(q2 > q1, "sweep {sweeps}");
        }
    }
    let (h, _) = dynamic_horizon(&s.graph, v(0), &burning, 1).unwrap();
    assert_eq!(h, 3);
    let model = build_static_task_model(&s.graph, v(0), &burning, &s, 0).unwrap();
    assert_eq!(model.horizon, 3);
    assert!(!model.graph.contains(v(1)));
}

#[test]
fn dynamic_horizon_clamps_to_remaining_time() {
    let s = two_route_world();
    let s = s
        .with_params(Params {
            rcrs_max_time: 10,
            ..s.params
        })
        .unwrap();
    let model = build_static_task_model(&s.graph, v(0), &s.ignitions, &s, 8).unwrap();
    assert_eq!(model.horizon, 2);
    let model = build_static_task_model(&s.graph, v(0), &s.ignitions, &s, 0).unwrap();
    assert_eq!(model.horizon, 3);
}
