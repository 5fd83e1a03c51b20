#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rescue_spatap::world::{Params, Scenario, Vertex, VertexId, WorldGraph};

pub fn v(i: u32) -> VertexId {
    VertexId(i)
}

/// Connected graph on `n` vertices: a random tree plus `extra` random edges.
/// At least one vertex is a building; positions fall in a 200 m square.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra: usize, building_share: f64) -> WorldGraph {
    let forced = rng.gen_range(0..n);
    let vertices = (0..n)
        .map(|i| {
            let (x, y) = (rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0));
            if i == forced || rng.gen_bool(building_share) {
                Vertex::building(i as u32, rng.gen_range(10.0..1000.0), x, y)
            } else {
                Vertex::road(i as u32, x, y)
            }
        })
        .collect();
    let mut edges = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((VertexId::from_index(order[i]), VertexId::from_index(order[j])));
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push((VertexId::from_index(a), VertexId::from_index(b)));
        }
    }
    WorldGraph::new(vertices, &edges).unwrap()
}

/// Random scenario on [`random_graph`]; ignitions are capped by the number of
/// buildings.
pub fn random_scenario<R: Rng>(
    rng: &mut R,
    n: usize,
    extra: usize,
    agents: usize,
    ignitions: usize,
    params: Params,
) -> Scenario {
    let graph = random_graph(rng, n, extra, 0.5);
    let fires: BTreeSet<VertexId> = graph
        .buildings()
        .choose_multiple(rng, ignitions.min(graph.buildings().len()))
        .copied()
        .collect();
    let starts = (0..agents).map(|_| VertexId::from_index(rng.gen_range(0..n))).collect();
    Scenario::new(graph, fires, starts, params).unwrap()
}

pub const INF: u32 = u32::MAX;

/// All-pairs hop distances by Floyd–Warshall over the adjacency relation.
pub fn floyd_warshall(graph: &WorldGraph) -> Vec<Vec<u32>> {
    let n = graph.len();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (a, b) in graph.edges() {
        d[a.index()][b.index()] = 1;
        d[b.index()][a.index()] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != INF && d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Hop distances from `from` using only vertices in `allowed`.
pub fn bfs_within(graph: &WorldGraph, allowed: &BTreeSet<VertexId>, from: VertexId) -> Vec<u32> {
    let mut dist = vec![INF; graph.len()];
    dist[from.index()] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &w in graph.neighbors(u) {
            if allowed.contains(&w) && dist[w.index()] == INF {
                dist[w.index()] = dist[u.index()] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}
