//! Shortest-path pruning and the reachability-based planning horizon.

use std::collections::BTreeSet;

use super::Subgraph;
use crate::error::{Error, Result};
use crate::world::{VertexId, WorldGraph};

/// Keeps the vertices that lie on some shortest path between the agent and a
/// task, or between two tasks.
pub fn shortest_path_prune<'g>(
    graph: &'g WorldGraph,
    agent: VertexId,
    tasks: &BTreeSet<VertexId>,
) -> Result<Subgraph<'g>> {
    prune_within(&Subgraph::full(graph), agent, tasks)
}

/// [`shortest_path_prune`] with distances measured inside `sub`.
pub fn prune_within<'g>(sub: &Subgraph<'g>, agent: VertexId, tasks: &BTreeSet<VertexId>) -> Result<Subgraph<'g>> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if !sub.contains(agent) {
        return Err(Error::UnknownVertex(agent));
    }
    let from_agent = sub.bfs(agent);
    let task_list: Vec<VertexId> = tasks.iter().copied().collect();
    if let Some(&t) = task_list.iter().find(|t| from_agent.get(t.index()).copied().flatten().is_none()) {
        return Err(if sub.graph().contains(t) {
            Error::UnreachableTask(t)
        } else {
            Error::UnknownVertex(t)
        });
    }
    let from_task: Vec<Vec<Option<u32>>> = task_list.iter().map(|&t| sub.bfs(t)).collect();

    let on_path = |da: &[Option<u32>], db: &[Option<u32>], b: VertexId, v: VertexId| match (
        da[v.index()],
        db[v.index()],
        da[b.index()],
    ) {
        (Some(x), Some(y), Some(total)) => x + y == total,
        _ => false,
    };

    let retained = sub.vertices().iter().copied().filter(|&v| {
        task_list.iter().enumerate().any(|(i, &t)| {
            on_path(&from_agent, &from_task[i], t, v)
                || task_list[i + 1..]
                    .iter()
                    .enumerate()
                    .any(|(j, &u)| on_path(&from_task[i], &from_task[i + 1 + j], u, v))
        })
    });
    Ok(Subgraph::from_vertices(sub.graph(), retained.collect::<Vec<_>>()))
}

/// Breadth-first search from the agent that stops after the level on which
/// the `k`-th burning vertex is found. Returns the depth of that level
/// (at least 1) and the visited vertices. When fewer than `k` burning vertices
/// are reachable the whole component is visited and the depth is the agent's
/// eccentricity.
pub fn dynamic_horizon<'g>(
    graph: &'g WorldGraph,
    agent: VertexId,
    burning: &BTreeSet<VertexId>,
    k: u32,
) -> Result<(u32, Subgraph<'g>)> {
    horizon_within(&Subgraph::full(graph), agent, burning, k, None)
}

/// [`dynamic_horizon`] inside `sub`, optionally clamped to `remaining` steps.
pub fn horizon_within<'g>(
    sub: &Subgraph<'g>,
    agent: VertexId,
    burning: &BTreeSet<VertexId>,
    k: u32,
    remaining: Option<u32>,
) -> Result<(u32, Subgraph<'g>)> {
    if burning.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if !sub.contains(agent) {
        return Err(Error::UnknownVertex(agent));
    }
    let graph = sub.graph();
    let mut seen = vec![false; graph.len()];
    seen[agent.index()] = true;
    let mut visited = vec![agent];
    let mut level = vec![agent];
    let mut depth = 0u32;
    let mut found = usize::from(burning.contains(&agent));
    while found < k as usize {
        let mut next = Vec::new();
        for &u in &level {
            for w in sub.neighbors(u) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        found += next.iter().filter(|v| burning.contains(v)).count();
        visited.extend_from_slice(&next);
        level = next;
    }
    let mut horizon = depth.max(1);
    if let Some(remaining) = remaining {
        horizon = horizon.min(remaining.max(1));
    }
    Ok((horizon, Subgraph::from_vertices(graph, visited)))
}
