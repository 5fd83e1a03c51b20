//! Model approximations: task clustering, shortest-path pruning, the dynamic
//! planning horizon, and the deterministic single-agent static-task model
//! they feed.

mod cluster;
mod prune;
mod subgraph;

use std::collections::{BTreeMap, BTreeSet};

pub use cluster::{cluster_tasks, ClusteredGraph, TaskCluster};
pub use prune::{dynamic_horizon, horizon_within, prune_within, shortest_path_prune};
pub use subgraph::Subgraph;

use crate::error::{Error, Result};
use crate::world::{Scenario, VertexId, WorldGraph};

/// Single-agent model over a frozen snapshot of the burning buildings.
/// Moves are deterministic, so a successor vertex identifies an action.
#[derive(Clone, Debug)]
pub struct StaticTaskModel<'g> {
    pub graph: Subgraph<'g>,
    pub agent: VertexId,
    pub tasks: BTreeSet<VertexId>,
    /// Area of each task as a fraction of all building area in the world.
    pub task_reward: BTreeMap<VertexId, f64>,
    pub horizon: u32,
    pub gamma: f64,
}

impl<'g> StaticTaskModel<'g> {
    /// Model over the whole of `graph` with a fixed horizon.
    pub fn full(
        graph: &'g WorldGraph,
        agent: VertexId,
        burning: &BTreeSet<VertexId>,
        scenario: &Scenario,
        horizon: u32,
    ) -> Result<Self> {
        Self::assemble(Subgraph::full(graph), agent, burning, scenario, horizon)
    }

    fn assemble(
        graph: Subgraph<'g>,
        agent: VertexId,
        burning: &BTreeSet<VertexId>,
        scenario: &Scenario,
        horizon: u32,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Validation("model horizon must be at least 1".into()));
        }
        if !graph.contains(agent) {
            return Err(Error::UnknownVertex(agent));
        }
        let total = scenario.graph.total_building_area();
        let tasks: BTreeSet<VertexId> = burning.iter().copied().filter(|&t| graph.contains(t)).collect();
        let task_reward = tasks.iter().map(|&t| (t, graph.graph().area(t) / total)).collect();
        Ok(StaticTaskModel {
            graph,
            agent,
            tasks,
            task_reward,
            horizon,
            gamma: scenario.params.gamma,
        })
    }

    pub fn reward(&self, v: VertexId) -> f64 {
        self.task_reward.get(&v).copied().unwrap_or(0.0)
    }

    pub fn max_reward(&self) -> f64 {
        self.task_reward.values().copied().fold(0.0, f64::max)
    }

    /// Number of stage-state pairs a backward sweep over this model visits.
    pub fn stage_states(&self) -> u64 {
        self.graph.len() as u64 * u64::from(self.horizon)
    }
}

/// Dynamic horizon, then shortest-path pruning of the visited region.
/// `graph` may be a clustered graph; rewards are normalized by the building
/// area of the scenario's own graph.
pub fn build_static_task_model<'g>(
    graph: &'g WorldGraph,
    agent: VertexId,
    burning: &BTreeSet<VertexId>,
    scenario: &Scenario,
    current_step: u32,
) -> Result<StaticTaskModel<'g>> {
    let remaining = scenario.params.rcrs_max_time.saturating_sub(current_step);
    let (horizon, visited) = horizon_within(&Subgraph::full(graph), agent, burning, scenario.params.k, Some(remaining))?;
    let found: BTreeSet<VertexId> = burning.iter().copied().filter(|&t| visited.contains(t)).collect();
    let pruned = prune_within(&visited, agent, &found)?;
    StaticTaskModel::assemble(pruned, agent, &found, scenario, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Params, Vertex};

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn line(n: u32) -> Scenario {
        let vertices = (0..n).map(|i| Vertex::building(i, 10.0, f64::from(i) * 100.0, 0.0)).collect();
        let edges: Vec<_> = (1..n).map(|i| (v(i - 1), v(i))).collect();
        let g = WorldGraph::new(vertices, &edges).unwrap();
        Scenario::new(g, BTreeSet::new(), vec![v(0)], Params { k: 1, ..Params::default() }).unwrap()
    }

    #[test]
    fn adjacent_task_model() {
        let s = line(4);
        let m = build_static_task_model(&s.graph, v(0), &[v(1)].into(), &s, 0).unwrap();
        assert_eq!(m.horizon, 1);
        assert_eq!(m.graph.vertices(), &[v(0), v(1)]);
        assert!((m.reward(v(1)) - 0.25).abs() < 1e-12);
        assert_eq!(m.reward(v(0)), 0.0);
    }

    #[test]
    fn composition_matches_manual_steps() {
        let s = line(6);
        let burning: BTreeSet<_> = [v(3), v(5)].into();
        let m = build_static_task_model(&s.graph, v(1), &burning, &s, 0).unwrap();
        let (h, visited) = dynamic_horizon(&s.graph, v(1), &burning, 1).unwrap();
        let found: BTreeSet<_> = burning.iter().copied().filter(|&t| visited.contains(t)).collect();
        let pruned = prune_within(&visited, v(1), &found).unwrap();
        assert_eq!(m.horizon, h);
        assert_eq!(m.graph, pruned);
        assert_eq!(m.tasks, found);
    }

    #[test]
    fn horizon_is_clamped_to_remaining_time() {
        let s = line(6);
        let s = s.with_params(Params { rcrs_max_time: 10, ..s.params }).unwrap();
        let m = build_static_task_model(&s.graph, v(0), &[v(5)].into(), &s, 8).unwrap();
        assert_eq!(m.horizon, 2);
        assert_eq!(m.graph.len(), 6);
        let m = build_static_task_model(&s.graph, v(0), &[v(5)].into(), &s, 30).unwrap();
        assert_eq!(m.horizon, 1);
    }
}
