use std::collections::{BTreeSet, VecDeque};

use crate::world::{graph_records, ScenarioFile, Params, VertexId, WorldGraph};

/// A vertex subset of a [`WorldGraph`] that keeps the parent's vertex ids.
/// Edges are those of the parent restricted to retained vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph<'g> {
    graph: &'g WorldGraph,
    retained: Vec<bool>,
    members: Vec<VertexId>,
}

impl<'g> Subgraph<'g> {
    pub fn full(graph: &'g WorldGraph) -> Self {
        Subgraph {
            graph,
            retained: vec![true; graph.len()],
            members: (0..graph.len()).map(VertexId::from_index).collect(),
        }
    }

    pub fn from_vertices(graph: &'g WorldGraph, vertices: impl IntoIterator<Item = VertexId>) -> Self {
        let mut retained = vec![false; graph.len()];
        for v in vertices {
            retained[v.index()] = true;
        }
        let members = (0..graph.len())
            .filter(|&i| retained[i])
            .map(VertexId::from_index)
            .collect();
        Subgraph {
            graph,
            retained,
            members,
        }
    }

    pub fn graph(&self) -> &'g WorldGraph {
        self.graph
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.retained.get(v.index()).copied().unwrap_or(false)
    }

    /// Retained vertices, ascending.
    pub fn vertices(&self) -> &[VertexId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.graph.neighbors(v).iter().copied().filter(|w| self.retained[w.index()])
    }

    pub fn edge_count(&self) -> usize {
        self.members.iter().map(|&v| self.neighbors(v).count()).sum::<usize>() / 2
    }

    /// Hop distances inside the subgraph, indexed by parent vertex id.
    pub fn bfs(&self, from: VertexId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.graph.len()];
        if !self.contains(from) {
            return dist;
        }
        dist[from.index()] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            for w in self.neighbors(u) {
                if dist[w.index()].is_none() {
                    dist[w.index()] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Re-indexes the subgraph as a scenario document for inspection.
    /// Ids in the document are positions in [`Self::vertices`].
    pub fn to_scenario_file(&self, tasks: &BTreeSet<VertexId>, agents: &[VertexId], params: Params) -> ScenarioFile {
        let local = |v: VertexId| self.members.binary_search(&v).ok().map(|i| i as u32);
        let records = graph_records(self.graph);
        let vertices = self
            .members
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut r = records[v.index()].clone();
                r.id = i as u32;
                r
            })
            .collect();
        let mut edges = Vec::new();
        for &a in &self.members {
            for b in self.neighbors(a).filter(|&b| a < b) {
                edges.push([local(a).unwrap_or(0), local(b).unwrap_or(0)]);
            }
        }
        ScenarioFile {
            vertices,
            edges,
            ignitions: tasks.iter().filter_map(|&t| local(t)).collect(),
            agents: agents.iter().filter_map(|&a| local(a)).collect(),
            params,
        }
    }
}
