//! Distance-based task clustering.
//!
//! Burning buildings are grouped into the connected components of the
//! "within `d` meters" relation (single linkage). Each cluster, together with
//! the non-burning vertices adjacent to it, is collapsed into one building
//! whose area is the sum of the member areas. A non-burning vertex adjacent to
//! two or more clusters is kept as a normal vertex so the clusters stay
//! distinct. A cluster made of one vertex that is already a collapsed cluster
//! is left untouched, which makes re-clustering a clustered graph a no-op.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::world::{Point, Vertex, VertexId, VertexKind, WorldGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct TaskCluster {
    pub id: usize,
    /// Burning vertices of the input graph.
    pub members: BTreeSet<VertexId>,
    /// The collapsed vertex in the clustered graph.
    pub super_vertex: Vertex,
    /// Neighbors of the collapsed vertex in the clustered graph.
    pub attached_neighbors: BTreeSet<VertexId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteredGraph {
    pub graph: WorldGraph,
    pub clusters: Vec<TaskCluster>,
    /// Input vertex → clustered vertex (absorbed vertices map to their cluster).
    mapping: Vec<VertexId>,
    /// Positions of the original buildings behind every clustered vertex.
    points: Vec<Vec<Point>>,
    collapsed: Vec<bool>,
    cluster_of: Vec<Option<usize>>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn cluster_tasks(graph: &WorldGraph, burning: &BTreeSet<VertexId>, d: f64) -> Result<ClusteredGraph> {
    let points: Vec<Vec<Point>> = graph.vertices().iter().map(|v| vec![v.position]).collect();
    cluster_impl(graph, &points, &vec![false; graph.len()], burning, d)
}

impl ClusteredGraph {
    /// Clustered vertex that represents input vertex `v`.
    pub fn map_vertex(&self, v: VertexId) -> VertexId {
        self.mapping[v.index()]
    }

    /// The collapsed cluster vertices (the remaining tasks).
    pub fn burning(&self) -> BTreeSet<VertexId> {
        self.clusters.iter().map(|c| c.super_vertex.id).collect()
    }

    pub fn cluster_at(&self, v: VertexId) -> Option<&TaskCluster> {
        self.cluster_of.get(v.index()).copied().flatten().map(|i| &self.clusters[i])
    }

    /// Smallest distance between the original buildings behind two vertices.
    pub fn distance(&self, a: VertexId, b: VertexId) -> f64 {
        min_distance(&self.points[a.index()], &self.points[b.index()])
    }

    /// Clusters this graph again; `burning` uses this graph's ids.
    pub fn recluster(&self, burning: &BTreeSet<VertexId>, d: f64) -> Result<ClusteredGraph> {
        cluster_impl(&self.graph, &self.points, &self.collapsed, burning, d)
    }
}

fn min_distance(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .flat_map(|p| b.iter().map(move |q| p.distance(q)))
        .fold(f64::INFINITY, f64::min)
}

fn cluster_impl(
    graph: &WorldGraph,
    points: &[Vec<Point>],
    collapsed: &[bool],
    burning: &BTreeSet<VertexId>,
    d: f64,
) -> Result<ClusteredGraph> {
    if burning.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    for &b in burning {
        if !graph.contains(b) {
            return Err(Error::UnknownVertex(b));
        }
        if !graph.is_building(b) {
            return Err(Error::Validation(format!("burning vertex {b} is not a building")));
        }
    }

    let tasks: Vec<VertexId> = burning.iter().copied().collect();
    let mut sets = DisjointSet::new(tasks.len());
    for i in 0..tasks.len() {
        for j in i + 1..tasks.len() {
            if min_distance(&points[tasks[i].index()], &points[tasks[j].index()]) <= d {
                sets.union(i, j);
            }
        }
    }
    // components keyed by their smallest member, so cluster ids follow member order
    let mut components: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for (i, &t) in tasks.iter().enumerate() {
        components.entry(sets.find(i)).or_default().push(t);
    }
    let groups: Vec<Vec<VertexId>> = components.into_values().collect();

    let n = graph.len();
    let mut group_of: Vec<Option<usize>> = vec![None; n];
    for (c, members) in groups.iter().enumerate() {
        for &m in members {
            group_of[m.index()] = Some(c);
        }
    }
    let absorbs: Vec<bool> = groups
        .iter()
        .map(|members| !(members.len() == 1 && collapsed[members[0].index()]))
        .collect();

    // Non-burning vertices touching exactly one absorbing cluster are merged into it.
    let mut owner: Vec<Option<usize>> = group_of.clone();
    for v in 0..n {
        if group_of[v].is_some() {
            continue;
        }
        let touching: BTreeSet<usize> = graph
            .neighbors(VertexId::from_index(v))
            .iter()
            .filter_map(|w| group_of[w.index()])
            .filter(|&c| absorbs[c])
            .collect();
        if touching.len() == 1 {
            owner[v] = touching.into_iter().next();
        }
    }

    // Surviving vertices keep their relative order; new cluster vertices follow.
    let mut mapping = vec![VertexId(u32::MAX); n];
    let mut vertices = Vec::new();
    let mut new_points = Vec::new();
    let mut new_collapsed = Vec::new();
    let mut cluster_of = Vec::new();
    for v in 0..n {
        let kept = match owner[v] {
            None => true,
            Some(c) => !absorbs[c],
        };
        if kept {
            let id = VertexId::from_index(vertices.len());
            mapping[v] = id;
            let mut vertex = graph.vertices()[v].clone();
            vertex.id = id;
            vertices.push(vertex);
            new_points.push(points[v].clone());
            new_collapsed.push(collapsed[v]);
            cluster_of.push(group_of[v]);
        }
    }
    let mut super_ids = vec![VertexId(u32::MAX); groups.len()];
    for (c, members) in groups.iter().enumerate() {
        if !absorbs[c] {
            super_ids[c] = mapping[members[0].index()];
            continue;
        }
        let id = VertexId::from_index(vertices.len());
        super_ids[c] = id;
        let area: f64 = members.iter().map(|&m| graph.area(m)).sum();
        let member_points: Vec<Point> = members.iter().flat_map(|m| points[m.index()].iter().copied()).collect();
        let centroid = Point::new(
            member_points.iter().map(|p| p.x).sum::<f64>() / member_points.len() as f64,
            member_points.iter().map(|p| p.y).sum::<f64>() / member_points.len() as f64,
        );
        vertices.push(Vertex {
            id,
            kind: VertexKind::Building,
            area,
            position: centroid,
        });
        new_points.push(member_points);
        new_collapsed.push(true);
        cluster_of.push(Some(c));
    }
    for v in 0..n {
        if let Some(c) = owner[v] {
            if absorbs[c] {
                mapping[v] = super_ids[c];
            }
        }
    }

    let mut edges = Vec::new();
    for (a, b) in graph.edges() {
        let (x, y) = (mapping[a.index()], mapping[b.index()]);
        if x != y {
            edges.push((x, y));
        }
    }
    let clustered = WorldGraph::new(vertices, &edges)?;

    let clusters = groups
        .into_iter()
        .enumerate()
        .map(|(c, members)| {
            let id = super_ids[c];
            TaskCluster {
                id: c,
                members: members.into_iter().collect(),
                super_vertex: clustered.vertex(id).clone(),
                attached_neighbors: clustered.neighbors(id).iter().copied().collect(),
            }
        })
        .collect();

    Ok(ClusteredGraph {
        graph: clustered,
        clusters,
        mapping,
        points: new_points,
        collapsed: new_collapsed,
        cluster_of,
    })
}
