//! Graph-world data model: vertices, the undirected world graph, joint
//! world states and scenarios, plus the scenario file format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index in `[0, |V|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        VertexId(index as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Building,
    Road,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    /// Floor area in square meters; zero for roads.
    pub area: f64,
    pub position: Point,
}

impl Vertex {
    pub fn building(id: u32, area: f64, x: f64, y: f64) -> Self {
        Vertex {
            id: VertexId(id),
            kind: VertexKind::Building,
            area,
            position: Point::new(x, y),
        }
    }

    pub fn road(id: u32, x: f64, y: f64) -> Self {
        Vertex {
            id: VertexId(id),
            kind: VertexKind::Road,
            area: 0.0,
            position: Point::new(x, y),
        }
    }

    pub fn is_building(&self) -> bool {
        self.kind == VertexKind::Building
    }
}

/// Planar distance between vertex positions.
pub fn euclidean_distance(a: &Vertex, b: &Vertex) -> f64 {
    a.position.distance(&b.position)
}

/// Immutable undirected graph world. Neighbor lists are sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldGraph {
    vertices: Vec<Vertex>,
    adjacency: Vec<Vec<VertexId>>,
    buildings: Vec<VertexId>,
    total_building_area: f64,
}

impl WorldGraph {
    /// Builds and validates a graph. Vertex ids must be exactly `0..n` (in any
    /// order); duplicate edges are merged.
    pub fn new(mut vertices: Vec<Vertex>, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        vertices.sort_by_key(|v| v.id);
        for (i, v) in vertices.iter().enumerate() {
            if v.id.index() != i {
                return Err(Error::Validation(format!(
                    "vertex ids must be dense in [0, {}); found id {} at position {}",
                    vertices.len(),
                    v.id,
                    i
                )));
            }
            match v.kind {
                VertexKind::Building if !(v.area > 0.0 && v.area.is_finite()) => {
                    return Err(Error::Validation(format!(
                        "building {} must have positive area, got {}",
                        v.id, v.area
                    )))
                }
                VertexKind::Road if v.area != 0.0 => {
                    return Err(Error::Validation(format!(
                        "road {} must have zero area, got {}",
                        v.id, v.area
                    )))
                }
                _ => {}
            }
            if !v.position.x.is_finite() || !v.position.y.is_finite() {
                return Err(Error::Validation(format!("vertex {} has a non-finite position", v.id)));
            }
        }
        let n = vertices.len();
        if n == 0 {
            return Err(Error::Validation("graph has no vertices".into()));
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            for end in [a, b] {
                if end.index() >= n {
                    return Err(Error::Validation(format!("edge endpoint {end} is not a vertex")));
                }
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop on vertex {a}")));
            }
            sets[a.index()].insert(b);
            sets[b.index()].insert(a);
        }
        let adjacency: Vec<Vec<VertexId>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let buildings: Vec<VertexId> = vertices.iter().filter(|v| v.is_building()).map(|v| v.id).collect();
        let total_building_area: f64 = buildings.iter().map(|b| vertices[b.index()].area).sum();
        if !(total_building_area > 0.0) {
            return Err(Error::Validation("total building area must be positive".into()));
        }
        let graph = WorldGraph {
            vertices,
            adjacency,
            buildings,
            total_building_area,
        };
        let reached = graph.bfs(VertexId(0)).iter().filter(|d| d.is_some()).count();
        if reached != n {
            return Err(Error::Validation(format!(
                "graph is disconnected: {reached} of {n} vertices reachable from vertex 0"
            )));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id.index()]
    }

    pub fn contains(&self, id: VertexId) -> bool {
        id.index() < self.vertices.len()
    }

    pub fn neighbors(&self, id: VertexId) -> &[VertexId] {
        &self.adjacency[id.index()]
    }

    pub fn is_adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    /// Building vertices in ascending id order.
    pub fn buildings(&self) -> &[VertexId] {
        &self.buildings
    }

    pub fn is_building(&self, id: VertexId) -> bool {
        self.vertices[id.index()].is_building()
    }

    pub fn area(&self, id: VertexId) -> f64 {
        self.vertices[id.index()].area
    }

    pub fn total_building_area(&self) -> f64 {
        self.total_building_area
    }

    /// Undirected edges `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            let a = VertexId::from_index(i);
            out.extend(nbrs.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Unweighted single-source distances; `None` for unreachable vertices.
    pub fn bfs(&self, from: VertexId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[from.index()] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            for &w in self.neighbors(u) {
                if dist[w.index()].is_none() {
                    dist[w.index()] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Hop distances from `from` to each vertex of `to`.
pub fn hop_distance(
    graph: &WorldGraph,
    from: VertexId,
    to: &BTreeSet<VertexId>,
) -> Result<BTreeMap<VertexId, u32>> {
    if !graph.contains(from) {
        return Err(Error::UnknownVertex(from));
    }
    if let Some(&bad) = to.iter().find(|v| !graph.contains(**v)) {
        return Err(Error::UnknownVertex(bad));
    }
    let dist = graph.bfs(from);
    to.iter()
        .map(|&v| dist[v.index()].map(|d| (v, d)).ok_or(Error::UnreachableTask(v)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FireState {
    NoFire,
    Burning,
}

/// Fire levels reported by the RoboCup Rescue fire simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RcrsFireLevel {
    NoFire,
    Heating,
    Burning,
    Burnt,
    Extinguished,
}

pub fn map_rcrs_fire_level(level: RcrsFireLevel) -> FireState {
    match level {
        RcrsFireLevel::NoFire | RcrsFireLevel::Burnt | RcrsFireLevel::Extinguished => FireState::NoFire,
        RcrsFireLevel::Heating | RcrsFireLevel::Burning => FireState::Burning,
    }
}

/// Joint state: agent positions (index = agent id), burning buildings and the
/// current time step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub agent_positions: Vec<VertexId>,
    pub burning: BTreeSet<VertexId>,
    pub time_step: u32,
}

impl WorldState {
    pub fn fire_state(&self, v: VertexId) -> FireState {
        if self.burning.contains(&v) {
            FireState::Burning
        } else {
            FireState::NoFire
        }
    }
}

pub const DEFAULT_RCRS_MAX_TIME: u32 = 300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Fire propagation and clustering radius in meters.
    pub d: f64,
    /// Ignition probability contributed by each burning building within `d`.
    pub p: f64,
    /// Number of nearest tasks that bounds the dynamic planning horizon.
    pub k: u32,
    pub gamma: f64,
    /// Episode length in steps.
    pub horizon: u32,
    #[serde(default = "default_rcrs_max_time")]
    pub rcrs_max_time: u32,
}

fn default_rcrs_max_time() -> u32 {
    DEFAULT_RCRS_MAX_TIME
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 50.0,
            p: 0.05,
            k: 3,
            gamma: 1.0,
            horizon: 20,
            rcrs_max_time: DEFAULT_RCRS_MAX_TIME,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::Validation(format!("d must be positive, got {}", self.d)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Validation(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Validation(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be positive".into()));
        }
        if self.rcrs_max_time == 0 {
            return Err(Error::Validation("rcrs_max_time must be positive".into()));
        }
        Ok(())
    }
}

/// A graph world with initial fires, agent start positions and model
/// parameters. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub graph: WorldGraph,
    pub ignitions: BTreeSet<VertexId>,
    pub agent_starts: Vec<VertexId>,
    pub params: Params,
    /// For every building, the other buildings within `d` (ascending).
    fire_neighbors: Vec<Vec<VertexId>>,
}

impl Scenario {
    pub fn new(
        graph: WorldGraph,
        ignitions: BTreeSet<VertexId>,
        agent_starts: Vec<VertexId>,
        params: Params,
    ) -> Result<Self> {
        params.validate()?;
        for &v in &ignitions {
            if !graph.contains(v) {
                return Err(Error::Validation(format!("ignition {v} is not a vertex")));
            }
            if !graph.is_building(v) {
                return Err(Error::Validation(format!("ignition {v} is a road vertex")));
            }
        }
        for (agent, &v) in agent_starts.iter().enumerate() {
            if !graph.contains(v) {
                return Err(Error::Validation(format!("agent {agent} starts on unknown vertex {v}")));
            }
        }
        let fire_neighbors = fire_neighbors(&graph, params.d);
        Ok(Scenario {
            graph,
            ignitions,
            agent_starts,
            params,
            fire_neighbors,
        })
    }

    /// Same world with different parameters.
    pub fn with_params(&self, params: Params) -> Result<Self> {
        Scenario::new(self.graph.clone(), self.ignitions.clone(), self.agent_starts.clone(), params)
    }

    pub fn agent_count(&self) -> usize {
        self.agent_starts.len()
    }

    /// Buildings within `d` of `building`, excluding itself.
    pub fn fire_neighbors(&self, building: VertexId) -> &[VertexId] {
        &self.fire_neighbors[building.index()]
    }

    pub fn initial_state(&self) -> WorldState {
        WorldState {
            agent_positions: self.agent_starts.clone(),
            burning: self.ignitions.clone(),
            time_step: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        file.into_scenario()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn fire_neighbors(graph: &WorldGraph, d: f64) -> Vec<Vec<VertexId>> {
    let mut out = vec![Vec::new(); graph.len()];
    let buildings = graph.buildings();
    for (i, &a) in buildings.iter().enumerate() {
        for &b in &buildings[i + 1..] {
            if euclidean_distance(graph.vertex(a), graph.vertex(b)) <= d {
                out[a.index()].push(b);
                out[b.index()].push(a);
            }
        }
    }
    for list in &mut out {
        list.sort();
    }
    out
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.into_scenario()
}

/// On-disk scenario document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<[u32; 2]>,
    pub ignitions: Vec<u32>,
    pub agents: Vec<u32>,
    pub params: Params,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: u32,
    pub kind: VertexKind,
    pub area: f64,
    pub x: f64,
    pub y: f64,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let vertices = self
            .vertices
            .iter()
            .map(|r| Vertex {
                id: VertexId(r.id),
                kind: r.kind,
                area: r.area,
                position: Point::new(r.x, r.y),
            })
            .collect();
        let edges: Vec<_> = self.edges.iter().map(|&[a, b]| (VertexId(a), VertexId(b))).collect();
        let graph = WorldGraph::new(vertices, &edges)?;
        let mut ignitions = BTreeSet::new();
        for &v in &self.ignitions {
            if !ignitions.insert(VertexId(v)) {
                return Err(Error::Validation(format!("duplicate ignition {v}")));
            }
        }
        let agents = self.agents.iter().map(|&v| VertexId(v)).collect();
        Scenario::new(graph, ignitions, agents, self.params)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            vertices: graph_records(&s.graph),
            edges: s.graph.edges().into_iter().map(|(a, b)| [a.0, b.0]).collect(),
            ignitions: s.ignitions.iter().map(|v| v.0).collect(),
            agents: s.agent_starts.iter().map(|v| v.0).collect(),
            params: s.params,
        }
    }
}

pub(crate) fn graph_records(graph: &WorldGraph) -> Vec<VertexRecord> {
    graph
        .vertices()
        .iter()
        .map(|v| VertexRecord {
            id: v.id.0,
            kind: v.kind,
            area: v.area,
            x: v.position.x,
            y: v.position.y,
        })
        .collect()
}
