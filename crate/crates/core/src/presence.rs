//! Single-agent approximation of the joint problem.
//!
//! Every agent plans alone on its static-task model. Those plans are turned
//! into Boltzmann action distributions and pushed forward in time to estimate
//! where the other agents will be (the presence mass). An agent's best
//! response then scales the value of each successor by
//! `max(0, 1 - f * pm(stage + 1, s'))`, with `f` the ratio of the largest task
//! reward to the largest stage-0 value.
//!
//! Presence mass is indexed by time step: `pm(t, v)` is the expected number of
//! other agents on `v` after `t` steps, and the backup at stage `t` reads
//! `pm(t + 1, ·)`.

use std::sync::Arc;

use crate::approx::StaticTaskModel;
use crate::error::{Error, Result};
use crate::world::VertexId;

/// Fraction of the largest task reward used as the default Boltzmann
/// temperature.
pub const DEFAULT_TEMPERATURE_RATIO: f64 = 0.2;

const NOT_IN_MODEL: u32 = u32::MAX;

/// Vertex and successor layout of a static-task model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelLayout {
    graph_len: usize,
    vertices: Vec<VertexId>,
    local: Vec<u32>,
    /// `successors[offsets[i]..offsets[i + 1]]` are the local successors of
    /// vertex `i`: itself and its neighbors, ascending by id.
    offsets: Vec<usize>,
    successors: Vec<u32>,
    rewards: Vec<f64>,
}

impl ModelLayout {
    pub fn new(model: &StaticTaskModel<'_>) -> Self {
        let graph_len = model.graph.graph().len();
        let vertices = model.graph.vertices().to_vec();
        let mut local = vec![NOT_IN_MODEL; graph_len];
        for (i, v) in vertices.iter().enumerate() {
            local[v.index()] = i as u32;
        }
        let mut offsets = vec![0];
        let mut successors = Vec::new();
        for &v in &vertices {
            let mut succ: Vec<u32> = model.graph.neighbors(v).map(|w| local[w.index()]).collect();
            succ.push(local[v.index()]);
            succ.sort_unstable();
            successors.extend(succ);
            offsets.push(successors.len());
        }
        let rewards = vertices.iter().map(|&v| model.reward(v)).collect();
        ModelLayout {
            graph_len,
            vertices,
            local,
            offsets,
            successors,
            rewards,
        }
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.local.get(v.index()).is_some_and(|&l| l != NOT_IN_MODEL)
    }

    fn local_index(&self, v: VertexId) -> Option<usize> {
        self.local.get(v.index()).filter(|&&l| l != NOT_IN_MODEL).map(|&l| l as usize)
    }

    fn slots(&self, local: usize) -> std::ops::Range<usize> {
        self.offsets[local]..self.offsets[local + 1]
    }

    /// Successors of `v` (itself and its neighbors in the model), ascending.
    pub fn successors(&self, v: VertexId) -> Vec<VertexId> {
        self.local_index(v)
            .map(|l| self.successors[self.slots(l)].iter().map(|&s| self.vertices[s as usize]).collect())
            .unwrap_or_default()
    }
}

/// `V(stage, s)` for stages `0..=horizon` and `Q(stage, s, s')` for stages
/// `0..horizon`. Vertices outside the model have value 0.
#[derive(Clone, Debug, PartialEq)]
pub struct StageValueTable {
    layout: Arc<ModelLayout>,
    horizon: u32,
    values: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

impl StageValueTable {
    pub fn layout(&self) -> &Arc<ModelLayout> {
        &self.layout
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn value(&self, stage: u32, v: VertexId) -> f64 {
        self.layout
            .local_index(v)
            .map_or(0.0, |l| self.values[stage as usize][l])
    }

    /// `Q(stage, s, s')`; `None` if `s'` is not a successor of `s`.
    pub fn q(&self, stage: u32, s: VertexId, successor: VertexId) -> Option<f64> {
        let l = self.layout.local_index(s)?;
        let target = self.layout.local_index(successor)? as u32;
        let range = self.layout.slots(l);
        let pos = self.layout.successors[range.clone()].iter().position(|&x| x == target)?;
        Some(self.q[stage as usize][range.start + pos])
    }

    /// `(successor, Q)` pairs for `s` at `stage`, ascending by successor id.
    pub fn q_row(&self, stage: u32, s: VertexId) -> Vec<(VertexId, f64)> {
        let Some(l) = self.layout.local_index(s) else {
            return Vec::new();
        };
        let range = self.layout.slots(l);
        self.layout.successors[range.clone()]
            .iter()
            .zip(&self.q[stage as usize][range])
            .map(|(&succ, &q)| (self.layout.vertices[succ as usize], q))
            .collect()
    }

    /// Highest-valued successor at `stage`; ties go to the lowest id.
    pub fn best_successor(&self, stage: u32, s: VertexId) -> Option<VertexId> {
        let mut best: Option<(VertexId, f64)> = None;
        for (succ, q) in self.q_row(stage, s) {
            if best.map_or(true, |(_, bq)| q > bq) {
                best = Some((succ, q));
            }
        }
        best.map(|(v, _)| v)
    }

    /// Largest stage-0 value over the model.
    pub fn max_initial_value(&self) -> f64 {
        self.values[0].iter().copied().fold(0.0, f64::max)
    }
}

fn backward_induction(model: &StaticTaskModel<'_>, successor_scale: impl Fn(u32, VertexId) -> f64) -> StageValueTable {
    let layout = Arc::new(ModelLayout::new(model));
    let n = layout.vertices.len();
    let h = model.horizon as usize;
    let mut values = vec![vec![0.0; n]; h + 1];
    let mut q = vec![vec![0.0; layout.successors.len()]; h];
    for t in (0..h).rev() {
        let scale: Vec<f64> = layout
            .vertices
            .iter()
            .map(|&v| successor_scale(t as u32 + 1, v))
            .collect();
        let (current, rest) = values.split_at_mut(t + 1);
        let next = &rest[0];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for slot in layout.slots(s) {
                let succ = layout.successors[slot] as usize;
                let value = layout.rewards[succ] + model.gamma * (scale[succ] * next[succ]);
                q[t][slot] = value;
                best = best.max(value);
            }
            current[t][s] = best;
        }
    }
    StageValueTable {
        layout,
        horizon: model.horizon,
        values,
        q,
    }
}

/// `h` backward sweeps of `V(s) = max_{s' ∈ N(s) ∪ {s}} R(s') + γ V(s')`
/// from `V = 0`.
pub fn single_agent_vi(model: &StaticTaskModel<'_>) -> StageValueTable {
    backward_induction(model, |_, _| 1.0)
}

/// Ratio of the largest task reward to the largest stage-0 value; 0 when the
/// model has no value.
pub fn scale_factor(values: &StageValueTable, model: &StaticTaskModel<'_>) -> f64 {
    let max_value = values.max_initial_value();
    if max_value > 0.0 {
        model.max_reward() / max_value
    } else {
        0.0
    }
}

/// Backward induction with successor values discounted by the other agents'
/// presence mass. The scale factor comes from the single-agent solution.
pub fn best_response_vi(model: &StaticTaskModel<'_>, pm: &PresenceMass) -> StageValueTable {
    let f = scale_factor(&single_agent_vi(model), model);
    best_response_vi_with_factor(model, pm, f)
}

pub fn best_response_vi_with_factor(model: &StaticTaskModel<'_>, pm: &PresenceMass, f: f64) -> StageValueTable {
    backward_induction(model, |stage, v| (1.0 - f * pm.at(stage, v)).max(0.0))
}

/// Boltzmann action distribution per stage and vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyDistribution {
    layout: Arc<ModelLayout>,
    temperature: f64,
    /// Indexed like the Q table: per stage, per successor slot.
    probs: Vec<Vec<f64>>,
}

impl PolicyDistribution {
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn stages(&self) -> u32 {
        self.probs.len() as u32
    }

    pub fn layout(&self) -> &Arc<ModelLayout> {
        &self.layout
    }

    /// `(successor, probability)` pairs for `s` at `stage`.
    pub fn distribution(&self, stage: u32, s: VertexId) -> Vec<(VertexId, f64)> {
        let Some(l) = self.layout.local_index(s) else {
            return Vec::new();
        };
        let range = self.layout.slots(l);
        self.layout.successors[range.clone()]
            .iter()
            .zip(&self.probs[stage as usize][range])
            .map(|(&succ, &p)| (self.layout.vertices[succ as usize], p))
            .collect()
    }
}

pub fn boltzmann_policy(values: &StageValueTable, temperature: f64) -> Result<PolicyDistribution> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let layout = values.layout.clone();
    let probs = values
        .q
        .iter()
        .map(|stage_q| {
            let mut probs = vec![0.0; stage_q.len()];
            for s in 0..layout.vertices.len() {
                let range = layout.slots(s);
                let row = &stage_q[range.clone()];
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = row.iter().map(|&q| ((q - max) / temperature).exp()).collect();
                let total: f64 = weights.iter().sum();
                for (p, w) in probs[range].iter_mut().zip(weights) {
                    *p = w / total;
                }
            }
            probs
        })
        .collect();
    Ok(PolicyDistribution {
        layout,
        temperature,
        probs,
    })
}

/// Default temperature for a model: a fixed fraction of its largest reward.
pub fn default_temperature(model: &StaticTaskModel<'_>) -> f64 {
    let t = DEFAULT_TEMPERATURE_RATIO * model.max_reward();
    if t > 0.0 {
        t
    } else {
        DEFAULT_TEMPERATURE_RATIO
    }
}

/// Expected number of other agents per vertex and time step.
#[derive(Clone, Debug, PartialEq)]
pub struct PresenceMass {
    horizon: u32,
    mass: Vec<Vec<f64>>,
}

impl PresenceMass {
    pub fn zero(graph_len: usize, horizon: u32) -> Self {
        PresenceMass {
            horizon,
            mass: vec![vec![0.0; graph_len]; horizon as usize + 1],
        }
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// `pm(t, v)`; zero beyond the horizon.
    pub fn at(&self, t: u32, v: VertexId) -> f64 {
        self.mass
            .get(t as usize)
            .and_then(|row| row.get(v.index()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn stage_total(&self, t: u32) -> f64 {
        self.mass[t as usize].iter().sum()
    }

    fn add(&mut self, occupancy: &Occupancy) {
        for (row, occ) in self.mass.iter_mut().zip(&occupancy.rows) {
            for (m, o) in row.iter_mut().zip(occ) {
                *m += o;
            }
        }
    }
}

/// Position distribution of one agent following its policy for `horizon`
/// steps. Past the policy's last stage the agent stays put.
#[derive(Clone, Debug, PartialEq)]
pub struct Occupancy {
    rows: Vec<Vec<f64>>,
}

pub fn occupancy(policy: &PolicyDistribution, start: VertexId, horizon: u32) -> Result<Occupancy> {
    let layout = &policy.layout;
    let start_local = layout
        .local_index(start)
        .ok_or_else(|| Error::DimensionMismatch(format!("start {start} is outside the policy's model")))?;
    let n = layout.vertices.len();
    let mut dist = vec![0.0; n];
    dist[start_local] = 1.0;
    let to_row = |dist: &[f64]| {
        let mut row = vec![0.0; layout.graph_len];
        for (l, &p) in dist.iter().enumerate() {
            row[layout.vertices[l].index()] = p;
        }
        row
    };
    let mut rows = vec![to_row(&dist)];
    for t in 0..horizon as usize {
        if let Some(probs) = policy.probs.get(t) {
            let mut next = vec![0.0; n];
            for (s, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for slot in layout.slots(s) {
                    next[layout.successors[slot] as usize] += mass * probs[slot];
                }
            }
            dist = next;
        }
        rows.push(to_row(&dist));
    }
    Ok(Occupancy { rows })
}

/// Sum of the other agents' occupancies.
pub fn presence_from_occupancies(occupancies: &[Occupancy], me: usize, graph_len: usize, horizon: u32) -> PresenceMass {
    let mut pm = PresenceMass::zero(graph_len, horizon);
    for (j, occ) in occupancies.iter().enumerate() {
        if j != me {
            pm.add(occ);
        }
    }
    pm
}

/// Presence mass of every agent other than `me`, propagated for `horizon`
/// steps from `positions` through their policies.
pub fn presence_mass(
    policies: &[PolicyDistribution],
    positions: &[VertexId],
    me: usize,
    horizon: u32,
) -> Result<PresenceMass> {
    if policies.len() != positions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} policies for {} agents",
            policies.len(),
            positions.len()
        )));
    }
    if me >= positions.len() {
        return Err(Error::DimensionMismatch(format!("agent {me} out of {}", positions.len())));
    }
    let graph_len = policies[me].layout.graph_len;
    if policies.iter().any(|p| p.layout.graph_len != graph_len) {
        return Err(Error::DimensionMismatch("policies are defined on different graphs".into()));
    }
    let mut pm = PresenceMass::zero(graph_len, horizon);
    for (j, (policy, &pos)) in policies.iter().zip(positions).enumerate() {
        if j != me {
            pm.add(&occupancy(policy, pos, horizon)?);
        }
    }
    Ok(pm)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::approx::Subgraph;
    use crate::world::{Params, Scenario, Vertex, WorldGraph};

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn world(n: u32, edges: &[(u32, u32)], gamma: f64) -> Scenario {
        let vertices = (0..n).map(|i| Vertex::building(i, 1.0, f64::from(i) * 100.0, 0.0)).collect();
        let edges: Vec<_> = edges.iter().map(|&(a, b)| (v(a), v(b))).collect();
        let g = WorldGraph::new(vertices, &edges).unwrap();
        Scenario::new(g, BTreeSet::new(), vec![], Params { gamma, ..Params::default() }).unwrap()
    }

    fn model<'g>(s: &'g Scenario, agent: u32, tasks: &[u32], h: u32) -> StaticTaskModel<'g> {
        let tasks: BTreeSet<_> = tasks.iter().map(|&t| v(t)).collect();
        StaticTaskModel::full(&s.graph, v(agent), &tasks, s, h).unwrap()
    }

    #[test]
    fn one_step_backup() {
        let s = world(3, &[(0, 1), (1, 2)], 1.0);
        let m = model(&s, 0, &[1], 1);
        let vt = single_agent_vi(&m);
        assert!((vt.value(0, v(0)) - m.reward(v(1))).abs() < 1e-15);
        assert_eq!(vt.best_successor(0, v(0)), Some(v(1)));
    }

    #[test]
    fn no_tasks_no_value() {
        let s = world(3, &[(0, 1), (1, 2)], 0.9);
        let vt = single_agent_vi(&model(&s, 0, &[], 4));
        for t in 0..=4 {
            for i in 0..3 {
                assert_eq!(vt.value(t, v(i)), 0.0);
            }
        }
        assert_eq!(scale_factor(&vt, &model(&s, 0, &[], 4)), 0.0);
    }

    #[test]
    fn scale_factor_on_three_vertex_path() {
        // task at vertex 2, gamma 0.9, horizon 2: the largest stage-0 value is
        // at vertices 1 and 2, R + 0.9 R = 1.9 R.
        let s = world(3, &[(0, 1), (1, 2)], 0.9);
        let m = model(&s, 0, &[2], 2);
        let vt = single_agent_vi(&m);
        let r = m.reward(v(2));
        assert!((vt.max_initial_value() - 1.9 * r).abs() < 1e-15);
        assert!((scale_factor(&vt, &m) - 1.0 / 1.9).abs() < 1e-12);
    }

    #[test]
    fn boltzmann_examples() {
        let s = world(3, &[(0, 1), (0, 2)], 1.0);
        // no tasks: all Q equal, uniform
        let vt = single_agent_vi(&model(&s, 0, &[], 2));
        let pol = boltzmann_policy(&vt, 0.5).unwrap();
        for (_, p) in pol.distribution(0, v(0)) {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(matches!(boltzmann_policy(&vt, 0.0), Err(Error::NonPositiveTemperature(_))));
        assert!(matches!(boltzmann_policy(&vt, -1.0), Err(Error::NonPositiveTemperature(_))));
    }

    #[test]
    fn boltzmann_concentrates_on_large_gaps() {
        // unit Q gap against τ = 0.01: closed form 1 / (1 + 2 e^{-100})
        let s = world(3, &[(0, 1), (0, 2)], 1.0);
        let mut m = model(&s, 0, &[1], 1);
        m.task_reward.insert(v(1), 1.0);
        let vt = single_agent_vi(&m);
        let pol = boltzmann_policy(&vt, 0.01).unwrap();
        let p1 = pol.distribution(0, v(0)).into_iter().find(|(s, _)| *s == v(1)).unwrap().1;
        let closed = 1.0 / (1.0 + 2.0 * (-100.0f64).exp());
        assert!(p1 >= 0.99);
        assert!((p1 - closed).abs() < 1e-15);
    }

    #[test]
    fn chain_mass_marches() {
        // other agent at 0 on a chain heading to task 3 with a sharp policy
        let s = world(4, &[(0, 1), (1, 2), (2, 3)], 1.0);
        let mut m = model(&s, 0, &[3], 3);
        m.task_reward.insert(v(3), 1.0);
        let pol = boltzmann_policy(&single_agent_vi(&m), 1e-3).unwrap();
        let me_model = model(&s, 3, &[0], 3);
        let me_pol = boltzmann_policy(&single_agent_vi(&me_model), 1.0).unwrap();
        let pm = presence_mass(&[me_pol, pol], &[v(3), v(0)], 0, 3).unwrap();
        for t in 0..=3 {
            assert!((pm.at(t, v(t)) - 1.0).abs() < 1e-9, "t={t}");
            assert!((pm.stage_total(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lone_agent_has_no_presence() {
        let s = world(2, &[(0, 1)], 1.0);
        let pol = boltzmann_policy(&single_agent_vi(&model(&s, 0, &[1], 2)), 0.1).unwrap();
        let pm = presence_mass(&[pol.clone()], &[v(0)], 0, 2).unwrap();
        assert_eq!(pm.stage_total(0) + pm.stage_total(1) + pm.stage_total(2), 0.0);
        assert!(matches!(presence_mass(&[pol], &[v(0), v(1)], 0, 2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_presence_matches_single_agent() {
        let s = world(4, &[(0, 1), (1, 2), (2, 3), (0, 3)], 0.95);
        let m = model(&s, 0, &[2, 3], 5);
        let sa = single_agent_vi(&m);
        let br = best_response_vi(&m, &PresenceMass::zero(4, 5));
        assert_eq!(sa, br);
    }

    #[test]
    fn full_presence_with_unit_factor() {
        // f = 1 and pm = 1 at the successor: its future value vanishes
        let s = world(2, &[(0, 1)], 1.0);
        let m = model(&s, 0, &[1], 2);
        let mut pm = PresenceMass::zero(2, 2);
        pm.mass[1][1] = 1.0;
        let br = best_response_vi_with_factor(&m, &pm, 1.0);
        let sa = single_agent_vi(&m);
        let r = m.reward(v(1));
        assert!((br.q(0, v(0), v(1)).unwrap() - r).abs() < 1e-15);
        assert!((sa.q(0, v(0), v(1)).unwrap() - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn contested_task_loses_to_free_one() {
        // Y graph: 0 - 1, 1 - 2, 1 - 3; equal tasks 2 and 3. Other agent's
        // mass sits on 2 from step 1 on.
        let s = world(4, &[(0, 1), (1, 2), (1, 3)], 1.0);
        let m = model(&s, 0, &[2, 3], 3);
        let sa = single_agent_vi(&m);
        assert_eq!(sa.q(1, v(1), v(2)), sa.q(1, v(1), v(3)));
        let mut pm = PresenceMass::zero(4, 3);
        for t in 1..=3 {
            pm.mass[t][2] = 1.0;
        }
        let br = best_response_vi(&m, &pm);
        assert!(br.q(1, v(1), v(3)).unwrap() > br.q(1, v(1), v(2)).unwrap());
        assert_eq!(br.best_successor(1, v(1)), Some(v(3)));
        // exhaustive check of the stage-1 backup at vertex 1
        let f = scale_factor(&sa, &m);
        let r = m.reward(v(2));
        let expect_2 = r + (1.0 - f) * br.value(2, v(2));
        assert!((br.q(1, v(1), v(2)).unwrap() - expect_2).abs() < 1e-15);
    }

    #[test]
    fn subgraph_models_ignore_outside_mass() {
        let s = world(3, &[(0, 1), (1, 2)], 1.0);
        let sub = Subgraph::from_vertices(&s.graph, [v(0), v(1)]);
        let m = StaticTaskModel {
            graph: sub,
            agent: v(0),
            tasks: [v(1)].into(),
            task_reward: [(v(1), 0.5)].into(),
            horizon: 2,
            gamma: 1.0,
        };
        let mut pm = PresenceMass::zero(3, 2);
        pm.mass[1][2] = 5.0;
        assert_eq!(best_response_vi(&m, &pm), single_agent_vi(&m));
        assert!(ModelLayout::new(&m).successors(v(2)).is_empty());
    }
}
