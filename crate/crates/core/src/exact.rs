//! Exact finite-horizon value iteration over the joint MMDP.
//!
//! States are `(agent positions, burning set)` pairs encoded densely as
//! `position_code * 2^B + burning_mask`, where `position_code` is the agents'
//! positions read as base-`|V|` digits (agent 0 most significant) and bit `i`
//! of the mask is the `i`-th building in ascending id order.
//!
//! Each backup goes through the post-decision state: moves and extinguishing
//! are deterministic, so `Q(s, a) = W(post(s, a))` where `W` is the
//! expectation of `reward(s') + γ V(s')` over the independent ignitions.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simulator::{available_moves, JointAction};
use crate::world::{Scenario, VertexId, WorldState};

/// Default cap on `|S| * (horizon + 1)`.
pub const DEFAULT_STATE_CAP: u128 = 50_000_000;

const TABLE_MAGIC: &[u8; 4] = b"SPVT";
const TABLE_VERSION: u32 = 1;

/// Dense encoding of joint states.
#[derive(Clone, Debug, PartialEq)]
pub struct JointStateIndex {
    vertex_count: usize,
    agents: usize,
    buildings: Vec<VertexId>,
    /// Building bit per vertex, zero for roads.
    vertex_bit: Vec<u64>,
    position_codes: usize,
}

impl JointStateIndex {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let graph = &scenario.graph;
        let buildings = graph.buildings().to_vec();
        if buildings.len() > 40 {
            return Err(Error::StateSpaceTooLarge {
                required: u128::MAX,
                cap: DEFAULT_STATE_CAP,
            });
        }
        let mut vertex_bit = vec![0u64; graph.len()];
        for (i, b) in buildings.iter().enumerate() {
            vertex_bit[b.index()] = 1 << i;
        }
        let position_codes = (graph.len() as u128)
            .checked_pow(scenario.agent_count() as u32)
            .filter(|&c| c <= usize::MAX as u128 / 2)
            .ok_or(Error::StateSpaceTooLarge {
                required: u128::MAX,
                cap: DEFAULT_STATE_CAP,
            })? as usize;
        Ok(JointStateIndex {
            vertex_count: graph.len(),
            agents: scenario.agent_count(),
            buildings,
            vertex_bit,
            position_codes,
        })
    }

    pub fn building_count(&self) -> usize {
        self.buildings.len()
    }

    /// `|V|^n * 2^B`, as an exact integer.
    pub fn state_count_u128(&self) -> u128 {
        (self.position_codes as u128) << self.buildings.len()
    }

    pub fn state_count(&self) -> usize {
        self.position_codes << self.buildings.len()
    }

    fn position_code(&self, positions: &[VertexId]) -> usize {
        positions.iter().fold(0, |code, v| code * self.vertex_count + v.index())
    }

    fn positions(&self, mut code: usize) -> Vec<VertexId> {
        let mut out = vec![VertexId(0); self.agents];
        for slot in out.iter_mut().rev() {
            *slot = VertexId::from_index(code % self.vertex_count);
            code /= self.vertex_count;
        }
        out
    }

    fn mask(&self, burning: &BTreeSet<VertexId>) -> u64 {
        burning.iter().fold(0, |m, v| m | self.vertex_bit[v.index()])
    }

    pub fn encode(&self, positions: &[VertexId], burning: &BTreeSet<VertexId>) -> usize {
        (self.position_code(positions) << self.buildings.len()) | self.mask(burning) as usize
    }

    pub fn encode_state(&self, state: &WorldState) -> usize {
        self.encode(&state.agent_positions, &state.burning)
    }

    pub fn decode(&self, index: usize) -> (Vec<VertexId>, BTreeSet<VertexId>) {
        let b = self.buildings.len();
        let mask = index & ((1usize << b) - 1);
        let burning = (0..b).filter(|i| mask >> i & 1 == 1).map(|i| self.buildings[i]).collect();
        (self.positions(index >> b), burning)
    }
}

/// Precomputed transition structure of a scenario.
struct JointModel {
    index: JointStateIndex,
    /// Per vertex: available moves, ascending.
    moves: Vec<Vec<usize>>,
    /// Per building index: mask of buildings within `d`.
    fire_neighbors: Vec<u64>,
    areas: Vec<f64>,
    total_area: f64,
    p: f64,
    gamma: f64,
}

/// One joint action's deterministic effect from a position code.
#[derive(Clone, Copy)]
struct Outcome {
    post_code: usize,
    occupied: u64,
}

impl JointModel {
    fn new(scenario: &Scenario) -> Result<Self> {
        let index = JointStateIndex::new(scenario)?;
        let graph = &scenario.graph;
        let moves = (0..graph.len())
            .map(|i| {
                available_moves(graph, VertexId::from_index(i))
                    .into_iter()
                    .map(VertexId::index)
                    .collect()
            })
            .collect();
        let fire_neighbors = index
            .buildings
            .iter()
            .map(|&b| scenario.fire_neighbors(b).iter().fold(0, |m, n| m | index.vertex_bit[n.index()]))
            .collect();
        let areas = index.buildings.iter().map(|&b| graph.area(b)).collect();
        Ok(JointModel {
            index,
            moves,
            fire_neighbors,
            areas,
            total_area: graph.total_building_area(),
            p: scenario.params.p,
            gamma: scenario.params.gamma,
        })
    }

    fn occupied(&self, code: usize) -> u64 {
        let n = self.index.vertex_count;
        let mut c = code;
        let mut mask = 0;
        for _ in 0..self.index.agents {
            mask |= self.index.vertex_bit[c % n];
            c /= n;
        }
        mask
    }

    /// Joint actions from `code` in lexicographic order of the move vectors.
    fn outcomes(&self, code: usize) -> Vec<Outcome> {
        let positions = self.index.positions(code);
        let option_lists: Vec<&[usize]> = positions.iter().map(|v| self.moves[v.index()].as_slice()).collect();
        let mut out = Vec::new();
        let mut digits = vec![0usize; option_lists.len()];
        loop {
            let post_code = option_lists
                .iter()
                .zip(&digits)
                .fold(0, |c, (opts, &d)| c * self.index.vertex_count + opts[d]);
            out.push(Outcome {
                post_code,
                occupied: self.occupied(post_code),
            });
            // odometer increment, last agent fastest
            let mut i = digits.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < option_lists[i].len() {
                    break;
                }
                digits[i] = 0;
            }
        }
    }

    fn burning_area(&self, mask: u64) -> f64 {
        let mut area = 0.0;
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            area += self.areas[i];
            m &= m - 1;
        }
        area
    }

    /// Expected `reward(s') + γ V_next(s')` from post-decision state
    /// `(post_code, mask)`; `mask` must not contain occupied buildings.
    fn post_value(&self, post_code: usize, occupied: u64, mask: u64, next: &[f64]) -> f64 {
        let b = self.index.buildings.len();
        let mut sure = 0u64;
        let mut uncertain: Vec<(u64, f64)> = Vec::new();
        for i in 0..b {
            let bit = 1u64 << i;
            if mask & bit != 0 || occupied & bit != 0 {
                continue;
            }
            let count = (mask & self.fire_neighbors[i]).count_ones();
            if count == 0 {
                continue;
            }
            let prob = (self.p * f64::from(count)).min(1.0);
            if prob >= 1.0 {
                sure |= bit;
            } else if prob > 0.0 {
                uncertain.push((bit, prob));
            }
        }
        let base = mask | sure;
        let offset = post_code << b;
        let mut total = 0.0;
        for subset in 0u64..(1u64 << uncertain.len()) {
            let mut prob = 1.0;
            let mut m = base;
            for (j, &(bit, q)) in uncertain.iter().enumerate() {
                if subset >> j & 1 == 1 {
                    prob *= q;
                    m |= bit;
                } else {
                    prob *= 1.0 - q;
                }
            }
            let r = (self.total_area - self.burning_area(m)) / self.total_area;
            total += prob * (r + self.gamma * next[offset | m as usize]);
        }
        total
    }
}

/// Finite-horizon values `V(stage, state)`; stage `horizon` is terminal.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    horizon: u32,
    gamma: f64,
    index: JointStateIndex,
    stages: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn index(&self) -> &JointStateIndex {
        &self.index
    }

    pub fn stage(&self, stage: u32) -> &[f64] {
        &self.stages[stage as usize]
    }

    /// Value of `state` at `stage` steps from the start.
    pub fn value(&self, stage: u32, state: &WorldState) -> f64 {
        self.stages[stage as usize][self.index.encode_state(state)]
    }

    /// Little-endian dump: magic, version, dimensions, then every stage.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(TABLE_MAGIC)?;
        for v in [
            TABLE_VERSION,
            self.horizon,
            self.index.agents as u32,
            self.index.vertex_count as u32,
            self.index.buildings.len() as u32,
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&self.gamma.to_le_bytes())?;
        out.write_all(&(self.index.state_count() as u64).to_le_bytes())?;
        for stage in &self.stages {
            for x in stage {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R, scenario: &Scenario) -> Result<Self> {
        let bad = |m: &str| Error::Parse {
            path: "<value table>".into(),
            message: m.to_string(),
        };
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != TABLE_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 4];
        let mut header = [0u32; 5];
        for h in &mut header {
            input.read_exact(&mut word)?;
            *h = u32::from_le_bytes(word);
        }
        let [version, horizon, agents, vertices, buildings] = header;
        if version != TABLE_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut long = [0u8; 8];
        input.read_exact(&mut long)?;
        let gamma = f64::from_le_bytes(long);
        input.read_exact(&mut long)?;
        let count = u64::from_le_bytes(long) as usize;
        let index = JointStateIndex::new(scenario)?;
        if index.agents != agents as usize
            || index.vertex_count != vertices as usize
            || index.buildings.len() != buildings as usize
            || index.state_count() != count
        {
            return Err(bad("table dimensions do not match the scenario"));
        }
        let mut stages = Vec::with_capacity(horizon as usize + 1);
        for _ in 0..=horizon {
            let mut stage = Vec::with_capacity(count);
            for _ in 0..count {
                input.read_exact(&mut long)?;
                stage.push(f64::from_le_bytes(long));
            }
            stages.push(stage);
        }
        Ok(ValueTable {
            horizon,
            gamma,
            index,
            stages,
        })
    }
}

/// Backward induction over the full joint model with the default state cap.
pub fn joint_value_iteration(scenario: &Scenario, horizon: u32) -> Result<ValueTable> {
    joint_value_iteration_with_cap(scenario, horizon, DEFAULT_STATE_CAP)
}

pub fn required_entries(scenario: &Scenario, horizon: u32) -> u128 {
    let b = scenario.graph.buildings().len() as u32;
    (scenario.graph.len() as u128)
        .checked_pow(scenario.agent_count() as u32)
        .and_then(|p| p.checked_mul(1u128.checked_shl(b)?))
        .and_then(|s| s.checked_mul(u128::from(horizon) + 1))
        .unwrap_or(u128::MAX)
}

pub fn joint_value_iteration_with_cap(scenario: &Scenario, horizon: u32, cap: u128) -> Result<ValueTable> {
    let required = required_entries(scenario, horizon);
    if required > cap {
        return Err(Error::StateSpaceTooLarge { required, cap });
    }
    let model = JointModel::new(scenario)?;
    let b = model.index.buildings.len();
    let per_code = 1usize << b;
    let states = model.index.state_count();
    let outcomes: Vec<Vec<Outcome>> = (0..model.index.position_codes).map(|c| model.outcomes(c)).collect();

    let mut stages = vec![vec![0.0; states]; horizon as usize + 1];
    let mut post = vec![0.0; states];
    for t in (0..horizon as usize).rev() {
        let next = &stages[t + 1];
        post.par_chunks_mut(per_code).enumerate().for_each(|(code, chunk)| {
            let occupied = model.occupied(code);
            for (mask, w) in chunk.iter_mut().enumerate() {
                let mask = mask as u64;
                *w = if mask & occupied != 0 {
                    f64::NAN
                } else {
                    model.post_value(code, occupied, mask, next)
                };
            }
        });
        let post = &post;
        stages[t].par_chunks_mut(per_code).enumerate().for_each(|(code, chunk)| {
            for (mask, v) in chunk.iter_mut().enumerate() {
                let mask = mask as u64;
                *v = outcomes[code]
                    .iter()
                    .map(|o| post[(o.post_code << b) | (mask & !o.occupied) as usize])
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        });
    }
    Ok(ValueTable {
        horizon,
        gamma: model.gamma,
        index: model.index,
        stages,
    })
}

/// Greedy policy with respect to a [`ValueTable`].
pub struct OptimalPolicy<'a> {
    table: Cow<'a, ValueTable>,
    model: JointModel,
}

impl<'a> OptimalPolicy<'a> {
    pub fn new(table: &'a ValueTable, scenario: &Scenario) -> Result<Self> {
        Self::from_cow(Cow::Borrowed(table), scenario)
    }

    pub fn from_cow(table: Cow<'a, ValueTable>, scenario: &Scenario) -> Result<Self> {
        let model = JointModel::new(scenario)?;
        if model.index != table.index {
            return Err(Error::DimensionMismatch("value table was built for another scenario".into()));
        }
        Ok(OptimalPolicy { table, model })
    }

    /// `Q(stage, s, a)` for every joint action, lexicographic action order.
    pub fn q_values(&self, state: &WorldState) -> Result<Vec<(JointAction, f64)>> {
        let stage = state.time_step;
        if stage >= self.table.horizon {
            return Err(Error::StageOutOfRange {
                stage,
                horizon: self.table.horizon,
            });
        }
        let next = self.table.stage(stage + 1);
        let code = self.model.index.position_code(&state.agent_positions);
        let mask = self.model.index.mask(&state.burning);
        Ok(self
            .model
            .outcomes(code)
            .into_iter()
            .map(|o| {
                let q = self.model.post_value(o.post_code, o.occupied, mask & !o.occupied, next);
                (JointAction::new(self.model.index.positions(o.post_code)), q)
            })
            .collect())
    }

    /// Argmax joint action; ties go to the lowest-encoded action.
    pub fn action(&self, state: &WorldState) -> Result<JointAction> {
        let mut best: Option<(JointAction, f64)> = None;
        for (a, q) in self.q_values(state)? {
            if best.as_ref().map_or(true, |(_, bq)| q > *bq) {
                best = Some((a, q));
            }
        }
        Ok(best.expect("at least the stay action exists").0)
    }
}

/// Callable form of [`OptimalPolicy`].
pub fn optimal_policy<'a>(
    table: &'a ValueTable,
    scenario: &Scenario,
) -> Result<impl Fn(&WorldState) -> Result<JointAction> + 'a> {
    let policy = OptimalPolicy::new(table, scenario)?;
    Ok(move |state: &WorldState| policy.action(state))
}
