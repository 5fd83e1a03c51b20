//! Fire-spread dynamics, the area-ratio reward and seeded episodes.
//!
//! A step applies, in order: agent moves, extinguishing of every occupied
//! building, independent ignition of the remaining no-fire buildings, and the
//! clock tick. Ignition draws are taken for every building in ascending id
//! order each step, whether or not the building is eligible, so the fire
//! randomness of an episode does not depend on the policy being evaluated.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::world::{euclidean_distance, Scenario, VertexId, WorldGraph, WorldState};

/// One move per agent: a neighbor of its current vertex or the vertex itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointAction {
    pub moves: Vec<VertexId>,
}

impl JointAction {
    pub fn new(moves: Vec<VertexId>) -> Self {
        JointAction { moves }
    }

    pub fn stay(state: &WorldState) -> Self {
        JointAction {
            moves: state.agent_positions.clone(),
        }
    }

    pub fn validate(&self, graph: &WorldGraph, state: &WorldState) -> Result<()> {
        if self.moves.len() != state.agent_positions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} moves for {} agents",
                self.moves.len(),
                state.agent_positions.len()
            )));
        }
        for (agent, (&from, &to)) in state.agent_positions.iter().zip(&self.moves).enumerate() {
            if !graph.contains(to) || (from != to && !graph.is_adjacent(from, to)) {
                return Err(Error::InvalidAction { agent, from, to });
            }
        }
        Ok(())
    }
}

/// Moves available to an agent on `v`: itself plus its neighbors, ascending.
pub fn available_moves(graph: &WorldGraph, v: VertexId) -> Vec<VertexId> {
    let mut moves = Vec::with_capacity(graph.neighbors(v).len() + 1);
    moves.push(v);
    moves.extend_from_slice(graph.neighbors(v));
    moves.sort();
    moves
}

/// Fraction of total building area that is not burning.
pub fn reward(graph: &WorldGraph, state: &WorldState) -> f64 {
    let burning: f64 = state.burning.iter().map(|&b| graph.area(b)).sum();
    ((graph.total_building_area() - burning) / graph.total_building_area()).clamp(0.0, 1.0)
}

/// Probability that a no-fire `building` ignites given the current fires:
/// `p` per burning building within `d`, capped at 1.
pub fn ignition_probability(
    graph: &WorldGraph,
    building: VertexId,
    burning: &BTreeSet<VertexId>,
    d: f64,
    p: f64,
) -> f64 {
    let target = graph.vertex(building);
    let count = burning
        .iter()
        .filter(|&&b| b != building && euclidean_distance(graph.vertex(b), target) <= d)
        .count();
    (p * count as f64).min(1.0)
}

pub fn step<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &WorldState,
    action: &JointAction,
    rng: &mut R,
) -> Result<WorldState> {
    let graph = &scenario.graph;
    action.validate(graph, state)?;

    let positions = action.moves.clone();
    let mut burning = state.burning.clone();
    for v in &positions {
        burning.remove(v);
    }

    let p = scenario.params.p;
    let mut ignited = Vec::new();
    for &b in graph.buildings() {
        let draw: f64 = rng.gen();
        if burning.contains(&b) || positions.contains(&b) {
            continue;
        }
        let count = scenario.fire_neighbors(b).iter().filter(|n| burning.contains(n)).count();
        let prob = (p * count as f64).min(1.0);
        if draw < prob {
            ignited.push(b);
        }
    }
    burning.extend(ignited);

    Ok(WorldState {
        agent_positions: positions,
        burning,
        time_step: state.time_step + 1,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub states: Vec<WorldState>,
    /// `rewards[t]` is the reward of the state reached by step `t`.
    pub rewards: Vec<f64>,
    pub average_reward: f64,
}

impl EpisodeTrace {
    /// Writes `t, reward, burning_count, agent_positions`; one row per step.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "reward", "burning_count", "agent_positions"])?;
        for (t, reward) in self.rewards.iter().enumerate() {
            let state = &self.states[t + 1];
            let positions = state
                .agent_positions
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                (t + 1).to_string(),
                format!("{reward:.9}"),
                state.burning.len().to_string(),
                positions,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Generator for the fire dynamics of one episode.
pub fn episode_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `horizon` steps from the scenario's initial state.
pub fn run_episode<P>(scenario: &Scenario, mut policy: P, seed: u64, horizon: u32) -> Result<EpisodeTrace>
where
    P: FnMut(&WorldState) -> Result<JointAction>,
{
    let mut rng = episode_rng(seed);
    let mut state = scenario.initial_state();
    let mut states = Vec::with_capacity(horizon as usize + 1);
    let mut rewards = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        let action = policy(&state)?;
        let next = step(scenario, &state, &action, &mut rng)?;
        rewards.push(reward(&scenario.graph, &next));
        states.push(std::mem::replace(&mut state, next));
    }
    let average_reward = if rewards.is_empty() {
        reward(&scenario.graph, &state)
    } else {
        rewards.iter().sum::<f64>() / rewards.len() as f64
    };
    states.push(state);
    Ok(EpisodeTrace {
        seed,
        states,
        rewards,
        average_reward,
    })
}
