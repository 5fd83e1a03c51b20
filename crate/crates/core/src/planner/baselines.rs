//! Comparison planners: random, greedy nearest-fire, single-agent value
//! iteration, and presence-aware value iteration on the full graph.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ext::best_responses;
use super::{colocated_argmax, coordinate_targets, dfs_priority, first_hop, PlanResult, PlannerConfig, PriorityList};
use crate::approx::StaticTaskModel;
use crate::error::Result;
use crate::presence::{single_agent_vi, StageValueTable};
use crate::simulator::{available_moves, JointAction};
use crate::world::{Scenario, VertexId, WorldState};

pub fn random_plan<R: Rng + ?Sized>(scenario: &Scenario, state: &WorldState, rng: &mut R) -> PlanResult {
    let moves: Vec<VertexId> = state
        .agent_positions
        .iter()
        .map(|&pos| {
            *available_moves(&scenario.graph, pos)
                .choose(rng)
                .expect("an agent can always stay")
        })
        .collect();
    PlanResult {
        targets: moves.clone(),
        priorities: vec![Vec::new(); moves.len()],
        action: JointAction::new(moves),
        states_enumerated: 0,
    }
}

/// Every agent heads for its nearest burning building (lowest id on ties),
/// with targets coordinated across agents.
pub fn greedy_plan(scenario: &Scenario, state: &WorldState) -> Result<PlanResult> {
    if state.burning.is_empty() || state.agent_positions.is_empty() {
        return Ok(PlanResult::stay(state));
    }
    let graph = &scenario.graph;
    let priorities: Vec<PriorityList> = state
        .agent_positions
        .iter()
        .map(|&pos| {
            let dist = graph.bfs(pos);
            let mut ranked: Vec<(u32, VertexId)> = state
                .burning
                .iter()
                .filter_map(|&b| dist[b.index()].map(|d| (d, b)))
                .collect();
            ranked.sort();
            PriorityList {
                hops_to_top: ranked.first().map_or(0, |r| r.0),
                targets: ranked.into_iter().map(|(_, b)| b).collect(),
            }
        })
        .collect();
    let targets = coordinate_targets(&priorities)?;
    let moves = state
        .agent_positions
        .iter()
        .zip(&targets)
        .map(|(&pos, &t)| first_hop(graph, pos, t))
        .collect();
    Ok(PlanResult {
        targets,
        priorities: priorities.into_iter().map(|p| p.targets).collect(),
        action: JointAction::new(moves),
        states_enumerated: 0,
    })
}

fn full_models<'s>(scenario: &'s Scenario, state: &WorldState, config: &PlannerConfig) -> Result<Vec<StaticTaskModel<'s>>> {
    let remaining = scenario.params.rcrs_max_time.saturating_sub(state.time_step);
    let horizon = remaining.min(config.horizon_cap).max(1);
    state
        .agent_positions
        .iter()
        .map(|&pos| StaticTaskModel::full(&scenario.graph, pos, &state.burning, scenario, horizon))
        .collect()
}

fn act_on_values(state: &WorldState, models: &[StaticTaskModel<'_>], tables: &[StageValueTable], states: u64) -> PlanResult {
    let action = colocated_argmax(state, tables);
    let priorities: Vec<Vec<VertexId>> = models.iter().zip(tables).map(|(m, t)| dfs_priority(m, t)).collect();
    let targets = priorities
        .iter()
        .zip(&state.agent_positions)
        .map(|(p, &pos)| p.first().copied().unwrap_or(pos))
        .collect();
    PlanResult {
        targets,
        priorities,
        action,
        states_enumerated: states,
    }
}

pub fn single_agent_plan(scenario: &Scenario, state: &WorldState) -> Result<PlanResult> {
    single_agent_plan_with(scenario, state, &PlannerConfig::default())
}

/// Each agent follows its own single-agent values over the whole graph.
pub fn single_agent_plan_with(scenario: &Scenario, state: &WorldState, config: &PlannerConfig) -> Result<PlanResult> {
    if state.burning.is_empty() || state.agent_positions.is_empty() {
        return Ok(PlanResult::stay(state));
    }
    let models = full_models(scenario, state, config)?;
    let tables: Vec<StageValueTable> = models.iter().map(single_agent_vi).collect();
    let states = models.iter().map(StaticTaskModel::stage_states).sum();
    Ok(act_on_values(state, &models, &tables, states))
}

pub fn spatap_plan(scenario: &Scenario, state: &WorldState) -> Result<PlanResult> {
    spatap_plan_with(scenario, state, &PlannerConfig::default())
}

/// Presence-aware best response on the full graph with a fixed horizon; the
/// action is read straight off the values.
pub fn spatap_plan_with(scenario: &Scenario, state: &WorldState, config: &PlannerConfig) -> Result<PlanResult> {
    if state.burning.is_empty() || state.agent_positions.is_empty() {
        return Ok(PlanResult::stay(state));
    }
    let models = full_models(scenario, state, config)?;
    let (tables, states) = best_responses(&models, &state.agent_positions, config)?;
    Ok(act_on_values(state, &models, &tables, states))
}
