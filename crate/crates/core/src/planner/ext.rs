use std::collections::BTreeSet;
use std::fs;

use super::{coordinate_targets, dfs_priority, first_hop, PlanResult, PlannerConfig, PriorityList};
use crate::approx::{build_static_task_model, cluster_tasks, StaticTaskModel};
use crate::error::{Error, Result};
use crate::presence::{
    best_response_vi_with_factor, boltzmann_policy, default_temperature, occupancy, presence_from_occupancies,
    scale_factor, single_agent_vi, StageValueTable,
};
use crate::simulator::JointAction;
use crate::world::{Scenario, VertexId, WorldGraph, WorldState};

/// Single-agent values, Boltzmann policies, presence mass and best response
/// for a set of per-agent models on the same graph. Returns the best-response
/// tables and the number of stage-state backups performed.
pub(super) fn best_responses(
    models: &[StaticTaskModel<'_>],
    positions: &[VertexId],
    config: &PlannerConfig,
) -> Result<(Vec<StageValueTable>, u64)> {
    let Some(first) = models.first() else {
        return Ok((Vec::new(), 0));
    };
    let graph_len = first.graph.graph().len();
    let mut states = 0;
    let mut factors = Vec::with_capacity(models.len());
    let mut occupancies = Vec::with_capacity(models.len());
    let longest = models.iter().map(|m| m.horizon).max().unwrap_or(1);
    for (model, &pos) in models.iter().zip(positions) {
        let single = single_agent_vi(model);
        states += model.stage_states();
        factors.push(scale_factor(&single, model));
        let tau = config.tau.unwrap_or_else(|| default_temperature(model));
        let policy = boltzmann_policy(&single, tau)?;
        occupancies.push(occupancy(&policy, pos, longest)?);
    }
    let tables = models
        .iter()
        .enumerate()
        .map(|(i, model)| {
            let pm = presence_from_occupancies(&occupancies, i, graph_len, longest);
            states += model.stage_states();
            best_response_vi_with_factor(model, &pm, factors[i])
        })
        .collect();
    Ok((tables, states))
}

fn dump_models(config: &PlannerConfig, scenario: &Scenario, step: u32, level: &str, models: &[StaticTaskModel<'_>]) -> Result<()> {
    let Some(dir) = &config.dump_dir else {
        return Ok(());
    };
    fs::create_dir_all(dir)?;
    for (agent, model) in models.iter().enumerate() {
        let params = crate::world::Params {
            horizon: model.horizon,
            ..scenario.params
        };
        let doc = model.graph.to_scenario_file(&model.tasks, &[model.agent], params);
        let path = dir.join(format!("t{step:03}_{level}_agent{agent}.json"));
        fs::write(path, serde_json::to_string_pretty(&doc).expect("scenario document serializes"))?;
    }
    Ok(())
}

/// One planning level: per-agent models over `graph`, presence-aware values,
/// depth-first priority lists, and coordinated targets.
fn plan_level(
    graph: &WorldGraph,
    positions: &[VertexId],
    tasks: &[BTreeSet<VertexId>],
    scenario: &Scenario,
    step: u32,
    config: &PlannerConfig,
    level: &str,
) -> Result<(Vec<VertexId>, Vec<Vec<VertexId>>, u64)> {
    let models = positions
        .iter()
        .zip(tasks)
        .map(|(&pos, t)| build_static_task_model(graph, pos, t, scenario, step))
        .collect::<Result<Vec<_>>>()?;
    dump_models(config, scenario, step, level, &models)?;
    let (tables, states) = best_responses(&models, positions, config)?;
    let priorities = models
        .iter()
        .zip(&tables)
        .map(|(model, table)| {
            let targets = dfs_priority(model, table);
            let top = *targets.first().ok_or(Error::EmptyTaskSet)?;
            let hops = model.graph.bfs(model.agent)[top.index()].ok_or(Error::UnreachableTask(top))?;
            Ok(PriorityList {
                targets,
                hops_to_top: hops,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let targets = coordinate_targets(&priorities)?;
    Ok((targets, priorities.into_iter().map(|p| p.targets).collect(), states))
}

pub fn spatap_ext_plan(scenario: &Scenario, state: &WorldState) -> Result<PlanResult> {
    spatap_ext_plan_with(scenario, state, &PlannerConfig::default())
}

/// Cluster-level assignment followed by building-level targeting inside the
/// assigned cluster; each agent then takes the first hop toward its target.
pub fn spatap_ext_plan_with(scenario: &Scenario, state: &WorldState, config: &PlannerConfig) -> Result<PlanResult> {
    if state.burning.is_empty() || state.agent_positions.is_empty() {
        return Ok(PlanResult::stay(state));
    }
    let step = state.time_step;
    let clustered = cluster_tasks(&scenario.graph, &state.burning, scenario.params.d)?;
    let cluster_positions: Vec<VertexId> = state
        .agent_positions
        .iter()
        .map(|&p| clustered.map_vertex(p))
        .collect();
    let all_clusters = clustered.burning();
    let (assigned, _, cluster_states) = plan_level(
        &clustered.graph,
        &cluster_positions,
        &vec![all_clusters; cluster_positions.len()],
        scenario,
        step,
        config,
        "clusters",
    )?;

    let member_tasks: Vec<BTreeSet<VertexId>> = assigned
        .iter()
        .map(|&c| {
            clustered
                .cluster_at(c)
                .map(|cluster| cluster.members.clone())
                .ok_or(Error::EmptyTaskSet)
        })
        .collect::<Result<_>>()?;
    let (targets, priorities, building_states) = plan_level(
        &scenario.graph,
        &state.agent_positions,
        &member_tasks,
        scenario,
        step,
        config,
        "buildings",
    )?;

    let moves = state
        .agent_positions
        .iter()
        .zip(&targets)
        .map(|(&pos, &target)| first_hop(&scenario.graph, pos, target))
        .collect();
    Ok(PlanResult {
        targets,
        priorities,
        action: JointAction::new(moves),
        states_enumerated: cluster_states + building_states,
    })
}
