//! Online planners. Every planner maps the current joint state to a joint
//! action and is re-run from scratch at every simulator step.

mod baselines;
mod ext;

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use baselines::{greedy_plan, random_plan, single_agent_plan, single_agent_plan_with, spatap_plan, spatap_plan_with};
pub use ext::{spatap_ext_plan, spatap_ext_plan_with};

use crate::approx::StaticTaskModel;
use crate::error::{Error, Result};
use crate::exact::{joint_value_iteration, OptimalPolicy, ValueTable};
use crate::presence::StageValueTable;
use crate::simulator::JointAction;
use crate::world::{Scenario, VertexId, WorldGraph, WorldState};

/// Planners in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlannerKind {
    Random,
    Greedy,
    SingleAgent,
    Spatap,
    SpatapExt,
    Optimal,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 6] = [
        PlannerKind::Random,
        PlannerKind::Greedy,
        PlannerKind::SingleAgent,
        PlannerKind::Spatap,
        PlannerKind::SpatapExt,
        PlannerKind::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Random => "Random",
            PlannerKind::Greedy => "Greedy",
            PlannerKind::SingleAgent => "SingleAgent",
            PlannerKind::Spatap => "Spatap",
            PlannerKind::SpatapExt => "SpatapExt",
            PlannerKind::Optimal => "Optimal",
        }
    }

    pub fn id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    /// Case-insensitive; `-` and `_` are ignored, so `spatap-ext` works.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .or(match key.as_str() {
                "sa" => Some(PlannerKind::SingleAgent),
                _ => None,
            })
            .ok_or_else(|| Error::Validation(format!("unknown planner {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Boltzmann temperature; `None` uses a fixed fraction of each model's
    /// largest task reward.
    pub tau: Option<f64>,
    /// Horizon cap for the full-graph planners (`Spatap`, `SingleAgent`).
    pub horizon_cap: u32,
    /// Write every approximate model to this directory as a scenario file.
    pub dump_dir: Option<PathBuf>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            tau: None,
            horizon_cap: 300,
            dump_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    /// Committed target per agent; the agent's own vertex when it has none.
    pub targets: Vec<VertexId>,
    /// Per-agent task priority order.
    pub priorities: Vec<Vec<VertexId>>,
    pub action: JointAction,
    /// Stage-state pairs backed up by the approximate models of this call.
    pub states_enumerated: u64,
}

impl PlanResult {
    fn stay(state: &WorldState) -> Self {
        PlanResult {
            targets: state.agent_positions.clone(),
            priorities: vec![Vec::new(); state.agent_positions.len()],
            action: JointAction::stay(state),
            states_enumerated: 0,
        }
    }
}

/// One agent's ranked targets and its hop distance to the first of them.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorityList {
    pub targets: Vec<VertexId>,
    pub hops_to_top: u32,
}

/// Assigns one target per agent. Agents go nearest-first (ties by index) and
/// take their best target not yet taken; an agent whose targets are all taken
/// shares its top choice.
pub fn coordinate_targets(priorities: &[PriorityList]) -> Result<Vec<VertexId>> {
    if let Some(agent) = priorities.iter().position(|p| p.targets.is_empty()) {
        return Err(Error::EmptyPriorityList(agent));
    }
    let mut order: Vec<usize> = (0..priorities.len()).collect();
    order.sort_by_key(|&i| (priorities[i].hops_to_top, i));
    let mut taken = BTreeSet::new();
    let mut out = vec![VertexId(0); priorities.len()];
    for i in order {
        let list = &priorities[i].targets;
        let choice = list.iter().copied().find(|t| !taken.contains(t)).unwrap_or(list[0]);
        taken.insert(choice);
        out[i] = choice;
    }
    Ok(out)
}

/// Next vertex on a shortest path from `from` to `to`; the lowest id wins
/// among equally short options.
pub fn first_hop(graph: &WorldGraph, from: VertexId, to: VertexId) -> VertexId {
    if from == to {
        return from;
    }
    let dist = graph.bfs(to);
    let Some(here) = dist[from.index()] else {
        return from;
    };
    graph
        .neighbors(from)
        .iter()
        .copied()
        .find(|w| dist[w.index()] == Some(here - 1))
        .unwrap_or(from)
}

/// Tasks of a model in depth-first order from the agent, expanding children
/// by descending value (lowest id first among equals). The value of moving
/// `u → w` at DFS depth `t` is `Q(min(t, h - 1), u, w)`.
pub fn dfs_priority(model: &StaticTaskModel<'_>, values: &StageValueTable) -> Vec<VertexId> {
    let last_stage = values.horizon().saturating_sub(1);
    let mut visited = BTreeSet::new();
    let mut order = Vec::new();
    let mut stack = vec![(model.agent, 0u32)];
    while let Some((u, depth)) = stack.pop() {
        if !visited.insert(u) {
            continue;
        }
        if model.tasks.contains(&u) {
            order.push(u);
        }
        let mut children: Vec<(VertexId, f64)> = values
            .q_row(depth.min(last_stage), u)
            .into_iter()
            .filter(|(w, _)| *w != u && !visited.contains(w))
            .collect();
        // best first after popping: push in reverse preference order
        children.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (w, _) in children.into_iter().rev() {
            stack.push((w, depth + 1));
        }
    }
    order
}

/// Picks successors greedily from per-agent values. Agents sharing a vertex
/// (processed by index) avoid successors already chosen from that vertex while
/// alternatives remain.
fn colocated_argmax(state: &WorldState, values: &[StageValueTable]) -> JointAction {
    let mut chosen: Vec<(VertexId, VertexId)> = Vec::new();
    let moves = state
        .agent_positions
        .iter()
        .zip(values)
        .map(|(&pos, table)| {
            let mut row = table.q_row(0, pos);
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let pick = row
                .iter()
                .map(|(s, _)| *s)
                .find(|s| !chosen.contains(&(pos, *s)))
                .or(row.first().map(|(s, _)| *s))
                .unwrap_or(pos);
            chosen.push((pos, pick));
            pick
        })
        .collect();
    JointAction::new(moves)
}

pub trait Planner: Send {
    fn kind(&self) -> PlannerKind;
    fn plan(&mut self, state: &WorldState) -> Result<PlanResult>;
}

struct FnPlanner<'a> {
    kind: PlannerKind,
    scenario: &'a Scenario,
    config: PlannerConfig,
}

impl Planner for FnPlanner<'_> {
    fn kind(&self) -> PlannerKind {
        self.kind
    }

    fn plan(&mut self, state: &WorldState) -> Result<PlanResult> {
        let (s, c) = (self.scenario, &self.config);
        match self.kind {
            PlannerKind::Greedy => greedy_plan(s, state),
            PlannerKind::SingleAgent => single_agent_plan_with(s, state, c),
            PlannerKind::Spatap => spatap_plan_with(s, state, c),
            PlannerKind::SpatapExt => spatap_ext_plan_with(s, state, c),
            PlannerKind::Random | PlannerKind::Optimal => unreachable!("handled by dedicated planners"),
        }
    }
}

struct RandomPlanner<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
}

impl Planner for RandomPlanner<'_> {
    fn kind(&self) -> PlannerKind {
        PlannerKind::Random
    }

    fn plan(&mut self, state: &WorldState) -> Result<PlanResult> {
        Ok(random_plan(self.scenario, state, &mut self.rng))
    }
}

struct OptimalPlanner<'a> {
    policy: OptimalPolicy<'a>,
    states: u64,
}

impl Planner for OptimalPlanner<'_> {
    fn kind(&self) -> PlannerKind {
        PlannerKind::Optimal
    }

    fn plan(&mut self, state: &WorldState) -> Result<PlanResult> {
        let action = self.policy.action(state)?;
        Ok(PlanResult {
            targets: action.moves.clone(),
            priorities: vec![Vec::new(); action.moves.len()],
            action,
            states_enumerated: self.states,
        })
    }
}

/// Builds a planner. `seed` drives the random planner only. The optimal
/// planner reuses `table` when given and otherwise solves the scenario for its
/// episode horizon.
pub fn make_planner<'a>(
    kind: PlannerKind,
    scenario: &'a Scenario,
    config: &PlannerConfig,
    table: Option<&'a ValueTable>,
    seed: u64,
) -> Result<Box<dyn Planner + 'a>> {
    Ok(match kind {
        PlannerKind::Random => Box::new(RandomPlanner {
            scenario,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }),
        PlannerKind::Optimal => {
            let table = match table {
                Some(t) => Cow::Borrowed(t),
                None => Cow::Owned(joint_value_iteration(scenario, scenario.params.horizon)?),
            };
            let states = table.index().state_count() as u64;
            Box::new(OptimalPlanner {
                policy: OptimalPolicy::from_cow(table, scenario)?,
                states,
            })
        }
        _ => Box::new(FnPlanner {
            kind,
            scenario,
            config: config.clone(),
        }),
    })
}
