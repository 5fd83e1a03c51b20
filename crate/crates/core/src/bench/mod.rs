//! Scenario generation and experiment orchestration.

mod city;
mod report;

use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use city::{builtin_cities, generate_scenario, sample_district, synthetic_city, CityLayout, CITY_LAYOUTS};
pub use report::{emit_csv, read_summary, ExperimentReport, PlannerSummary, RunRecord, SummaryRow};

use crate::error::{Error, Result};
use crate::exact::joint_value_iteration;
use crate::planner::{make_planner, PlannerConfig, PlannerKind};
use crate::simulator::run_episode;
use crate::world::{Params, Scenario, WorldGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub scenarios: usize,
    pub samples_per_scenario: usize,
    pub buildings: usize,
    pub agents: usize,
    pub ignitions: usize,
    /// Episode length. Also written into each scenario's params.
    pub horizon: u32,
    /// Kept sorted in declaration order without duplicates.
    pub planners: Vec<PlannerKind>,
    pub seed: u64,
    pub d: f64,
    pub p: f64,
    pub k: u32,
    pub gamma: f64,
    pub tau: Option<f64>,
    pub rcrs_max_time: u32,
    pub horizon_cap: u32,
    /// Source maps; scenario `s` is cut from map `s % maps.len()`. Empty means
    /// the built-in synthetic cities.
    pub maps: Vec<WorldGraph>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let params = Params::default();
        ExperimentSpec {
            scenarios: 1,
            samples_per_scenario: 1,
            buildings: 8,
            agents: 2,
            ignitions: 3,
            horizon: params.horizon,
            planners: vec![PlannerKind::Random],
            seed: 0,
            d: params.d,
            p: params.p,
            k: params.k,
            gamma: params.gamma,
            tau: None,
            rcrs_max_time: params.rcrs_max_time,
            horizon_cap: PlannerConfig::default().horizon_cap,
            maps: Vec::new(),
        }
    }
}

impl ExperimentSpec {
    pub fn params(&self) -> Params {
        Params {
            d: self.d,
            p: self.p,
            k: self.k,
            gamma: self.gamma,
            horizon: self.horizon,
            rcrs_max_time: self.rcrs_max_time,
        }
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            tau: self.tau,
            horizon_cap: self.horizon_cap,
            dump_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("scenarios", self.scenarios),
            ("samples", self.samples_per_scenario),
            ("buildings", self.buildings),
            ("agents", self.agents),
            ("ignitions", self.ignitions),
        ] {
            if value == 0 {
                return Err(Error::Validation(format!("{name} must be at least 1")));
            }
        }
        if self.planners.is_empty() {
            return Err(Error::Validation("no planners selected".into()));
        }
        if self.ignitions > self.buildings {
            return Err(Error::InsufficientBuildings {
                required: self.ignitions,
                available: self.buildings,
            });
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return Err(Error::NonPositiveTemperature(tau));
            }
        }
        self.params().validate()
    }

    /// Applies one `key=value` override. Planner lists use `+` as separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("bad value {value:?} for {key}")))
        }
        match key.trim() {
            "scenarios" => self.scenarios = num(key, value)?,
            "samples" | "samples_per_scenario" => self.samples_per_scenario = num(key, value)?,
            "buildings" => self.buildings = num(key, value)?,
            "agents" => self.agents = num(key, value)?,
            "ignitions" => self.ignitions = num(key, value)?,
            "horizon" | "h" => self.horizon = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "tau" => self.tau = Some(num(key, value)?),
            "rcrs_max_time" => self.rcrs_max_time = num(key, value)?,
            "horizon_cap" => self.horizon_cap = num(key, value)?,
            "planners" => {
                let mut planners = value
                    .split('+')
                    .map(str::parse)
                    .collect::<Result<Vec<PlannerKind>>>()?;
                planners.sort();
                planners.dedup();
                self.planners = planners;
            }
            other => return Err(Error::Validation(format!("unknown override {other:?}"))),
        }
        Ok(())
    }

    /// Applies a comma-separated `key=value` list.
    pub fn apply_overrides(&mut self, overrides: &str) -> Result<()> {
        for item in overrides.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("override {item:?} is not key=value")))?;
            self.set(key, value)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Scalability,
    Statespace,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Preset::Table1),
            "scalability" => Ok(Preset::Scalability),
            "statespace" => Ok(Preset::Statespace),
            _ => Err(Error::Validation(format!("unknown preset {s:?}"))),
        }
    }
}

/// 50 scenarios of 8 buildings, 2 agents and 3 ignitions, 100 samples each,
/// all planners, 20-step episodes.
pub fn table1_spec() -> ExperimentSpec {
    ExperimentSpec {
        scenarios: 50,
        samples_per_scenario: 100,
        horizon: 20,
        rcrs_max_time: 20,
        planners: PlannerKind::ALL.to_vec(),
        seed: 2013,
        ..ExperimentSpec::default()
    }
}

/// Five agents, 50-step episodes, 50 runs per point.
pub fn scalability_spec(buildings: usize, agents: usize) -> ExperimentSpec {
    ExperimentSpec {
        scenarios: 50,
        samples_per_scenario: 1,
        buildings,
        agents,
        horizon: 50,
        planners: vec![PlannerKind::Random, PlannerKind::Greedy, PlannerKind::SpatapExt],
        seed: 52,
        ..ExperimentSpec::default()
    }
}

/// Ten runs of one 10-building, 2-agent scenario for per-step state counts.
pub fn statespace_spec() -> ExperimentSpec {
    ExperimentSpec {
        scenarios: 1,
        samples_per_scenario: 10,
        buildings: 10,
        agents: 2,
        horizon: 50,
        planners: vec![PlannerKind::Spatap, PlannerKind::SpatapExt],
        seed: 4,
        ..ExperimentSpec::default()
    }
}

/// Named specs making up a preset. Names are output subdirectories; a single
/// spec has an empty name.
pub fn preset_specs(preset: Preset) -> Vec<(String, ExperimentSpec)> {
    match preset {
        Preset::Table1 => vec![(String::new(), table1_spec())],
        Preset::Statespace => vec![(String::new(), statespace_spec())],
        Preset::Scalability => {
            let mut specs: Vec<_> = [8, 16, 32, 64]
                .into_iter()
                .map(|b| (format!("buildings_{b}"), scalability_spec(b, 5)))
                .collect();
            specs.extend(
                [2, 4, 8]
                    .into_iter()
                    .map(|a| (format!("agents_{a}"), scalability_spec(32, a))),
            );
            specs
        }
    }
}

const SCENARIO_STREAM: u64 = 1;
const ENVIRONMENT_STREAM: u64 = 2;
const POLICY_STREAM: u64 = 3;

/// A 64-bit seed from the master seed and a tagged tuple of ids.
pub fn derive_seed(master: u64, tag: u64, scenario: usize, sample: usize, planner: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag << 56 | (scenario as u64 & 0xff_ffff) << 32 | (sample as u64 & 0xff_ffff) << 8 | planner);
    rng.next_u64()
}

/// The scenario with id `scenario`, cut from its source map.
pub fn build_scenario(spec: &ExperimentSpec, maps: &[WorldGraph], scenario: usize) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, SCENARIO_STREAM, scenario, 0, 0));
    let map = &maps[scenario % maps.len()];
    let district = sample_district(map, spec.buildings, &mut rng)?;
    generate_scenario(&district, spec.ignitions, spec.agents, spec.params(), &mut rng)
}

/// Every scenario of the spec, in id order.
pub fn build_scenarios(spec: &ExperimentSpec) -> Result<Vec<Scenario>> {
    let builtin;
    let maps = if spec.maps.is_empty() {
        builtin = builtin_cities();
        &builtin
    } else {
        &spec.maps
    };
    (0..spec.scenarios)
        .map(|s| build_scenario(spec, maps, s).map_err(|e| wrap(s, e)))
        .collect()
}

fn wrap(scenario: usize, source: Error) -> Error {
    Error::Scenario {
        scenario,
        source: Box::new(source),
    }
}

/// Runs every scenario × sample × planner episode. Planners on the same
/// scenario and sample share the fire-propagation seed. The optimal value
/// table is solved once per scenario.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut planners = spec.planners.clone();
    planners.sort();
    planners.dedup();
    let config = spec.planner_config();
    let scenarios = build_scenarios(spec)?;
    let mut runs = Vec::with_capacity(spec.scenarios * spec.samples_per_scenario * planners.len());
    for (id, scenario) in scenarios.iter().enumerate() {
        let table = if planners.contains(&PlannerKind::Optimal) {
            Some(joint_value_iteration(scenario, spec.horizon).map_err(|e| wrap(id, e))?)
        } else {
            None
        };
        let jobs: Vec<(usize, PlannerKind)> = (0..spec.samples_per_scenario)
            .flat_map(|sample| planners.iter().map(move |&k| (sample, k)))
            .collect();
        let records = jobs
            .par_iter()
            .map(|&(sample, kind)| {
                run_one(spec, &config, scenario, table.as_ref(), id, sample, kind).map_err(|e| wrap(id, e))
            })
            .collect::<Result<Vec<_>>>()?;
        runs.extend(records);
    }
    Ok(ExperimentReport::from_runs(&planners, runs))
}

fn run_one(
    spec: &ExperimentSpec,
    config: &PlannerConfig,
    scenario: &Scenario,
    table: Option<&crate::exact::ValueTable>,
    scenario_id: usize,
    sample_id: usize,
    kind: PlannerKind,
) -> Result<RunRecord> {
    let policy_seed = derive_seed(spec.seed, POLICY_STREAM, scenario_id, sample_id, kind.id());
    let env_seed = derive_seed(spec.seed, ENVIRONMENT_STREAM, scenario_id, sample_id, 0);
    let mut planner = make_planner(kind, scenario, config, table, policy_seed)?;
    let mut step_states = Vec::with_capacity(spec.horizon as usize);
    let mut step_burning = Vec::with_capacity(spec.horizon as usize);
    let mut step_millis = Vec::with_capacity(spec.horizon as usize);
    let trace = run_episode(
        scenario,
        |state| {
            let start = Instant::now();
            let plan = planner.plan(state)?;
            step_millis.push(start.elapsed().as_secs_f64() * 1e3);
            step_states.push(plan.states_enumerated);
            step_burning.push(state.burning.len());
            Ok(plan.action)
        },
        env_seed,
        spec.horizon,
    )?;
    Ok(RunRecord {
        scenario_id,
        sample_id,
        planner: kind,
        avg_reward: trace.average_reward,
        step_states,
        step_burning,
        step_millis,
    })
}
