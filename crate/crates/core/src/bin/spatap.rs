use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rescue_spatap::bench::{
    builtin_cities, emit_csv, generate_scenario, preset_specs, run_experiment, sample_district, Preset,
};
use rescue_spatap::planner::{make_planner, PlannerConfig, PlannerKind};
use rescue_spatap::simulator::run_episode;
use rescue_spatap::world::{load_scenario, Params, Scenario, WorldGraph};
use rescue_spatap::{Error, Result};

#[derive(Parser)]
#[command(name = "spatap", version, about = "Fire-fighting task allocation planners and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut a district from a map and place ignitions and agents.
    Generate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        buildings: usize,
        #[arg(long)]
        ignitions: usize,
        #[arg(long)]
        agents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one episode and print the average per-step reward.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        planner: PlannerKind,
        /// Episode length; defaults to the scenario's horizon.
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-step trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write every approximate model built during planning.
        #[arg(long)]
        dump_models: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run a benchmark preset and write summary.csv, runs.csv and steps.csv.
    Bench {
        #[arg(long)]
        preset: Preset,
        /// Comma-separated key=value overrides, e.g. k=3,p=0.05,scenarios=5.
        #[arg(long, default_value = "")]
        overrides: String,
        #[arg(long)]
        out: PathBuf,
        /// Directory of map files to use instead of the built-in cities.
        #[arg(long)]
        maps: Option<PathBuf>,
    },
    /// Write the built-in synthetic city maps as scenario files.
    Maps {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_map(path: &Path) -> Result<WorldGraph> {
    Ok(load_scenario(path)?.graph)
}

fn load_maps(dir: &Path) -> Result<Vec<WorldGraph>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!("no map files in {}", dir.display())));
    }
    paths.iter().map(|p| load_map(p)).collect()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            map,
            buildings,
            ignitions,
            agents,
            seed,
            out,
        } => {
            let map = load_map(&map)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let district = sample_district(&map, buildings, &mut rng)?;
            let scenario = generate_scenario(&district, ignitions, agents, Params::default(), &mut rng)?;
            scenario.save(&out)?;
        }
        Command::Run {
            scenario,
            planner,
            horizon,
            seed,
            trace,
            dump_models,
            tau,
        } => {
            let mut scenario = load_scenario(&scenario)?;
            if let Some(h) = horizon {
                scenario = scenario.with_params(Params {
                    horizon: h,
                    ..scenario.params
                })?;
            }
            let config = PlannerConfig {
                tau,
                dump_dir: dump_models,
                ..PlannerConfig::default()
            };
            let result = run_with(&scenario, planner, &config, seed)?;
            if let Some(path) = trace {
                result.save_csv(&path)?;
            }
            println!("{:.9}", result.average_reward);
        }
        Command::Bench {
            preset,
            overrides,
            out,
            maps,
        } => {
            let maps = match maps {
                Some(dir) => load_maps(&dir)?,
                None => Vec::new(),
            };
            for (name, mut spec) in preset_specs(preset) {
                spec.apply_overrides(&overrides)?;
                spec.maps = maps.clone();
                let report = run_experiment(&spec)?;
                let dir = if name.is_empty() { out.clone() } else { out.join(&name) };
                emit_csv(&report, &dir)?;
                for s in &report.summaries {
                    let pct = s.pct_of_optimal.map(|p| format!(" ({p:.2}% of optimal)")).unwrap_or_default();
                    let label = if name.is_empty() { String::new() } else { format!("{name} ") };
                    println!("{label}{:<12} {:.4} ± {:.4}{pct}", s.planner.name(), s.mean_reward, s.std_reward);
                }
            }
        }
        Command::Maps { out } => {
            fs::create_dir_all(&out)?;
            for (i, graph) in builtin_cities().into_iter().enumerate() {
                let scenario = Scenario::new(graph, BTreeSet::new(), Vec::new(), Params::default())?;
                scenario.save(&out.join(format!("city{i}.json")))?;
            }
        }
    }
    Ok(())
}

fn run_with(
    scenario: &Scenario,
    kind: PlannerKind,
    config: &PlannerConfig,
    seed: u64,
) -> Result<rescue_spatap::simulator::EpisodeTrace> {
    let mut planner = make_planner(kind, scenario, config, None, seed)?;
    run_episode(scenario, |state| Ok(planner.plan(state)?.action), seed, scenario.params.horizon)
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::StateSpaceTooLarge { .. } => 3,
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::UnknownVertex(_)
        | Error::InvalidAction { .. }
        | Error::InsufficientBuildings { .. }
        | Error::NonPositiveTemperature(_)
        | Error::EmptyTaskSet
        | Error::UnreachableTask(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
