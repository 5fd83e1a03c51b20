use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::planner::PlannerKind;

/// One episode of one planner.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub scenario_id: usize,
    pub sample_id: usize,
    pub planner: PlannerKind,
    pub avg_reward: f64,
    /// States enumerated by each plan call, one entry per step.
    pub step_states: Vec<u64>,
    /// Burning buildings when each plan call was made.
    pub step_burning: Vec<usize>,
    pub step_millis: Vec<f64>,
}

impl RunRecord {
    pub fn states_enumerated(&self) -> f64 {
        mean(self.step_states.iter().map(|&s| s as f64))
    }

    pub fn plan_millis(&self) -> f64 {
        mean(self.step_millis.iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerSummary {
    pub planner: PlannerKind,
    pub runs: usize,
    pub mean_reward: f64,
    /// Sample standard deviation of per-run averages.
    pub std_reward: f64,
    pub pct_of_optimal: Option<f64>,
    pub mean_states: f64,
    pub mean_plan_millis: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    /// In planner declaration order.
    pub summaries: Vec<PlannerSummary>,
    /// Ordered by scenario, sample, then planner.
    pub runs: Vec<RunRecord>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values.iter().copied());
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

impl ExperimentReport {
    pub fn from_runs(planners: &[PlannerKind], mut runs: Vec<RunRecord>) -> Self {
        runs.sort_by_key(|r| (r.scenario_id, r.sample_id, r.planner));
        let mut summaries: Vec<PlannerSummary> = planners
            .iter()
            .map(|&planner| {
                let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.planner == planner).collect();
                let rewards: Vec<f64> = mine.iter().map(|r| r.avg_reward).collect();
                PlannerSummary {
                    planner,
                    runs: mine.len(),
                    mean_reward: mean(rewards.iter().copied()),
                    std_reward: sample_std(&rewards),
                    pct_of_optimal: None,
                    mean_states: mean(mine.iter().map(|r| r.states_enumerated())),
                    mean_plan_millis: mean(mine.iter().map(|r| r.plan_millis())),
                }
            })
            .collect();
        summaries.sort_by_key(|s| s.planner);
        if let Some(optimal) = summaries.iter().find(|s| s.planner == PlannerKind::Optimal).map(|s| s.mean_reward) {
            for s in &mut summaries {
                s.pct_of_optimal = Some(100.0 * s.mean_reward / optimal);
            }
        }
        ExperimentReport { summaries, runs }
    }

    pub fn summary(&self, planner: PlannerKind) -> Option<&PlannerSummary> {
        self.summaries.iter().find(|s| s.planner == planner)
    }

    pub fn runs_of(&self, planner: PlannerKind) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.planner == planner)
    }
}

/// Writes `summary.csv`, `runs.csv` and the per-step `steps.csv` into `dir`.
pub fn emit_csv(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["planner", "mean_reward", "std_reward", "pct_of_optimal"])?;
    for s in &report.summaries {
        w.write_record([
            s.planner.name().to_string(),
            format!("{:.9}", s.mean_reward),
            format!("{:.9}", s.std_reward),
            s.pct_of_optimal.map(|p| format!("{p:.9}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
    w.write_record([
        "scenario_id",
        "sample_id",
        "planner",
        "avg_reward",
        "states_enumerated",
        "plan_millis",
    ])?;
    for r in &report.runs {
        w.write_record([
            r.scenario_id.to_string(),
            r.sample_id.to_string(),
            r.planner.name().to_string(),
            format!("{:.9}", r.avg_reward),
            format!("{:.3}", r.states_enumerated()),
            format!("{:.6}", r.plan_millis()),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("steps.csv"))?;
    w.write_record(["scenario_id", "sample_id", "planner", "t", "burning", "states_enumerated", "plan_millis"])?;
    for r in &report.runs {
        for (t, ((states, burning), millis)) in r.step_states.iter().zip(&r.step_burning).zip(&r.step_millis).enumerate() {
            w.write_record([
                r.scenario_id.to_string(),
                r.sample_id.to_string(),
                r.planner.name().to_string(),
                t.to_string(),
                burning.to_string(),
                states.to_string(),
                format!("{millis:.6}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A parsed `summary.csv` row.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub planner: PlannerKind,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub pct_of_optimal: Option<f64>,
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, got {}", record.len())));
        }
        let num = |i: usize| record[i].parse::<f64>().map_err(|e| parse_err(e.to_string()));
        rows.push(SummaryRow {
            planner: record[0].parse()?,
            mean_reward: num(1)?,
            std_reward: num(2)?,
            pct_of_optimal: if record[3].is_empty() { None } else { Some(num(3)?) },
        });
    }
    Ok(rows)
}
