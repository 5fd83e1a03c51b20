use std::path::Path;
use std::process::{Command, Output};

use rescue_spatap::bench::read_summary;
use rescue_spatap::planner::PlannerKind;
use rescue_spatap::world::load_scenario;

fn spatap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatap")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = spatap(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn maps_generate_run() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    ok(&["maps", "--out", s(&maps)]);
    let city = maps.join("city0.json");
    assert!(city.exists());

    let scenario = dir.path().join("s.json");
    let gen = |seed: &str| {
        ok(&[
            "generate", "--map", s(&city), "--buildings", "8", "--ignitions", "3", "--agents", "2", "--seed", seed,
            "--out", s(&scenario),
        ]);
        std::fs::read_to_string(&scenario).unwrap()
    };
    assert_eq!(gen("4"), gen("4"));
    let loaded = load_scenario(&scenario).unwrap();
    assert_eq!(loaded.graph.buildings().len(), 8);
    assert_eq!(loaded.ignitions.len(), 3);
    assert_eq!(loaded.agent_starts.len(), 2);

    let trace = dir.path().join("trace.csv");
    let first = ok(&[
        "run", "--scenario", s(&scenario), "--planner", "spatap_ext", "--horizon", "6", "--seed", "1", "--trace",
        s(&trace),
    ]);
    let second = ok(&["run", "--scenario", s(&scenario), "--planner", "spatap_ext", "--horizon", "6", "--seed", "1"]);
    assert_eq!(first, second);
    let avg: f64 = first.trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&avg));
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 7);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "bench",
        "--preset",
        "table1",
        "--overrides",
        "scenarios=2,samples=2,horizon=5,planners=random+greedy+optimal",
        "--out",
        s(&out),
    ]);
    let rows = read_summary(&out.join("summary.csv")).unwrap();
    let kinds: Vec<_> = rows.iter().map(|r| r.planner).collect();
    assert_eq!(kinds, [PlannerKind::Random, PlannerKind::Greedy, PlannerKind::Optimal]);
    assert!(out.join("runs.csv").exists());
    assert!(out.join("steps.csv").exists());
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"vertices\": 3}").unwrap();
    let out = spatap(&["run", "--scenario", s(&bad), "--planner", "greedy"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let maps = dir.path().join("maps");
    ok(&["maps", "--out", s(&maps)]);
    let out = spatap(&["run", "--scenario", s(&maps.join("city0.json")), "--planner", "dcop"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_joint_model_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    ok(&["maps", "--out", s(&maps)]);
    let scenario = dir.path().join("big.json");
    ok(&[
        "generate", "--map", s(&maps.join("city0.json")), "--buildings", "40", "--ignitions", "3", "--agents", "3",
        "--out", s(&scenario),
    ]);
    let out = spatap(&["run", "--scenario", s(&scenario), "--planner", "optimal"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
