use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gco_core::metrics::{read_csv, CSV_HEADER};
use gco_core::scenario::{corridor, crossed_diagonal, empty_map, push_square, Pattern, Scenario};
use tempfile::TempDir;

fn gco(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gco"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn save(dir: &Path, s: &Scenario) -> String {
    let path = dir.join(format!("{}.json", s.name));
    fs::write(&path, s.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn polylines(svg: &str) -> Vec<usize> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| {
            let pts = l.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
            pts.split_whitespace().count()
        })
        .collect()
}

fn straight_line() -> Scenario {
    let mut s = crossed_diagonal();
    s.name = "straight".into();
    s.starts = vec![[0.5, 0.5]];
    s.goals = vec![[1.5, 0.5]];
    s
}

#[test]
fn plan_writes_trajectories_and_metrics() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &crossed_diagonal());
    let out = gco(dir.path(), &["plan", "--scenario", &scenario, "--seed", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some(CSV_HEADER));
    let rows = read_csv(fs::File::open(dir.path().join("crossed-diagonal-gspi-2.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].success);
    assert!(rows[0].avg_iter_ms.is_none());
    let jsonl = fs::read_to_string(dir.path().join("crossed-diagonal-gspi-2.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2 * (rows[0].iterations + 1));
}

#[test]
fn malformed_scenario_exits_two() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\n  \"schema_version\": 1,\n  \"name\": \n}").unwrap();
    let out = gco(dir.path(), &["plan", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn unknown_schema_version_exits_two() {
    let dir = TempDir::new().unwrap();
    let text = crossed_diagonal().to_json().replace("\"schema_version\": 1", "\"schema_version\": 99");
    let path = dir.path().join("future.json");
    fs::write(&path, text).unwrap();
    let out = gco(dir.path(), &["plan", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stuck_pibt_corridor_exits_one() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &corridor(1));
    let out = gco(dir.path(), &["plan", "--scenario", &scenario, "--algo", "pibt", "--max-iters", "400"]);
    assert_eq!(code(&out), 1);
    // The partial plan is still written.
    assert!(dir.path().join("corridor-1-pibt-1.jsonl").exists());
    let ok = gco(dir.path(), &["plan", "--scenario", &scenario, "--algo", "gspi"]);
    assert_eq!(code(&ok), 0);
}

#[test]
fn straight_plan_renders_one_polyline() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &straight_line());
    assert_eq!(code(&gco(dir.path(), &["plan", "--scenario", &scenario])), 0);
    let traj = dir.path().join("straight-gspi-1.jsonl");
    let out = gco(
        dir.path(),
        &["render", "--scenario", &scenario, "--trajectories", traj.to_str().unwrap(), "--frames", "frames"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("plan.svg")).unwrap();
    // 1 m at 0.05 m per step.
    assert_eq!(polylines(&svg), [21]);
    assert_eq!(fs::read_dir(dir.path().join("frames")).unwrap().count(), 21);
}

#[test]
fn empty_trajectory_file_renders_map_only() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &crossed_diagonal());
    let traj = dir.path().join("empty.jsonl");
    fs::write(&traj, "").unwrap();
    let out = gco(dir.path(), &["render", "--scenario", &scenario, "--trajectories", traj.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let svg = fs::read_to_string(dir.path().join("plan.svg")).unwrap();
    assert!(polylines(&svg).is_empty());
    assert_eq!(svg.matches("<circle").count(), 4);
}

#[test]
fn mismatched_trajectory_file_exits_two() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &crossed_diagonal());
    let traj = dir.path().join("one.jsonl");
    fs::write(&traj, "{\"robot\":0,\"t\":0,\"x\":0.5,\"y\":0.5}\n").unwrap();
    let out = gco(dir.path(), &["render", "--scenario", &scenario, "--trajectories", traj.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("1 robots but the scenario has 2"));
}

#[test]
fn large_render_is_well_formed_svg() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &empty_map(Pattern::Blocks, 125));
    assert_eq!(code(&gco(dir.path(), &["plan", "--scenario", &scenario])), 0);
    let traj = dir.path().join("empty-blocks-125-gspi-1.jsonl");
    let out = gco(dir.path(), &["render", "--scenario", &scenario, "--trajectories", traj.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let svg = fs::read_to_string(dir.path().join("plan.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("valid XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(lines, 125);
}

#[test]
fn gco_pushes_the_square() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &push_square());
    let out = gco(dir.path(), &["gco", "--scenario", &scenario, "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("push-square-gco-heuristic-3.json")).unwrap()).unwrap();
    assert_eq!(trace["success"], true);
    assert!(trace["actions"].as_u64().unwrap() >= 1);
}

#[test]
fn gco_without_actions_fails() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &push_square());
    let out = gco(dir.path(), &["gco", "--scenario", &scenario, "--max-actions", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn gco_goal_count_mismatch_exits_two() {
    let dir = TempDir::new().unwrap();
    let mut s = push_square();
    s.object_goals.push([3.0, 2.0, 0.0]);
    let scenario = save(dir.path(), &s);
    let out = gco(dir.path(), &["gco", "--scenario", &scenario]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gco_requires_a_policy_file_for_external() {
    let dir = TempDir::new().unwrap();
    let scenario = save(dir.path(), &push_square());
    let out = gco(dir.path(), &["gco", "--scenario", &scenario, "--policy", "external"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_default_suite_writes_sixty_rows() {
    let dir = TempDir::new().unwrap();
    let out = gco(dir.path(), &["bench", "--builtin", "default"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(fs::File::open(dir.path().join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().filter(|r| r.method == "gspi").all(|r| r.success));
}

#[test]
fn bench_reads_a_suite_directory() {
    let dir = TempDir::new().unwrap();
    let suite = dir.path().join("suite");
    assert_eq!(code(&gco(&suite, &["gen-suite", "--kind", "examples"])), 0);
    let out = gco(dir.path(), &["bench", "--suite", suite.to_str().unwrap(), "--seeds", "1,2", "--csv", "m.csv"]);
    assert_eq!(code(&out), 0);
    // push-square has objects and is skipped; crossed-diagonal runs both methods.
    let rows = read_csv(fs::File::open(dir.path().join("m.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.scenario == "crossed-diagonal"));
}
