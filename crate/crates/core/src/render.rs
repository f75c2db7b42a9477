//! Trajectory files (JSON lines, one record per robot per step) and SVG
//! rendering of maps and plans.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::geometry::{ConvexPolygon, Vec2};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub robot: usize,
    pub t: usize,
    pub x: f64,
    pub y: f64,
}

/// One line per robot per step, ordered by step then robot.
pub fn to_jsonl(trajectories: &[Vec<Vec2>]) -> String {
    let steps = trajectories.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut out = String::new();
    for t in 0..steps {
        for (robot, traj) in trajectories.iter().enumerate() {
            if let Some(p) = traj.get(t) {
                let rec = TrajectoryRecord { robot, t, x: p.x, y: p.y };
                out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
                out.push('\n');
            }
        }
    }
    out
}

/// Parses a trajectory file back into per-robot point lists. Every robot
/// must have a record for each step from 0 up to its last one.
pub fn from_jsonl(text: &str) -> Result<Vec<Vec<Vec2>>, ScenarioError> {
    let mut out: Vec<Vec<Option<Vec2>>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(line).map_err(|e| ScenarioError::Parse {
            line: k + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        if out.len() <= rec.robot {
            out.resize(rec.robot + 1, Vec::new());
        }
        let traj = &mut out[rec.robot];
        if traj.len() <= rec.t {
            traj.resize(rec.t + 1, None);
        }
        traj[rec.t] = Some(Vec2::new(rec.x, rec.y));
    }
    out.into_iter()
        .enumerate()
        .map(|(robot, traj)| {
            traj.into_iter()
                .enumerate()
                .map(|(t, p)| p.ok_or_else(|| ScenarioError::Invalid(format!("robot {robot} has no record for step {t}"))))
                .collect()
        })
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Canvas {
    min: Vec2,
    max: Vec2,
    body: String,
}

impl Canvas {
    fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max, body: String::new() }
    }

    /// World to SVG coordinates (y grows downward in SVG).
    fn pt(&self, p: Vec2) -> (f64, f64) {
        (p.x - self.min.x, self.max.y - p.y)
    }

    fn polygon(&mut self, poly: &ConvexPolygon, fill: &str) {
        let pts: Vec<String> = poly
            .vertices()
            .iter()
            .map(|&v| {
                let (x, y) = self.pt(v);
                format!("{x:.4},{y:.4}")
            })
            .collect();
        let _ = writeln!(self.body, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
    }

    fn circle(&mut self, c: Vec2, r: f64, style: &str) {
        let (x, y) = self.pt(c);
        let _ = writeln!(self.body, r#"<circle cx="{x:.4}" cy="{y:.4}" r="{r:.4}" {style}/>"#);
    }

    fn polyline(&mut self, pts: &[Vec2], color: &str, width: f64) {
        let pts: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.pt(p);
                format!("{x:.4},{y:.4}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width:.4}"/>"#,
            pts.join(" ")
        );
    }

    fn finish(self) -> String {
        let w = self.max.x - self.min.x;
        let h = self.max.y - self.min.y;
        let scale = 200.0;
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {w:.4} {h:.4}\">\n<rect x=\"0\" y=\"0\" width=\"{w:.4}\" height=\"{h:.4}\" fill=\"white\" stroke=\"black\" stroke-width=\"0.01\"/>\n{}</svg>\n",
            w * scale,
            h * scale,
            self.body
        )
    }
}

fn check_counts(scenario: &Scenario, trajectories: &[Vec<Vec2>]) -> Result<(), ScenarioError> {
    if !trajectories.is_empty() && trajectories.len() != scenario.starts.len() {
        return Err(ScenarioError::Invalid(format!(
            "trajectory file has {} robots but the scenario has {}",
            trajectories.len(),
            scenario.starts.len()
        )));
    }
    Ok(())
}

fn map_layer(scenario: &Scenario) -> Result<Canvas, ScenarioError> {
    let (min, max) = scenario.bounds();
    let mut c = Canvas::new(min, max);
    for poly in scenario.obstacle_polygons()? {
        c.polygon(&poly, "#555555");
    }
    for o in scenario.world()?.objects {
        for part in o.world_parts() {
            c.polygon(&part, "#c8a165");
        }
    }
    Ok(c)
}

/// Full plan: obstacles, start (filled) and goal (hollow) markers, and one
/// polyline per robot.
pub fn render_plan(scenario: &Scenario, trajectories: &[Vec<Vec2>]) -> Result<String, ScenarioError> {
    check_counts(scenario, trajectories)?;
    let mut c = map_layer(scenario)?;
    let r = scenario.robot_radius;
    for g in scenario.goals() {
        c.circle(g, r, r##"fill="none" stroke="#2ca02c" stroke-width="0.01""##);
    }
    for s in scenario.starts() {
        c.circle(s, r, r##"fill="#bbbbbb" stroke="none""##);
    }
    for (i, traj) in trajectories.iter().enumerate() {
        c.polyline(traj, PALETTE[i % PALETTE.len()], 0.2 * r);
    }
    Ok(c.finish())
}

/// Robot positions at step `t` (robots whose trajectory ended stay put).
pub fn render_frame(scenario: &Scenario, trajectories: &[Vec<Vec2>], t: usize) -> Result<String, ScenarioError> {
    check_counts(scenario, trajectories)?;
    let mut c = map_layer(scenario)?;
    let r = scenario.robot_radius;
    for g in scenario.goals() {
        c.circle(g, r, r##"fill="none" stroke="#2ca02c" stroke-width="0.01""##);
    }
    for (i, traj) in trajectories.iter().enumerate() {
        if let Some(p) = traj.get(t).or(traj.last()) {
            c.circle(*p, r, &format!(r#"fill="{}" stroke="none""#, PALETTE[i % PALETTE.len()]));
        }
    }
    Ok(c.finish())
}
