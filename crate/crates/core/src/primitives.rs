//! Fixed-length motion primitives for disk robots, ordered by a cost-to-goal
//! heuristic.

use serde::{Deserialize, Serialize};

use crate::costmap::{dist, DistanceField, GridMap};
use crate::error::{GeometryError, PlannerError};
use crate::geometry::Vec2;

pub const DEFAULT_PRIMITIVE_LENGTH: f64 = 0.05;
pub const DEFAULT_HEADINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Move,
    Wait,
    Dock,
}

/// One unit-time transition of one robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEdge {
    pub robot: usize,
    pub from: Vec2,
    pub to: Vec2,
    pub kind: EdgeKind,
}

impl MotionEdge {
    fn checked(robot: usize, from: Vec2, to: Vec2, kind: EdgeKind) -> Result<Self, GeometryError> {
        if !from.is_finite() || !to.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { robot, from, to, kind })
    }

    pub fn motion(robot: usize, from: Vec2, to: Vec2) -> Result<Self, GeometryError> {
        let kind = if from == to { EdgeKind::Wait } else { EdgeKind::Move };
        Self::checked(robot, from, to, kind)
    }

    pub fn wait(robot: usize, at: Vec2) -> Self {
        Self { robot, from: at, to: at, kind: EdgeKind::Wait }
    }

    pub fn dock(robot: usize, from: Vec2, goal: Vec2) -> Result<Self, GeometryError> {
        Self::checked(robot, from, goal, EdgeKind::Dock)
    }

    pub fn length(&self) -> f64 {
        self.from.distance(self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveConfig {
    pub length: f64,
    pub headings: usize,
    pub robot_radius: f64,
}

impl Default for PrimitiveConfig {
    fn default() -> Self {
        Self {
            length: DEFAULT_PRIMITIVE_LENGTH,
            headings: DEFAULT_HEADINGS,
            robot_radius: 0.1,
        }
    }
}

impl PrimitiveConfig {
    /// Unit step vectors for each heading, with exact zeros on the axes.
    pub fn step_vectors(&self) -> Vec<Vec2> {
        (0..self.headings)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / self.headings as f64;
                let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
                Vec2::new(snap(theta.cos()), snap(theta.sin())) * self.length
            })
            .collect()
    }

    /// Docking is allowed from within one primitive length (plus rounding slack).
    pub fn dock_reach(&self) -> f64 {
        self.length * (1.0 + 1e-9)
    }
}

/// Candidate edges from `config` for `robot`: one move per heading, a dock
/// edge onto the goal when it is within one primitive length, and a trailing
/// wait. Edges whose swept disk leaves free space are dropped; the rest are
/// sorted by heuristic cost at their endpoint (dock first, then heading index
/// on ties).
pub fn generate(
    robot: usize,
    config: Vec2,
    field: &DistanceField,
    map: &GridMap,
    prims: &PrimitiveConfig,
) -> Result<Vec<MotionEdge>, PlannerError> {
    let mut out = Vec::with_capacity(prims.headings + 2);
    generate_into(robot, config, field, map, prims, &prims.step_vectors(), &mut out)?;
    Ok(out)
}

pub(crate) fn generate_into(
    robot: usize,
    config: Vec2,
    field: &DistanceField,
    map: &GridMap,
    prims: &PrimitiveConfig,
    steps: &[Vec2],
    out: &mut Vec<MotionEdge>,
) -> Result<(), PlannerError> {
    if map.is_occupied(config) {
        return Err(PlannerError::InvalidState { robot, x: config.x, y: config.y });
    }
    let r = prims.robot_radius;
    let goal = field.goal();
    let mut scored: Vec<(f64, i64, MotionEdge)> = Vec::with_capacity(steps.len() + 1);
    if config.distance(goal) <= prims.dock_reach() && map.segment_clear(config, goal, r) {
        scored.push((dist(field, goal).unwrap_or(0.0), -1, MotionEdge::dock(robot, config, goal)?));
    }
    for (k, step) in steps.iter().enumerate() {
        let to = config + *step;
        if !map.segment_clear(config, to, r) {
            continue;
        }
        let cost = dist(field, to).unwrap_or(f64::INFINITY);
        scored.push((cost, k as i64, MotionEdge::motion(robot, config, to)?));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out.clear();
    out.extend(scored.into_iter().map(|(_, _, e)| e));
    out.push(MotionEdge::wait(robot, config));
    Ok(())
}
