//! Scenario files and the built-in scenario generators.
//!
//! A scenario is a JSON document holding the map, the robot team, the
//! anonymous goal set, optional objects for pushing runs, and the seeds and
//! algorithms a benchmark should sweep.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::costmap::{GridMap, DEFAULT_RESOLUTION};
use crate::error::{PlannerError, ScenarioError};
use crate::gco::{planning_map, GcoConfig};
use crate::geometry::{decompose, ConvexPolygon, Pose2, Vec2};
use crate::planner::{validate, Assignment, Heuristic, Mode, PlannerConfig, Problem};
use crate::primitives::{PrimitiveConfig, DEFAULT_HEADINGS, DEFAULT_PRIMITIVE_LENGTH};
use crate::seed::rng_for;
use crate::sim::{Object, Robot, WorldState};

pub const SCHEMA_VERSION: u32 = 1;
pub const LATTICE_SPACING: f64 = 0.3;
/// Iteration cap used by the generated benchmark scenarios.
pub const SUITE_MAX_ITERS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    /// Body-frame footprint polygons; concave ones are decomposed on load.
    pub footprint: Vec<Vec<[f64; 2]>>,
    /// `[x, y, theta]`.
    pub pose: [f64; 3],
}

fn default_radius() -> f64 {
    0.1
}
fn default_length() -> f64 {
    DEFAULT_PRIMITIVE_LENGTH
}
fn default_headings() -> usize {
    DEFAULT_HEADINGS
}
fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_algorithms() -> Vec<Mode> {
    vec![Mode::Gspi, Mode::Pibt]
}
fn default_heuristic() -> Heuristic {
    Heuristic::Grid
}
fn default_assignment() -> Assignment {
    Assignment::Random
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub bounds: Bounds,
    /// Obstacle outlines; concave ones are decomposed on load.
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    #[serde(default = "default_radius")]
    pub robot_radius: f64,
    #[serde(default = "default_length")]
    pub primitive_length: f64,
    #[serde(default = "default_headings")]
    pub headings: usize,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_heuristic")]
    pub heuristic: Heuristic,
    #[serde(default = "default_assignment")]
    pub assignment: Assignment,
    pub starts: Vec<[f64; 2]>,
    /// Goal positions for the planner. Pushing runs may leave this empty.
    #[serde(default)]
    pub goals: Vec<[f64; 2]>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    /// `[x, y, theta]` per object goal.
    #[serde(default)]
    pub object_goals: Vec<[f64; 3]>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Mode>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

fn v(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn arr(p: Vec2) -> [f64; 2] {
    [p.x, p.y]
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        if let Some(version) = raw.get("schema_version").and_then(|x| x.as_u64()) {
            if version != SCHEMA_VERSION as u64 {
                return Err(ScenarioError::Version(version as u32));
            }
        }
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        (v(self.bounds.min), v(self.bounds.max))
    }

    pub fn prims(&self) -> PrimitiveConfig {
        PrimitiveConfig {
            length: self.primitive_length,
            headings: self.headings,
            robot_radius: self.robot_radius,
        }
    }

    pub fn obstacle_polygons(&self) -> Result<Vec<ConvexPolygon>, ScenarioError> {
        let mut out = Vec::new();
        for o in &self.obstacles {
            let pts: Vec<Vec2> = o.iter().copied().map(v).collect();
            out.extend(decompose(&pts)?);
        }
        Ok(out)
    }

    pub fn starts(&self) -> Vec<Vec2> {
        self.starts.iter().copied().map(v).collect()
    }

    pub fn goals(&self) -> Vec<Vec2> {
        self.goals.iter().copied().map(v).collect()
    }

    /// Planning grid inflated for this scenario's robot radius.
    pub fn map(&self) -> Result<Arc<GridMap>, ScenarioError> {
        Ok(planning_map(self.bounds(), self.obstacle_polygons()?, self.robot_radius, self.resolution)?)
    }

    pub fn problem(&self) -> Result<Problem, ScenarioError> {
        Ok(Problem {
            starts: self.starts(),
            goals: self.goals(),
            map: self.map()?,
            heuristic: self.heuristic,
            assignment: self.assignment,
        })
    }

    pub fn planner_config(&self, mode: Mode, seed: u64) -> PlannerConfig {
        PlannerConfig {
            mode,
            prims: self.prims(),
            max_iters: self.max_iters,
            seed,
            ..Default::default()
        }
    }

    pub fn gco_config(&self, seed: u64) -> GcoConfig {
        GcoConfig {
            prims: self.prims(),
            resolution: self.resolution,
            seed,
            ..Default::default()
        }
    }

    pub fn world(&self) -> Result<WorldState, ScenarioError> {
        let robots = self
            .starts()
            .into_iter()
            .enumerate()
            .map(|(id, position)| Robot {
                id,
                position,
                radius: self.robot_radius,
            })
            .collect();
        let mut objects = Vec::new();
        for (id, o) in self.objects.iter().enumerate() {
            let mut parts = Vec::new();
            for poly in &o.footprint {
                let pts: Vec<Vec2> = poly.iter().copied().map(v).collect();
                parts.extend(decompose(&pts)?);
            }
            objects.push(Object {
                id,
                parts,
                pose: Pose2::new(Vec2::new(o.pose[0], o.pose[1]), o.pose[2]),
            });
        }
        let goals = self
            .object_goals
            .iter()
            .map(|g| Pose2::new(Vec2::new(g[0], g[1]), g[2]))
            .collect();
        Ok(WorldState::new(robots, objects, self.obstacle_polygons()?, goals, self.bounds()))
    }

    /// Checks the scenario's parameters and the planner preconditions.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errs = Vec::new();
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite() && lo.x < hi.x && lo.y < hi.y) {
            errs.push("bounds must be finite with min < max".to_string());
        }
        for (what, x) in [
            ("robot_radius", self.robot_radius),
            ("primitive_length", self.primitive_length),
            ("resolution", self.resolution),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                errs.push(format!("{what} must be positive, got {x}"));
            }
        }
        if self.headings == 0 {
            errs.push("headings must be at least 1".into());
        }
        if self.seeds.is_empty() {
            errs.push("seeds must not be empty".into());
        }
        if self.objects.len() != self.object_goals.len() {
            errs.push(format!(
                "{} objects but {} object goals",
                self.objects.len(),
                self.object_goals.len()
            ));
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs.join("; ")));
        }
        if self.objects.is_empty() || !self.goals.is_empty() {
            match validate(&self.problem()?, &self.prims()) {
                Ok(()) => {}
                Err(PlannerError::Validation(list)) => errs.extend(list),
                Err(e) => return Err(e.into()),
            }
        } else {
            self.world()?;
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errs.join("; ")))
        }
    }
}

fn base(name: String, bounds: (Vec2, Vec2)) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name,
        bounds: Bounds {
            min: arr(bounds.0),
            max: arr(bounds.1),
        },
        obstacles: Vec::new(),
        robot_radius: default_radius(),
        primitive_length: default_length(),
        headings: default_headings(),
        resolution: default_resolution(),
        heuristic: Heuristic::Euclidean,
        assignment: Assignment::Random,
        starts: Vec::new(),
        goals: Vec::new(),
        objects: Vec::new(),
        object_goals: Vec::new(),
        seeds: default_seeds(),
        algorithms: default_algorithms(),
        max_iters: Some(SUITE_MAX_ITERS),
    }
}

/// `cols × rows` lattice points starting at `origin`.
fn lattice(origin: Vec2, cols: usize, rows: usize) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            out.push(origin + Vec2::new(col as f64, row as f64) * LATTICE_SPACING);
        }
    }
    out
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Robot layouts for the obstacle-free maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Start block on the left, goal block on the right.
    Blocks,
    /// Two teams trade sides.
    Swap,
    /// Random lattice points for starts and goals.
    Random,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Blocks => "blocks",
            Pattern::Swap => "swap",
            Pattern::Random => "random",
        }
    }
}

/// Obstacle-free map sized for `n` robots on a 0.3 m lattice.
pub fn empty_map(pattern: Pattern, n: usize) -> Scenario {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let block = Vec2::new(cols as f64, rows as f64) * LATTICE_SPACING;
    let gap = 1.0;
    let margin = LATTICE_SPACING;
    match pattern {
        Pattern::Blocks | Pattern::Swap => {
            let size = Vec2::new(2.0 * block.x + gap + 2.0 * margin, block.y + 2.0 * margin);
            let left = lattice(Vec2::new(margin + 0.15, margin + 0.15), cols, rows);
            let right = lattice(Vec2::new(margin + block.x + gap + 0.15, margin + 0.15), cols, rows);
            let mut s = base(format!("empty-{}-{n}", pattern.name()), (Vec2::ZERO, size));
            let (starts, goals): (Vec<Vec2>, Vec<Vec2>) = if pattern == Pattern::Blocks {
                (left[..n].to_vec(), right[..n].to_vec())
            } else {
                let half = n.div_ceil(2);
                let starts = left[..half].iter().chain(&right[..n - half]).copied().collect();
                let goals = right[..half].iter().chain(&left[..n - half]).copied().collect();
                (starts, goals)
            };
            s.starts = starts.into_iter().map(arr).collect();
            s.goals = goals.into_iter().map(arr).collect();
            s
        }
        Pattern::Random => {
            let side = ((2 * n) as f64).sqrt().ceil() as usize + 1;
            let extent = side as f64 * LATTICE_SPACING + 2.0 * margin;
            let cells = lattice(Vec2::new(margin + 0.15, margin + 0.15), side, side);
            let mut rng = rng_for(n as u64, 0);
            let mut starts = cells.clone();
            starts.shuffle(&mut rng);
            let mut goals = cells;
            goals.shuffle(&mut rng);
            let mut s = base(format!("empty-random-{n}"), (Vec2::ZERO, Vec2::new(extent, extent)));
            s.starts = starts[..n].iter().copied().map(arr).collect();
            s.goals = goals[..n].iter().copied().map(arr).collect();
            s
        }
    }
}

/// Takes up to `n` lattice points inside `[lo, hi]` that keep clearance from
/// every obstacle.
fn free_points(lo: Vec2, hi: Vec2, obstacles: &[ConvexPolygon], clearance: f64, n: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut x = lo.x;
    while x <= hi.x + 1e-9 && out.len() < n {
        let mut y = lo.y;
        while y <= hi.y + 1e-9 && out.len() < n {
            let p = Vec2::new(x, y);
            if obstacles.iter().all(|o| !o.contains(p) && o.distance_to_point(p) >= clearance) {
                out.push(arr(p));
            }
            y += LATTICE_SPACING;
        }
        x += LATTICE_SPACING;
    }
    out
}

fn with_obstacles(name: &str, n: usize, size: Vec2, obstacles: Vec<Vec<[f64; 2]>>) -> Scenario {
    let mut s = base(format!("{name}-{n}"), (Vec2::ZERO, size));
    s.heuristic = Heuristic::Grid;
    s.obstacles = obstacles;
    let polys = s.obstacle_polygons().expect("generated obstacles are valid");
    let clearance = s.robot_radius + 0.05;
    s.starts = free_points(Vec2::new(0.3, 0.3), Vec2::new(1.0, size.y - 0.3), &polys, clearance, n);
    s.goals = free_points(Vec2::new(size.x - 1.0, 0.3), Vec2::new(size.x - 0.3, size.y - 0.3), &polys, clearance, n);
    assert_eq!(s.starts.len(), n, "{name} has room for {} robots", s.starts.len());
    assert_eq!(s.goals.len(), n, "{name} has room for {} goals", s.goals.len());
    s
}

/// A field of square pillars between the start and goal areas.
pub fn pillars(n: usize) -> Scenario {
    let mut obs = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let c = Vec2::new(1.8 + 0.8 * i as f64, 0.6 + 0.9 * j as f64);
            obs.push(rect(c.x - 0.15, c.y - 0.15, c.x + 0.15, c.y + 0.15));
        }
    }
    with_obstacles("pillars", n, Vec2::new(6.0, 3.6), obs)
}

/// Two L-shaped walls, each leaving a single gap, at opposite ends.
pub fn walls(n: usize) -> Scenario {
    let obs = vec![
        vec![[2.0, 0.0], [2.2, 0.0], [2.2, 2.4], [2.6, 2.4], [2.6, 2.6], [2.0, 2.6]],
        vec![[3.8, 1.0], [4.4, 1.0], [4.4, 1.2], [4.0, 1.2], [4.0, 3.6], [3.8, 3.6]],
    ];
    with_obstacles("walls", n, Vec2::new(6.0, 3.6), obs)
}

/// Rows of long shelves separated by narrow aisles.
pub fn warehouse(n: usize) -> Scenario {
    let mut obs = Vec::new();
    for j in 0..4 {
        let y = 0.6 + 0.8 * j as f64;
        obs.push(rect(1.8, y, 4.2, y + 0.25));
    }
    with_obstacles("warehouse", n, Vec2::new(6.0, 3.6), obs)
}

/// Closed tube exactly one robot wide with `k` robots at each end, each
/// initially assigned to a goal at the far end.
pub fn corridor(k: usize) -> Scenario {
    let len = 3.0;
    let r = default_radius();
    let y = 0.125;
    let mut s = base(format!("corridor-{k}"), (Vec2::ZERO, Vec2::new(len, 2.0 * y)));
    s.assignment = Assignment::Given;
    let step = 2.0 * r + 0.05;
    let left: Vec<[f64; 2]> = (0..k).map(|i| [0.15 + step * i as f64, y]).collect();
    let right: Vec<[f64; 2]> = (0..k).map(|i| [len - 0.15 - step * i as f64, y]).collect();
    let left_goals: Vec<[f64; 2]> = (0..k).map(|i| [0.65 + step * i as f64, y]).collect();
    let right_goals: Vec<[f64; 2]> = (0..k).map(|i| [len - 0.65 - step * i as f64, y]).collect();
    s.starts = left.into_iter().chain(right).collect();
    s.goals = right_goals.into_iter().chain(left_goals).collect();
    s
}

/// Two robots whose given goals sit at the far ends of crossing diagonals.
pub fn crossed_diagonal() -> Scenario {
    let mut s = base("crossed-diagonal".into(), (Vec2::ZERO, Vec2::new(3.0, 3.0)));
    s.assignment = Assignment::Given;
    s.starts = vec![[0.5, 0.5], [2.5, 0.5]];
    s.goals = vec![[2.5, 2.5], [0.5, 2.5]];
    s
}

/// One 0.4 m square pushed 1 m along +x by three robots.
pub fn push_square() -> Scenario {
    let mut s = base("push-square".into(), (Vec2::ZERO, Vec2::new(4.0, 3.0)));
    s.starts = vec![[0.3, 0.3], [0.6, 0.3], [0.9, 0.3]];
    s.objects = vec![ObjectSpec {
        footprint: vec![rect(-0.2, -0.2, 0.2, 0.2)],
        pose: [1.0, 1.5, 0.0],
    }];
    s.object_goals = vec![[2.0, 1.5, 0.0]];
    s.algorithms = vec![Mode::Gspi];
    s
}

/// Six maps swept by the default benchmark.
pub fn default_suite() -> Vec<Scenario> {
    vec![
        empty_map(Pattern::Blocks, 25),
        empty_map(Pattern::Swap, 25),
        empty_map(Pattern::Random, 25),
        pillars(20),
        walls(20),
        warehouse(20),
    ]
}

pub const SCALING_SIZES: [usize; 4] = [5, 25, 60, 125];

/// Obstacle-free maps at increasing team sizes.
pub fn scaling_suite() -> Vec<Scenario> {
    SCALING_SIZES.iter().map(|&n| empty_map(Pattern::Blocks, n)).collect()
}

pub fn corridor_suite() -> Vec<Scenario> {
    vec![corridor(1), corridor(2)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_scenarios_validate() {
        let mut all = default_suite();
        all.extend(scaling_suite());
        all.extend(corridor_suite());
        all.push(crossed_diagonal());
        all.push(push_square());
        for s in &all {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn roundtrips_through_json() {
        let s = walls(10);
        let back = Scenario::parse(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empty_maps_have_requested_size() {
        for n in SCALING_SIZES {
            for p in [Pattern::Blocks, Pattern::Swap, Pattern::Random] {
                let s = empty_map(p, n);
                assert_eq!(s.starts.len(), n);
                assert_eq!(s.goals.len(), n);
            }
        }
    }

    #[test]
    fn parse_error_reports_position() {
        let err = Scenario::parse("{\n  \"schema_version\": 1,\n  \"name\": oops\n}").unwrap_err();
        match err {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_other_versions_and_unknown_fields() {
        let mut s = crossed_diagonal();
        s.schema_version = 2;
        assert!(matches!(Scenario::parse(&s.to_json()), Err(ScenarioError::Version(2))));
        let text = crossed_diagonal().to_json().replacen("\"name\"", "\"nmae\": 1, \"name\"", 1);
        assert!(matches!(Scenario::parse(&text), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn object_goal_mismatch_is_invalid() {
        let mut s = push_square();
        s.object_goals.push([3.0, 1.0, 0.0]);
        let err = Scenario::parse(&s.to_json()).unwrap_err();
        assert!(err.to_string().contains("1 objects but 2 object goals"), "{err}");
    }

    #[test]
    fn overlapping_starts_are_listed() {
        let mut s = crossed_diagonal();
        s.starts[1] = [0.55, 0.5];
        let err = Scenario::parse(&s.to_json()).unwrap_err();
        assert!(err.to_string().contains("starts 0 and 1 overlap"), "{err}");
    }
}
