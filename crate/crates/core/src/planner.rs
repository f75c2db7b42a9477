//! Goal swapping with priority inheritance: an anonymous multi-robot planner
//! for disk robots moving along motion primitives. With swapping disabled it
//! degrades to priority inheritance with backtracking over a fixed assignment.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costmap::{build_distance_field, dist, DistanceField, GridMap};
use crate::error::PlannerError;
use crate::geometry::{edge_edge_conflict, edge_state_conflict, Vec2};
use crate::primitives::{generate_into, EdgeKind, MotionEdge, PrimitiveConfig};
use crate::seed::{rng_for, ASSIGNMENT_STREAM, PRIORITY_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Gspi,
    Pibt,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gspi => "gspi",
            Mode::Pibt => "pibt",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gspi" => Ok(Mode::Gspi),
            "pibt" => Ok(Mode::Pibt),
            other => Err(format!("unknown algorithm {other:?} (expected gspi or pibt)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    /// Obstacle-aware grid Dijkstra field per goal.
    Grid,
    /// Straight-line distance (obstacle-free maps).
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    /// Robot `i` starts assigned to goal `i`.
    Given,
    /// Seeded random permutation.
    Random,
}

/// Dynamic priority: `level + base`, compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priority {
    pub level: u32,
    pub base: f64,
}

impl Priority {
    pub fn effective(&self) -> f64 {
        self.level as f64 + self.base
    }

    pub fn cmp_rank(&self, other: &Priority) -> Ordering {
        self.level
            .cmp(&other.level)
            .then(self.base.total_cmp(&other.base))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationPolicy {
    /// Enumerate every ordering of the stepped-on set up to this size;
    /// larger sets are tried in priority order only.
    pub full_up_to: usize,
    pub always_full: bool,
}

impl Default for PermutationPolicy {
    fn default() -> Self {
        Self {
            full_up_to: 3,
            always_full: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub starts: Vec<Vec2>,
    pub goals: Vec<Vec2>,
    pub map: Arc<GridMap>,
    pub heuristic: Heuristic,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub mode: Mode,
    pub prims: PrimitiveConfig,
    pub permutations: PermutationPolicy,
    /// `None` → 10 · N · (map diameter / primitive length).
    pub max_iters: Option<usize>,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gspi,
            prims: PrimitiveConfig::default(),
            permutations: PermutationPolicy::default(),
            max_iters: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub iteration: usize,
    pub i: usize,
    pub j: usize,
    /// Goal held by `i` before the exchange.
    pub goal_a: usize,
    /// Goal held by `j` before the exchange.
    pub goal_b: usize,
    pub d_ia: f64,
    pub d_ib: f64,
    pub d_ja: f64,
    pub d_jb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// `trajectories[robot][t]`, all of length `iterations + 1`.
    pub trajectories: Vec<Vec<Vec2>>,
    pub success: bool,
    pub iterations: usize,
    pub swaps: usize,
    pub waits: usize,
    pub path_length: f64,
    /// Final robot → goal assignment.
    pub assignment: Vec<usize>,
    pub swap_log: Vec<SwapRecord>,
    /// Σ dist(q_i, g(i)) right before and right after each swap stage.
    pub swap_stage_costs: Vec<(f64, f64)>,
}

/// Separation shortfall below 2r that still counts as touching, not overlapping.
pub const TANGENCY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Planner {
    cfg: PlannerConfig,
    map: Arc<GridMap>,
    fields: Vec<DistanceField>,
    goals: Vec<Vec2>,
    positions: Vec<Vec2>,
    goal_of: Vec<usize>,
    priority: Vec<Priority>,
    reservation: Vec<Option<MotionEdge>>,
    reserved: Vec<usize>,
    steps: Vec<Vec2>,
    iteration: usize,
    swaps: usize,
    waits: usize,
    path_length: f64,
    trajectories: Vec<Vec<Vec2>>,
    swap_log: Vec<SwapRecord>,
    swap_stage_costs: Vec<(f64, f64)>,
    try_move_calls: u64,
}

impl Planner {
    pub fn new(problem: &Problem, cfg: PlannerConfig) -> Result<Self, PlannerError> {
        validate(problem, &cfg.prims)?;
        let n = problem.starts.len();
        let fields = problem
            .goals
            .iter()
            .map(|&g| match problem.heuristic {
                Heuristic::Euclidean => Ok(DistanceField::euclidean(g)),
                Heuristic::Grid => build_distance_field(problem.map.clone(), g),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut prio_rng = rng_for(cfg.seed, PRIORITY_STREAM);
        let mut bases: Vec<f64> = Vec::with_capacity(n);
        while bases.len() < n {
            let b: f64 = prio_rng.random();
            if !bases.contains(&b) {
                bases.push(b);
            }
        }
        let mut goal_of: Vec<usize> = (0..n).collect();
        if problem.assignment == Assignment::Random {
            goal_of.shuffle(&mut rng_for(cfg.seed, ASSIGNMENT_STREAM));
        }
        Ok(Self {
            steps: cfg.prims.step_vectors(),
            cfg,
            map: problem.map.clone(),
            fields,
            goals: problem.goals.clone(),
            positions: problem.starts.clone(),
            goal_of,
            priority: bases.into_iter().map(|base| Priority { level: 0, base }).collect(),
            reservation: vec![None; n],
            reserved: Vec::with_capacity(n),
            iteration: 0,
            swaps: 0,
            waits: 0,
            path_length: 0.0,
            trajectories: problem.starts.iter().map(|&s| vec![s]).collect(),
            swap_log: Vec::new(),
            swap_stage_costs: Vec::new(),
            try_move_calls: 0,
        })
    }

    pub fn num_robots(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn assignment(&self) -> &[usize] {
        &self.goal_of
    }

    pub fn priorities(&self) -> &[Priority] {
        &self.priority
    }

    pub fn set_priorities(&mut self, priorities: Vec<Priority>) {
        assert_eq!(priorities.len(), self.num_robots());
        self.priority = priorities;
    }

    pub fn set_assignment(&mut self, goal_of: Vec<usize>) {
        let mut seen = vec![false; self.goals.len()];
        for &g in &goal_of {
            assert!(!seen[g], "assignment must be a bijection");
            seen[g] = true;
        }
        self.goal_of = goal_of;
    }

    pub fn reservations(&self) -> &[Option<MotionEdge>] {
        &self.reservation
    }

    pub fn swap_log(&self) -> &[SwapRecord] {
        &self.swap_log
    }

    pub fn try_move_calls(&self) -> u64 {
        self.try_move_calls
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn radius(&self) -> f64 {
        self.cfg.prims.robot_radius
    }

    /// Radius used for robot-robot conflict checks. Positions accumulate
    /// rounding error along primitive chains, so disks that are tangent in
    /// exact arithmetic must not register as overlapping.
    fn conflict_radius(&self) -> f64 {
        self.radius() - 0.5 * TANGENCY_SLACK
    }

    pub fn max_iters(&self) -> usize {
        self.cfg.max_iters.unwrap_or_else(|| {
            let n = self.num_robots().max(1) as f64;
            (10.0 * n * (self.map.diameter() / self.cfg.prims.length)).ceil() as usize
        })
    }

    /// Heuristic distance from robot `robot`'s position to goal `goal`.
    pub fn goal_distance(&self, robot: usize, goal: usize) -> f64 {
        dist(&self.fields[goal], self.positions[robot]).unwrap_or(f64::INFINITY)
    }

    pub fn system_cost(&self) -> f64 {
        (0..self.num_robots())
            .map(|i| self.goal_distance(i, self.goal_of[i]))
            .sum()
    }

    pub fn at_goal(&self, robot: usize) -> bool {
        self.positions[robot] == self.goals[self.goal_of[robot]]
    }

    pub fn all_at_goals(&self) -> bool {
        (0..self.num_robots()).all(|i| self.at_goal(i))
    }

    /// Robots sorted from highest to lowest priority.
    pub fn priority_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_robots()).collect();
        order.sort_by(|&a, &b| self.priority[b].cmp_rank(&self.priority[a]));
        order
    }

    /// Offers a goal exchange to every robot after `i` in `order`.
    pub fn try_swap(&mut self, i: usize, order: &[usize]) {
        let pos = order.iter().position(|&r| r == i).expect("robot in order");
        for &j in &order[pos + 1..] {
            let (gi, gj) = (self.goal_of[i], self.goal_of[j]);
            let d_ia = self.goal_distance(i, gi);
            let d_ib = self.goal_distance(i, gj);
            let d_ja = self.goal_distance(j, gj);
            let d_jb = self.goal_distance(j, gi);
            if d_ib < d_ia && d_ib + d_jb <= d_ia + d_ja {
                self.goal_of.swap(i, j);
                self.priority.swap(i, j);
                self.swaps += 1;
                self.swap_log.push(SwapRecord {
                    iteration: self.iteration,
                    i,
                    j,
                    goal_a: gi,
                    goal_b: gj,
                    d_ia,
                    d_ib,
                    d_ja,
                    d_jb,
                });
            }
        }
    }

    fn candidates(&self, i: usize) -> Result<Vec<MotionEdge>, PlannerError> {
        let mut out = Vec::with_capacity(self.steps.len() + 2);
        generate_into(
            i,
            self.positions[i],
            &self.fields[self.goal_of[i]],
            &self.map,
            &self.cfg.prims,
            &self.steps,
            &mut out,
        )?;
        Ok(out)
    }

    fn reserve(&mut self, e: MotionEdge) {
        debug_assert!(self.reservation[e.robot].is_none());
        self.reservation[e.robot] = Some(e);
        self.reserved.push(e.robot);
    }

    fn rollback(&mut self, snapshot: usize) {
        while self.reserved.len() > snapshot {
            let r = self.reserved.pop().unwrap();
            self.reservation[r] = None;
        }
    }

    fn conflicts_with_reserved(&self, e: &MotionEdge) -> bool {
        let r = self.conflict_radius();
        let reach = 4.0 * r + 2.0 * self.cfg.prims.length;
        self.reserved.iter().any(|&j| {
            let other = self.reservation[j].as_ref().unwrap();
            (other.from - e.from).norm_sq() < reach * reach && edge_edge_conflict(e, other, r)
        })
    }

    fn stepped_on(&self, e: &MotionEdge) -> Vec<usize> {
        let r = self.conflict_radius();
        let mut s: Vec<usize> = (0..self.num_robots())
            .filter(|&j| {
                j != e.robot
                    && self.reservation[j].is_none()
                    && edge_state_conflict(e, self.positions[j], r)
            })
            .collect();
        s.sort_by(|&a, &b| self.priority[b].cmp_rank(&self.priority[a]));
        s
    }

    fn orderings(&self, s: &[usize]) -> Vec<Vec<usize>> {
        let p = self.cfg.permutations;
        if p.always_full || s.len() <= p.full_up_to {
            permutations(s)
        } else {
            vec![s.to_vec()]
        }
    }

    /// Reserves an edge for `i`, recursively asking stepped-on lower-priority
    /// robots to move out of the way. Returns false (with a wait reserved)
    /// when no candidate can be made to work.
    pub fn try_move(&mut self, i: usize) -> Result<bool, PlannerError> {
        self.try_move_at(i, 0)
    }

    fn try_move_at(&mut self, i: usize, depth: usize) -> Result<bool, PlannerError> {
        assert!(
            depth <= self.num_robots(),
            "priority inheritance recursed deeper than the robot count"
        );
        debug_assert!(self.reservation[i].is_none());
        self.try_move_calls += 1;
        for e in self.candidates(i)? {
            if self.conflicts_with_reserved(&e) {
                continue;
            }
            let s = self.stepped_on(&e);
            if s.is_empty() {
                self.reserve(e);
                return Ok(true);
            }
            let snapshot = self.reserved.len();
            for ordering in self.orderings(&s) {
                self.reserve(e);
                let mut ok = true;
                for &j in &ordering {
                    if self.reservation[j].is_some() {
                        continue;
                    }
                    if !self.try_move_at(j, depth + 1)? {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return Ok(true);
                }
                self.rollback(snapshot);
            }
        }
        self.reserve(MotionEdge::wait(i, self.positions[i]));
        Ok(false)
    }

    /// One iteration: swap stage, move stage, commit.
    pub fn step(&mut self) -> Result<Vec<MotionEdge>, PlannerError> {
        self.reserved.clear();
        self.reservation.iter_mut().for_each(|r| *r = None);
        if self.cfg.mode == Mode::Gspi {
            let before = self.system_cost();
            let order = self.priority_order();
            for &i in &order {
                self.try_swap(i, &order);
            }
            self.swap_stage_costs.push((before, self.system_cost()));
        }
        for i in self.priority_order() {
            if self.reservation[i].is_none() {
                self.try_move(i)?;
            }
        }
        let edges: Vec<MotionEdge> = self
            .reservation
            .iter()
            .map(|e| e.expect("every robot reserves an edge in the move stage"))
            .collect();
        for e in &edges {
            let i = e.robot;
            self.positions[i] = e.to;
            self.trajectories[i].push(e.to);
            self.path_length += e.length();
            if e.kind == EdgeKind::Wait {
                self.waits += 1;
            }
        }
        for i in 0..self.num_robots() {
            if self.at_goal(i) {
                self.priority[i].level = 0;
            } else {
                self.priority[i].level += 1;
            }
        }
        self.iteration += 1;
        self.reserved.clear();
        self.reservation.iter_mut().for_each(|r| *r = None);
        Ok(edges)
    }

    /// Steps until every robot sits on its assigned goal or the iteration
    /// cap is reached. At least one step is always taken.
    pub fn run(mut self) -> Result<PlanResult, PlannerError> {
        let cap = self.max_iters();
        let success = loop {
            self.step()?;
            if self.all_at_goals() {
                break true;
            }
            if self.iteration >= cap {
                break false;
            }
        };
        Ok(self.into_result(success))
    }

    pub fn into_result(self, success: bool) -> PlanResult {
        PlanResult {
            trajectories: self.trajectories,
            success,
            iterations: self.iteration,
            swaps: self.swaps,
            waits: self.waits,
            path_length: self.path_length,
            assignment: self.goal_of,
            swap_log: self.swap_log,
            swap_stage_costs: self.swap_stage_costs,
        }
    }
}

pub fn plan(problem: &Problem, cfg: PlannerConfig) -> Result<PlanResult, PlannerError> {
    Planner::new(problem, cfg)?.run()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Checks planner preconditions, listing every offending entity.
pub fn validate(problem: &Problem, prims: &PrimitiveConfig) -> Result<(), PlannerError> {
    let r = prims.robot_radius;
    let mut errs = Vec::new();
    if problem.starts.len() != problem.goals.len() {
        errs.push(format!(
            "{} starts but {} goals",
            problem.starts.len(),
            problem.goals.len()
        ));
    }
    for (kind, pts) in [("start", &problem.starts), ("goal", &problem.goals)] {
        for (i, p) in pts.iter().enumerate() {
            if !p.is_finite() {
                errs.push(format!("{kind} {i} is not finite"));
                continue;
            }
            if !problem.map.segment_clear(*p, *p, r) {
                errs.push(format!("{kind} {i} at ({}, {}) collides with an obstacle or the map edge", p.x, p.y));
            } else if problem.map.is_occupied(*p) {
                errs.push(format!("{kind} {i} at ({}, {}) lies in an occupied cell", p.x, p.y));
            }
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i].distance(pts[j]) < 2.0 * r {
                    errs.push(format!("{kind}s {i} and {j} overlap"));
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(PlannerError::Validation(errs))
    }
}
