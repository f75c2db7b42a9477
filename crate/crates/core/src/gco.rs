//! The closed manipulation loop: observe the objects, plan short object
//! moves with the anonymous planner, split robots across objects, ask the
//! manipulation policy for contacts and pushes, plan the robots onto the
//! contacts, and execute everything in the simulator.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::costmap::GridMap;
use crate::error::PlannerError;
use crate::flow::B_MAX;
use crate::geometry::{angle_diff, ConvexPolygon, Pose2, Vec2};
use crate::planner::{Assignment, Heuristic, Mode, Planner, PlannerConfig, Problem};
use crate::policy::{ManipulationPolicy, Observation, ObservationFrame, PolicyOutput};
use crate::primitives::PrimitiveConfig;
use crate::seed::derive_seed;
use crate::sim::{check_success, render_occupancy, step_world, SimConfig, WorldState};

pub const DEFAULT_THETA_MAX: f64 = 0.3;
pub const DEFAULT_MAX_ACTIONS: usize = 100;
pub const OBJECT_PLAN_ITERATIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcoConfig {
    pub prims: PrimitiveConfig,
    pub resolution: f64,
    pub theta_max: f64,
    pub sim: SimConfig,
    pub max_actions: usize,
    /// Upper bound on every object's budget (on top of `B_MAX`).
    pub budget_cap: Option<usize>,
    pub image_resolution: f64,
    pub image_width: usize,
    pub seed: u64,
    /// Keep every simulator tick's robot positions in the report.
    pub record_ticks: bool,
}

impl Default for GcoConfig {
    fn default() -> Self {
        Self {
            prims: PrimitiveConfig::default(),
            resolution: crate::costmap::DEFAULT_RESOLUTION,
            theta_max: DEFAULT_THETA_MAX,
            sim: SimConfig::default(),
            max_actions: DEFAULT_MAX_ACTIONS,
            budget_cap: None,
            image_resolution: crate::policy::DEFAULT_IMAGE_RESOLUTION,
            image_width: crate::policy::DEFAULT_IMAGE_WIDTH,
            seed: 0,
            record_ticks: false,
        }
    }
}

/// Short-horizon relative transform for one object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subgoal {
    pub transform: Pose2,
    pub active: bool,
    /// Goal index the object is currently heading for.
    pub goal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPlan {
    pub subgoals: Vec<Subgoal>,
    /// True when object-level planning was infeasible and straight-line
    /// steps toward greedily matched goals were used instead.
    pub fallback: bool,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetMap {
    /// Budget per object, aligned with `world.objects`.
    pub budgets: Vec<usize>,
    /// Robots not assigned to any object.
    pub idle: usize,
}

pub fn observe(world: &WorldState, cfg: &GcoConfig) -> Vec<Observation> {
    world
        .objects
        .iter()
        .map(|o| {
            let frame = ObservationFrame::new(o.pose.translation, cfg.image_resolution, cfg.image_width);
            let image = render_occupancy(world, o.id, &frame).expect("object exists in its own world");
            Observation { object: o.id, frame, image }
        })
        .collect()
}

fn within_tolerance(pose: &Pose2, goal: &Pose2, sim: &SimConfig) -> bool {
    pose.translation.distance(goal.translation) <= sim.translation_tolerance
        && angle_diff(pose.rotation(), goal.rotation()).abs() <= sim.rotation_tolerance
}

fn clamp_len(v: Vec2, max: f64) -> Vec2 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

fn greedy_match(from: &[Vec2], to: &[Vec2]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in from.iter().enumerate() {
        for (j, b) in to.iter().enumerate() {
            pairs.push((a.distance(*b), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![usize::MAX; from.len()];
    let mut used = vec![false; to.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
        }
    }
    out
}

/// Plans every object as a bounding disk for two planner iterations and
/// turns the result into per-object relative transforms.
pub fn plan_objects(world: &WorldState, cfg: &GcoConfig) -> ObjectPlan {
    let m = world.objects.len();
    if m == 0 {
        return ObjectPlan {
            subgoals: Vec::new(),
            fallback: false,
            diagnostics: None,
        };
    }
    let starts: Vec<Vec2> = world.objects.iter().map(|o| o.pose.translation).collect();
    let goals: Vec<Vec2> = world.goals.iter().map(|g| g.translation).collect();
    let radius = world.objects.iter().map(|o| o.circumradius()).fold(0.0, f64::max);
    let max_shift = OBJECT_PLAN_ITERATIONS as f64 * cfg.prims.length;

    let planned = (|| -> Result<(Vec<Vec2>, Vec<usize>), PlannerError> {
        let map = planning_map(world.bounds, world.obstacles.clone(), radius, cfg.resolution)?;
        let problem = Problem {
            starts: starts.clone(),
            goals: goals.clone(),
            map,
            heuristic: if world.obstacles.is_empty() { Heuristic::Euclidean } else { Heuristic::Grid },
            assignment: Assignment::Given,
        };
        let prims = PrimitiveConfig {
            robot_radius: radius,
            ..cfg.prims
        };
        let mut planner = Planner::new(
            &problem,
            PlannerConfig {
                mode: Mode::Gspi,
                prims,
                seed: derive_seed(cfg.seed, 11),
                ..Default::default()
            },
        )?;
        for _ in 0..OBJECT_PLAN_ITERATIONS {
            if planner.all_at_goals() {
                break;
            }
            planner.step()?;
        }
        Ok((planner.positions().to_vec(), planner.assignment().to_vec()))
    })();

    let (targets, assignment, fallback, diagnostics) = match planned {
        Ok((ends, assignment)) => (ends, assignment, false, None),
        Err(e) => {
            let assignment = greedy_match(&starts, &goals);
            let ends = starts
                .iter()
                .zip(&assignment)
                .map(|(&s, &g)| s + clamp_len(goals[g] - s, max_shift))
                .collect();
            (ends, assignment, true, Some(e.to_string()))
        }
    };

    let subgoals = world
        .objects
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let goal = assignment[j];
            if within_tolerance(&o.pose, &world.goals[goal], &cfg.sim) {
                return Subgoal {
                    transform: Pose2::IDENTITY,
                    active: false,
                    goal,
                };
            }
            let rot = angle_diff(world.goals[goal].rotation(), o.pose.rotation()).clamp(-cfg.theta_max, cfg.theta_max);
            Subgoal {
                transform: Pose2::new(targets[j] - starts[j], rot),
                active: true,
                goal,
            }
        })
        .collect();
    ObjectPlan {
        subgoals,
        fallback,
        diagnostics,
    }
}

/// Grid used for planning disks of radius `r`: inflated so that any position
/// whose disk clears the obstacles lies in a free cell.
pub fn planning_map(
    bounds: (Vec2, Vec2),
    obstacles: Vec<ConvexPolygon>,
    r: f64,
    resolution: f64,
) -> Result<Arc<GridMap>, PlannerError> {
    let inflation = (r - resolution * std::f64::consts::FRAC_1_SQRT_2).max(0.0);
    Ok(Arc::new(GridMap::new(bounds.0, bounds.1, resolution, obstacles, inflation)?))
}

/// Splits `n_robots` across the active objects as evenly as possible, capped
/// per object. With fewer robots than active objects, robots are greedily
/// matched to the nearest objects and each matched object gets one robot.
pub fn budget_allocation(robots: &[Vec2], centroids: &[Vec2], active: &[bool], cap: usize) -> BudgetMap {
    let n = robots.len();
    let cap = cap.min(B_MAX);
    let ids: Vec<usize> = (0..centroids.len()).filter(|&j| active[j]).collect();
    let mut budgets = vec![0; centroids.len()];
    if ids.is_empty() || cap == 0 {
        return BudgetMap { budgets, idle: n };
    }
    if n >= ids.len() {
        let base = n / ids.len();
        let extra = n % ids.len();
        for (k, &j) in ids.iter().enumerate() {
            budgets[j] = (base + usize::from(k < extra)).min(cap);
        }
    } else {
        let active_centroids: Vec<Vec2> = ids.iter().map(|&j| centroids[j]).collect();
        for k in greedy_match(robots, &active_centroids) {
            if k != usize::MAX {
                budgets[ids[k]] = 1;
            }
        }
    }
    let used: usize = budgets.iter().sum();
    BudgetMap { budgets, idle: n - used }
}

/// Parking spots for idle robots: lattice points clear of obstacles and
/// objects, chosen greedily to be as far as possible from objects, goals,
/// and contacts, and from each other.
pub fn safe_stations(world: &WorldState, contacts: &[Vec2], count: usize, r: f64) -> Vec<Vec2> {
    if count == 0 {
        return Vec::new();
    }
    let (lo, hi) = world.bounds;
    let spacing = 2.0 * r + 0.05;
    let mut solids: Vec<ConvexPolygon> = world.obstacles.clone();
    for o in &world.objects {
        solids.extend(o.world_parts());
    }
    let margin = r + 0.05;
    let mut candidates = Vec::new();
    let mut y = lo.y + margin;
    while y <= hi.y - margin {
        let mut x = lo.x + margin;
        while x <= hi.x - margin {
            let p = Vec2::new(x, y);
            if solids.iter().all(|s| !s.contains(p) && s.distance_to_point(p) >= margin) {
                candidates.push(p);
            }
            x += spacing;
        }
        y += spacing;
    }
    let mut avoid: Vec<Vec2> = world.goals.iter().map(|g| g.translation).collect();
    avoid.extend(world.objects.iter().map(|o| o.pose.translation));
    avoid.extend_from_slice(contacts);
    let mut chosen: Vec<Vec2> = Vec::new();
    while chosen.len() < count {
        let best = candidates
            .iter()
            .filter(|c| chosen.iter().chain(contacts).all(|s| s.distance(**c) >= spacing))
            .map(|&c| {
                let score = avoid.iter().map(|a| a.distance(c)).fold(f64::INFINITY, f64::min);
                (score, c)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((_, c)) => chosen.push(c),
            None => break,
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub index: usize,
    pub subgoals: Vec<Subgoal>,
    pub object_fallback: bool,
    pub budgets: Vec<usize>,
    pub idle: usize,
    /// Contacts requested by the policy, per object.
    pub contacts: Vec<Vec<Vec2>>,
    /// Contacts dropped because they overlapped an earlier one.
    pub contacts_dropped: usize,
    /// Contacts dropped because a robot cannot stand there (inside an
    /// obstacle's or object's clearance, or off the map).
    pub contacts_unreachable: usize,
    pub conveyance_steps: usize,
    pub planner_failed: bool,
    pub diagnostics: Option<String>,
    /// Distance all robots moved in this iteration.
    pub robot_distance: f64,
    pub object_poses: Vec<Pose2>,
    /// Robot positions after every tick (only when recording).
    pub ticks: Vec<Vec<Vec2>>,
}

/// Keeps contacts a robot can reach and that do not overlap an earlier kept
/// contact. Returns (overlapping, unreachable) drop counts.
fn filter_contacts(outputs: &mut [PolicyOutput], r: f64, reachable: impl Fn(Vec2) -> bool) -> (usize, usize) {
    let mut kept: Vec<Vec2> = Vec::new();
    let (mut overlapping, mut unreachable) = (0, 0);
    for out in outputs.iter_mut() {
        let mut contacts = Vec::new();
        let mut trajectories = Vec::new();
        for (c, t) in out.contacts.iter().zip(&out.trajectories) {
            if !reachable(*c) {
                unreachable += 1;
            } else if kept.iter().any(|k| k.distance(*c) < 2.0 * r) {
                overlapping += 1;
            } else {
                kept.push(*c);
                contacts.push(*c);
                trajectories.push(t.clone());
            }
        }
        out.contacts = contacts;
        out.trajectories = trajectories;
    }
    (overlapping, unreachable)
}

fn standable(world: &WorldState, solids: &[ConvexPolygon], map: &GridMap, p: Vec2, r: f64) -> bool {
    let (lo, hi) = world.bounds;
    p.x - r >= lo.x
        && p.x + r <= hi.x
        && p.y - r >= lo.y
        && p.y + r <= hi.y
        && !map.is_occupied(p)
        && solids.iter().all(|s| !s.contains(p) && s.distance_to_point(p) >= r)
}

/// One pass of the loop. Returns the executed world and a report.
pub fn run_iteration<P: ManipulationPolicy + ?Sized>(
    world: &WorldState,
    policy: &P,
    cfg: &GcoConfig,
    index: usize,
) -> (WorldState, IterationReport) {
    let r = cfg.prims.robot_radius;
    let n = world.robots.len();
    let observations = observe(world, cfg);
    let plan = plan_objects(world, cfg);
    let active: Vec<bool> = plan.subgoals.iter().map(|s| s.active).collect();
    let centroids: Vec<Vec2> = world.objects.iter().map(|o| o.pose.translation).collect();
    let budget = budget_allocation(&world.robot_positions(), &centroids, &active, cfg.budget_cap.unwrap_or(B_MAX));

    let mut report = IterationReport {
        index,
        subgoals: plan.subgoals.clone(),
        object_fallback: plan.fallback,
        budgets: budget.budgets.clone(),
        idle: budget.idle,
        contacts: vec![Vec::new(); world.objects.len()],
        contacts_dropped: 0,
        contacts_unreachable: 0,
        conveyance_steps: 0,
        planner_failed: false,
        diagnostics: plan.diagnostics.clone(),
        robot_distance: 0.0,
        object_poses: world.objects.iter().map(|o| o.pose).collect(),
        ticks: Vec::new(),
    };
    if !active.iter().any(|&a| a) {
        return (world.clone(), report);
    }

    let mut outputs = Vec::with_capacity(world.objects.len());
    for (j, obs) in observations.iter().enumerate() {
        let b = budget.budgets[j];
        let out = if plan.subgoals[j].active && b > 0 {
            match policy.act(obs, &plan.subgoals[j].transform, b, derive_seed(cfg.seed, 1000 + (index * 64 + j) as u64)) {
                Ok(o) => o,
                Err(e) => {
                    report.diagnostics = Some(format!("object {}: {e}", obs.object));
                    PolicyOutput::none()
                }
            }
        } else {
            PolicyOutput::none()
        };
        report.contacts[j] = out.contacts.clone();
        outputs.push(out);
    }
    let mut solids = world.obstacles.clone();
    for o in &world.objects {
        solids.extend(o.world_parts());
    }
    let map = match planning_map(world.bounds, solids.clone(), r, cfg.resolution) {
        Ok(m) => m,
        Err(e) => {
            report.planner_failed = true;
            report.diagnostics = Some(e.to_string());
            return (world.clone(), report);
        }
    };
    (report.contacts_dropped, report.contacts_unreachable) =
        filter_contacts(&mut outputs, r, |c| standable(world, &solids, &map, c, r));

    let contacts: Vec<Vec2> = outputs.iter().flat_map(|o| o.contacts.iter().copied()).collect();
    let manip: Vec<Vec<Vec2>> = outputs.iter().flat_map(|o| o.trajectories.iter().cloned()).collect();
    let contacts: Vec<Vec2> = contacts.into_iter().take(n).collect();
    let stations = safe_stations(world, &contacts, n - contacts.len(), r);
    let mut goals = contacts.clone();
    goals.extend(stations);

    let coop = (|| -> Result<(Vec<Vec<Vec2>>, Vec<usize>), PlannerError> {
        if goals.len() != n {
            return Err(PlannerError::Validation(vec![format!(
                "found {} contacts and stations for {n} robots",
                goals.len()
            )]));
        }
        let problem = Problem {
            starts: world.robot_positions(),
            goals: goals.clone(),
            map: map.clone(),
            heuristic: Heuristic::Grid,
            assignment: Assignment::Given,
        };
        let res = Planner::new(
            &problem,
            PlannerConfig {
                mode: Mode::Gspi,
                prims: cfg.prims,
                seed: derive_seed(cfg.seed, 2000 + index as u64),
                ..Default::default()
            },
        )?
        .run()?;
        if !res.success {
            return Err(PlannerError::Validation(vec![format!(
                "conveyance plan hit the iteration cap after {} steps",
                res.iterations
            )]));
        }
        Ok((res.trajectories, res.assignment))
    })();

    let (coop, assignment) = match coop {
        Ok(c) => c,
        Err(e) => {
            report.planner_failed = true;
            report.diagnostics = Some(e.to_string());
            return (world.clone(), report);
        }
    };
    report.conveyance_steps = coop.first().map_or(0, |t| t.len() - 1);

    // Conveyance, then manipulation for robots that ended on a contact.
    let mut paths: Vec<Vec<Vec2>> = coop;
    let horizon = manip.iter().map(|t| t.len()).max().unwrap_or(0);
    for (i, path) in paths.iter_mut().enumerate() {
        let end = *path.last().unwrap();
        let g = assignment[i];
        let tail: Vec<Vec2> = if g < manip.len() { manip[g][1..].to_vec() } else { Vec::new() };
        for k in 0..horizon.saturating_sub(1) {
            path.push(tail.get(k).copied().unwrap_or_else(|| tail.last().copied().unwrap_or(end)));
        }
    }
    let mut state = world.clone();
    let start_odometry: f64 = state.odometry.iter().sum();
    let steps = paths.first().map_or(0, |p| p.len());
    for k in 1..steps {
        let targets: Vec<Vec2> = paths.iter().map(|p| p[k]).collect();
        state = step_world(&state, &targets, &cfg.sim).expect("targets are finite and sized");
        if cfg.record_ticks {
            report.ticks.push(state.robot_positions());
        }
    }
    report.robot_distance = state.odometry.iter().sum::<f64>() - start_odometry;
    report.object_poses = state.objects.iter().map(|o| o.pose).collect();
    (state, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub actions: usize,
    /// Total executed robot path length divided by the robot count.
    pub avg_distance: f64,
    pub iterations: Vec<IterationReport>,
    pub final_world: WorldState,
}

/// Runs the loop until every object sits within tolerance of some goal
/// (anonymously matched) or the action cap is reached.
pub fn run_episode<P: ManipulationPolicy + ?Sized>(world: &WorldState, policy: &P, cfg: &GcoConfig) -> EpisodeResult {
    let mut state = world.clone();
    let mut iterations = Vec::new();
    let mut actions = 0;
    let success = loop {
        let done = matches!(check_success(&state, &cfg.sim), Ok(Some(_)));
        if done {
            break true;
        }
        if actions >= cfg.max_actions {
            break false;
        }
        let (next, report) = run_iteration(&state, policy, cfg, actions);
        state = next;
        iterations.push(report);
        actions += 1;
    };
    let n = state.robots.len().max(1) as f64;
    EpisodeResult {
        success,
        actions,
        avg_distance: state.odometry.iter().sum::<f64>() / n,
        iterations,
        final_world: state,
    }
}
