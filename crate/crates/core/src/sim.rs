//! Deterministic quasi-static pushing in the plane.
//!
//! Robots are kinematic disks driven toward waypoint targets at bounded
//! speed. Objects are rigid unions of convex parts that move only while a
//! robot penetrates them: each tick an object translates by the average
//! penetration vector of its contacts and rotates by a clamped small-angle
//! moment term. Object motion is clipped against obstacles, other objects,
//! and the map bounds; robots are then projected back out of every object
//! and obstacle. This is a stand-in for a physics engine, not a model of
//! friction or inertia.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::geometry::{angle_diff, disk_polygon_overlap, transform_polygon, ConvexPolygon, Disk, Pose2, Vec2};
use crate::policy::ObservationFrame;

pub const SUCCESS_TRANSLATION: f64 = 0.15;
pub const SUCCESS_ROTATION: f64 = 0.5;
/// Extra distance added when projecting a robot out of a solid, so the
/// result is strictly separated rather than tangent up to rounding.
pub const PROJECTION_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Robot speed limit (m/s).
    pub v_max: f64,
    /// Tick length (s).
    pub dt: f64,
    /// Gain from contact moment to rotation.
    pub compliance: f64,
    /// Per-tick rotation clamp (rad).
    pub max_rotation: f64,
    pub translation_tolerance: f64,
    pub rotation_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            v_max: 0.25,
            dt: 0.2,
            compliance: 1.0,
            max_rotation: 0.05,
            translation_tolerance: SUCCESS_TRANSLATION,
            rotation_tolerance: SUCCESS_ROTATION,
        }
    }
}

impl SimConfig {
    pub fn max_step(&self) -> f64 {
        self.v_max * self.dt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: usize,
    pub position: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Object {
    pub id: usize,
    /// Convex parts in the body frame; the body origin is the reference
    /// point the pose places in the world.
    pub parts: Vec<ConvexPolygon>,
    pub pose: Pose2,
}

impl Object {
    pub fn world_parts(&self) -> Vec<ConvexPolygon> {
        self.parts.iter().map(|p| transform_polygon(&self.pose, p)).collect()
    }

    /// Largest vertex distance from the body origin.
    pub fn circumradius(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.circumradius_about(Vec2::ZERO))
            .fold(0.0, f64::max)
    }

    fn parts_at(&self, pose: &Pose2) -> Vec<ConvexPolygon> {
        self.parts.iter().map(|p| transform_polygon(pose, p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robots: Vec<Robot>,
    pub objects: Vec<Object>,
    pub obstacles: Vec<ConvexPolygon>,
    pub goals: Vec<Pose2>,
    pub bounds: (Vec2, Vec2),
    /// Distance each robot has been moved so far.
    pub odometry: Vec<f64>,
}

impl WorldState {
    pub fn new(
        robots: Vec<Robot>,
        objects: Vec<Object>,
        obstacles: Vec<ConvexPolygon>,
        goals: Vec<Pose2>,
        bounds: (Vec2, Vec2),
    ) -> Self {
        let odometry = vec![0.0; robots.len()];
        Self {
            robots,
            objects,
            obstacles,
            goals,
            bounds,
            odometry,
        }
    }

    pub fn object(&self, id: usize) -> Result<&Object, SimError> {
        self.objects
            .iter()
            .find(|o| o.id == id)
            .ok_or(SimError::UnknownObject(id))
    }

    pub fn robot_positions(&self) -> Vec<Vec2> {
        self.robots.iter().map(|r| r.position).collect()
    }

    /// Deepest penetration of any robot into any object part.
    pub fn max_robot_object_penetration(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for o in &self.objects {
            for part in o.world_parts() {
                for r in &self.robots {
                    if let Some(p) = disk_polygon_overlap(&Disk { center: r.position, radius: r.radius }, &part) {
                        worst = worst.max(p.depth);
                    }
                }
            }
        }
        worst
    }
}

/// Rasterizes object `id` into a `w×w` image centered on its pose origin,
/// axis-aligned with the world. A pixel is set iff its sample point lies in
/// the (closed) footprint.
pub fn render_occupancy(world: &WorldState, id: usize, frame: &ObservationFrame) -> Result<Array2<u8>, SimError> {
    let obj = world.object(id)?;
    let parts = obj.world_parts();
    let w = frame.width;
    Ok(Array2::from_shape_fn((w, w), |(row, col)| {
        let p = frame.pixel_center(col, row);
        parts.iter().any(|q| q.contains(p)) as u8
    }))
}

fn inside_bounds(parts: &[ConvexPolygon], bounds: (Vec2, Vec2)) -> bool {
    parts.iter().all(|p| {
        p.vertices()
            .iter()
            .all(|v| v.x >= bounds.0.x && v.y >= bounds.0.y && v.x <= bounds.1.x && v.y <= bounds.1.y)
    })
}

fn blocked(parts: &[ConvexPolygon], others: &[Vec<ConvexPolygon>], obstacles: &[ConvexPolygon], bounds: (Vec2, Vec2)) -> bool {
    !inside_bounds(parts, bounds)
        || parts.iter().any(|p| {
            obstacles.iter().any(|o| p.overlaps(o)) || others.iter().flatten().any(|o| p.overlaps(o))
        })
}

fn scaled_pose(from: &Pose2, dt: Vec2, dtheta: f64, alpha: f64) -> Pose2 {
    Pose2::new(from.translation + dt * alpha, from.rotation() + dtheta * alpha)
}

fn push_disk_out(center: Vec2, radius: f64, polys: &[ConvexPolygon]) -> Vec2 {
    let mut c = center;
    for _ in 0..8 {
        let mut moved = false;
        for p in polys {
            if let Some(pen) = disk_polygon_overlap(&Disk { center: c, radius }, p) {
                c += pen.direction * (pen.depth + PROJECTION_MARGIN);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    c
}

/// Advances the world by one tick with each robot heading for its target.
pub fn step_world(world: &WorldState, targets: &[Vec2], cfg: &SimConfig) -> Result<WorldState, SimError> {
    if targets.len() != world.robots.len() {
        return Err(SimError::Validation(format!(
            "{} targets for {} robots",
            targets.len(),
            world.robots.len()
        )));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(SimError::Validation("non-finite target".into()));
    }
    let mut next = world.clone();
    let step = cfg.max_step();

    // Robots advance in index order; a move that would overlap another robot
    // is dropped.
    for (i, &target) in targets.iter().enumerate() {
        let r = &next.robots[i];
        let d = target - r.position;
        let len = d.norm();
        let desired = if len <= step { target } else { r.position + d * (step / len) };
        let desired = push_disk_out(desired, r.radius, &world.obstacles);
        let clash = next.robots.iter().enumerate().any(|(j, o)| {
            j != i && o.position.distance(desired) < r.radius + o.radius - 1e-9
        });
        if !clash {
            next.robots[i].position = desired;
        }
    }

    // Objects respond to penetrating robots.
    let world_parts: Vec<Vec<ConvexPolygon>> = next.objects.iter().map(|o| o.world_parts()).collect();
    let mut current_parts = world_parts.clone();
    for k in 0..next.objects.len() {
        let obj = &next.objects[k];
        let c = obj.pose.translation;
        let mut pushes: Vec<(Vec2, Vec2)> = Vec::new();
        for r in &next.robots {
            let disk = Disk { center: r.position, radius: r.radius };
            let deepest = world_parts[k]
                .iter()
                .filter_map(|p| disk_polygon_overlap(&disk, p))
                .max_by(|a, b| a.depth.total_cmp(&b.depth));
            if let Some(pen) = deepest {
                let force = -pen.direction * pen.depth;
                let point = r.position - pen.direction * r.radius;
                pushes.push((point, force));
            }
        }
        if pushes.is_empty() {
            continue;
        }
        let n = pushes.len() as f64;
        let translation = pushes.iter().fold(Vec2::ZERO, |acc, (_, f)| acc + *f) * (1.0 / n);
        let radius = obj.circumradius().max(1e-6);
        let moment: f64 = pushes.iter().map(|(p, f)| (*p - c).cross(*f)).sum();
        let rotation = (cfg.compliance * moment / (radius * radius)).clamp(-cfg.max_rotation, cfg.max_rotation);

        let others: Vec<Vec<ConvexPolygon>> = current_parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, p)| p.clone())
            .collect();
        let full = scaled_pose(&obj.pose, translation, rotation, 1.0);
        let pose = if !blocked(&obj.parts_at(&full), &others, &world.obstacles, world.bounds) {
            full
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let cand = scaled_pose(&obj.pose, translation, rotation, mid);
                if blocked(&obj.parts_at(&cand), &others, &world.obstacles, world.bounds) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if lo == 0.0 {
                obj.pose
            } else {
                scaled_pose(&obj.pose, translation, rotation, lo)
            }
        };
        next.objects[k].pose = pose;
        current_parts[k] = next.objects[k].world_parts();
    }

    // Robots are projected out of whatever they still penetrate.
    let mut solids: Vec<ConvexPolygon> = current_parts.into_iter().flatten().collect();
    solids.extend(world.obstacles.iter().cloned());
    for r in &mut next.robots {
        r.position = push_disk_out(r.position, r.radius, &solids);
    }
    for (i, r) in next.robots.iter().enumerate() {
        next.odometry[i] += world.robots[i].position.distance(r.position);
    }
    Ok(next)
}

/// Finds an object-to-goal matching with every pair within tolerance.
/// Returns `goal_of[object]` on success.
pub fn check_success(world: &WorldState, cfg: &SimConfig) -> Result<Option<Vec<usize>>, SimError> {
    let m = world.objects.len();
    if m != world.goals.len() {
        return Err(SimError::Validation(format!("{m} objects but {} goals", world.goals.len())));
    }
    let ok = |o: usize, g: usize| {
        let a = &world.objects[o].pose;
        let b = &world.goals[g];
        a.translation.distance(b.translation) <= cfg.translation_tolerance
            && angle_diff(a.rotation(), b.rotation()).abs() <= cfg.rotation_tolerance
    };
    let adj: Vec<Vec<bool>> = (0..m).map(|o| (0..m).map(|g| ok(o, g)).collect()).collect();
    if m <= 5 {
        let mut perm: Vec<usize> = (0..m).collect();
        Ok(search_permutation(&adj, &mut perm, 0))
    } else {
        Ok(bipartite_matching(&adj))
    }
}

fn search_permutation(adj: &[Vec<bool>], perm: &mut Vec<usize>, k: usize) -> Option<Vec<usize>> {
    if k == perm.len() {
        return Some(perm.clone());
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        if adj[k][perm[k]] {
            if let Some(found) = search_permutation(adj, perm, k + 1) {
                return Some(found);
            }
        }
        perm.swap(k, i);
    }
    None
}

fn bipartite_matching(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let m = adj.len();
    let mut owner: Vec<Option<usize>> = vec![None; m];
    fn augment(o: usize, adj: &[Vec<bool>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for g in 0..adj.len() {
            if adj[o][g] && !seen[g] {
                seen[g] = true;
                if owner[g].is_none_or(|p| augment(p, adj, seen, owner)) {
                    owner[g] = Some(o);
                    return true;
                }
            }
        }
        false
    }
    for o in 0..m {
        let mut seen = vec![false; m];
        if !augment(o, adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut goal_of = vec![0; m];
    for (g, o) in owner.iter().enumerate() {
        goal_of[o.unwrap()] = g;
    }
    Some(goal_of)
}
