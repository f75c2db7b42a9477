//! Manipulation policies: given an object observation, a requested relative
//! transform, and a robot budget, produce contact points and short pushing
//! trajectories.
//!
//! Image convention: `image[[row, col]]` with row 0 at the lowest y. Pixel
//! index `i` covers `[(i − w/2)·ρ, (i + 1 − w/2)·ρ)` relative to the frame
//! center and is sampled at its middle. Contact tokens carry pixel
//! coordinates `k ∈ 1..=w`, decoded to `(k − w/2)·ρ`.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::flow::{
    cogenerate, mask_state, sample_continuous, Condition, ContinuousVelocity, DiscreteVelocity, Token, B_MAX,
    DEFAULT_HORIZON, DEFAULT_STEPS,
};
use crate::geometry::{Pose2, Vec2};
use crate::seed::{derive_seed, POLICY_STREAM};

pub const DEFAULT_IMAGE_RESOLUTION: f64 = 0.02;
pub const DEFAULT_IMAGE_WIDTH: usize = 64;
pub const HEURISTIC_STANDOFF: f64 = 0.05;
pub const DEFAULT_CONTACT_SPACING: f64 = 0.08;
pub const DEFAULT_MAX_WAYPOINT_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub center: Vec2,
    pub resolution: f64,
    pub width: usize,
}

impl ObservationFrame {
    pub fn new(center: Vec2, resolution: f64, width: usize) -> Self {
        assert!(width.is_multiple_of(2) && width > 0, "frame width must be even");
        assert!(resolution > 0.0);
        Self { center, resolution, width }
    }

    pub fn centered(center: Vec2) -> Self {
        Self::new(center, DEFAULT_IMAGE_RESOLUTION, DEFAULT_IMAGE_WIDTH)
    }

    fn half(&self) -> f64 {
        (self.width / 2) as f64
    }

    /// World position sampled by pixel `(col, row)`.
    pub fn pixel_center(&self, col: usize, row: usize) -> Vec2 {
        let h = self.half();
        self.center
            + Vec2::new(
                (col as f64 + 0.5 - h) * self.resolution,
                (row as f64 + 0.5 - h) * self.resolution,
            )
    }

    /// Pixel `(col, row)` containing world point `p`, if inside the frame.
    pub fn pixel_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let d = p - self.center;
        let c = (d.x / self.resolution + self.half()).floor();
        let r = (d.y / self.resolution + self.half()).floor();
        let w = self.width as f64;
        if c >= 0.0 && r >= 0.0 && c < w && r < w {
            Some((c as usize, r as usize))
        } else {
            None
        }
    }

    /// Frame-relative point of a contact token pair.
    pub fn decode_pixel(&self, px: u16, py: u16) -> Vec2 {
        let h = self.half();
        Vec2::new((px as f64 - h) * self.resolution, (py as f64 - h) * self.resolution)
    }

    /// Nearest token pair for a frame-relative point, clamped to `1..=w`.
    pub fn encode_point(&self, p: Vec2) -> (u16, u16) {
        let w = self.width as f64;
        let q = |v: f64| (v / self.resolution + self.half()).round().clamp(1.0, w) as u16;
        (q(p.x), q(p.y))
    }

    /// The continuous stand-in for a `([M], [M])` contact: category 0 run
    /// through the pixel decoding.
    pub fn mask_sentinel(&self) -> Vec2 {
        self.decode_pixel(0, 0)
    }

    pub fn default_epsilon(&self) -> f64 {
        0.5 * self.resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub object: usize,
    pub frame: ObservationFrame,
    pub image: Array2<u8>,
}

impl Observation {
    /// Mean of occupied pixel centers, or the frame center for an empty mask.
    pub fn centroid(&self) -> Vec2 {
        let mut sum = Vec2::ZERO;
        let mut n = 0usize;
        for ((row, col), &v) in self.image.indexed_iter() {
            if v != 0 {
                sum += self.frame.pixel_center(col, row) - self.frame.center;
                n += 1;
            }
        }
        if n == 0 {
            self.frame.center
        } else {
            self.frame.center + sum * (1.0 / n as f64)
        }
    }

    pub fn occupied_at(&self, p: Vec2) -> bool {
        self.frame
            .pixel_of(p)
            .is_some_and(|(c, r)| self.image[[r, c]] != 0)
    }

    /// Distance along the ray `origin + s·dir` (unit `dir`) at which the ray
    /// leaves the farthest occupied pixel it crosses; 0 if it crosses none.
    pub fn ray_exit(&self, origin: Vec2, dir: Vec2) -> f64 {
        let f = &self.frame;
        let h = f.half();
        let rho = f.resolution;
        // Ray in pixel units.
        let o = Vec2::new((origin.x - f.center.x) / rho + h, (origin.y - f.center.y) / rho + h);
        let w = f.width as f64;
        let mut best = 0.0;
        let step_t = |o: f64, d: f64| -> (f64, f64, i64) {
            if d > 0.0 {
                ((o.floor() + 1.0 - o) / d, 1.0 / d, 1)
            } else if d < 0.0 {
                ((o - o.floor()) / -d, 1.0 / -d, -1)
            } else {
                (f64::INFINITY, f64::INFINITY, 0)
            }
        };
        let (mut tx, dtx, sx) = step_t(o.x, dir.x);
        let (mut ty, dty, sy) = step_t(o.y, dir.y);
        let mut cx = o.x.floor() as i64;
        let mut cy = o.y.floor() as i64;
        let limit = 4 * f.width + 4;
        for _ in 0..limit {
            let exit = tx.min(ty);
            if cx >= 0 && cy >= 0 && (cx as f64) < w && (cy as f64) < w && self.image[[cy as usize, cx as usize]] != 0 {
                best = exit * rho;
            }
            if tx < ty {
                tx += dtx;
                cx += sx;
            } else {
                ty += dty;
                cy += sy;
            }
            let outside = (sx > 0 && cx as f64 >= w)
                || (sx < 0 && cx < 0)
                || (sy > 0 && cy as f64 >= w)
                || (sy < 0 && cy < 0);
            if outside {
                break;
            }
        }
        best
    }
}

/// Up to `B_MAX` contact slots; `None` marks an unused robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    pub slots: Vec<Option<Vec2>>,
}

impl ContactSet {
    pub fn empty() -> Self {
        Self { slots: vec![None; B_MAX] }
    }

    pub fn active(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.slots.iter().flatten().copied()
    }

    pub fn budget(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Count of contacts that are neither masked nor within `eps` of the
/// continuous mask sentinel.
pub fn effective_budget(c: &ContactSet, sentinel: Vec2, eps: f64) -> usize {
    c.active().filter(|p| p.distance(sentinel) >= eps).count()
}

pub fn contacts_to_world(c: &ContactSet, pose: &Pose2) -> ContactSet {
    ContactSet {
        slots: c.slots.iter().map(|s| s.map(|p| pose.apply(p))).collect(),
    }
}

/// Contacts (world frame) and one trajectory per active contact, starting
/// exactly at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    pub contacts: Vec<Vec2>,
    pub trajectories: Vec<Vec<Vec2>>,
    /// Set when the request had no translational part and the contacts are a
    /// best-effort rotational couple.
    pub rotation_only: bool,
}

impl PolicyOutput {
    pub fn none() -> Self {
        Self {
            contacts: Vec::new(),
            trajectories: Vec::new(),
            rotation_only: false,
        }
    }

    pub fn budget(&self) -> usize {
        self.contacts.len()
    }
}

pub trait ManipulationPolicy {
    /// `transform` is relative: rotation about the frame center, then translation.
    fn act(&self, obs: &Observation, transform: &Pose2, budget: usize, seed: u64) -> Result<PolicyOutput, PolicyError>;
}

/// `p` moved by `t` with the rotation taken about `center`.
pub fn apply_about(t: &Pose2, center: Vec2, p: Vec2) -> Vec2 {
    (p - center).rotated(t.rotation()) + center + t.translation
}

/// `h` evenly spaced points from `a` to `b` (endpoints exact), densified so
/// consecutive points are at most `max_step` apart.
pub fn linear_waypoints(a: Vec2, b: Vec2, h: usize, max_step: f64) -> Vec<Vec2> {
    let len = a.distance(b);
    let needed = (len / max_step).ceil() as usize + 1;
    let n = h.max(needed).max(2);
    (0..n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n - 1 {
                b
            } else {
                a.lerp(b, k as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicPolicy {
    pub standoff: f64,
    pub spacing: f64,
    pub robot_radius: f64,
    pub horizon: usize,
    pub max_step: f64,
}

impl Default for HeuristicPolicy {
    fn default() -> Self {
        Self {
            standoff: HEURISTIC_STANDOFF,
            spacing: DEFAULT_CONTACT_SPACING,
            robot_radius: 0.1,
            horizon: DEFAULT_HORIZON,
            max_step: DEFAULT_MAX_WAYPOINT_STEP,
        }
    }
}

impl HeuristicPolicy {
    /// Pushes `p` out along the ray from `centroid` until a disk of the robot
    /// radius centered there clears the mask along that ray.
    pub fn radial_shift(&self, obs: &Observation, centroid: Vec2, p: Vec2, fallback_dir: Vec2) -> Vec2 {
        let off = p - centroid;
        let radius = off.norm();
        let dir = off.normalized().unwrap_or(fallback_dir);
        let b = obs.ray_exit(centroid, dir);
        if b > 0.0 && radius < b + self.robot_radius {
            centroid + dir * (b + obs.frame.resolution + self.robot_radius)
        } else {
            p
        }
    }

    fn contacts(&self, obs: &Observation, t: &Pose2, budget: usize) -> (Vec<Vec2>, bool) {
        let centroid = obs.centroid();
        let n = budget.min(B_MAX);
        if let Some(u) = t.translation.normalized() {
            let base = centroid - u * self.standoff;
            let lateral = u.perp();
            let mid = (n as f64 - 1.0) / 2.0;
            let pts = (0..n)
                .map(|k| {
                    let p = base + lateral * ((k as f64 - mid) * self.spacing);
                    self.radial_shift(obs, centroid, p, -u)
                })
                .collect();
            (pts, false)
        } else {
            // Rotation only: a couple from two antipodal contacts, each offset
            // along the face so the rotational sweep pushes into the object.
            let s = t.rotation().signum();
            let e = Vec2::new(1.0, 0.0);
            let reach = obs.ray_exit(centroid, e).max(obs.ray_exit(centroid, -e));
            let side = obs.ray_exit(centroid, e.perp()).max(obs.ray_exit(centroid, -e.perp()));
            let q = e * (reach + obs.frame.resolution + self.robot_radius) + e.perp() * (s * 0.5 * side);
            let mut pts = vec![centroid + q, centroid - q];
            pts.truncate(n);
            let pts = pts
                .into_iter()
                .map(|p| self.radial_shift(obs, centroid, p, e))
                .collect();
            (pts, true)
        }
    }
}

impl ManipulationPolicy for HeuristicPolicy {
    fn act(&self, obs: &Observation, t: &Pose2, budget: usize, _seed: u64) -> Result<PolicyOutput, PolicyError> {
        if budget > B_MAX {
            return Err(PolicyError::Budget(budget, B_MAX));
        }
        if !t.is_finite() {
            return Err(PolicyError::NonFinite);
        }
        let trivial = t.translation.norm() == 0.0 && t.rotation() == 0.0;
        if budget == 0 || trivial {
            return Ok(PolicyOutput::none());
        }
        let (contacts, rotation_only) = self.contacts(obs, t, budget);
        let trajectories = contacts
            .iter()
            .map(|&c| linear_waypoints(c, apply_about(t, obs.frame.center, c), self.horizon, self.max_step))
            .collect();
        Ok(PolicyOutput {
            contacts,
            trajectories,
            rotation_only,
        })
    }
}

/// How a generated sample is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// `[B_MAX, H, 2]` trajectories; waypoint 0 is the contact.
    Trajectory,
    /// `[B_MAX, H + 1, 2]`: slot 0 holds the contact, slots `1..` a
    /// trajectory rooted at the origin.
    ContinuousContacts,
    /// Contact tokens plus `[B_MAX, H, 2]` trajectories rooted at the origin.
    DiscreteContacts,
}

/// Decodes `2·B_MAX` tokens into frame-relative contacts; any pair with a
/// mask token is an unused slot.
pub fn decode_contacts(k: &[Token], frame: &ObservationFrame) -> Result<ContactSet, PolicyError> {
    if k.len() != 2 * B_MAX {
        return Err(PolicyError::TokenCount {
            expected: 2 * B_MAX,
            got: k.len(),
        });
    }
    let w = frame.width as u16;
    let mut slots = Vec::with_capacity(B_MAX);
    for pair in k.chunks(2) {
        for t in pair {
            if let Token::Value(v) = *t {
                if v == 0 || v > w {
                    return Err(PolicyError::InvalidToken(v));
                }
            }
        }
        slots.push(match (pair[0], pair[1]) {
            (Token::Value(x), Token::Value(y)) => Some(frame.decode_pixel(x, y)),
            _ => None,
        });
    }
    Ok(ContactSet { slots })
}

fn trajectory_rows(x: &Array3<f64>, b: usize, from: usize) -> Vec<Vec2> {
    (from..x.shape()[1]).map(|h| Vec2::new(x[[b, h, 0]], x[[b, h, 1]])).collect()
}

fn check_rows(x: &Array3<f64>, min_steps: usize) -> Result<(), PolicyError> {
    let s = x.shape();
    if s[0] != B_MAX || s[1] < min_steps || s[2] != 2 {
        return Err(PolicyError::External(format!("unexpected sample shape {s:?}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PolicyError::NonFinite);
    }
    Ok(())
}

/// Turns a generated sample into world-frame contacts and trajectories,
/// dropping slots beyond `budget` and slots that decode as masked.
pub fn decode_sample(
    repr: Representation,
    x: &Array3<f64>,
    k: Option<&[Token]>,
    frame: &ObservationFrame,
    eps: f64,
    budget: usize,
) -> Result<PolicyOutput, PolicyError> {
    let sentinel = frame.mask_sentinel();
    let mut contacts = Vec::new();
    let mut trajectories = Vec::new();
    let to_world = |p: Vec2| p + frame.center;
    match repr {
        Representation::Trajectory => {
            check_rows(x, 1)?;
            for b in 0..B_MAX {
                let traj = trajectory_rows(x, b, 0);
                if traj[0].distance(sentinel) < eps {
                    continue;
                }
                contacts.push(to_world(traj[0]));
                trajectories.push(traj.into_iter().map(to_world).collect());
            }
        }
        Representation::ContinuousContacts => {
            check_rows(x, 2)?;
            for b in 0..B_MAX {
                let c = Vec2::new(x[[b, 0, 0]], x[[b, 0, 1]]);
                if c.distance(sentinel) < eps {
                    continue;
                }
                let rows = trajectory_rows(x, b, 1);
                let shift = c - rows[0];
                contacts.push(to_world(c));
                trajectories.push(rows.into_iter().map(|p| to_world(p + shift)).collect());
            }
        }
        Representation::DiscreteContacts => {
            check_rows(x, 1)?;
            let k = k.ok_or_else(|| PolicyError::External("missing contact tokens".into()))?;
            let set = decode_contacts(k, frame)?;
            for (b, slot) in set.slots.iter().enumerate() {
                let Some(c) = *slot else { continue };
                let rows = trajectory_rows(x, b, 0);
                let shift = c - rows[0];
                contacts.push(to_world(c));
                trajectories.push(rows.into_iter().map(|p| to_world(p + shift)).collect());
            }
        }
    }
    contacts.truncate(budget);
    trajectories.truncate(budget);
    Ok(PolicyOutput {
        contacts,
        trajectories,
        rotation_only: false,
    })
}

/// A flow-matching policy over a supplied velocity field: samples Gaussian
/// noise (and mask tokens), integrates, and decodes.
pub struct GenerativePolicy<F> {
    pub field: F,
    pub repr: Representation,
    pub horizon: usize,
    pub steps: usize,
    pub eps: Option<f64>,
    pub resolution: f64,
    pub width: usize,
}

impl<F> GenerativePolicy<F> {
    pub fn new(field: F, repr: Representation) -> Self {
        Self {
            field,
            repr,
            horizon: DEFAULT_HORIZON,
            steps: DEFAULT_STEPS,
            eps: None,
            resolution: DEFAULT_IMAGE_RESOLUTION,
            width: DEFAULT_IMAGE_WIDTH,
        }
    }

    fn noise(&self, seed: u64) -> Array3<f64> {
        let rows = match self.repr {
            Representation::ContinuousContacts => self.horizon + 1,
            _ => self.horizon,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, POLICY_STREAM));
        Array3::from_shape_simple_fn((B_MAX, rows, 2), || StandardNormal.sample(&mut rng))
    }
}

impl<F: ContinuousVelocity + DiscreteVelocity> ManipulationPolicy for GenerativePolicy<F> {
    fn act(&self, obs: &Observation, t: &Pose2, budget: usize, seed: u64) -> Result<PolicyOutput, PolicyError> {
        if budget > B_MAX {
            return Err(PolicyError::Budget(budget, B_MAX));
        }
        if budget == 0 {
            return Ok(PolicyOutput::none());
        }
        let cond = Condition::new(obs.image.clone(), *t, budget);
        let x0 = self.noise(seed);
        let eps = self.eps.unwrap_or_else(|| obs.frame.default_epsilon());
        match self.repr {
            Representation::DiscreteContacts => {
                let (x, k) = cogenerate(&self.field, &x0, &mask_state(), self.steps, derive_seed(seed, POLICY_STREAM + 1), &cond)?;
                decode_sample(self.repr, &x, Some(&k), &obs.frame, eps, budget)
            }
            _ => {
                let x = sample_continuous(&self.field, &x0, self.steps, &cond)?;
                decode_sample(self.repr, &x, None, &obs.frame, eps, budget)
            }
        }
    }
}

/// Contacts and trajectories produced offline, keyed by object id (or
/// `"default"`). Contacts are relative to the observation frame center and
/// trajectories are rooted at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalPolicy {
    pub objects: BTreeMap<String, ExternalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEntry {
    pub contacts: Vec<[f64; 2]>,
    pub trajectories: Vec<Vec<[f64; 2]>>,
}

impl ExternalPolicy {
    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let p: ExternalPolicy = serde_json::from_str(text).map_err(|e| PolicyError::External(e.to_string()))?;
        for (key, e) in &p.objects {
            if e.contacts.len() != e.trajectories.len() {
                return Err(PolicyError::External(format!(
                    "object {key}: {} contacts but {} trajectories",
                    e.contacts.len(),
                    e.trajectories.len()
                )));
            }
            if e.contacts.len() > B_MAX {
                return Err(PolicyError::Budget(e.contacts.len(), B_MAX));
            }
            if e.trajectories.iter().any(|t| t.is_empty()) {
                return Err(PolicyError::External(format!("object {key}: empty trajectory")));
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|e| PolicyError::External(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn lookup(&self, obs: &Observation, budget: usize) -> Result<PolicyOutput, PolicyError> {
        if budget > B_MAX {
            return Err(PolicyError::Budget(budget, B_MAX));
        }
        let Some(entry) = self.objects.get(&obs.object.to_string()).or_else(|| self.objects.get("default")) else {
            return Ok(PolicyOutput::none());
        };
        let v = |a: [f64; 2]| Vec2::new(a[0], a[1]);
        let mut out = PolicyOutput::none();
        for (c, traj) in entry.contacts.iter().zip(&entry.trajectories).take(budget) {
            let c = v(*c) + obs.frame.center;
            let root = v(traj[0]);
            out.contacts.push(c);
            out.trajectories.push(traj.iter().map(|&p| c + (v(p) - root)).collect());
        }
        Ok(out)
    }
}

impl ManipulationPolicy for ExternalPolicy {
    fn act(&self, obs: &Observation, _t: &Pose2, budget: usize, _seed: u64) -> Result<PolicyOutput, PolicyError> {
        self.lookup(obs, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn disk_obs(radius: f64) -> Observation {
        let frame = ObservationFrame::centered(Vec2::ZERO);
        let w = frame.width;
        let image = Array2::from_shape_fn((w, w), |(r, c)| (frame.pixel_center(c, r).norm() < radius) as u8);
        Observation { object: 0, frame, image }
    }

    fn point_obs() -> Observation {
        // Empty mask: the centroid falls back to the frame center and no
        // contact needs shifting.
        let frame = ObservationFrame::centered(Vec2::ZERO);
        let w = frame.width;
        Observation { object: 0, frame, image: Array2::zeros((w, w)) }
    }

    #[test]
    fn single_contact_behind_centroid() {
        let out = HeuristicPolicy::default()
            .act(&point_obs(), &Pose2::from_xy(1.0, 0.0), 1, 0)
            .unwrap();
        assert_eq!(out.contacts.len(), 1);
        assert_abs_diff_eq!(out.contacts[0].x, -0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(out.contacts[0].y, 0.0, epsilon = 1e-12);
        let end = *out.trajectories[0].last().unwrap();
        assert_abs_diff_eq!(end.x, 0.95, epsilon = 1e-12);
        assert_eq!(out.trajectories[0][0], out.contacts[0]);
    }

    #[test]
    fn three_contacts_perpendicular() {
        let out = HeuristicPolicy::default()
            .act(&point_obs(), &Pose2::from_xy(1.0, 0.0), 3, 0)
            .unwrap();
        let expect = [(-0.05, -0.08), (-0.05, 0.0), (-0.05, 0.08)];
        for (c, (x, y)) in out.contacts.iter().zip(expect) {
            assert_abs_diff_eq!(c.x, x, epsilon = 1e-12);
            assert_abs_diff_eq!(c.y, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn contact_shifted_out_of_disk_mask() {
        let obs = disk_obs(0.2);
        let out = HeuristicPolicy::default().act(&obs, &Pose2::from_xy(1.0, 0.0), 1, 0).unwrap();
        let c = out.contacts[0];
        assert_abs_diff_eq!(c.x, -(0.2 + 0.1 + 0.02), epsilon = 1e-9);
        assert_abs_diff_eq!(c.y, 0.0, epsilon = 1e-9);
        assert!(!obs.occupied_at(c));
    }

    #[test]
    fn zero_transform_or_budget_is_noop() {
        let p = HeuristicPolicy::default();
        assert_eq!(p.act(&point_obs(), &Pose2::IDENTITY, 3, 0).unwrap().budget(), 0);
        assert_eq!(p.act(&point_obs(), &Pose2::from_xy(1.0, 0.0), 0, 0).unwrap().budget(), 0);
        assert!(matches!(p.act(&point_obs(), &Pose2::from_xy(1.0, 0.0), 4, 0), Err(PolicyError::Budget(4, 3))));
    }

    #[test]
    fn rotation_only_makes_a_couple() {
        let obs = disk_obs(0.15);
        let out = HeuristicPolicy::default().act(&obs, &Pose2::new(Vec2::ZERO, 0.2), 3, 0).unwrap();
        assert!(out.rotation_only);
        assert_eq!(out.contacts.len(), 2);
        let (a, b) = (out.contacts[0], out.contacts[1]);
        assert_abs_diff_eq!((a + b).norm(), 0.0, epsilon = 1e-12);
        for c in &out.contacts {
            assert!(!obs.occupied_at(*c));
        }
    }

    #[test]
    fn long_requests_are_densified() {
        let pts = linear_waypoints(Vec2::ZERO, Vec2::new(1.0, 0.0), 16, 0.05);
        assert_eq!(pts.len(), 21);
        assert!(pts.windows(2).all(|w| w[0].distance(w[1]) <= 0.05 + 1e-12));
    }

    #[test]
    fn token_decoding() {
        let frame = ObservationFrame::centered(Vec2::ZERO);
        let k = [Token::Value(32), Token::Value(32), Token::Value(42), Token::Value(32), Token::Mask, Token::Value(5)];
        let set = decode_contacts(&k, &frame).unwrap();
        assert_eq!(set.slots[0], Some(Vec2::ZERO));
        let c1 = set.slots[1].unwrap();
        assert_abs_diff_eq!(c1.x, 0.2, epsilon = 1e-12);
        assert_eq!(set.slots[2], None);
        assert_eq!(decode_contacts(&mask_state(), &frame).unwrap().budget(), 0);
        assert!(matches!(decode_contacts(&[Token::Value(65); 6], &frame), Err(PolicyError::InvalidToken(65))));
        assert!(matches!(decode_contacts(&[Token::Mask; 4], &frame), Err(PolicyError::TokenCount { .. })));
    }

    #[test]
    fn encode_decode_round_trip() {
        let frame = ObservationFrame::centered(Vec2::ZERO);
        for &(x, y) in &[(0.0, 0.0), (0.123, -0.311), (-0.6, 0.6), (0.017, 0.009)] {
            let p = Vec2::new(x, y);
            let (a, b) = frame.encode_point(p);
            let q = frame.decode_pixel(a, b);
            assert!((q.x - x).abs() <= 0.01 + 1e-12 && (q.y - y).abs() <= 0.01 + 1e-12);
        }
    }

    #[test]
    fn budget_with_epsilon() {
        let frame = ObservationFrame::centered(Vec2::ZERO);
        let s = frame.mask_sentinel();
        let eps = frame.default_epsilon();
        let set = ContactSet {
            slots: vec![Some(Vec2::new(0.1, 0.0)), Some(s + Vec2::new(0.4 * eps, 0.0)), None],
        };
        assert_eq!(effective_budget(&set, s, eps), 1);
        assert_eq!(effective_budget(&ContactSet::empty(), s, eps), 0);
    }

    #[test]
    fn contacts_follow_object_pose() {
        let set = ContactSet {
            slots: vec![Some(Vec2::new(0.2, 0.0)), Some(Vec2::ZERO), None],
        };
        let w = contacts_to_world(&set, &Pose2::new(Vec2::new(1.0, 1.0), std::f64::consts::FRAC_PI_2));
        let a = w.slots[0].unwrap();
        assert_abs_diff_eq!(a.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.y, 1.2, epsilon = 1e-12);
        assert_eq!(w.slots[1], Some(Vec2::new(1.0, 1.0)));
        assert_eq!(contacts_to_world(&set, &Pose2::IDENTITY), set);
    }

    #[test]
    fn external_policy_parses_and_shifts() {
        let text = r#"{"objects": {"default": {"contacts": [[-0.3, 0.0]], "trajectories": [[[0, 0], [0.05, 0], [0.1, 0]]]}}}"#;
        let p = ExternalPolicy::from_json(text).unwrap();
        let obs = Observation {
            object: 4,
            frame: ObservationFrame::centered(Vec2::new(1.0, 2.0)),
            image: Array2::zeros((64, 64)),
        };
        let out = p.act(&obs, &Pose2::IDENTITY, 3, 0).unwrap();
        assert_eq!(out.contacts, vec![Vec2::new(0.7, 2.0)]);
        assert_eq!(out.trajectories[0].len(), 3);
        assert_abs_diff_eq!(out.trajectories[0][2].x, 0.8, epsilon = 1e-12);
        assert!(ExternalPolicy::from_json(r#"{"objects": {"0": {"contacts": [[0,0]], "trajectories": []}}}"#).is_err());
    }
}
