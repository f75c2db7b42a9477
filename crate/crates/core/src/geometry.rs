//! Planar primitives and continuous-time conflict checks for disk robots.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::primitives::MotionEdge;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > EPS).then(|| self * (1.0 / n))
    }

    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Signed shortest angular difference `a - b`, in (-pi, pi].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// A rigid transform in SE(2): rotate, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub translation: Vec2,
    rotation: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        translation: Vec2::ZERO,
        rotation: 0.0,
    };

    pub fn new(translation: Vec2, rotation: f64) -> Self {
        Self {
            translation,
            rotation: normalize_angle(rotation),
        }
    }

    pub fn from_xy(x: f64, y: f64) -> Self {
        Self::new(Vec2::new(x, y), 0.0)
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.rotation) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2::new(self.apply(other.translation), self.rotation + other.rotation)
    }

    pub fn inverse(&self) -> Pose2 {
        let r = -self.rotation;
        Pose2::new((-self.translation).rotated(r), r)
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.rotation.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if radius <= 0.0 {
            return Err(GeometryError::NonPositiveRadius(radius));
        }
        Ok(Self { center, radius })
    }
}

/// Strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            vertices: Vec<Vec2>,
        }
        let raw = Raw::deserialize(d)?;
        ConvexPolygon::new(raw.vertices).map_err(serde::de::Error::custom)
    }
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::Degenerate(format!("{n} vertices")));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).norm() <= EPS {
                return Err(GeometryError::Degenerate(format!("repeated vertex {i}")));
            }
            if (b - a).cross(c - b) <= EPS {
                return Err(GeometryError::Degenerate(format!(
                    "not strictly convex counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        // Winding must total one turn; rejects star-shaped self-intersections.
        let turn: f64 = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let c = vertices[(i + 2) % n];
                (b - a).cross(c - b).atan2((b - a).dot(c - b))
            })
            .sum();
        if (turn - 2.0 * PI).abs() > 1e-6 {
            return Err(GeometryError::Degenerate("self-intersecting outline".into()));
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[min, max]`.
    pub fn rectangle(min: Vec2, max: Vec2) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    /// Square of side `side` centred at the origin.
    pub fn square(side: f64) -> Result<Self, GeometryError> {
        let h = side / 2.0;
        Self::rectangle(Vec2::new(-h, -h), Vec2::new(h, h))
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn centroid(&self) -> Vec2 {
        let a = self.area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn circumradius_about(&self, c: Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.distance(c))
            .fold(0.0, f64::max)
    }

    pub fn aabb(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    /// Strict containment test (boundary counts as outside).
    pub fn contains_strict(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) > 0.0)
    }

    /// Euclidean distance from `p` to the polygon (0 inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance between segment `[p, q]` and the polygon (0 on intersection).
    pub fn distance_to_segment(&self, p: Vec2, q: Vec2) -> f64 {
        if self.contains(p) || self.contains(q) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for (a, b) in self.edges() {
            if segments_intersect(p, q, a, b) {
                return 0.0;
            }
            best = best
                .min(point_segment_distance(a, p, q))
                .min(point_segment_distance(p, a, b))
                .min(point_segment_distance(q, a, b));
        }
        best
    }

    /// Separating-axis overlap test; touching polygons do not overlap.
    pub fn overlaps(&self, other: &ConvexPolygon) -> bool {
        const TOL: f64 = 1e-12;
        for poly in [self, other] {
            for (a, b) in poly.edges() {
                let axis = (b - a).perp();
                let (min1, max1) = project(&self.vertices, axis);
                let (min2, max2) = project(&other.vertices, axis);
                let scale = axis.norm().max(1.0);
                if max1 - min2 <= TOL * scale || max2 - min1 <= TOL * scale {
                    return false;
                }
            }
        }
        true
    }
}

fn project(vs: &[Vec2], axis: Vec2) -> (f64, f64) {
    vs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let d = v.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

/// Splits a simple polygon into convex parts (the polygon itself when
/// already convex, ear-clipped triangles otherwise). Either winding is accepted.
pub fn decompose(points: &[Vec2]) -> Result<Vec<ConvexPolygon>, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::Degenerate(format!("{} vertices", points.len())));
    }
    let mut pts = points.to_vec();
    let signed: f64 = (0..pts.len())
        .map(|i| pts[i].cross(pts[(i + 1) % pts.len()]))
        .sum();
    if signed < 0.0 {
        pts.reverse();
    }
    if let Ok(p) = ConvexPolygon::new(pts.clone()) {
        return Ok(vec![p]);
    }
    // Drop collinear vertices before clipping ears.
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut out = Vec::new();
    let mut guard = 0;
    while idx.len() > 3 {
        guard += 1;
        if guard > 10_000 {
            return Err(GeometryError::Degenerate("ear clipping did not converge".into()));
        }
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            let turn = (b - a).cross(c - b);
            if turn.abs() <= EPS {
                idx.remove(k);
                clipped = true;
                break;
            }
            if turn < 0.0 {
                continue;
            }
            let tri = [a, b, c];
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && {
                    let p = pts[j];
                    (0..3).all(|e| (tri[(e + 1) % 3] - tri[e]).cross(p - tri[e]) >= 0.0)
                }
            });
            if !blocked {
                out.push(ConvexPolygon::new(vec![a, b, c])?);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(GeometryError::Degenerate("polygon is not simple".into()));
        }
    }
    out.push(ConvexPolygon::new(idx.iter().map(|&i| pts[i]).collect())?);
    Ok(out)
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 <= EPS * EPS {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Minimum over t in [0,1] of |(a0 + t·da) − (b0 + t·db)|², closed form.
pub fn min_separation_sq(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    let p = a0 - b0;
    let v = (a1 - a0) - (b1 - b0);
    let vv = v.norm_sq();
    let t = if vv <= EPS * EPS {
        0.0
    } else {
        (-p.dot(v) / vv).clamp(0.0, 1.0)
    };
    (p + v * t).norm_sq()
}

/// True iff two disks of radius `r` traversing their edges over the same
/// unit time step come closer than `2r` at any instant.
pub fn edge_edge_conflict(e1: &MotionEdge, e2: &MotionEdge, r: f64) -> bool {
    let lim = 2.0 * r;
    min_separation_sq(e1.from, e1.to, e2.from, e2.to) < lim * lim
}

/// True iff a disk sweeping along `e` passes closer than `2r` to a
/// stationary disk centred at `q`.
pub fn edge_state_conflict(e: &MotionEdge, q: Vec2, r: f64) -> bool {
    point_segment_distance(q, e.from, e.to) < 2.0 * r
}

/// Minimal translation pushing a disk out of a polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    /// Unit vector along which the disk must move to separate.
    pub direction: Vec2,
}

pub fn disk_polygon_overlap(d: &Disk, p: &ConvexPolygon) -> Option<Penetration> {
    let c = d.center;
    if p.contains(c) {
        // Nearest face from the inside.
        let (dist, normal) = p
            .edges()
            .map(|(a, b)| {
                let n = (b - a).perp().normalized().map(|n| -n).unwrap_or(Vec2::ZERO);
                ((c - a).dot(n).abs(), n)
            })
            .fold((f64::INFINITY, Vec2::ZERO), |best, cur| {
                if cur.0 < best.0 {
                    cur
                } else {
                    best
                }
            });
        return Some(Penetration {
            depth: d.radius + dist,
            direction: normal,
        });
    }
    let (dist, closest) = p
        .edges()
        .map(|(a, b)| {
            let ab = b - a;
            let t = ((c - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            let q = a + ab * t;
            (c.distance(q), q)
        })
        .fold((f64::INFINITY, Vec2::ZERO), |best, cur| {
            if cur.0 < best.0 {
                cur
            } else {
                best
            }
        });
    if dist >= d.radius {
        return None;
    }
    Some(Penetration {
        depth: d.radius - dist,
        direction: (c - closest) * (1.0 / dist),
    })
}

pub fn transform_polygon(pose: &Pose2, p: &ConvexPolygon) -> ConvexPolygon {
    // Rigid motions preserve convexity and winding.
    ConvexPolygon {
        vertices: p.vertices.iter().map(|v| pose.apply(*v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn edge(a: (f64, f64), b: (f64, f64)) -> MotionEdge {
        MotionEdge::motion(0, Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)).unwrap()
    }

    fn dense_min_sep(e1: &MotionEdge, e2: &MotionEdge) -> f64 {
        (0..=10_000)
            .map(|k| {
                let t = k as f64 / 10_000.0;
                e1.from.lerp(e1.to, t).distance(e2.from.lerp(e2.to, t))
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::rectangle(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap()
    }

    #[test]
    fn head_on_swap_conflicts() {
        let e1 = edge((0.0, 0.0), (1.0, 0.0));
        let e2 = edge((1.0, 0.0), (0.0, 0.0));
        assert!(dense_min_sep(&e1, &e2) < 0.2);
        assert!(edge_edge_conflict(&e1, &e2, 0.1));
    }

    #[test]
    fn separated_waits_do_not_conflict() {
        let e1 = edge((0.0, 0.0), (0.0, 0.0));
        let e2 = edge((1.0, 0.0), (1.0, 0.0));
        assert!(!edge_edge_conflict(&e1, &e2, 0.4));
    }

    #[test]
    fn parallel_motion_keeps_separation() {
        let e1 = edge((0.0, 0.0), (0.05, 0.0));
        let e2 = edge((0.0, 0.12), (0.05, 0.12));
        assert_abs_diff_eq!(dense_min_sep(&e1, &e2), 0.12, epsilon = 1e-12);
        assert!(!edge_edge_conflict(&e1, &e2, 0.05));
    }

    #[test]
    fn tangency_is_not_a_conflict() {
        let e1 = edge((0.0, 0.0), (0.0, 0.0));
        let e2 = edge((0.5, 0.0), (0.5, 0.0));
        assert!(!edge_edge_conflict(&e1, &e2, 0.25));
    }

    #[test]
    fn edge_state_examples() {
        let e = edge((0.0, 0.0), (0.1, 0.0));
        assert!(edge_state_conflict(&e, Vec2::new(0.05, 0.05), 0.05));
        assert!(!edge_state_conflict(&e, Vec2::new(0.5, 0.0), 0.1));
        let w = edge((0.0, 0.0), (0.0, 0.0));
        assert!(edge_state_conflict(&w, Vec2::new(0.19, 0.0), 0.1));
    }

    #[test]
    fn non_finite_edge_rejected() {
        assert!(matches!(
            MotionEdge::motion(0, Vec2::new(f64::NAN, 0.0), Vec2::ZERO),
            Err(GeometryError::NonFinite)
        ));
    }

    #[test]
    fn disk_inside_square_pushes_to_nearest_face() {
        let d = Disk::new(Vec2::new(0.5, 0.5), 0.1).unwrap();
        let pen = disk_polygon_overlap(&d, &unit_square()).unwrap();
        assert_abs_diff_eq!(pen.depth, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(pen.direction.norm(), 1.0, epsilon = 1e-12);
        // All faces tie; enumeration over faces gives the same depth.
        let faces = [0.5, 0.5, 0.5, 0.5];
        assert_abs_diff_eq!(0.1 + faces.iter().cloned().fold(f64::INFINITY, f64::min), pen.depth);
    }

    #[test]
    fn disk_far_away_has_no_overlap() {
        let d = Disk::new(Vec2::new(5.0, 5.0), 0.1).unwrap();
        assert!(disk_polygon_overlap(&d, &unit_square()).is_none());
    }

    #[test]
    fn disk_grazing_right_face() {
        let d = Disk::new(Vec2::new(1.05, 0.5), 0.1).unwrap();
        let pen = disk_polygon_overlap(&d, &unit_square()).unwrap();
        assert_abs_diff_eq!(pen.depth, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(pen.direction.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pen.direction.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_is_continuous_at_boundary() {
        let sq = unit_square();
        let at = Disk::new(Vec2::new(1.1, 0.5), 0.1).unwrap();
        assert!(disk_polygon_overlap(&at, &sq).is_none());
        let eps = 1e-4;
        let inside = Disk::new(Vec2::new(1.1 - eps, 0.5), 0.1).unwrap();
        assert_abs_diff_eq!(disk_polygon_overlap(&inside, &sq).unwrap().depth, eps, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_polygons_rejected() {
        assert!(ConvexPolygon::new(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)]).is_err());
        // Clockwise.
        assert!(ConvexPolygon::new(vec![Vec2::ZERO, Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)]).is_err());
        // Collinear.
        assert!(ConvexPolygon::new(vec![
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 1.0)
        ])
        .is_err());
        assert!(Disk::new(Vec2::ZERO, 0.0).is_err());
    }

    #[test]
    fn transforms() {
        let sq = unit_square();
        assert_eq!(transform_polygon(&Pose2::IDENTITY, &sq), sq);
        let moved = transform_polygon(&Pose2::from_xy(1.0, 0.0), &sq);
        assert_eq!(moved.aabb(), (Vec2::new(1.0, 0.0), Vec2::new(2.0, 1.0)));
        let rot = transform_polygon(&Pose2::new(Vec2::ZERO, PI / 2.0), &sq);
        assert_abs_diff_eq!(rot.vertices()[0].norm(), 0.0);
        assert_abs_diff_eq!(rot.vertices()[1].x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rot.vertices()[1].y, 1.0, epsilon = 1e-15);
        assert!(ConvexPolygon::new(rot.vertices().to_vec()).is_ok());
    }

    #[test]
    fn pose_compose_inverse() {
        let a = Pose2::new(Vec2::new(1.0, -2.0), 0.7);
        let id = a.compose(&a.inverse());
        assert_abs_diff_eq!(id.translation.norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.rotation(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert!(normalize_angle(-PI) > 0.0);
    }

    #[test]
    fn concave_decomposition_covers_l_shape() {
        let l = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let parts = decompose(&l).unwrap();
        let area: f64 = parts.iter().map(|p| p.area()).sum();
        assert_abs_diff_eq!(area, 3.0, epsilon = 1e-12);
        assert!(parts.iter().any(|p| p.contains(Vec2::new(0.5, 1.5))));
        assert!(!parts.iter().any(|p| p.contains_strict(Vec2::new(1.5, 1.5))));
    }

    #[test]
    fn sat_touching_is_not_overlap() {
        let a = unit_square();
        let b = ConvexPolygon::rectangle(Vec2::new(1.0, 0.0), Vec2::new(2.0, 1.0)).unwrap();
        assert!(!a.overlaps(&b));
        let c = ConvexPolygon::rectangle(Vec2::new(0.99, 0.0), Vec2::new(2.0, 1.0)).unwrap();
        assert!(a.overlaps(&c));
    }

    fn coord() -> impl Strategy<Value = f64> {
        -2.0..2.0f64
    }

    proptest! {
        #[test]
        fn edge_conflict_symmetric_and_matches_dense_sampling(
            ax in coord(), ay in coord(), bx in coord(), by in coord(),
            cx in coord(), cy in coord(), dx in coord(), dy in coord(),
            r in 0.01..0.5f64,
        ) {
            let e1 = edge((ax, ay), (bx, by));
            let e2 = edge((cx, cy), (dx, dy));
            let c12 = edge_edge_conflict(&e1, &e2, r);
            prop_assert_eq!(c12, edge_edge_conflict(&e2, &e1, r));
            let sampled = dense_min_sep(&e1, &e2);
            if c12 {
                // The closed-form minimum is below 2r; sampling may overshoot
                // it by at most half a sample interval of relative motion.
                let rel = ((bx - ax) - (dx - cx)).hypot((by - ay) - (dy - cy));
                prop_assert!(sampled < 2.0 * r + rel * 1e-4);
            } else {
                prop_assert!(sampled >= 2.0 * r - 1e-9);
            }
        }
    }
}
