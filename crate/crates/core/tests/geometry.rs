use std::f64::consts::PI;

use gco_core::geometry::{
    disk_polygon_overlap, edge_edge_conflict, min_separation_sq, normalize_angle, transform_polygon,
};
use gco_core::{ConvexPolygon, Disk, MotionEdge, Pose2, Vec2};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn point() -> impl Strategy<Value = Vec2> {
    (coord(), coord()).prop_map(|(x, y)| Vec2::new(x, y))
}

/// Regular polygon with random size, vertex count and orientation.
fn polygon() -> impl Strategy<Value = ConvexPolygon> {
    (3usize..9, 0.05..1.0f64, -PI..PI, point()).prop_map(|(n, r, phase, c)| {
        let verts = (0..n)
            .map(|k| c + Vec2::from_angle(phase + 2.0 * PI * k as f64 / n as f64) * r)
            .collect();
        ConvexPolygon::new(verts).unwrap()
    })
}

fn sampled_min_sq(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2, samples: usize) -> f64 {
    (0..=samples)
        .map(|k| {
            let t = k as f64 / samples as f64;
            (a0.lerp(a1, t) - b0.lerp(b1, t)).norm_sq()
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #[test]
    fn edge_conflict_is_symmetric(a0 in point(), a1 in point(), b0 in point(), b1 in point(), r in 0.01..0.5f64) {
        let e1 = MotionEdge::motion(0, a0, a1).unwrap();
        let e2 = MotionEdge::motion(1, b0, b1).unwrap();
        prop_assert_eq!(edge_edge_conflict(&e1, &e2, r), edge_edge_conflict(&e2, &e1, r));
    }

    #[test]
    fn min_separation_matches_dense_sampling(a0 in point(), a1 in point(), b0 in point(), b1 in point()) {
        let exact = min_separation_sq(a0, a1, b0, b1);
        let sampled = sampled_min_sq(a0, a1, b0, b1, 2000);
        prop_assert!(exact <= sampled + 1e-12, "exact {exact} above sampled {sampled}");
        // Relative speed is at most 8 across the box, so one sample step moves
        // the separation by at most 8/2000.
        let bound = sampled.sqrt() - 8.0 / 2000.0;
        prop_assert!(exact.sqrt() >= bound - 1e-12);
    }

    #[test]
    fn conflict_agrees_with_separation(a0 in point(), a1 in point(), b0 in point(), b1 in point(), r in 0.01..0.5f64) {
        let e1 = MotionEdge::motion(0, a0, a1).unwrap();
        let e2 = MotionEdge::motion(1, b0, b1).unwrap();
        let d = min_separation_sq(a0, a1, b0, b1).sqrt();
        if d < 2.0 * r - 1e-6 {
            prop_assert!(edge_edge_conflict(&e1, &e2, r));
        }
        if d > 2.0 * r + 1e-6 {
            prop_assert!(!edge_edge_conflict(&e1, &e2, r));
        }
    }

    #[test]
    fn overlap_direction_separates(c in point(), radius in 0.01..0.5f64, poly in polygon()) {
        let disk = Disk::new(c, radius).unwrap();
        match disk_polygon_overlap(&disk, &poly) {
            Some(pen) => {
                prop_assert!(pen.depth > 0.0);
                prop_assert!((pen.direction.norm() - 1.0).abs() < 1e-9);
                let moved = Disk::new(c + pen.direction * (pen.depth + 1e-7), radius).unwrap();
                prop_assert!(disk_polygon_overlap(&moved, &poly).is_none());
            }
            None => {
                prop_assert!(!poly.contains(c));
                prop_assert!(poly.distance_to_point(c) >= radius - 1e-9);
            }
        }
    }

    #[test]
    fn overlap_depth_is_continuous(c in point(), radius in 0.01..0.5f64, poly in polygon(), dir in -PI..PI) {
        // Depth is 1-Lipschitz in the disk centre.
        let h = 1e-4;
        let d0 = disk_polygon_overlap(&Disk::new(c, radius).unwrap(), &poly).map_or(0.0, |p| p.depth);
        let c1 = c + Vec2::from_angle(dir) * h;
        let d1 = disk_polygon_overlap(&Disk::new(c1, radius).unwrap(), &poly).map_or(0.0, |p| p.depth);
        prop_assert!((d0 - d1).abs() <= h + 1e-9, "{d0} vs {d1}");
    }

    #[test]
    fn transforms_preserve_area(poly in polygon(), t in point(), theta in -PI..PI) {
        let moved = transform_polygon(&Pose2::new(t, theta), &poly);
        prop_assert!((moved.area() - poly.area()).abs() <= 1e-9 * poly.area().max(1.0));
        let back = transform_polygon(&Pose2::new(t, theta).inverse(), &moved);
        for (a, b) in back.vertices().iter().zip(poly.vertices()) {
            prop_assert!(a.distance(*b) < 1e-9);
        }
    }

    #[test]
    fn normalized_angles_stay_in_range(theta in -100.0..100.0f64) {
        let n = normalize_angle(theta);
        prop_assert!(n > -PI - 1e-12 && n <= PI + 1e-12);
        prop_assert!((n.cos() - theta.cos()).abs() < 1e-9 && (n.sin() - theta.sin()).abs() < 1e-9);
    }
}
