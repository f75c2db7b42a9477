use std::sync::Arc;

use gco_core::costmap::cell_cost;
use gco_core::{build_distance_field, dist, ConvexPolygon, GridMap, Vec2};
use proptest::prelude::*;

fn map_with_blocks(blocks: &[(f64, f64, f64)]) -> Arc<GridMap> {
    let obstacles = blocks
        .iter()
        .map(|&(x, y, s)| ConvexPolygon::rectangle(Vec2::new(x, y), Vec2::new(x + s, y + s)).unwrap())
        .collect();
    Arc::new(GridMap::new(Vec2::ZERO, Vec2::new(2.0, 2.0), 0.05, obstacles, 0.05).unwrap())
}

fn blocks() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.2..1.6f64, 0.2..1.6f64, 0.05..0.4f64), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_is_a_consistent_path_metric(obs in blocks(), gx in 0.1..1.9f64, gy in 0.1..1.9f64) {
        let map = map_with_blocks(&obs);
        let goal = Vec2::new(gx, gy);
        prop_assume!(!map.is_occupied(goal));
        let field = build_distance_field(map.clone(), goal).unwrap();
        prop_assert_eq!(dist(&field, goal).unwrap(), 0.0);
        let res = map.resolution();
        for iy in 0..map.height() {
            for ix in 0..map.width() {
                let c = cell_cost(&field, ix, iy).unwrap();
                if !c.is_finite() {
                    continue;
                }
                // Every stored cost is a path length, never shorter than the
                // straight line.
                prop_assert!(c >= map.cell_center(ix, iy).distance(goal) - 1e-9);
                for (nx, ny) in [(ix + 1, iy), (ix, iy + 1)] {
                    if nx < map.width() && ny < map.height() {
                        let n = cell_cost(&field, nx, ny).unwrap();
                        if n.is_finite() {
                            prop_assert!((c - n).abs() <= res + 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn heuristic_never_undercuts_straight_line(obs in blocks(), g in (0.1..1.9f64, 0.1..1.9f64), p in (0.1..1.9f64, 0.1..1.9f64)) {
        let map = map_with_blocks(&obs);
        let goal = Vec2::new(g.0, g.1);
        let pos = Vec2::new(p.0, p.1);
        prop_assume!(!map.is_occupied(goal));
        let field = build_distance_field(map, goal).unwrap();
        let d = dist(&field, pos).unwrap();
        prop_assert!(d >= pos.distance(goal) - 1e-9);
    }
}

#[test]
fn occupied_goal_is_rejected() {
    let map = map_with_blocks(&[(0.5, 0.5, 0.5)]);
    assert!(build_distance_field(map, Vec2::new(0.75, 0.75)).is_err());
}
