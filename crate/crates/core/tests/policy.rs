use gco_core::gco::{observe, GcoConfig};
use gco_core::policy::{effective_budget, ContactSet};
use gco_core::scenario::push_square;
use gco_core::{HeuristicPolicy, ManipulationPolicy, ObservationFrame, Pose2, Vec2};
use proptest::prelude::*;

proptest! {
    #[test]
    fn encoding_rounds_to_the_nearest_pixel(x in -0.62..0.64f64, y in -0.62..0.64f64) {
        let f = ObservationFrame::centered(Vec2::new(1.0, 2.0));
        let (px, py) = f.encode_point(Vec2::new(x, y));
        let back = f.decode_pixel(px, py);
        let half = 0.5 * f.resolution + 1e-12;
        prop_assert!((back.x - x).abs() <= half && (back.y - y).abs() <= half);
    }

    #[test]
    fn effective_budget_skips_sentinels(mask in prop::collection::vec(prop::option::of(any::<bool>()), 3)) {
        let f = ObservationFrame::centered(Vec2::ZERO);
        let sentinel = f.mask_sentinel();
        let slots = mask
            .iter()
            .enumerate()
            .map(|(k, m)| m.map(|at_sentinel| if at_sentinel { sentinel } else { Vec2::new(0.1 * k as f64, 0.0) }))
            .collect();
        let c = ContactSet { slots };
        let expected = mask.iter().filter(|m| **m == Some(false)).count();
        prop_assert_eq!(effective_budget(&c, sentinel, f.default_epsilon()), expected);
    }

    #[test]
    fn heuristic_contacts_respect_budget(budget in 0usize..4, dx in -0.1..0.1f64, dy in -0.1..0.1f64, dtheta in -0.3..0.3f64) {
        let world = push_square().world().unwrap();
        let obs = &observe(&world, &GcoConfig::default())[0];
        let t = Pose2::new(Vec2::new(dx, dy), dtheta);
        let out = HeuristicPolicy::default().act(obs, &t, budget, 0).unwrap();
        prop_assert!(out.contacts.len() <= budget);
        prop_assert_eq!(out.trajectories.len(), out.contacts.len());
        for (c, traj) in out.contacts.iter().zip(&out.trajectories) {
            prop_assert_eq!(traj[0], *c);
            prop_assert!(!obs.occupied_at(*c));
        }
    }
}

#[test]
fn oversized_budget_is_an_error() {
    let world = push_square().world().unwrap();
    let obs = &observe(&world, &GcoConfig::default())[0];
    assert!(HeuristicPolicy::default().act(obs, &Pose2::from_xy(0.1, 0.0), 4, 0).is_err());
}
