//! Fixtures shared by the criterion benchmarks.

use gco_core::scenario::{empty_map, pillars, Pattern, Scenario};
use gco_core::{Mode, Planner, Problem};

/// Team sizes swept by the planner benchmarks.
pub const TEAM_SIZES: [usize; 3] = [5, 25, 125];

pub fn open_map(n: usize) -> (Scenario, Problem) {
    let s = empty_map(Pattern::Blocks, n);
    let p = s.problem().expect("generated scenario is valid");
    (s, p)
}

pub fn cluttered_map(n: usize) -> (Scenario, Problem) {
    let s = pillars(n);
    let p = s.problem().expect("generated scenario is valid");
    (s, p)
}

/// A planner that has already taken `warmup` steps, so benchmarked steps see
/// robots in motion rather than the initial block.
pub fn warmed_planner(s: &Scenario, p: &Problem, warmup: usize) -> Planner {
    let mut planner = Planner::new(p, s.planner_config(Mode::Gspi, 1)).expect("planner builds");
    for _ in 0..warmup {
        if planner.all_at_goals() {
            break;
        }
        planner.step().expect("step succeeds");
    }
    planner
}
