//! Runs scenarios with the planner or the pushing loop and turns the results
//! into metrics rows.

use std::time::Instant;

use rayon::prelude::*;

use crate::gco::{run_episode, EpisodeResult};
use crate::metrics::MetricsRow;
use crate::planner::{plan, Mode, PlanResult};
use crate::policy::ManipulationPolicy;
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub row: MetricsRow,
    /// Absent when the scenario could not be planned at all.
    pub result: Option<PlanResult>,
    pub error: Option<String>,
}

/// Plans one scenario with one method and seed. Planner errors become a
/// failed row instead of an error.
pub fn run_plan(scenario: &Scenario, mode: Mode, seed: u64, timing: bool) -> PlanOutcome {
    let n = scenario.starts.len();
    let mut row = MetricsRow {
        scenario: scenario.name.clone(),
        method: mode.name().to_string(),
        n_robots: n,
        n_objects: 0,
        success: false,
        sum_cost: 0.0,
        avg_cost: 0.0,
        iterations: 0,
        avg_iter_ms: None,
        swaps: 0,
        waits: 0,
        seed,
    };
    let started = Instant::now();
    let result = scenario
        .problem()
        .map_err(|e| e.to_string())
        .and_then(|p| plan(&p, scenario.planner_config(mode, seed)).map_err(|e| e.to_string()));
    match result {
        Ok(res) => {
            row.success = res.success;
            row.sum_cost = res.path_length;
            row.avg_cost = res.path_length / n.max(1) as f64;
            row.iterations = res.iterations;
            row.swaps = res.swaps;
            row.waits = res.waits;
            if timing && res.iterations > 0 {
                row.avg_iter_ms = Some(started.elapsed().as_secs_f64() * 1e3 / res.iterations as f64);
            }
            PlanOutcome {
                row,
                result: Some(res),
                error: None,
            }
        }
        Err(e) => PlanOutcome {
            row,
            result: None,
            error: Some(e),
        },
    }
}

/// Every (scenario, method, seed) job of a suite, in output order.
pub fn jobs(scenarios: &[Scenario]) -> Vec<(usize, Mode, u64)> {
    let mut out = Vec::new();
    for (k, s) in scenarios.iter().enumerate() {
        for &mode in &s.algorithms {
            for &seed in &s.seeds {
                out.push((k, mode, seed));
            }
        }
    }
    out
}

/// Runs the cross product of scenarios × methods × seeds in parallel and
/// returns outcomes in deterministic job order.
pub fn run_suite(scenarios: &[Scenario], timing: bool) -> Vec<PlanOutcome> {
    jobs(scenarios)
        .into_par_iter()
        .map(|(k, mode, seed)| run_plan(&scenarios[k], mode, seed, timing))
        .collect()
}

/// Runs the pushing loop on a scenario with objects.
pub fn run_pushing<P: ManipulationPolicy + ?Sized>(
    scenario: &Scenario,
    policy: &P,
    method: &str,
    seed: u64,
    max_actions: usize,
) -> Result<(MetricsRow, EpisodeResult), crate::error::ScenarioError> {
    let world = scenario.world()?;
    let cfg = crate::gco::GcoConfig {
        max_actions,
        ..scenario.gco_config(seed)
    };
    let episode = run_episode(&world, policy, &cfg);
    let n = world.robots.len();
    let row = MetricsRow {
        scenario: scenario.name.clone(),
        method: method.to_string(),
        n_robots: n,
        n_objects: world.objects.len(),
        success: episode.success,
        sum_cost: episode.avg_distance * n as f64,
        avg_cost: episode.avg_distance,
        iterations: episode.actions,
        avg_iter_ms: None,
        swaps: 0,
        waits: 0,
        seed,
    };
    Ok((row, episode))
}
