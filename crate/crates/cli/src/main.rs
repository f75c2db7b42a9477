//! Command-line front end: plan scenarios, run benchmark suites, run the
//! pushing loop, render plans, and generate the built-in scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use gco_core::metrics::{summarize, to_csv_string};
use gco_core::policy::{ExternalPolicy, HeuristicPolicy, ManipulationPolicy};
use gco_core::render::{from_jsonl, render_frame, render_plan, to_jsonl};
use gco_core::scenario::{corridor_suite, crossed_diagonal, default_suite, push_square, scaling_suite, Scenario};
use gco_core::suite::{run_plan, run_pushing, run_suite};
use gco_core::Mode;

#[derive(Debug, Parser)]
#[command(name = "gco", version, about = "Anonymous multi-robot planning and collaborative pushing")]
struct Cli {
    /// Directory for every file the command writes.
    #[arg(long, global = true, env = "GCO_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Gspi,
    Pibt,
}

impl From<Algo> for Mode {
    fn from(a: Algo) -> Mode {
        match a {
            Algo::Gspi => Mode::Gspi,
            Algo::Pibt => Mode::Pibt,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyKind {
    Heuristic,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteKind {
    Default,
    Scaling,
    Corridor,
    Examples,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan one scenario; writes a trajectory file and a metrics row.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "gspi")]
        algo: Algo,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Override the scenario's iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Record wall time per iteration (makes the output nondeterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Run every scenario × algorithm × seed of a suite; writes metrics.csv.
    Bench {
        /// Directory of scenario files; every *.json inside is loaded.
        #[arg(long, conflicts_with = "builtin")]
        suite: Option<PathBuf>,
        /// Use a generated suite instead of a directory.
        #[arg(long, value_enum)]
        builtin: Option<SuiteKind>,
        /// Override the seeds of every scenario.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        timing: bool,
        #[arg(long, default_value = "metrics.csv")]
        csv: String,
    },
    /// Run the pushing loop on a scenario with objects.
    Gco {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "heuristic")]
        policy: PolicyKind,
        /// Contacts and trajectories for the external policy.
        #[arg(long, required_if_eq("policy", "external"))]
        policy_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = gco_core::gco::DEFAULT_MAX_ACTIONS)]
        max_actions: usize,
    },
    /// Draw a scenario and a trajectory file as SVG.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(long, default_value = "plan.svg")]
        svg: String,
        /// Also write one SVG per time step into this subdirectory.
        #[arg(long)]
        frames: Option<String>,
    },
    /// Write the built-in scenarios as JSON files.
    GenSuite {
        #[arg(long, value_enum, default_value = "all")]
        kind: SuiteKind,
    },
}

/// Failure kinds mapped to exit codes 2 (bad input) and 1 (run failed).
enum Failure {
    Usage(anyhow::Error),
    Run,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn load(path: &Path) -> anyhow::Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn builtin(kind: SuiteKind) -> Vec<Scenario> {
    match kind {
        SuiteKind::Default => default_suite(),
        SuiteKind::Scaling => scaling_suite(),
        SuiteKind::Corridor => corridor_suite(),
        SuiteKind::Examples => vec![crossed_diagonal(), push_square()],
        SuiteKind::All => {
            let mut all = default_suite();
            all.extend(scaling_suite());
            all.extend(corridor_suite());
            all.extend([crossed_diagonal(), push_square()]);
            all
        }
    }
}

fn load_dir(dir: &Path) -> anyhow::Result<Vec<Scenario>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no scenario files in {}", dir.display());
    }
    paths.iter().map(|p| load(p)).collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out_dir;
    match cli.command {
        Command::Plan {
            scenario,
            algo,
            seed,
            max_iters,
            timing,
        } => {
            let mut s = load(&scenario)?;
            if max_iters.is_some() {
                s.max_iters = max_iters;
            }
            let mode = Mode::from(algo);
            let outcome = run_plan(&s, mode, seed, timing);
            let stem = format!("{}-{}-{seed}", s.name, mode.name());
            let trajs = outcome.result.as_ref().map(|r| r.trajectories.as_slice()).unwrap_or(&[]);
            let traj_path = write(&out, &format!("{stem}.jsonl"), &to_jsonl(trajs))?;
            let csv = to_csv_string(std::slice::from_ref(&outcome.row));
            write(&out, &format!("{stem}.csv"), &csv)?;
            print!("{csv}");
            eprintln!("trajectories: {}", traj_path.display());
            if let Some(e) = outcome.error {
                eprintln!("error: {e}");
            }
            if !outcome.row.success {
                return Err(Failure::Run);
            }
        }
        Command::Bench {
            suite,
            builtin: kind,
            seeds,
            timing,
            csv,
        } => {
            let mut scenarios = match (suite, kind) {
                (Some(dir), _) => load_dir(&dir)?,
                (None, Some(kind)) => builtin(kind),
                (None, None) => builtin(SuiteKind::Default),
            };
            scenarios.retain(|s| s.objects.is_empty());
            if let Some(seeds) = seeds {
                scenarios.iter_mut().for_each(|s| s.seeds = seeds.clone());
            }
            let outcomes = run_suite(&scenarios, timing);
            let rows: Vec<_> = outcomes.iter().map(|o| o.row.clone()).collect();
            let path = write(&out, &csv, &to_csv_string(&rows))?;
            for s in summarize(&rows) {
                eprintln!(
                    "{:<24} {:<5} {}/{} solved{}",
                    s.scenario,
                    s.method,
                    s.successes,
                    s.runs,
                    s.mean_iter_ms.map(|ms| format!(", {ms:.3} ms/iter")).unwrap_or_default()
                );
            }
            eprintln!("metrics: {}", path.display());
        }
        Command::Gco {
            scenario,
            policy,
            policy_file,
            seed,
            max_actions,
        } => {
            let s = load(&scenario)?;
            if s.objects.is_empty() {
                return Err(anyhow::anyhow!("{} has no objects to push", scenario.display()).into());
            }
            let (policy, method): (Box<dyn ManipulationPolicy>, &str) = match policy {
                PolicyKind::Heuristic => (Box::new(HeuristicPolicy::default()), "gco-heuristic"),
                PolicyKind::External => {
                    let path = policy_file.expect("clap requires --policy-file for external");
                    let p = ExternalPolicy::load(&path).with_context(|| format!("loading {}", path.display()))?;
                    (Box::new(p), "gco-external")
                }
            };
            let (row, episode) = run_pushing(&s, policy.as_ref(), method, seed, max_actions).map_err(anyhow::Error::from)?;
            let stem = format!("{}-{method}-{seed}", s.name);
            let trace = serde_json::to_string_pretty(&episode).context("serializing the episode")?;
            let trace_path = write(&out, &format!("{stem}.json"), &trace)?;
            let csv = to_csv_string(std::slice::from_ref(&row));
            write(&out, &format!("{stem}.csv"), &csv)?;
            print!("{csv}");
            eprintln!("trace: {}", trace_path.display());
            if !row.success {
                return Err(Failure::Run);
            }
        }
        Command::Render {
            scenario,
            trajectories,
            svg,
            frames,
        } => {
            let s = load(&scenario)?;
            let trajs = match trajectories {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    from_jsonl(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => Vec::new(),
            };
            let path = write(&out, &svg, &render_plan(&s, &trajs).map_err(anyhow::Error::from)?)?;
            eprintln!("svg: {}", path.display());
            if let Some(sub) = frames {
                let steps = trajs.iter().map(|t| t.len()).max().unwrap_or(0);
                let dir = out.join(sub);
                for t in 0..steps {
                    let frame = render_frame(&s, &trajs, t).map_err(anyhow::Error::from)?;
                    write(&dir, &format!("frame-{t:05}.svg"), &frame)?;
                }
                eprintln!("frames: {steps} in {}", dir.display());
            }
        }
        Command::GenSuite { kind } => {
            for s in builtin(kind) {
                write(&out, &format!("{}.json", s.name), &s.to_json())?;
            }
            eprintln!("scenarios written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
