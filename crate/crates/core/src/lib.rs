//! Multi-robot coordination for collaborative pushing: an anonymous
//! multi-robot motion planner with goal swapping, flow-matching sampling
//! machinery, a heuristic manipulation policy, a quasi-static pushing
//! simulator, the closed observe/plan/act loop, and a benchmark harness.

pub mod costmap;
pub mod error;
pub mod flow;
pub mod gco;
pub mod geometry;
pub mod metrics;
pub mod planner;
pub mod policy;
pub mod primitives;
pub mod render;
pub mod scenario;
pub mod seed;
pub mod sim;
pub mod suite;

pub use costmap::{build_distance_field, dist, DistanceField, GridMap};
pub use error::{CostmapError, FlowError, GeometryError, PlannerError, PolicyError, ScenarioError, SimError};
pub use geometry::{ConvexPolygon, Disk, Pose2, Vec2};
pub use planner::{plan, Assignment, Heuristic, Mode, PlanResult, Planner, PlannerConfig, Priority, Problem};
pub use policy::{HeuristicPolicy, ManipulationPolicy, Observation, ObservationFrame, PolicyOutput};
pub use primitives::{EdgeKind, MotionEdge, PrimitiveConfig};
pub use sim::{SimConfig, WorldState};
