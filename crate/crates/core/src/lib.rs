//! Semantic-topometric frontier exploration on 2D occupancy grids.
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod polyline;
pub mod pq;
pub mod robot_sim;
pub mod semantic_topo;
pub mod world;
pub mod frontier_goal;
pub mod topo_path;
pub mod potential_nav;
pub mod baseline_fe;
pub mod explorer;
pub mod bench;

pub use bench::{run_batch, BatchReport, Execution, ScenarioConfig};
pub use explorer::{run_exploration, ExplorationRun, Outcome, RunConfig, Strategy};
pub use semantic_topo::{segment, SemanticTopometricMap};
pub use world::{OccupancyGrid, Point2, WorldPose};
