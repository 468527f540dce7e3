//! Core building blocks for learned multi-agent path finding.
//!
//! * [`grid`] holds the occupancy grid, agent state and the collision-resolving
//!   transition function.
//! * [`movingai`] reads and writes the MovingAI `.map` text format.
//! * [`instance`] generates reproducible start/goal assignments.
//! * [`solvers`] contains the prioritized space-time A* expert and the greedy
//!   cost-descent estimator.
//! * [`tokenizer`] turns a world state into the fixed 256-token egocentric
//!   observation used by the model, and [`dataset`] stores training samples.

pub mod costfield;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod instance;
pub mod movingai;
pub mod solvers;
pub mod tokenizer;

pub use costfield::{bfs_cost_to_goal, CostField};
pub use error::{CoreError, Result};
pub use grid::{
    is_success, step, validate_plan, Action, Cell, GridMap, State, Tile, ValidationReport,
    Violation, ViolationKind,
};
pub use instance::{generate_instance, ProblemInstance};
