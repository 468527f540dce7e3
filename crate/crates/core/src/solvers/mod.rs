//! Expert planner, greedy action estimator and expert episode recording.

mod expert;
mod greedy;
mod planner;

pub use expert::{run_expert_episode, Trajectory};
pub use greedy::greedy_action;
pub use planner::{prioritized_plan, Plan, DEFAULT_MAX_RESTARTS};
