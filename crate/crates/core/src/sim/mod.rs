//! Ground-truth world: lanes, obstacle motion, perfect-tracking execution,
//! perception and safety evaluation.

pub mod scenario;
pub mod world;

pub use scenario::{Lane, ObstacleBehavior, ObstacleSpec, RoadSegment, RoadSpec, Scenario};
pub use world::{evaluate_safety, initial_world, perceive, step_world, true_delta, SafetyEval, WorldState};
