//! Frenet-frame trajectory sampling.

pub mod convert;
pub mod planner;
pub mod poly;
pub mod reference;

pub use convert::{cartesian_to_frenet, frenet_to_cartesian, CartesianState, FrenetState};
pub use planner::{
    evaluate_cost, filter_candidates, generate_candidates, select_best, CandidateTrajectory, CostComponents, CostTargets,
    CostWeights, LaneTarget, Limits, LongitudinalGoal, LongitudinalMode, PredictedObstacle, RoadBounds, SampleGrid,
    VehicleDims,
};
pub use poly::{fit_quartic, fit_quintic, Polynomial};
pub use reference::{RefPoint, ReferenceLine};
