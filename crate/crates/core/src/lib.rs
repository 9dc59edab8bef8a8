//! Relative-frame trajectory planning with dead-reckoned motion estimates.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frenet;
pub mod geometry;
pub mod io;
pub mod motion;
pub mod planning;
pub mod se2;
pub mod sim;
pub mod stability;
pub mod trajectory;

pub use error::{Error, Result};
pub use se2::{compose, invert, relative, wrap_angle, Pose2};
pub use trajectory::{transform_trajectory, LocalTrajectory, TrajectoryPoint};
