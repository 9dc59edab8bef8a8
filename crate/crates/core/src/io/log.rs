//! Frame log and run summary records. Field names are part of the log
//! schema in `docs/log_schema.md`.

use serde::{Deserialize, Serialize};

use crate::frenet::convert::FrenetState;
use crate::frenet::planner::{CandidateTrajectory, CostComponents, LongitudinalGoal, Rejection};
use crate::planning::{FallbackStage, StartState};
use crate::se2::Pose2;
use crate::stability::{StabilityBounds, StabilityRecord};

pub const SCHEMA_VERSION: u32 = 1;

/// Keep every this-many candidate samples when logging the pool.
const POOL_DECIMATION: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneLog {
    pub index: usize,
    pub width_m: f64,
    pub centerline: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleInfo {
    pub id: usize,
    pub length_m: f64,
    pub width_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub record: String,
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub rng: String,
    pub generated_at_unix_s: u64,
    pub replan_hz: f64,
    pub horizon_s: f64,
    pub duration_s: f64,
    pub sensor: SensorLog,
    pub ego_length_m: f64,
    pub ego_width_m: f64,
    pub reference_lane: usize,
    pub lanes: Vec<LaneLog>,
    pub obstacles: Vec<ObstacleInfo>,
    pub stop_target: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorLog {
    pub v_offset_mps: f64,
    pub sigma_v_mps: f64,
    pub yawrate_offset_rps: f64,
    pub sigma_yawrate_rps: f64,
}

/// One sensor tick: truth and reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorTick {
    pub t: f64,
    pub v: f64,
    pub yawrate: f64,
    pub v_m: f64,
    pub yawrate_m: f64,
}

/// `[t, x, y, theta, v, a, curvature]`
pub type PointRow = [f64; 7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedLog {
    pub lane_index: usize,
    pub goal: LongitudinalGoal,
    pub duration_s: f64,
    pub lateral_target_m: f64,
    pub lateral_poly: Vec<f64>,
    pub longitudinal_poly: Vec<f64>,
    pub cost_components: CostComponents,
    pub total_cost: f64,
    pub points: Vec<PointRow>,
}

impl SelectedLog {
    pub fn from_candidate(c: &CandidateTrajectory) -> Self {
        Self {
            lane_index: c.lane_index,
            goal: c.goal,
            duration_s: c.duration,
            lateral_target_m: c.lateral_target,
            lateral_poly: c.lateral_poly.coeffs.clone(),
            longitudinal_poly: c.longitudinal_poly.coeffs.clone(),
            cost_components: c.cost_components,
            total_cost: c.total_cost,
            points: c
                .points
                .points
                .iter()
                .map(|p| [p.t, p.pose.x, p.pose.y, p.pose.theta, p.v, p.a, p.curvature])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLog {
    pub lane_index: usize,
    pub goal: LongitudinalGoal,
    pub duration_s: f64,
    pub total_cost: f64,
    pub feasible: bool,
    pub rejection: Option<Rejection>,
    /// Local `[x, y]` at every fifth sample.
    pub xy: Vec<[f64; 2]>,
}

impl CandidateLog {
    pub fn from_candidate(c: &CandidateTrajectory) -> Self {
        Self {
            lane_index: c.lane_index,
            goal: c.goal,
            duration_s: c.duration,
            total_cost: c.total_cost,
            feasible: c.feasible,
            rejection: c.rejection,
            xy: c.points.points.iter().step_by(POOL_DECIMATION).map(|p| [p.pose.x, p.pose.y]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleLog {
    pub id: usize,
    pub global: [f64; 3],
    pub local: [f64; 3],
    pub speed_mps: f64,
    /// Inflated local `[x, y, theta]` at every fifth prediction step.
    pub predicted_local: Vec<[f64; 3]>,
    pub inflated_length_m: f64,
    pub inflated_width_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartLog {
    pub cold: bool,
    pub frenet: FrenetState,
    /// `[t, x, y, theta, v, a, curvature]` in the current local frame.
    pub cartesian: PointRow,
    /// Start minus the previous plan at `t_k` re-expressed through the
    /// true frame change: `[x, y, theta, v, a]`. Absent on cold starts.
    pub deviation: Option<[f64; 5]>,
}

impl StartLog {
    pub fn new(s: &StartState, deviation: Option<[f64; 5]>) -> Self {
        let c = s.cartesian;
        Self {
            cold: s.cold,
            frenet: s.frenet,
            cartesian: [c.t, c.pose.x, c.pose.y, c.pose.theta, c.v, c.a, c.curvature],
            deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLogRecord {
    pub record: String,
    pub k: u64,
    pub t: f64,
    pub ego_global: [f64; 3],
    pub ego_v: f64,
    pub ego_a: f64,
    /// Pose change since the previous frame, truth and estimate.
    pub true_delta: [f64; 3],
    pub est_delta: [f64; 3],
    /// `true_delta - est_delta`, heading wrapped.
    pub eps_delta: [f64; 3],
    /// Ticks of the interval ending at this frame.
    pub sensor: Vec<SensorTick>,
    pub start: StartLog,
    pub selected: SelectedLog,
    pub pool_generated: usize,
    pub pool_feasible: usize,
    pub pool: Option<Vec<CandidateLog>>,
    pub fallback_used: bool,
    pub fallback_stage: FallbackStage,
    pub current_lane: usize,
    pub lane_change_active: bool,
    pub obstacles: Vec<ObstacleLog>,
    pub stability: Option<StabilityRecord>,
    pub collision: bool,
    pub lane_margin_m: f64,
    pub lane_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Stats {
    /// Sample statistics; quartiles by linear interpolation between order
    /// statistics. `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Some(Self {
            n,
            mean,
            sd: var.sqrt(),
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats3 {
    pub x: Option<Stats>,
    pub y: Option<Stats>,
    pub theta: Option<Stats>,
}

impl Stats3 {
    pub fn of(rows: &[[f64; 3]]) -> Self {
        let col = |i: usize| Stats::of(&rows.iter().map(|r| r[i]).collect::<Vec<_>>());
        Self { x: col(0), y: col(1), theta: col(2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopSummary {
    pub target: [f64; 3],
    /// Position distance from the target at the end of the run.
    pub final_deviation_m: f64,
    /// First frame at which the ego is at rest near the target.
    pub reached_frame: Option<u64>,
    /// Largest position deviation after `reached_frame`.
    pub hold_max_deviation_m: Option<f64>,
    pub hold_first_half_max_m: Option<f64>,
    pub hold_second_half_max_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub record: String,
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub frames: usize,
    pub completed: bool,
    pub fault: Option<String>,
    pub collision: bool,
    pub first_collision_t: Option<f64>,
    pub min_lane_margin_m: f64,
    /// Smallest lane margin over frames outside lane-change intervals.
    pub min_lane_margin_outside_changes_m: f64,
    pub lane_crossing_outside_changes: bool,
    /// Occupied lane at the start and after each change.
    pub lane_sequence: Vec<usize>,
    pub fallback_frames: usize,
    pub emergency_frames: usize,
    pub cold_starts: usize,
    pub max_start_deviation: Option<f64>,
    pub final_pose: [f64; 3],
    pub stop: Option<StopSummary>,
    pub stability: Option<StabilityBounds>,
    pub measurement_error_v: Option<Stats>,
    pub measurement_error_yawrate: Option<Stats>,
    pub eps_delta: Stats3,
    pub eps_stability: Option<Stats3>,
    pub exit_code: i32,
}

pub fn pose_row(p: &Pose2) -> [f64; 3] {
    p.as_array()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_quartiles() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.mean, s.median, s.q1, s.q3), (3.0, 3.0, 2.0, 4.0));
        assert!((s.sd - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(Stats::of(&[]).is_none());
    }
}
