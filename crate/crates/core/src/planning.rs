//! Frame-to-frame planning cycle in local coordinates.
//!
//! Each frame reprojects the previous plan into the new vehicle frame using
//! the dead-reckoned pose change, reads the state at the current time off
//! it, and plans from there. Nothing in this module sees global poses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frenet::convert::{cartesian_to_frenet, FrenetState};
use crate::frenet::planner::{
    filter_candidates, generate_candidates, score_candidates, select_best, CandidateTrajectory, CostComponents,
    CostTargets, CostWeights, LaneTarget, Limits, LongitudinalGoal, LongitudinalMode, PredictedObstacle, RoadBounds,
    SampleGrid, VehicleDims,
};
use crate::frenet::poly::Polynomial;
use crate::frenet::reference::ReferenceLine;
use crate::geometry::OrientedBox;
use crate::motion::PoseDelta;
use crate::se2::Pose2;
use crate::trajectory::{transform_trajectory, LocalTrajectory, TrajectoryPoint, SAMPLE_DT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLane {
    pub index: usize,
    pub centerline: Vec<(f64, f64)>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObstacle {
    pub id: usize,
    /// Raw footprint.
    pub footprint: OrientedBox,
    /// Velocity in the local frame.
    pub velocity: (f64, f64),
}

/// Everything the planner knows about the world, expressed in the current
/// vehicle frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionSnapshot {
    pub t: f64,
    pub lanes: Vec<LocalLane>,
    pub reference_lane: usize,
    pub obstacles: Vec<PerceivedObstacle>,
    /// Inflated footprints on the planning time grid.
    pub predictions: Vec<PredictedObstacle>,
    pub stop_target: Option<Pose2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub weights: CostWeights,
    pub limits: Limits,
    pub ego: VehicleDims,
    pub horizon: f64,
    pub durations: Vec<f64>,
    /// Offsets added to the desired speed to form the speed targets.
    pub speed_offsets: Vec<f64>,
    pub v_ref: f64,
    /// Comfortable deceleration used to cap the approach speed to a stop.
    pub stop_decel: f64,
    /// Deceleration assumed by the in-lane stopping fallback.
    pub fallback_decel: f64,
    /// Deceleration of the last-resort straight-line stop.
    pub emergency_decel: f64,
    /// Velocity-keeping candidates may not pass the stop point by more
    /// than this.
    pub stop_tolerance: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            limits: Limits::default(),
            ego: VehicleDims::default(),
            horizon: 5.0,
            durations: vec![2.0, 3.0, 4.0, 5.0],
            speed_offsets: vec![-2.0, 0.0, 2.0],
            v_ref: 10.0,
            stop_decel: 1.0,
            fallback_decel: 3.0,
            emergency_decel: 6.0,
            stop_tolerance: 0.05,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.horizon > 0.0) {
            return Err(Error::validation("horizon must be positive"));
        }
        if !(self.v_ref >= 0.0) {
            return Err(Error::validation("reference speed must be nonnegative"));
        }
        if !(self.stop_decel > 0.0 && self.fallback_decel > 0.0 && self.emergency_decel > 0.0) {
            return Err(Error::validation("decelerations must be positive"));
        }
        Ok(())
    }
}

/// Planning start state with its Cartesian mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartState {
    pub frenet: FrenetState,
    pub cartesian: TrajectoryPoint,
    pub cold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackStage {
    None,
    InLaneStop,
    Emergency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub selected: CandidateTrajectory,
    pub pool: Vec<CandidateTrajectory>,
    pub generated: usize,
    pub feasible: usize,
    pub fallback: FallbackStage,
    pub current_lane: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerFrameRecord {
    pub k: u64,
    pub t_k: f64,
    pub est_delta: PoseDelta,
    pub start: StartState,
    pub selected: CandidateTrajectory,
    pub generated: usize,
    pub feasible: usize,
    pub fallback_used: bool,
    pub fallback_stage: FallbackStage,
    pub current_lane: usize,
}

/// Start state at the local origin moving straight ahead at `v`.
pub fn cold_start(v: f64, t: f64, reference: &ReferenceLine) -> Result<StartState> {
    let cartesian = TrajectoryPoint { t, pose: Pose2::identity(), v, a: 0.0, curvature: 0.0 };
    let frenet = cartesian_to_frenet(&cartesian.pose, v, 0.0, 0.0, reference)?;
    Ok(StartState { frenet, cartesian, cold: true })
}

/// Reprojects `prev` into the current frame and reads its state at `t_k`.
/// Returns `None` when `prev` does not reach `t_k`.
pub fn extract_start_state(prev: &LocalTrajectory, est_delta: &PoseDelta, t_k: f64, reference: &ReferenceLine) -> Result<Option<StartState>> {
    if !prev.covers(t_k) {
        return Ok(None);
    }
    let local = transform_trajectory(prev, est_delta.pose())?;
    let Some(cartesian) = local.state_at(t_k) else {
        return Ok(None);
    };
    let frenet = cartesian_to_frenet(&cartesian.pose, cartesian.v, cartesian.a, cartesian.curvature, reference)?;
    Ok(Some(StartState { frenet, cartesian, cold: false }))
}

struct Road {
    reference: ReferenceLine,
    lanes: Vec<LaneTarget>,
    bounds: RoadBounds,
    preferred: f64,
}

fn road_from(perception: &PerceptionSnapshot, near: (f64, f64)) -> Result<Road> {
    let ref_lane = perception
        .lanes
        .iter()
        .find(|l| l.index == perception.reference_lane)
        .ok_or_else(|| Error::validation("reference lane is not among the perceived lanes"))?;
    let reference = ReferenceLine::new(ref_lane.centerline.clone())?;
    let mut lanes = Vec::new();
    let (mut right, mut left) = (f64::INFINITY, f64::NEG_INFINITY);
    for lane in &perception.lanes {
        if lane.centerline.is_empty() || !(lane.width > 0.0) {
            return Err(Error::validation(format!("lane {} is malformed", lane.index)));
        }
        let anchor = lane
            .centerline
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - near.0).hypot(a.1 - near.1);
                let db = (b.0 - near.0).hypot(b.1 - near.1);
                da.total_cmp(&db)
            })
            .copied()
            .unwrap_or_default();
        let (_, d, _) = reference.project_unchecked(anchor.0, anchor.1);
        right = right.min(d - 0.5 * lane.width);
        left = left.max(d + 0.5 * lane.width);
        lanes.push(LaneTarget { lane_index: lane.index, d });
    }
    let preferred = lanes
        .iter()
        .find(|l| l.lane_index == perception.reference_lane)
        .map(|l| l.d)
        .unwrap_or(0.0);
    Ok(Road { reference, lanes, bounds: RoadBounds { right, left }, preferred })
}

fn nearest_lane(lanes: &[LaneTarget], d: f64) -> usize {
    lanes
        .iter()
        .min_by(|a, b| (a.d - d).abs().total_cmp(&(b.d - d).abs()))
        .map(|l| l.lane_index)
        .unwrap_or(0)
}

fn speed_targets(v_des: f64, offsets: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for o in offsets {
        let v = (v_des + o).max(0.0);
        if !out.iter().any(|u| (u - v).abs() < 1e-9) {
            out.push(v);
        }
    }
    out
}

/// Straight-line stop along the start heading at the emergency
/// deceleration. Not checked for feasibility.
fn emergency_profile(start: &StartState, cfg: &PlannerConfig, grid: &SampleGrid, reference: &ReferenceLine, lane: usize) -> Result<CandidateTrajectory> {
    let v0 = start.cartesian.v.max(0.0);
    let decel = cfg.emergency_decel;
    let t_stop = v0 / decel;
    let lon = Polynomial::new(vec![0.0, v0, -0.5 * decel]);
    let mut points = Vec::with_capacity(grid.len());
    let mut frenet = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let tau = grid.offset(i).min(t_stop);
        let [dist, v, _] = lon.state(tau);
        let a = if grid.offset(i) < t_stop { -decel } else { 0.0 };
        let (x, y) = start.cartesian.pose.transform_point(dist, 0.0);
        let pose = Pose2::new(x, y, start.cartesian.pose.theta);
        points.push(TrajectoryPoint { t: grid.t0 + grid.offset(i), pose, v, a, curvature: 0.0 });
        frenet.push(cartesian_to_frenet(&pose, v, a, 0.0, reference).unwrap_or(start.frenet));
    }
    Ok(CandidateTrajectory {
        generation_index: 0,
        lane_index: lane,
        lateral_target: start.frenet.d,
        goal: LongitudinalGoal::Stop(start.frenet.s + v0 * v0 / (2.0 * decel)),
        duration: t_stop.max(SAMPLE_DT),
        lateral_poly: Polynomial::new(vec![start.frenet.d]),
        longitudinal_poly: lon,
        frenet,
        points: LocalTrajectory::new(grid.frame_id, points)?,
        cost_components: CostComponents::default(),
        total_cost: 0.0,
        feasible: true,
        rejection: None,
    })
}

/// Generates, scores, filters and selects; falls back to an in-lane stop
/// and then to an unchecked straight stop when nothing is feasible.
pub fn plan_frame(perception: &PerceptionSnapshot, start: &StartState, cfg: &PlannerConfig, frame_id: u64) -> Result<PlanOutcome> {
    let near = (start.cartesian.pose.x, start.cartesian.pose.y);
    let road = road_from(perception, near)?;
    let reference = &road.reference;
    let s0 = start.frenet;
    let current_lane = nearest_lane(&road.lanes, s0.d);
    let grid = SampleGrid { t0: start.cartesian.t, frame_id, horizon: cfg.horizon };

    let stop = match perception.stop_target {
        Some(target) => {
            let (s, _, _) = reference.project_unchecked(target.x, target.y);
            Some(s)
        }
        None => None,
    };

    let mut v_des = cfg.v_ref;
    if let Some(s_stop) = stop {
        let remaining = (s_stop - s0.s).max(0.0);
        v_des = v_des.min((2.0 * cfg.stop_decel * remaining).sqrt());
    }
    let targets = CostTargets { lateral: road.preferred, speed: v_des };
    let stop_line = stop.map(|s| s + cfg.stop_tolerance);

    let build = |lanes: &[LaneTarget], speeds: &[f64], mode: LongitudinalMode| -> Result<Vec<CandidateTrajectory>> {
        let mut pool = generate_candidates(&s0, lanes, speeds, &cfg.durations, mode, &grid, reference)?;
        score_candidates(&mut pool, &cfg.weights, &targets);
        Ok(pool)
    };

    // A stop in range is planned as a stop: no zero-speed velocity keeping.
    let stop_in_range = stop.filter(|s| s - s0.s < cfg.v_ref * cfg.horizon);
    let mut speeds = speed_targets(v_des, &cfg.speed_offsets);
    if stop_in_range.is_some() {
        speeds.retain(|v| *v > 0.0);
    }
    let mut pool = Vec::new();
    if !speeds.is_empty() {
        if let Ok(p) = build(&road.lanes, &speeds, LongitudinalMode::VelocityKeeping) {
            pool.extend(p);
        }
    }
    if let Some(s_stop) = stop_in_range {
        {
            if let Ok(p) = build(&road.lanes, &[], LongitudinalMode::Stopping { s_stop }) {
                pool.extend(p);
            }
        }
    }
    for (i, c) in pool.iter_mut().enumerate() {
        c.generation_index = i;
    }
    filter_candidates(&mut pool, &perception.predictions, &road.bounds, &cfg.limits, &cfg.ego, reference, stop_line);
    let generated = pool.len();
    let feasible = pool.iter().filter(|c| c.feasible).count();

    if let Ok(best) = select_best(&pool, current_lane) {
        let selected = best.clone();
        return Ok(PlanOutcome { selected, pool, generated, feasible, fallback: FallbackStage::None, current_lane });
    }

    // in-lane stop at the fallback deceleration
    let lane_here: Vec<LaneTarget> = road.lanes.iter().filter(|l| l.lane_index == current_lane).copied().collect();
    let v = s0.s_dot.max(0.0);
    let s_fb = s0.s + v * v / (2.0 * cfg.fallback_decel);
    if let Ok(mut fb) = build(&lane_here, &[], LongitudinalMode::Stopping { s_stop: s_fb }) {
        filter_candidates(&mut fb, &perception.predictions, &road.bounds, &cfg.limits, &cfg.ego, reference, None);
        if let Ok(best) = select_best(&fb, current_lane) {
            let selected = best.clone();
            return Ok(PlanOutcome { selected, pool, generated, feasible, fallback: FallbackStage::InLaneStop, current_lane });
        }
    }

    let selected = emergency_profile(start, cfg, &grid, reference, current_lane)?;
    Ok(PlanOutcome { selected, pool, generated, feasible, fallback: FallbackStage::Emergency, current_lane })
}

/// Planner state carried between frames.
#[derive(Debug, Clone)]
pub struct PlanningLoop {
    config: PlannerConfig,
    prev: Option<LocalTrajectory>,
}

impl PlanningLoop {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, prev: None })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn previous(&self) -> Option<&LocalTrajectory> {
        self.prev.as_ref()
    }

    /// Runs frame `k`. `measured_speed` seeds a cold start when the previous
    /// plan is missing or too short.
    pub fn step(&mut self, k: u64, t_k: f64, est_delta: PoseDelta, measured_speed: f64, perception: &PerceptionSnapshot) -> Result<(PlannerFrameRecord, PlanOutcome)> {
        let near = (0.0, 0.0);
        let reference = road_from(perception, near)?.reference;
        let start = match &self.prev {
            Some(prev) => extract_start_state(prev, &est_delta, t_k, &reference)?,
            None => None,
        };
        let start = match start {
            Some(s) => s,
            None => cold_start(measured_speed, t_k, &reference)?,
        };
        let outcome = plan_frame(perception, &start, &self.config, k)?;
        self.prev = Some(outcome.selected.points.clone());
        let record = PlannerFrameRecord {
            k,
            t_k,
            est_delta,
            start,
            selected: outcome.selected.clone(),
            generated: outcome.generated,
            feasible: outcome.feasible,
            fallback_used: outcome.fallback == FallbackStage::Emergency,
            fallback_stage: outcome.fallback,
            current_lane: outcome.current_lane,
        };
        Ok((record, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_lanes() -> Vec<LocalLane> {
        let line = |y: f64| (0..=70).map(|i| (i as f64 * 2.0 - 20.0, y)).collect();
        vec![
            LocalLane { index: 0, centerline: line(-3.5), width: 3.5 },
            LocalLane { index: 1, centerline: line(0.0), width: 3.5 },
        ]
    }

    fn open_road() -> PerceptionSnapshot {
        PerceptionSnapshot { t: 0.0, lanes: two_lanes(), reference_lane: 1, obstacles: vec![], predictions: vec![], stop_target: None }
    }

    fn reference() -> ReferenceLine {
        ReferenceLine::new(two_lanes()[1].centerline.clone()).unwrap()
    }

    fn parked(x: f64, y: f64, length: f64) -> PredictedObstacle {
        let b = OrientedBox::new(Pose2::new(x, y, 0.0), length, 2.0).inflated(1.0, 0.25);
        PredictedObstacle { id: 0, length: b.length, width: b.width, t0: 0.0, poses: vec![b.center; 51] }
    }

    #[test]
    fn cold_start_examples() {
        let r = reference();
        let s = cold_start(0.0, 0.0, &r).unwrap();
        assert_eq!(s.frenet.s_dot, 0.0);
        assert!((s.frenet.s - 20.0).abs() < 1e-9);
        assert!(s.cold);
        assert!((cold_start(10.0, 0.0, &r).unwrap().frenet.s_dot - 10.0).abs() < 1e-12);
    }

    #[test]
    fn open_road_keeps_lane_at_reference_speed() {
        let cfg = PlannerConfig::default();
        let start = cold_start(10.0, 0.0, &reference()).unwrap();
        let out = plan_frame(&open_road(), &start, &cfg, 0).unwrap();
        assert_eq!(out.fallback, FallbackStage::None);
        assert_eq!(out.selected.lane_index, 1);
        let (lon, _) = out.selected.terminal();
        assert!((lon[1] - 10.0).abs() < 1e-6);
        let argmin = out
            .pool
            .iter()
            .filter(|c| c.feasible)
            .min_by(|a, b| a.total_cost.total_cmp(&b.total_cost))
            .unwrap();
        assert_eq!(argmin.generation_index, out.selected.generation_index);
    }

    #[test]
    fn blocked_road_selects_a_stop() {
        let mut p = open_road();
        p.predictions = vec![parked(28.0, 0.0, 4.5), parked(28.0, -3.5, 16.0)];
        p.stop_target = Some(Pose2::new(20.0, 0.0, 0.0));
        let start = cold_start(8.0, 0.0, &reference()).unwrap();
        let out = plan_frame(&p, &start, &PlannerConfig::default(), 0).unwrap();
        let (lon, _) = out.selected.terminal();
        assert!(lon[1].abs() < 1e-6, "terminal speed {}", lon[1]);
        assert_eq!(out.fallback, FallbackStage::None);
    }

    #[test]
    fn empty_grids_fall_back_to_emergency_stop() {
        let cfg = PlannerConfig { durations: vec![], speed_offsets: vec![], ..Default::default() };
        let start = cold_start(6.0, 0.0, &reference()).unwrap();
        let out = plan_frame(&open_road(), &start, &cfg, 0).unwrap();
        assert_eq!(out.fallback, FallbackStage::Emergency);
        let last = out.selected.points.points.last().unwrap();
        assert!((last.pose.x - 3.0).abs() < 1e-9 && last.v == 0.0);
    }

    #[test]
    fn exact_delta_reproduces_the_planned_state() {
        let cfg = PlannerConfig::default();
        let start = cold_start(10.0, 0.0, &reference()).unwrap();
        let out = plan_frame(&open_road(), &start, &cfg, 0).unwrap();
        let planned = out.selected.points.state_at(0.1).unwrap();
        // the next frame sits exactly on the planned pose
        let next = extract_start_state(&out.selected.points, &PoseDelta(planned.pose), 0.1, &reference()).unwrap().unwrap();
        assert!(next.cartesian.pose.translation_norm() < 1e-12);
        assert!(next.cartesian.pose.theta.abs() < 1e-12);
        assert_eq!(next.cartesian.v, planned.v);
        assert_eq!(next.cartesian.a, planned.a);
        assert!(extract_start_state(&out.selected.points, &PoseDelta(planned.pose), 6.0, &reference()).unwrap().is_none());
    }

    #[test]
    fn longitudinal_error_shifts_the_start() {
        let cfg = PlannerConfig::default();
        let r = reference();
        let start = cold_start(10.0, 0.0, &r).unwrap();
        let out = plan_frame(&open_road(), &start, &cfg, 0).unwrap();
        let truth = out.selected.points.state_at(0.1).unwrap().pose;
        let est = Pose2::new(truth.x - 0.01, truth.y, truth.theta);
        let a = extract_start_state(&out.selected.points, &PoseDelta(truth), 0.1, &r).unwrap().unwrap();
        let b = extract_start_state(&out.selected.points, &PoseDelta(est), 0.1, &r).unwrap().unwrap();
        assert!((b.cartesian.pose.x - a.cartesian.pose.x - 0.01).abs() < 1e-9);
        assert!((b.frenet.s - a.frenet.s - 0.01).abs() < 1e-9);
    }
}
