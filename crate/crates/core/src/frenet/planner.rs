//! Sampling planner: candidate generation, cost, feasibility, selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::convert::{frenet_to_cartesian, FrenetState};
use super::poly::{fit_quartic, fit_quintic, Polynomial};
use super::reference::ReferenceLine;
use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::se2::{wrap_angle, Pose2};
use crate::trajectory::{LocalTrajectory, TrajectoryPoint, SAMPLE_DT, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub k_jerk: f64,
    pub k_time: f64,
    pub k_terminal_d: f64,
    pub k_speed: f64,
    pub k_lon_vs_lat: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            k_jerk: 0.1,
            k_time: 0.1,
            k_terminal_d: 1.0,
            k_speed: 1.0,
            k_lon_vs_lat: 1.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.k_jerk, self.k_time, self.k_terminal_d, self.k_speed, self.k_lon_vs_lat];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation("cost weights must be finite and nonnegative"));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::validation("at least one cost weight must be positive"));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k_jerk: self.k_jerk * factor,
            k_time: self.k_time * factor,
            k_terminal_d: self.k_terminal_d * factor,
            k_speed: self.k_speed * factor,
            k_lon_vs_lat: self.k_lon_vs_lat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub v_max: f64,
    /// Most negative speed allowed (slow reversing).
    pub v_min: f64,
    pub a_max: f64,
    pub kappa_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            v_max: 20.0,
            v_min: -0.5,
            a_max: 4.0,
            kappa_max: 0.25,
        }
    }
}

/// Ego footprint, pose at the geometric center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleDims {
    fn default() -> Self {
        Self { length: 4.8, width: 1.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LongitudinalMode {
    VelocityKeeping,
    Stopping { s_stop: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneTarget {
    pub lane_index: usize,
    /// Lane-center offset from the reference line, left positive.
    pub d: f64,
}

/// Preferred terminal lateral offset and speed used by the cost.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostTargets {
    pub lateral: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostComponents {
    pub jerk_lat: f64,
    pub jerk_lon: f64,
    pub time: f64,
    pub terminal_deviation: f64,
    pub speed_deviation: f64,
}

impl CostComponents {
    pub fn total(&self, w: &CostWeights) -> f64 {
        w.k_jerk * (self.jerk_lat + w.k_lon_vs_lat * self.jerk_lon)
            + w.k_time * self.time
            + w.k_terminal_d * self.terminal_deviation
            + w.k_speed * self.speed_deviation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Conversion,
    Limits,
    RoadBound,
    StopLine,
    Collision,
}

/// Longitudinal goal of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongitudinalGoal {
    Speed(f64),
    Stop(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrajectory {
    pub generation_index: usize,
    pub lane_index: usize,
    pub lateral_target: f64,
    pub goal: LongitudinalGoal,
    pub duration: f64,
    pub lateral_poly: Polynomial,
    pub longitudinal_poly: Polynomial,
    pub frenet: Vec<FrenetState>,
    pub points: LocalTrajectory,
    pub cost_components: CostComponents,
    pub total_cost: f64,
    pub feasible: bool,
    pub rejection: Option<Rejection>,
}

impl CandidateTrajectory {
    fn reject(&mut self, why: Rejection) {
        self.feasible = false;
        self.rejection.get_or_insert(why);
    }

    pub fn terminal(&self) -> ([f64; 3], [f64; 3]) {
        (self.longitudinal_poly.state(self.duration), self.lateral_poly.state(self.duration))
    }
}

/// Time grid shared by all candidates of one planning frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub t0: f64,
    pub frame_id: u64,
    pub horizon: f64,
}

impl SampleGrid {
    pub fn len(&self) -> usize {
        (self.horizon / SAMPLE_DT + 1e-6).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn offset(&self, i: usize) -> f64 {
        i as f64 * SAMPLE_DT
    }
}

/// Frenet state at time offset `tau` of a candidate whose polynomials end at
/// `duration`. Past the end the lateral state is held; the longitudinal one
/// is held when stopping and extrapolated at constant speed otherwise.
fn frenet_sample(lat: &Polynomial, lon: &Polynomial, duration: f64, stopping: bool, tau: f64) -> FrenetState {
    let lt = tau.min(duration);
    let [d, d_dot, d_ddot] = lat.state(lt);
    let [mut s, mut s_dot, mut s_ddot] = lon.state(lt);
    if tau > duration {
        if stopping {
            s_dot = 0.0;
        } else {
            s += s_dot * (tau - duration);
        }
        s_ddot = 0.0;
    }
    FrenetState {
        s,
        s_dot,
        s_ddot,
        d,
        d_dot: if tau > duration { 0.0 } else { d_dot },
        d_ddot: if tau > duration { 0.0 } else { d_ddot },
    }
}

fn sample_candidate(
    lat: &Polynomial,
    lon: &Polynomial,
    duration: f64,
    stopping: bool,
    grid: &SampleGrid,
    reference: &ReferenceLine,
) -> (Vec<FrenetState>, Vec<TrajectoryPoint>, bool) {
    let n = grid.len();
    let mut frenet = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut converted = true;
    for i in 0..n {
        let tau = grid.offset(i);
        let f = frenet_sample(lat, lon, duration, stopping, tau);
        let t = grid.t0 + tau;
        match frenet_to_cartesian(&f, reference) {
            Ok(c) => points.push(TrajectoryPoint {
                t,
                pose: c.pose,
                v: c.v,
                a: c.a,
                curvature: c.curvature,
            }),
            Err(_) => {
                converted = false;
                let prev = points.last().map(|p: &TrajectoryPoint| p.pose).unwrap_or_default();
                points.push(TrajectoryPoint::at_rest(t, prev));
            }
        }
        frenet.push(f);
    }
    (frenet, points, converted)
}

/// Builds the candidate pool: every lateral target crossed with every
/// longitudinal goal and every duration within the horizon.
pub fn generate_candidates(
    start: &FrenetState,
    lane_targets: &[LaneTarget],
    speed_targets: &[f64],
    durations: &[f64],
    mode: LongitudinalMode,
    grid: &SampleGrid,
    reference: &ReferenceLine,
) -> Result<Vec<CandidateTrajectory>> {
    let goals: Vec<LongitudinalGoal> = match mode {
        LongitudinalMode::VelocityKeeping => speed_targets.iter().map(|v| LongitudinalGoal::Speed(*v)).collect(),
        LongitudinalMode::Stopping { s_stop } => vec![LongitudinalGoal::Stop(s_stop)],
    };
    if lane_targets.is_empty() || goals.is_empty() || durations.is_empty() {
        return Err(Error::validation("candidate grids must be nonempty"));
    }
    if durations.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::validation("candidate durations must be positive"));
    }
    if !(grid.horizon > 0.0) {
        return Err(Error::validation("planning horizon must be positive"));
    }

    let mut pool = Vec::new();
    for lane in lane_targets {
        for goal in &goals {
            for &duration in durations.iter().filter(|t| **t <= grid.horizon + TIME_EPS) {
                let lat = fit_quintic(start.d, start.d_dot, start.d_ddot, lane.d, 0.0, 0.0, duration)?;
                let (lon, stopping) = match *goal {
                    LongitudinalGoal::Speed(v) => (fit_quartic(start.s, start.s_dot, start.s_ddot, v, 0.0, duration)?, false),
                    LongitudinalGoal::Stop(s_stop) => {
                        (fit_quintic(start.s, start.s_dot, start.s_ddot, s_stop, 0.0, 0.0, duration)?, true)
                    }
                };
                let (frenet, points, converted) = sample_candidate(&lat, &lon, duration, stopping, grid, reference);
                let mut c = CandidateTrajectory {
                    generation_index: pool.len(),
                    lane_index: lane.lane_index,
                    lateral_target: lane.d,
                    goal: *goal,
                    duration,
                    lateral_poly: lat,
                    longitudinal_poly: lon,
                    frenet,
                    points: LocalTrajectory::new(grid.frame_id, points)?,
                    cost_components: CostComponents::default(),
                    total_cost: 0.0,
                    feasible: true,
                    rejection: None,
                };
                if !converted {
                    c.reject(Rejection::Conversion);
                }
                pool.push(c);
            }
        }
    }
    if pool.is_empty() {
        return Err(Error::validation("no candidate duration fits within the horizon"));
    }
    Ok(pool)
}

pub fn cost_components(c: &CandidateTrajectory, targets: &CostTargets) -> CostComponents {
    let t = c.duration;
    let (lon, lat) = c.terminal();
    CostComponents {
        jerk_lat: c.lateral_poly.jerk_squared_integral(t),
        jerk_lon: c.longitudinal_poly.jerk_squared_integral(t),
        time: t,
        terminal_deviation: (lat[0] - targets.lateral).powi(2),
        speed_deviation: (lon[1] - targets.speed).powi(2),
    }
}

pub fn evaluate_cost(c: &CandidateTrajectory, w: &CostWeights, targets: &CostTargets) -> f64 {
    cost_components(c, targets).total(w)
}

/// Stores cost components and total on every candidate.
pub fn score_candidates(pool: &mut [CandidateTrajectory], w: &CostWeights, targets: &CostTargets) {
    for c in pool {
        c.cost_components = cost_components(c, targets);
        c.total_cost = c.cost_components.total(w);
    }
}

/// Obstacle footprint predicted on the candidate time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedObstacle {
    pub id: usize,
    pub length: f64,
    pub width: f64,
    pub t0: f64,
    /// Center pose at `t0 + i * SAMPLE_DT`.
    pub poses: Vec<Pose2>,
}

impl PredictedObstacle {
    pub fn box_at(&self, t: f64) -> Option<OrientedBox> {
        let idx = ((t - self.t0) / SAMPLE_DT).round();
        if idx < 0.0 {
            return None;
        }
        self.poses
            .get(idx as usize)
            .map(|p| OrientedBox::new(*p, self.length, self.width))
    }
}

/// Drivable lateral band relative to the reference line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadBounds {
    pub right: f64,
    pub left: f64,
}

/// How far the ego footprint at `point` sticks out of `bounds`.
fn bound_violation(f: &FrenetState, point: &TrajectoryPoint, reference: &ReferenceLine, bounds: &RoadBounds, ego: &VehicleDims) -> f64 {
    let rel = wrap_angle(point.pose.theta - reference.query(f.s).theta);
    let reach = 0.5 * ego.length * rel.sin().abs() + 0.5 * ego.width * rel.cos().abs();
    (f.d + reach - bounds.left).max(bounds.right - (f.d - reach)).max(0.0)
}

fn within_limits(p: &TrajectoryPoint, limits: &Limits) -> bool {
    // curvature is only meaningful once the vehicle is moving
    let steering_ok = p.v.abs() < super::convert::LOW_SPEED || p.curvature.abs() <= limits.kappa_max;
    p.v <= limits.v_max && p.v >= limits.v_min && p.a.abs() <= limits.a_max && steering_ok
}

/// Marks candidates infeasible on limit violations, road-bound exits beyond
/// the start's own overlap, stop-line overruns and obstacle overlap.
pub fn filter_candidates(
    pool: &mut [CandidateTrajectory],
    obstacles: &[PredictedObstacle],
    bounds: &RoadBounds,
    limits: &Limits,
    ego: &VehicleDims,
    reference: &ReferenceLine,
    stop_line: Option<f64>,
) {
    for c in pool.iter_mut() {
        if !c.feasible {
            continue;
        }
        if !c.points.points.iter().all(|p| within_limits(p, limits)) {
            c.reject(Rejection::Limits);
            continue;
        }
        let allowance = bound_violation(&c.frenet[0], &c.points.points[0], reference, bounds, ego) + 1e-6;
        if c.frenet
            .iter()
            .zip(&c.points.points)
            .any(|(f, p)| bound_violation(f, p, reference, bounds, ego) > allowance)
        {
            c.reject(Rejection::RoadBound);
            continue;
        }
        if let (Some(line), LongitudinalGoal::Speed(_)) = (stop_line, c.goal) {
            if c.frenet.iter().any(|f| f.s > line) {
                c.reject(Rejection::StopLine);
                continue;
            }
        }
        let hit = c.points.points.iter().any(|p| {
            let ego_box = OrientedBox::new(p.pose, ego.length, ego.width);
            obstacles
                .iter()
                .filter_map(|o| o.box_at(p.t))
                .any(|b| ego_box.intersects(&b))
        });
        if hit {
            c.reject(Rejection::Collision);
        }
    }
}

fn rank(a: &CandidateTrajectory, b: &CandidateTrajectory, current_lane: usize) -> Ordering {
    a.total_cost
        .partial_cmp(&b.total_cost)
        .unwrap_or(Ordering::Equal)
        .then_with(|| (a.lane_index != current_lane).cmp(&(b.lane_index != current_lane)))
        .then_with(|| a.duration.partial_cmp(&b.duration).unwrap_or(Ordering::Equal))
        .then_with(|| a.generation_index.cmp(&b.generation_index))
}

/// Cheapest feasible candidate; ties go to the current lane, then the
/// shorter duration, then generation order.
pub fn select_best(pool: &[CandidateTrajectory], current_lane: usize) -> Result<&CandidateTrajectory> {
    pool.iter()
        .filter(|c| c.feasible)
        .min_by(|a, b| rank(a, b, current_lane))
        .ok_or(Error::NoFeasibleTrajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> ReferenceLine {
        ReferenceLine::new((0..=100).map(|i| (i as f64 * 2.0 - 20.0, 0.0)).collect()).unwrap()
    }

    fn grid() -> SampleGrid {
        SampleGrid { t0: 0.0, frame_id: 0, horizon: 5.0 }
    }

    fn start(v: f64) -> FrenetState {
        FrenetState { s: 20.0, s_dot: v, ..Default::default() }
    }

    fn lanes() -> Vec<LaneTarget> {
        vec![LaneTarget { lane_index: 1, d: 0.0 }, LaneTarget { lane_index: 0, d: -3.5 }]
    }

    #[test]
    fn pool_is_the_grid_product() {
        let pool = generate_candidates(
            &start(10.0),
            &lanes(),
            &[8.0, 10.0, 12.0],
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            LongitudinalMode::VelocityKeeping,
            &grid(),
            &straight(),
        )
        .unwrap();
        assert_eq!(pool.len(), 30);
        assert!(pool.iter().all(|c| c.points.points.len() == 51));
        assert!(pool.iter().enumerate().all(|(i, c)| c.generation_index == i));
    }

    #[test]
    fn empty_grids_rejected() {
        let r = generate_candidates(&start(1.0), &[], &[1.0], &[1.0], LongitudinalMode::VelocityKeeping, &grid(), &straight());
        assert!(r.is_err());
        let r = generate_candidates(&start(1.0), &lanes(), &[1.0], &[0.0], LongitudinalMode::VelocityKeeping, &grid(), &straight());
        assert!(r.is_err());
    }

    #[test]
    fn keep_lane_candidate_is_trivial() {
        let pool = generate_candidates(&start(10.0), &lanes()[..1], &[10.0], &[3.0], LongitudinalMode::VelocityKeeping, &grid(), &straight())
            .unwrap();
        let c = &pool[0];
        assert!(c.lateral_poly.coeffs.iter().all(|v| *v == 0.0));
        for (i, p) in c.points.points.iter().enumerate() {
            assert!((p.pose.x - (i as f64)).abs() < 1e-9);
            assert!(p.pose.y.abs() < 1e-12 && (p.v - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_conditions_hold_at_both_ends() {
        let s0 = FrenetState { s: 20.0, s_dot: 9.0, s_ddot: 0.5, d: 0.3, d_dot: -0.2, d_ddot: 0.1 };
        let pool = generate_candidates(&s0, &lanes(), &[8.0, 12.0], &[2.0, 4.0], LongitudinalMode::VelocityKeeping, &grid(), &straight())
            .unwrap();
        for c in &pool {
            let f0 = c.frenet[0];
            for (a, b) in f0.as_array().iter().zip(s0.as_array()) {
                assert!((a - b).abs() < 1e-6);
            }
            let (lon, lat) = c.terminal();
            let LongitudinalGoal::Speed(v) = c.goal else { unreachable!() };
            assert!((lon[1] - v).abs() < 1e-6 && lon[2].abs() < 1e-6);
            assert!((lat[0] - c.lateral_target).abs() < 1e-6 && lat[1].abs() < 1e-6 && lat[2].abs() < 1e-6);
            let idx = (c.duration / SAMPLE_DT).round() as usize;
            assert!((c.frenet[idx].d - c.lateral_target).abs() < 1e-6);
        }
    }

    #[test]
    fn stopping_candidates_end_at_rest_on_the_stop_point() {
        let pool = generate_candidates(
            &start(6.0),
            &lanes(),
            &[],
            &[2.0, 3.0, 4.0, 5.0],
            LongitudinalMode::Stopping { s_stop: 50.0 },
            &grid(),
            &straight(),
        )
        .unwrap();
        assert_eq!(pool.len(), 8);
        for c in &pool {
            let (lon, _) = c.terminal();
            assert!((lon[0] - 50.0).abs() < 1e-6 && lon[1].abs() < 1e-6);
            let last = c.frenet.last().unwrap();
            assert!((last.s - 50.0).abs() < 1e-6 && last.s_dot.abs() < 1e-9);
        }
    }

    fn dummy(cost: f64, lane: usize, duration: f64, idx: usize) -> CandidateTrajectory {
        let mut pool = generate_candidates(&start(0.0), &lanes()[..1], &[0.0], &[duration], LongitudinalMode::VelocityKeeping, &grid(), &straight())
            .unwrap();
        let mut c = pool.remove(0);
        c.total_cost = cost;
        c.lane_index = lane;
        c.generation_index = idx;
        c
    }

    #[test]
    fn cost_examples() {
        let c = dummy(0.0, 1, 1.0, 0);
        let unit = CostWeights { k_jerk: 1.0, k_time: 1.0, k_terminal_d: 1.0, k_speed: 1.0, k_lon_vs_lat: 1.0 };
        assert_eq!(evaluate_cost(&c, &unit, &CostTargets::default()), 1.0);

        let s0 = FrenetState { s: 20.0, s_dot: 9.0, s_ddot: 0.5, d: 0.3, d_dot: -0.2, d_ddot: 0.1 };
        let pool = generate_candidates(&s0, &lanes(), &[8.0, 12.0], &[2.0, 4.0], LongitudinalMode::VelocityKeeping, &grid(), &straight())
            .unwrap();
        let targets = CostTargets { lateral: 0.0, speed: 10.0 };
        let w = CostWeights::default();
        for c in &pool {
            let once = evaluate_cost(c, &w, &targets);
            assert!((evaluate_cost(c, &w.scaled(2.0), &targets) - 2.0 * once).abs() <= 1e-12 * once.abs());
        }
        let mut scored = pool.clone();
        score_candidates(&mut scored, &w, &targets);
        for c in &scored {
            let k = &c.cost_components;
            let manual = 0.1 * (k.jerk_lat + k.jerk_lon) + 0.1 * k.time + k.terminal_deviation + k.speed_deviation;
            assert!((c.total_cost - manual).abs() <= 1e-12);
        }
    }

    #[test]
    fn selection_rules() {
        let pool = vec![dummy(3.0, 1, 2.0, 0), dummy(2.0, 1, 2.0, 1)];
        assert_eq!(select_best(&pool[..1], 1).unwrap().generation_index, 0);
        assert_eq!(select_best(&pool, 1).unwrap().generation_index, 1);

        let tied = vec![dummy(2.0, 0, 2.0, 0), dummy(2.0, 1, 2.0, 1)];
        assert_eq!(select_best(&tied, 1).unwrap().lane_index, 1);
        assert_eq!(select_best(&tied, 0).unwrap().lane_index, 0);

        let mut none = vec![dummy(1.0, 1, 2.0, 0)];
        none[0].feasible = false;
        assert_eq!(select_best(&none, 1).unwrap_err(), Error::NoFeasibleTrajectory);

        let mut grown = pool.clone();
        grown.push(dummy(9.0, 0, 1.0, 2));
        assert_eq!(select_best(&grown, 1).unwrap().generation_index, 1);
    }

    fn keep_lane_pool(v: f64) -> Vec<CandidateTrajectory> {
        generate_candidates(&start(v), &lanes()[..1], &[v], &[4.0], LongitudinalMode::VelocityKeeping, &grid(), &straight()).unwrap()
    }

    fn parked(x: f64, y: f64) -> PredictedObstacle {
        PredictedObstacle { id: 0, length: 6.8, width: 2.3, t0: 0.0, poses: vec![Pose2::new(x, y, 0.0); 51] }
    }

    const ROAD: RoadBounds = RoadBounds { right: -5.25, left: 1.75 };

    #[test]
    fn filter_examples() {
        let (lim, ego, line) = (Limits::default(), VehicleDims::default(), straight());
        let mut pool = keep_lane_pool(10.0);
        filter_candidates(&mut pool, &[], &ROAD, &lim, &ego, &line, None);
        assert!(pool[0].feasible);

        let mut pool = keep_lane_pool(10.0);
        filter_candidates(&mut pool, &[parked(20.0, 0.0)], &ROAD, &lim, &ego, &line, None);
        assert_eq!(pool[0].rejection, Some(Rejection::Collision));

        let mut pool = keep_lane_pool(10.0);
        filter_candidates(&mut pool, &[parked(20.0, -3.5)], &ROAD, &lim, &ego, &line, None);
        assert!(pool[0].feasible);

        let mut pool = keep_lane_pool(10.0);
        filter_candidates(&mut pool, &[], &ROAD, &lim, &ego, &line, Some(35.0));
        assert_eq!(pool[0].rejection, Some(Rejection::StopLine));

        let mut pool = keep_lane_pool(25.0);
        filter_candidates(&mut pool, &[], &ROAD, &lim, &ego, &line, None);
        assert_eq!(pool[0].rejection, Some(Rejection::Limits));

        let narrow = RoadBounds { right: -0.5, left: 1.75 };
        let mut pool = keep_lane_pool(10.0);
        filter_candidates(&mut pool, &[], &narrow, &lim, &ego, &line, None);
        assert!(pool[0].feasible, "overlap already present at the start is tolerated");
        let mut pool =
            generate_candidates(&start(10.0), &lanes()[1..], &[10.0], &[4.0], LongitudinalMode::VelocityKeeping, &grid(), &straight())
                .unwrap();
        filter_candidates(&mut pool, &[], &narrow, &lim, &ego, &line, None);
        assert_eq!(pool[0].rejection, Some(Rejection::RoadBound));
    }
}
