use serde::{Deserialize, Serialize};

use super::scenario::{ObstacleBehavior, ObstacleSpec, Scenario};
use crate::error::{Error, Result};
use crate::frenet::planner::PredictedObstacle;
use crate::geometry::OrientedBox;
use crate::motion::PoseDelta;
use crate::planning::{LocalLane, PerceivedObstacle, PerceptionSnapshot};
use crate::se2::{compose, relative, wrap_angle, Pose2};
use crate::trajectory::{LocalTrajectory, SAMPLE_DT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    pub id: usize,
    pub pose: Pose2,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t: f64,
    pub ego: Pose2,
    pub ego_v: f64,
    pub ego_a: f64,
    pub obstacles: Vec<ObstacleState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyEval {
    pub collision: bool,
    pub lane_margin: f64,
    pub lane_index: usize,
}

/// Global pose of obstacle `spec` at time `t`. Lane followers keep their
/// initial offset from the lane centerline and advance along it.
pub fn obstacle_pose(spec: &ObstacleSpec, scenario: &Scenario, t: f64) -> Pose2 {
    if spec.behavior == ObstacleBehavior::Stopped || spec.speed == 0.0 {
        return spec.pose;
    }
    let travel = spec.speed * t;
    match spec.lane.and_then(|l| scenario.lane(l)) {
        Some(lane) => {
            let (s0, d0, _) = lane.reference.project_unchecked(spec.pose.x, spec.pose.y);
            let r = lane.reference.query(s0 + travel);
            let (x, y) = lane.reference.point_at(s0 + travel, d0);
            Pose2::new(x, y, r.theta)
        }
        None => {
            let (x, y) = spec.pose.transform_point(travel, 0.0);
            Pose2::new(x, y, spec.pose.theta)
        }
    }
}

fn obstacle_speed(spec: &ObstacleSpec) -> f64 {
    match spec.behavior {
        ObstacleBehavior::Stopped => 0.0,
        ObstacleBehavior::ConstantSpeed => spec.speed,
    }
}

pub fn initial_world(scenario: &Scenario) -> WorldState {
    WorldState {
        t: 0.0,
        ego: scenario.ego_init,
        ego_v: scenario.ego_speed,
        ego_a: 0.0,
        obstacles: scenario
            .obstacles
            .iter()
            .map(|o| ObstacleState { id: o.id, pose: obstacle_pose(o, scenario, 0.0), speed: obstacle_speed(o) })
            .collect(),
    }
}

/// Executes `selected` (planned in the ego frame at `world.t`) for `dt`
/// seconds with perfect tracking.
pub fn step_world(world: &WorldState, scenario: &Scenario, selected: &LocalTrajectory, dt: f64) -> Result<WorldState> {
    let t_next = world.t + dt;
    let target = selected.state_at(t_next).ok_or_else(|| {
        Error::SimulationFault(format!("selected trajectory ends at {:.3} s, before {:.3} s", selected.end_time(), t_next))
    })?;
    Ok(WorldState {
        t: t_next,
        ego: compose(&world.ego, &target.pose),
        ego_v: target.v,
        ego_a: target.a,
        obstacles: scenario
            .obstacles
            .iter()
            .map(|o| ObstacleState { id: o.id, pose: obstacle_pose(o, scenario, t_next), speed: obstacle_speed(o) })
            .collect(),
    })
}

pub fn true_delta(prev: &WorldState, curr: &WorldState) -> PoseDelta {
    PoseDelta(relative(&prev.ego, &curr.ego))
}

fn local_lane(lane: &super::scenario::Lane, ego: &Pose2, ahead: f64, behind: f64) -> LocalLane {
    let local: Vec<(f64, f64)> = lane.centerline.iter().map(|p| ego.inverse_transform_point(p.0, p.1)).collect();
    let in_range = |p: &(f64, f64)| p.0 >= -behind && p.0 <= ahead;
    let first = local.iter().position(in_range);
    let last = local.iter().rposition(in_range);
    let centerline = match (first, last) {
        (Some(a), Some(b)) if b > a => local[a..=b].to_vec(),
        _ => {
            // nothing usable in range: keep the segment nearest the ego
            let i = local
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .0.hypot(a.1 .1).total_cmp(&b.1 .0.hypot(b.1 .1)))
                .map(|(i, _)| i)
                .unwrap_or(0)
                .min(local.len() - 2);
            local[i..i + 2].to_vec()
        }
    };
    LocalLane { index: lane.index, centerline, width: lane.width }
}

/// Noise-free, range-limited view of the world in the ego's true frame.
pub fn perceive(world: &WorldState, scenario: &Scenario) -> PerceptionSnapshot {
    let ego = world.ego;
    let (ahead, behind) = (scenario.range_ahead, scenario.range_behind);
    let lanes = scenario.lanes.iter().map(|l| local_lane(l, &ego, ahead, behind)).collect();

    let steps = (scenario.planner.horizon / SAMPLE_DT + 1e-6).floor() as usize + 1;
    let mut obstacles = Vec::new();
    let mut predictions = Vec::new();
    for (spec, state) in scenario.obstacles.iter().zip(&world.obstacles) {
        let pose = relative(&ego, &state.pose);
        if pose.x < -behind || pose.x > ahead {
            continue;
        }
        let (vx, vy) = {
            let (s, c) = pose.theta.sin_cos();
            (state.speed * c, state.speed * s)
        };
        let footprint = OrientedBox::new(pose, spec.length, spec.width);
        let inflated = footprint.inflated(scenario.margin_lon, scenario.margin_lat);
        predictions.push(PredictedObstacle {
            id: spec.id,
            length: inflated.length,
            width: inflated.width,
            t0: world.t,
            poses: (0..steps)
                .map(|i| {
                    let tau = i as f64 * SAMPLE_DT;
                    Pose2::new(pose.x + vx * tau, pose.y + vy * tau, pose.theta)
                })
                .collect(),
        });
        obstacles.push(PerceivedObstacle { id: spec.id, footprint, velocity: (vx, vy) });
    }

    PerceptionSnapshot {
        t: world.t,
        lanes,
        reference_lane: scenario.reference_lane,
        obstacles,
        predictions,
        stop_target: scenario.stop_target.map(|g| relative(&ego, &g)),
    }
}

/// Ground-truth collision against raw obstacle footprints, and the signed
/// clearance of the ego footprint to the bounds of the lane it is in.
pub fn evaluate_safety(world: &WorldState, scenario: &Scenario) -> SafetyEval {
    let ego_box = OrientedBox::new(world.ego, scenario.ego.length, scenario.ego.width);
    let collision = scenario
        .obstacles
        .iter()
        .zip(&world.obstacles)
        .any(|(spec, st)| ego_box.intersects(&OrientedBox::new(st.pose, spec.length, spec.width)));
    match scenario.locate(world.ego.x, world.ego.y) {
        Some((lane, s, d)) => {
            let rel = wrap_angle(world.ego.theta - lane.reference.query(s).theta);
            let reach = 0.5 * scenario.ego.length * rel.sin().abs() + 0.5 * scenario.ego.width * rel.cos().abs();
            SafetyEval { collision, lane_margin: 0.5 * lane.width - d.abs() - reach, lane_index: lane.index }
        }
        None => SafetyEval { collision, lane_margin: f64::NEG_INFINITY, lane_index: 0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frenet::planner::VehicleDims;
    use crate::motion::SensorErrorModel;
    use crate::planning::PlannerConfig;
    use crate::sim::scenario::Lane;
    use crate::trajectory::TrajectoryPoint;
    use std::f64::consts::FRAC_PI_2;

    fn scenario(obstacles: Vec<ObstacleSpec>) -> Scenario {
        let line = |y: f64| (0..=100).map(|i| (i as f64 * 2.0, y)).collect();
        Scenario {
            name: "test".into(),
            lanes: vec![Lane::new(0, line(0.0), 3.5).unwrap(), Lane::new(1, line(3.5), 3.5).unwrap()],
            reference_lane: 0,
            ego_init: Pose2::new(20.0, 0.0, 0.0),
            ego_speed: 0.0,
            ego: VehicleDims::default(),
            obstacles,
            stop_target: None,
            duration: 1.0,
            replan_hz: 10.0,
            sensor: SensorErrorModel::default(),
            seed: 0,
            planner: PlannerConfig::default(),
            margin_lon: 1.0,
            margin_lat: 0.25,
            range_ahead: 100.0,
            range_behind: 20.0,
        }
    }

    fn car(id: usize, x: f64, y: f64, speed: f64, behavior: ObstacleBehavior) -> ObstacleSpec {
        ObstacleSpec { id, length: 4.5, width: 1.8, pose: Pose2::new(x, y, 0.0), speed, behavior, lane: Some(if y > 1.0 { 1 } else { 0 }) }
    }

    fn traj(points: &[(f64, Pose2)]) -> LocalTrajectory {
        LocalTrajectory::new(0, points.iter().map(|(t, p)| TrajectoryPoint::at_rest(*t, *p)).collect()).unwrap()
    }

    #[test]
    fn standstill_plan_keeps_pose() {
        let sc = scenario(vec![]);
        let w = initial_world(&sc);
        let plan = traj(&[(0.0, Pose2::identity()), (0.1, Pose2::identity())]);
        let next = step_world(&w, &sc, &plan, 0.1).unwrap();
        assert_eq!(next.ego, w.ego);
        assert!(step_world(&w, &sc, &plan, 0.2).is_err());
    }

    #[test]
    fn local_advance_maps_through_heading() {
        let sc = scenario(vec![]);
        let mut w = initial_world(&sc);
        w.ego = Pose2::new(5.0, 1.0, FRAC_PI_2);
        let plan = traj(&[(0.0, Pose2::identity()), (0.1, Pose2::new(1.0, 0.0, 0.0))]);
        let next = step_world(&w, &sc, &plan, 0.1).unwrap();
        assert!((next.ego.x - 5.0).abs() < 1e-12 && (next.ego.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lane_follower_advances_along_centerline() {
        let sc = scenario(vec![car(0, 50.0, 0.0, 5.0, ObstacleBehavior::ConstantSpeed)]);
        let w = initial_world(&sc);
        let plan = traj(&[(0.0, Pose2::identity()), (0.1, Pose2::identity())]);
        let next = step_world(&w, &sc, &plan, 0.1).unwrap();
        assert!((next.obstacles[0].pose.x - 50.5).abs() < 1e-9);
        assert!(next.obstacles[0].pose.y.abs() < 1e-9);
    }

    #[test]
    fn perception_is_in_the_ego_frame() {
        let mut sc = scenario(vec![car(0, 30.0, 0.0, 0.0, ObstacleBehavior::Stopped)]);
        sc.ego_init = Pose2::new(20.0, 0.0, 0.0);
        let w = initial_world(&sc);
        let p = perceive(&w, &sc);
        assert!((p.obstacles[0].footprint.center.x - 10.0).abs() < 1e-12);
        assert!(p.predictions[0].poses.iter().all(|q| *q == p.predictions[0].poses[0]));
        assert_eq!(p.predictions[0].poses.len(), 51);

        let mut rotated = w.clone();
        rotated.ego = Pose2::new(20.0, 0.0, FRAC_PI_2);
        let p = perceive(&rotated, &sc);
        let ob = p.obstacles[0].footprint.center;
        assert!(ob.x.abs() < 1e-9 && (ob.y + 10.0).abs() < 1e-9);
        let lane0 = &p.lanes[0].centerline;
        assert!(lane0.iter().all(|q| q.0.abs() < 1e-9));
        // re-expressing through the true pose recovers the global state
        let back = compose(&rotated.ego, &ob);
        assert!((back.x - 30.0).abs() < 1e-9 && back.y.abs() < 1e-9);
    }

    #[test]
    fn true_delta_examples() {
        let sc = scenario(vec![]);
        let a = initial_world(&sc);
        assert_eq!(true_delta(&a, &a).0, Pose2::identity());
        let mut b = a.clone();
        let h = std::f64::consts::FRAC_PI_4;
        let mut a2 = a.clone();
        a2.ego = Pose2::new(0.0, 0.0, h);
        b.ego = Pose2::new(h.cos(), h.sin(), h);
        let d = true_delta(&a2, &b).0;
        assert!((d.x - 1.0).abs() < 1e-12 && d.y.abs() < 1e-12 && d.theta.abs() < 1e-12);
        let mut c = a.clone();
        c.ego = Pose2::new(a.ego.x, a.ego.y, 0.1);
        assert!((true_delta(&a, &c).0.theta - 0.1).abs() < 1e-15);
    }

    #[test]
    fn safety_examples() {
        let sc = scenario(vec![car(0, 24.0, 0.0, 0.0, ObstacleBehavior::Stopped), car(1, 40.0, 3.5, 0.0, ObstacleBehavior::Stopped)]);
        let w = initial_world(&sc);
        let e = evaluate_safety(&w, &sc);
        assert!(e.collision);
        assert!((e.lane_margin - 0.85).abs() < 1e-9);
        let mut clear = w.clone();
        clear.ego = Pose2::new(10.0, 1.0, 0.0);
        let e = evaluate_safety(&clear, &sc);
        assert!(!e.collision && (e.lane_margin + 0.15).abs() < 1e-9);
    }
}
