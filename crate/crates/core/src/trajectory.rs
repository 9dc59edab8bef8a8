use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se2::{compose, Pose2};

/// Spacing of planned trajectory samples, seconds.
pub const SAMPLE_DT: f64 = 0.1;

/// Two sample times closer than this are treated as the same instant.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Absolute simulation time, seconds.
    pub t: f64,
    pub pose: Pose2,
    pub v: f64,
    pub a: f64,
    pub curvature: f64,
}

impl TrajectoryPoint {
    pub fn at_rest(t: f64, pose: Pose2) -> Self {
        Self {
            t,
            pose,
            v: 0.0,
            a: 0.0,
            curvature: 0.0,
        }
    }

    pub fn lerp(&self, other: &TrajectoryPoint, alpha: f64) -> TrajectoryPoint {
        let mix = |a: f64, b: f64| a + alpha * (b - a);
        TrajectoryPoint {
            t: mix(self.t, other.t),
            pose: self.pose.interpolate(&other.pose, alpha),
            v: mix(self.v, other.v),
            a: mix(self.a, other.a),
            curvature: mix(self.curvature, other.curvature),
        }
    }
}

/// A timestamped state sequence expressed in the local vehicle frame of
/// planning frame `frame_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTrajectory {
    pub frame_id: u64,
    pub points: Vec<TrajectoryPoint>,
}

impl LocalTrajectory {
    pub fn new(frame_id: u64, points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("trajectory has no points"));
        }
        if points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::validation("trajectory times must be strictly increasing"));
        }
        Ok(Self { frame_id, points })
    }

    pub fn start_time(&self) -> f64 {
        self.points[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.start_time() - TIME_EPS && t <= self.end_time() + TIME_EPS
    }

    /// State at time `t`. A stored sample within [`TIME_EPS`] is returned
    /// unchanged; otherwise neighbours are interpolated.
    pub fn state_at(&self, t: f64) -> Option<TrajectoryPoint> {
        if !self.covers(t) {
            return None;
        }
        let idx = self.points.partition_point(|p| p.t < t - TIME_EPS);
        if idx < self.points.len() && (self.points[idx].t - t).abs() <= TIME_EPS {
            return Some(self.points[idx]);
        }
        if idx == 0 {
            return Some(self.points[0]);
        }
        if idx >= self.points.len() {
            return Some(self.points[self.points.len() - 1]);
        }
        let (p0, p1) = (&self.points[idx - 1], &self.points[idx]);
        let alpha = (t - p0.t) / (p1.t - p0.t);
        let mut out = p0.lerp(p1, alpha);
        out.t = t;
        Some(out)
    }
}

/// Re-expresses a trajectory planned in frame `P_{k-1}` in frame `P_k`,
/// where `delta` is the pose of `P_k` seen from `P_{k-1}`.
pub fn transform_trajectory(traj: &LocalTrajectory, delta: &Pose2) -> Result<LocalTrajectory> {
    if traj.points.is_empty() {
        return Err(Error::validation("cannot transform an empty trajectory"));
    }
    let to_new = delta.inverse();
    let points = traj
        .points
        .iter()
        .map(|p| TrajectoryPoint {
            pose: compose(&to_new, &p.pose),
            ..*p
        })
        .collect();
    Ok(LocalTrajectory {
        frame_id: traj.frame_id + 1,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se2::wrap_angle;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn single(pose: Pose2) -> LocalTrajectory {
        LocalTrajectory::new(3, vec![TrajectoryPoint { t: 0.3, pose, v: 4.0, a: 0.5, curvature: 0.01 }]).unwrap()
    }

    #[test]
    fn zero_delta_keeps_poses() {
        let traj = single(Pose2::new(2.0, -1.0, 0.4));
        let out = transform_trajectory(&traj, &Pose2::identity()).unwrap();
        assert_eq!(out.points[0].pose, traj.points[0].pose);
        assert_eq!(out.frame_id, 4);
    }

    #[test]
    fn pure_translation() {
        let out = transform_trajectory(&single(Pose2::new(2.0, 0.0, 0.0)), &Pose2::new(1.0, 0.0, 0.0)).unwrap();
        let p = out.points[0].pose;
        assert!((p.x - 1.0).abs() < 1e-15 && p.y.abs() < 1e-15 && p.theta == 0.0);
        assert_eq!(out.points[0].v, 4.0);
        assert_eq!(out.points[0].t, 0.3);
    }

    #[test]
    fn pure_rotation() {
        let out = transform_trajectory(&single(Pose2::new(1.0, 1.0, 0.0)), &Pose2::new(0.0, 0.0, FRAC_PI_2)).unwrap();
        let p = out.points[0].pose;
        assert!((p.x - 1.0).abs() < 1e-12);
        assert!((p.y + 1.0).abs() < 1e-12);
        assert!((p.theta + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn empty_is_rejected() {
        let traj = LocalTrajectory { frame_id: 0, points: vec![] };
        assert!(transform_trajectory(&traj, &Pose2::identity()).is_err());
        assert!(LocalTrajectory::new(0, vec![]).is_err());
    }

    #[test]
    fn exact_sample_is_returned_unchanged() {
        let pts: Vec<_> = (0..5)
            .map(|i| TrajectoryPoint {
                t: 1.0 + i as f64 * SAMPLE_DT,
                pose: Pose2::new(i as f64 * 0.7, 0.1 * i as f64, 0.01 * i as f64),
                v: 7.0,
                a: -0.3,
                curvature: 0.0,
            })
            .collect();
        let traj = LocalTrajectory::new(0, pts.clone()).unwrap();
        assert_eq!(traj.state_at(1.0 + 2.0 * SAMPLE_DT).unwrap(), pts[2]);
        let mid = traj.state_at(1.15).unwrap();
        assert!((mid.pose.x - 1.05).abs() < 1e-12);
        assert!(traj.state_at(2.0).is_none());
    }

    proptest! {
        #[test]
        fn round_trip(x in -20.0..20.0f64, y in -20.0..20.0f64, th in -3.0..3.0f64,
                      dx in -5.0..5.0f64, dy in -5.0..5.0f64, dth in -1.0..1.0f64) {
            let traj = single(Pose2::new(x, y, th));
            let d = Pose2::new(dx, dy, dth);
            let back = transform_trajectory(&transform_trajectory(&traj, &d).unwrap(), &d.inverse()).unwrap();
            let (a, b) = (traj.points[0].pose, back.points[0].pose);
            prop_assert!((a.x - b.x).abs() < 1e-12);
            prop_assert!((a.y - b.y).abs() < 1e-12);
            prop_assert!(wrap_angle(a.theta - b.theta).abs() < 1e-12);
        }
    }
}
