use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frenet::planner::VehicleDims;
use crate::frenet::reference::ReferenceLine;
use crate::motion::{arc_step, SensorErrorModel};
use crate::planning::PlannerConfig;
use crate::se2::Pose2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoadSegment {
    Straight { length: f64 },
    /// Positive radius turns left.
    Arc { length: f64, radius: f64 },
}

/// Piecewise straight/arc base line from which parallel lanes are offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSpec {
    pub start: Pose2,
    pub segments: Vec<RoadSegment>,
    pub spacing: f64,
}

impl RoadSpec {
    /// Poses along the base line at roughly `spacing` intervals.
    pub fn base_poses(&self) -> Result<Vec<Pose2>> {
        if !(self.spacing > 0.0) {
            return Err(Error::validation("road sample spacing must be positive"));
        }
        let mut poses = vec![self.start];
        for seg in &self.segments {
            let (length, kappa) = match *seg {
                RoadSegment::Straight { length } => (length, 0.0),
                RoadSegment::Arc { length, radius } => {
                    if radius == 0.0 || !radius.is_finite() {
                        return Err(Error::validation("arc radius must be finite and nonzero"));
                    }
                    (length, 1.0 / radius)
                }
            };
            if !(length > 0.0) {
                return Err(Error::validation("road segment length must be positive"));
            }
            let n = (length / self.spacing).ceil() as usize;
            let step = length / n as f64;
            for _ in 0..n {
                let last = poses[poses.len() - 1];
                poses.push(arc_step(&last, step, kappa * step, 1.0));
            }
        }
        Ok(poses)
    }

    /// Centerline offset `offset` to the left of the base line.
    pub fn lane_centerline(&self, offset: f64) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .base_poses()?
            .iter()
            .map(|p| p.transform_point(0.0, offset))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub index: usize,
    pub centerline: Vec<(f64, f64)>,
    pub width: f64,
    pub reference: ReferenceLine,
}

impl Lane {
    pub fn new(index: usize, centerline: Vec<(f64, f64)>, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::validation(format!("lane {index} width must be positive")));
        }
        let reference = ReferenceLine::new(centerline.clone())?;
        Ok(Self { index, centerline, width, reference })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleBehavior {
    ConstantSpeed,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub id: usize,
    pub length: f64,
    pub width: f64,
    pub pose: Pose2,
    pub speed: f64,
    pub behavior: ObstacleBehavior,
    /// Lane followed by a moving obstacle; without one it drives straight.
    pub lane: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub lanes: Vec<Lane>,
    pub reference_lane: usize,
    pub ego_init: Pose2,
    pub ego_speed: f64,
    pub ego: VehicleDims,
    pub obstacles: Vec<ObstacleSpec>,
    pub stop_target: Option<Pose2>,
    pub duration: f64,
    pub replan_hz: f64,
    pub sensor: SensorErrorModel,
    pub seed: u64,
    pub planner: PlannerConfig,
    /// Obstacle box growth at each end and each side for planning.
    pub margin_lon: f64,
    pub margin_lat: f64,
    pub range_ahead: f64,
    pub range_behind: f64,
}

impl Scenario {
    pub fn lane(&self, index: usize) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.index == index)
    }

    pub fn replan_period(&self) -> f64 {
        1.0 / self.replan_hz
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.replan_hz + 1e-9).floor() as usize
    }

    /// Lane whose centerline is nearest to `(x, y)` with the signed offset
    /// and projection arc length.
    pub fn locate(&self, x: f64, y: f64) -> Option<(&Lane, f64, f64)> {
        self.lanes
            .iter()
            .map(|l| {
                let (s, d, _) = l.reference.project_unchecked(x, y);
                (l, s, d)
            })
            .min_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes.is_empty() {
            return Err(Error::load("lanes", "at least one lane is required"));
        }
        if self.lane(self.reference_lane).is_none() {
            return Err(Error::load("reference_lane", "does not name a lane"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::load("duration_s", "must be positive"));
        }
        if !(self.replan_hz > 0.0) {
            return Err(Error::load("replan_hz", "must be positive"));
        }
        if self.planner.horizon < self.replan_period() {
            return Err(Error::load("horizon_s", "must cover at least one replan period"));
        }
        let ticks = self.replan_period() / crate::motion::SENSOR_PERIOD;
        if (ticks - ticks.round()).abs() > 1e-6 || ticks.round() < 2.0 {
            return Err(Error::load("replan_hz", "replan period must be a multiple (at least 2) of the 0.01 s sensor period"));
        }
        if !(self.ego.length > 0.0 && self.ego.width > 0.0) {
            return Err(Error::load("ego.length_m", "ego dimensions must be positive"));
        }
        for o in &self.obstacles {
            if !(o.length > 0.0 && o.width > 0.0) {
                return Err(Error::load(format!("obstacles[{}].length_m", o.id), "dimensions must be positive"));
            }
            if let Some(l) = o.lane {
                if self.lane(l).is_none() {
                    return Err(Error::load(format!("obstacles[{}].lane", o.id), "does not name a lane"));
                }
            }
        }
        self.sensor.validate().map_err(|e| Error::load("sensor", e.to_string()))?;
        self.planner.validate().map_err(|e| Error::load("planner", e.to_string()))?;
        let inside = self.locate(self.ego_init.x, self.ego_init.y).is_some_and(|(lane, s, d)| {
            s >= 0.0 && s <= lane.reference.length() && d.abs() <= 0.5 * lane.width
        });
        if !inside {
            return Err(Error::load("ego.x_m", "ego must start inside a lane"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_road_lanes() {
        let road = RoadSpec { start: Pose2::identity(), segments: vec![RoadSegment::Straight { length: 10.0 }], spacing: 2.0 };
        let left = road.lane_centerline(3.5).unwrap();
        assert_eq!(left.len(), 6);
        assert!(left.iter().all(|p| (p.1 - 3.5).abs() < 1e-12));
        assert!((left[5].0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn arc_road_keeps_radius() {
        let r = 100.0;
        let road = RoadSpec { start: Pose2::identity(), segments: vec![RoadSegment::Arc { length: 50.0, radius: r }], spacing: 2.0 };
        for (x, y) in road.lane_centerline(0.0).unwrap() {
            assert!((x.hypot(y - r) - r).abs() < 1e-9);
        }
        for (x, y) in road.lane_centerline(3.5).unwrap() {
            assert!((x.hypot(y - r) - (r - 3.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_segments_rejected() {
        let road = RoadSpec { start: Pose2::identity(), segments: vec![RoadSegment::Arc { length: 5.0, radius: 0.0 }], spacing: 2.0 };
        assert!(road.base_poses().is_err());
        assert!(Lane::new(0, vec![(0.0, 0.0), (1.0, 0.0)], 0.0).is_err());
    }
}
