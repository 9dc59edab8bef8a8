//! Scenario files: TOML with units spelled out in field names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frenet::planner::{CostWeights, Limits, VehicleDims};
use crate::motion::SensorErrorModel;
use crate::planning::PlannerConfig;
use crate::se2::Pose2;
use crate::sim::scenario::{Lane, ObstacleBehavior, ObstacleSpec, RoadSegment, RoadSpec, Scenario};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFile {
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub heading_deg: f64,
}

impl PoseFile {
    fn pose(&self) -> Pose2 {
        Pose2::new(self.x_m, self.y_m, self.heading_deg.to_radians())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentFile {
    Straight { length_m: f64 },
    Arc { length_m: f64, radius_m: f64 },
}

fn default_spacing() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadFile {
    #[serde(default)]
    pub start: PoseFile,
    #[serde(default = "default_spacing")]
    pub spacing_m: f64,
    pub segments: Vec<SegmentFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneFile {
    pub index: usize,
    pub width_m: f64,
    /// Offset of the centerline left of the road base line.
    pub offset_m: Option<f64>,
    /// Explicit global centerline; overrides the road description.
    pub waypoints: Option<Vec<[f64; 2]>>,
}

fn default_length() -> f64 {
    4.8
}

fn default_width() -> f64 {
    1.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoFile {
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub heading_deg: f64,
    pub speed_mps: f64,
    #[serde(default = "default_length")]
    pub length_m: f64,
    #[serde(default = "default_width")]
    pub width_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleFile {
    pub length_m: f64,
    pub width_m: f64,
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub heading_deg: f64,
    #[serde(default)]
    pub speed_mps: f64,
    pub behavior: ObstacleBehavior,
    pub lane: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorFile {
    #[serde(default)]
    pub v_offset_mps: f64,
    #[serde(default)]
    pub sigma_v_mps: f64,
    #[serde(default)]
    pub yawrate_offset_dps: f64,
    #[serde(default)]
    pub sigma_yawrate_dps: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerFile {
    pub k_jerk: Option<f64>,
    pub k_time: Option<f64>,
    pub k_terminal_d: Option<f64>,
    pub k_speed: Option<f64>,
    pub k_lon_vs_lat: Option<f64>,
    pub durations_s: Option<Vec<f64>>,
    pub speed_offsets_mps: Option<Vec<f64>>,
    pub v_max_mps: Option<f64>,
    pub v_min_mps: Option<f64>,
    pub a_max_mps2: Option<f64>,
    pub kappa_max_per_m: Option<f64>,
    pub stop_decel_mps2: Option<f64>,
    pub fallback_decel_mps2: Option<f64>,
    pub emergency_decel_mps2: Option<f64>,
    pub stop_tolerance_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionFile {
    pub range_ahead_m: f64,
    pub range_behind_m: f64,
    pub margin_lon_m: f64,
    pub margin_lat_m: f64,
}

impl Default for PerceptionFile {
    fn default() -> Self {
        Self { range_ahead_m: 100.0, range_behind_m: 20.0, margin_lon_m: 1.0, margin_lat_m: 0.25 }
    }
}

fn default_replan_hz() -> f64 {
    10.0
}

fn default_horizon() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub duration_s: f64,
    #[serde(default = "default_replan_hz")]
    pub replan_hz: f64,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    #[serde(default)]
    pub seed: u64,
    pub v_ref_mps: f64,
    pub reference_lane: Option<usize>,
    pub road: Option<RoadFile>,
    pub lanes: Vec<LaneFile>,
    pub ego: EgoFile,
    #[serde(default)]
    pub obstacles: Vec<ObstacleFile>,
    pub stop_target: Option<PoseFile>,
    #[serde(default)]
    pub sensor: SensorFile,
    #[serde(default)]
    pub planner: PlannerFile,
    #[serde(default)]
    pub perception: PerceptionFile,
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::load(field, format!("must be positive, got {v}")))
    }
}

fn planner_config(p: &PlannerFile, v_ref: f64, horizon: f64) -> PlannerConfig {
    let d = PlannerConfig::default();
    let w = CostWeights::default();
    let l = Limits::default();
    PlannerConfig {
        weights: CostWeights {
            k_jerk: p.k_jerk.unwrap_or(w.k_jerk),
            k_time: p.k_time.unwrap_or(w.k_time),
            k_terminal_d: p.k_terminal_d.unwrap_or(w.k_terminal_d),
            k_speed: p.k_speed.unwrap_or(w.k_speed),
            k_lon_vs_lat: p.k_lon_vs_lat.unwrap_or(w.k_lon_vs_lat),
        },
        limits: Limits {
            v_max: p.v_max_mps.unwrap_or(l.v_max),
            v_min: p.v_min_mps.unwrap_or(l.v_min),
            a_max: p.a_max_mps2.unwrap_or(l.a_max),
            kappa_max: p.kappa_max_per_m.unwrap_or(l.kappa_max),
        },
        ego: d.ego,
        horizon,
        durations: p.durations_s.clone().unwrap_or(d.durations),
        speed_offsets: p.speed_offsets_mps.clone().unwrap_or(d.speed_offsets),
        v_ref,
        stop_decel: p.stop_decel_mps2.unwrap_or(d.stop_decel),
        fallback_decel: p.fallback_decel_mps2.unwrap_or(d.fallback_decel),
        emergency_decel: p.emergency_decel_mps2.unwrap_or(d.emergency_decel),
        stop_tolerance: p.stop_tolerance_m.unwrap_or(d.stop_tolerance),
    }
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let road = match &self.road {
            Some(r) => Some(RoadSpec {
                start: r.start.pose(),
                spacing: positive("road.spacing_m", r.spacing_m)?,
                segments: r
                    .segments
                    .iter()
                    .map(|s| match *s {
                        SegmentFile::Straight { length_m } => RoadSegment::Straight { length: length_m },
                        SegmentFile::Arc { length_m, radius_m } => RoadSegment::Arc { length: length_m, radius: radius_m },
                    })
                    .collect(),
            }),
            None => None,
        };

        let mut lanes = Vec::new();
        for (i, lf) in self.lanes.iter().enumerate() {
            let field = |name: &str| format!("lanes[{i}].{name}");
            positive(&field("width_m"), lf.width_m)?;
            let centerline = match (&lf.waypoints, lf.offset_m, &road) {
                (Some(w), _, _) => w.iter().map(|p| (p[0], p[1])).collect(),
                (None, Some(off), Some(road)) => road.lane_centerline(off).map_err(|e| Error::load("road", e.to_string()))?,
                _ => return Err(Error::load(field("waypoints"), "give waypoints, or offset_m with a [road] table")),
            };
            let lane = Lane::new(lf.index, centerline, lf.width_m).map_err(|e| Error::load(field("waypoints"), e.to_string()))?;
            if lanes.iter().any(|l: &Lane| l.index == lf.index) {
                return Err(Error::load(field("index"), "duplicate lane index"));
            }
            lanes.push(lane);
        }

        let ego_pose = Pose2::new(self.ego.x_m, self.ego.y_m, self.ego.heading_deg.to_radians());
        let ego = VehicleDims { length: positive("ego.length_m", self.ego.length_m)?, width: positive("ego.width_m", self.ego.width_m)? };
        let reference_lane = match self.reference_lane {
            Some(l) => l,
            None => nearest_lane(&lanes, &ego_pose).ok_or_else(|| Error::load("lanes", "at least one lane is required"))?,
        };

        let mut obstacles = Vec::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            let field = |name: &str| format!("obstacles[{i}].{name}");
            obstacles.push(ObstacleSpec {
                id: i,
                length: positive(&field("length_m"), o.length_m)?,
                width: positive(&field("width_m"), o.width_m)?,
                pose: Pose2::new(o.x_m, o.y_m, o.heading_deg.to_radians()),
                speed: o.speed_mps,
                behavior: o.behavior,
                lane: o.lane,
            });
        }

        let s = &self.sensor;
        let sensor = SensorErrorModel::from_degrees(s.v_offset_mps, s.sigma_v_mps, s.yawrate_offset_dps, s.sigma_yawrate_dps)
            .map_err(|e| Error::load("sensor", e.to_string()))?;
        if !(self.v_ref_mps >= 0.0) {
            return Err(Error::load("v_ref_mps", "must be nonnegative"));
        }
        let mut planner = planner_config(&self.planner, self.v_ref_mps, positive("horizon_s", self.horizon_s)?);
        planner.ego = ego;

        let p = self.perception;
        let scenario = Scenario {
            name: self.name,
            lanes,
            reference_lane,
            ego_init: ego_pose,
            ego_speed: self.ego.speed_mps,
            ego,
            obstacles,
            stop_target: self.stop_target.map(|t| t.pose()),
            duration: positive("duration_s", self.duration_s)?,
            replan_hz: positive("replan_hz", self.replan_hz)?,
            sensor,
            seed: self.seed,
            planner,
            margin_lon: p.margin_lon_m,
            margin_lat: p.margin_lat_m,
            range_ahead: positive("perception.range_ahead_m", p.range_ahead_m)?,
            range_behind: p.range_behind_m,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn nearest_lane(lanes: &[Lane], pose: &Pose2) -> Option<usize> {
    lanes
        .iter()
        .map(|l| (l.index, l.reference.project_unchecked(pose.x, pose.y).1.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let reason = e.message().to_string();
        let field = reason
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "<document>".to_string());
        Error::load(field, e.to_string().trim().to_string())
    })?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::load("path", format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub v_offset: Option<f64>,
    pub sigma_v: Option<f64>,
    pub yawrate_offset_dps: Option<f64>,
    pub sigma_yawrate_dps: Option<f64>,
    pub duration: Option<f64>,
    pub replan_hz: Option<f64>,
    pub horizon: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut scenario: Scenario) -> Result<Scenario> {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        let s = scenario.sensor;
        scenario.sensor = SensorErrorModel::new(
            self.v_offset.unwrap_or(s.v_offset),
            self.sigma_v.unwrap_or(s.sigma_v),
            self.yawrate_offset_dps.map_or(s.yawrate_offset, f64::to_radians),
            self.sigma_yawrate_dps.map_or(s.sigma_yawrate, f64::to_radians),
        )
        .map_err(|e| Error::load("sensor", e.to_string()))?;
        if let Some(d) = self.duration {
            scenario.duration = d;
        }
        if let Some(hz) = self.replan_hz {
            scenario.replan_hz = hz;
        }
        if let Some(h) = self.horizon {
            scenario.planner.horizon = h;
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub overrides: Overrides,
    pub output_dir: PathBuf,
    /// Also log a decimated copy of every candidate.
    pub log_pool: bool,
}

impl RunConfig {
    pub fn load(&self) -> Result<Scenario> {
        self.overrides.apply(load_scenario(&self.scenario_path)?)
    }
}
