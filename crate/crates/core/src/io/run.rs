//! Run driver: simulator, planner and monitor in lockstep, plus log output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::RunConfig;
use super::log::*;
use crate::error::Result;
use crate::motion::{dead_reckon_wheel, estimation_error, profile_reaching, PoseDelta, SensorSimulator, RNG_ALGORITHM, SENSOR_PERIOD};
use crate::planning::{FallbackStage, PlanningLoop, StartState};
use crate::se2::{compose, wrap_angle, Pose2};
use crate::sim::{evaluate_safety, initial_world, perceive, step_world, true_delta, Scenario, WorldState};
use crate::stability::{analysis_state, analyze_trace, toy_orbit_sim, LyapunovWeights, StabilityBounds, StabilityRecord, ToyOrbitConfig};
use crate::trajectory::{transform_trajectory, LocalTrajectory};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_COLLISION: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

/// Rest criteria for "stopped at the target".
const STOP_RADIUS: f64 = 0.5;
const STOP_SPEED: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub header: LogHeader,
    pub frames: Vec<FrameLogRecord>,
    pub summary: RunSummary,
}

pub fn header_for(scenario: &Scenario) -> LogHeader {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    LogHeader {
        record: "header".into(),
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        rng: RNG_ALGORITHM.into(),
        generated_at_unix_s: now,
        replan_hz: scenario.replan_hz,
        horizon_s: scenario.planner.horizon,
        duration_s: scenario.duration,
        sensor: SensorLog {
            v_offset_mps: scenario.sensor.v_offset,
            sigma_v_mps: scenario.sensor.sigma_v,
            yawrate_offset_rps: scenario.sensor.yawrate_offset,
            sigma_yawrate_rps: scenario.sensor.sigma_yawrate,
        },
        ego_length_m: scenario.ego.length,
        ego_width_m: scenario.ego.width,
        reference_lane: scenario.reference_lane,
        lanes: scenario
            .lanes
            .iter()
            .map(|l| LaneLog { index: l.index, width_m: l.width, centerline: l.centerline.iter().map(|p| [p.0, p.1]).collect() })
            .collect(),
        obstacles: scenario
            .obstacles
            .iter()
            .map(|o| ObstacleInfo { id: o.id, length_m: o.length, width_m: o.width })
            .collect(),
        stop_target: scenario.stop_target.map(|p| p.as_array()),
    }
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], wrap_angle(a[2] - b[2])]
}

/// Start state minus the previous plan at `t_k` re-expressed through the
/// true frame change.
fn start_deviation(prev: &LocalTrajectory, truth: &PoseDelta, start: &StartState) -> Option<[f64; 5]> {
    let reference = transform_trajectory(prev, truth.pose()).ok()?.state_at(start.cartesian.t)?;
    let c = start.cartesian;
    Some([
        c.pose.x - reference.pose.x,
        c.pose.y - reference.pose.y,
        wrap_angle(c.pose.theta - reference.pose.theta),
        c.v - reference.v,
        c.a - reference.a,
    ])
}

/// Stability record of the transition into the current frame.
///
/// The planned step runs from the start state the previous frame believed
/// in to its plan at `t_k`, both placed in the world through the previous
/// true pose. Whatever the true motion adds on top is `epsilon`.
fn stability_record(
    k: u64,
    target: &Pose2,
    prev_world: &WorldState,
    prev_start: &StartState,
    prev_plan: &LocalTrajectory,
    world: &WorldState,
    weights: &LyapunovWeights,
) -> Option<StabilityRecord> {
    let planned = prev_plan.state_at(world.t)?;
    let believed = analysis_state(&compose(&prev_world.ego, &prev_start.cartesian.pose), target);
    let planned_end = analysis_state(&compose(&prev_world.ego, &planned.pose), target);
    let x_prev = analysis_state(&prev_world.ego, target);
    let x_now = analysis_state(&world.ego, target);
    let planned_step = sub3(&planned_end, &believed);
    let rho = sub3(&x_now, &x_prev);
    let eps = sub3(&rho, &planned_step);
    Some(StabilityRecord::new(k, x_prev, planned_step, eps, weights))
}

fn obstacle_logs(world: &WorldState, perception: &crate::planning::PerceptionSnapshot) -> Vec<ObstacleLog> {
    perception
        .obstacles
        .iter()
        .zip(&perception.predictions)
        .map(|(o, p)| {
            let global = world.obstacles.iter().find(|s| s.id == o.id).map(|s| (s.pose, s.speed));
            let (pose, speed) = global.unwrap_or((Pose2::identity(), 0.0));
            ObstacleLog {
                id: o.id,
                global: pose.as_array(),
                local: o.footprint.center.as_array(),
                speed_mps: speed,
                predicted_local: p.poses.iter().step_by(5).map(|q| q.as_array()).collect(),
                inflated_length_m: p.length,
                inflated_width_m: p.width,
            }
        })
        .collect()
}

struct Loop<'a> {
    scenario: &'a Scenario,
    log_pool: bool,
    frames: Vec<FrameLogRecord>,
    stability: Vec<StabilityRecord>,
    ticks: Vec<SensorTick>,
    final_world: WorldState,
    final_collision: bool,
}

impl<'a> Loop<'a> {
    fn run(&mut self) -> Result<()> {
        let sc = self.scenario;
        let dt = sc.replan_period();
        let ticks_per_frame = (dt / SENSOR_PERIOD).round() as usize;
        let weights = LyapunovWeights::default();
        let mut planner = PlanningLoop::new(sc.planner.clone())?;
        let mut sensor = SensorSimulator::new(sc.sensor, sc.seed);

        let mut world = initial_world(sc);
        let mut est = PoseDelta::default();
        let mut truth = PoseDelta::default();
        let mut ticks: Vec<SensorTick> = Vec::new();
        let mut measured_speed = sc.ego_speed;
        let mut prev: Option<(WorldState, StartState)> = None;
        let mut lane_change_active = false;

        for k in 0..sc.frame_count() as u64 {
            let t_k = k as f64 * dt;
            let safety = evaluate_safety(&world, sc);
            let perception = perceive(&world, sc);
            let prev_plan = planner.previous().cloned();
            let (rec, outcome) = planner.step(k, t_k, est, measured_speed, &perception)?;

            let deviation = match (&prev_plan, rec.start.cold) {
                (Some(p), false) => start_deviation(p, &truth, &rec.start),
                _ => None,
            };
            let stability = match (&sc.stop_target, &prev, &prev_plan) {
                (Some(target), Some((pw, ps)), Some(pp)) => stability_record(k, target, pw, ps, pp, &world, &weights),
                _ => None,
            };
            if let Some(s) = stability {
                self.stability.push(s);
            }
            lane_change_active =
                rec.selected.lane_index != rec.current_lane || (lane_change_active && safety.lane_margin < 0.0);

            self.frames.push(FrameLogRecord {
                record: "frame".into(),
                k,
                t: t_k,
                ego_global: world.ego.as_array(),
                ego_v: world.ego_v,
                ego_a: world.ego_a,
                true_delta: truth.0.as_array(),
                est_delta: est.0.as_array(),
                eps_delta: estimation_error(&truth, &est).as_array(),
                sensor: std::mem::take(&mut ticks),
                start: StartLog::new(&rec.start, deviation),
                selected: SelectedLog::from_candidate(&rec.selected),
                pool_generated: rec.generated,
                pool_feasible: rec.feasible,
                pool: self.log_pool.then(|| outcome.pool.iter().map(CandidateLog::from_candidate).collect()),
                fallback_used: rec.fallback_used,
                fallback_stage: rec.fallback_stage,
                current_lane: rec.current_lane,
                lane_change_active,
                obstacles: obstacle_logs(&world, &perception),
                stability,
                collision: safety.collision,
                lane_margin_m: safety.lane_margin,
                lane_index: safety.lane_index,
            });

            let mut next = step_world(&world, sc, &outcome.selected.points, dt)?;
            next.t = (k + 1) as f64 * dt;
            truth = true_delta(&world, &next);
            let profile = profile_reaching(truth.pose(), t_k, SENSOR_PERIOD, ticks_per_frame)?;
            let readings = sensor.sample(&profile)?;
            est = dead_reckon_wheel(&readings, SENSOR_PERIOD)?;
            measured_speed = readings.last().map_or(measured_speed, |r| r.v_m);
            ticks = profile
                .iter()
                .zip(&readings)
                .map(|(p, r)| SensorTick { t: p.t, v: p.v, yawrate: p.yawrate, v_m: r.v_m, yawrate_m: r.yawrate_m })
                .collect();
            self.ticks.extend(ticks.iter().copied());
            prev = Some((world, rec.start));
            world = next;
            self.final_world = world.clone();
        }
        self.final_collision = evaluate_safety(&world, sc).collision;
        Ok(())
    }
}

fn stop_summary(frames: &[FrameLogRecord], final_world: &WorldState, target: &Pose2) -> StopSummary {
    let dist = |p: &[f64; 3]| (p[0] - target.x).hypot(p[1] - target.y);
    let reached = frames
        .iter()
        .position(|f| dist(&f.ego_global) < STOP_RADIUS && f.ego_v.abs() < STOP_SPEED);
    let (mut hold_max, mut first, mut second) = (None, None, None);
    if let Some(r) = reached {
        let hold: Vec<f64> = frames[r..].iter().map(|f| dist(&f.ego_global)).collect();
        let half = hold.len() / 2;
        let max = |v: &[f64]| v.iter().copied().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        hold_max = max(&hold);
        first = max(&hold[..half]);
        second = max(&hold[half..]);
    }
    StopSummary {
        target: target.as_array(),
        final_deviation_m: dist(&final_world.ego.as_array()),
        reached_frame: reached.map(|r| frames[r].k),
        hold_max_deviation_m: hold_max,
        hold_first_half_max_m: first,
        hold_second_half_max_m: second,
    }
}

fn lane_sequence(frames: &[FrameLogRecord]) -> Vec<usize> {
    let mut seq: Vec<usize> = Vec::new();
    for f in frames {
        if seq.last() != Some(&f.lane_index) {
            seq.push(f.lane_index);
        }
    }
    seq
}

fn summarize(sc: &Scenario, lp: &Loop, fault: Option<String>) -> RunSummary {
    let frames = &lp.frames;
    let collision_frame = frames.iter().find(|f| f.collision);
    let collision = collision_frame.is_some() || lp.final_collision;
    let first_collision_t = collision_frame.map(|f| f.t).or(lp.final_collision.then_some(lp.final_world.t));
    let margins = frames.iter().map(|f| f.lane_margin_m);
    let outside = frames.iter().filter(|f| !f.lane_change_active).map(|f| f.lane_margin_m);
    let min_outside = outside.fold(f64::INFINITY, f64::min);
    let max_start_deviation = frames
        .iter()
        .filter_map(|f| f.start.deviation)
        .map(|d| d.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .reduce(f64::max);
    let eps_rows: Vec<[f64; 3]> = frames.iter().skip(1).map(|f| f.eps_delta).collect();
    let exit_code = if fault.is_some() {
        EXIT_FAULT
    } else if collision {
        EXIT_COLLISION
    } else {
        EXIT_CLEAN
    };
    RunSummary {
        record: "summary".into(),
        schema_version: SCHEMA_VERSION,
        scenario: sc.name.clone(),
        seed: sc.seed,
        frames: frames.len(),
        completed: fault.is_none(),
        fault,
        collision,
        first_collision_t,
        min_lane_margin_m: margins.fold(f64::INFINITY, f64::min),
        min_lane_margin_outside_changes_m: min_outside,
        lane_crossing_outside_changes: min_outside < 0.0,
        lane_sequence: lane_sequence(frames),
        fallback_frames: frames.iter().filter(|f| f.fallback_stage != FallbackStage::None).count(),
        emergency_frames: frames.iter().filter(|f| f.fallback_used).count(),
        cold_starts: frames.iter().filter(|f| f.start.cold).count(),
        max_start_deviation,
        final_pose: lp.final_world.ego.as_array(),
        stop: sc.stop_target.map(|t| stop_summary(frames, &lp.final_world, &t)),
        stability: if lp.stability.is_empty() { None } else { analyze_trace(&lp.stability).ok() },
        measurement_error_v: Stats::of(&lp.ticks.iter().map(|t| t.v_m - t.v).collect::<Vec<_>>()),
        measurement_error_yawrate: Stats::of(&lp.ticks.iter().map(|t| t.yawrate_m - t.yawrate).collect::<Vec<_>>()),
        eps_delta: Stats3::of(&eps_rows),
        eps_stability: if lp.stability.is_empty() {
            None
        } else {
            Some(Stats3::of(&lp.stability.iter().map(|r| r.epsilon).collect::<Vec<_>>()))
        },
        exit_code,
    }
}

/// Runs a scenario in memory. Faults end the run early and are reported in
/// the summary rather than returned.
pub fn simulate(scenario: &Scenario, log_pool: bool) -> RunOutput {
    let mut lp = Loop {
        scenario,
        log_pool,
        frames: Vec::new(),
        stability: Vec::new(),
        ticks: Vec::new(),
        final_world: initial_world(scenario),
        final_collision: false,
    };
    let fault = lp.run().err().map(|e| e.to_string());
    let summary = summarize(scenario, &lp, fault);
    RunOutput { header: header_for(scenario), frames: lp.frames, summary }
}

fn write_jsonl<H: Serialize, R: Serialize>(path: &Path, header: &H, rows: &[R]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", serde_json::to_string(header)?)?;
    for r in rows {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("frames.jsonl"), &out.header, &out.frames)?;
    write_json(&dir.join("summary.json"), &out.summary)
}

/// Loads, runs and writes `frames.jsonl` and `summary.json` into the output
/// directory.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let scenario = config.load()?;
    let out = simulate(&scenario, config.log_pool);
    write_outputs(&config.output_dir, &out)?;
    Ok(out.summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ToyHeader {
    record: &'static str,
    schema_version: u32,
    rng: &'static str,
    generated_at_unix_s: u64,
    config: ToyOrbitConfig,
}

/// Runs the synthetic orbit and writes `toy_orbit.jsonl` and `summary.json`.
pub fn run_toy_orbit(cfg: &ToyOrbitConfig, dir: &Path) -> Result<StabilityBounds> {
    let weights = LyapunovWeights::default();
    let records = toy_orbit_sim(cfg, &weights)?;
    let bounds = analyze_trace(&records)?;
    fs::create_dir_all(dir)?;
    let header = ToyHeader {
        record: "header",
        schema_version: SCHEMA_VERSION,
        rng: RNG_ALGORITHM,
        generated_at_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config: *cfg,
    };
    write_jsonl(&dir.join("toy_orbit.jsonl"), &header, &records)?;
    write_json(&dir.join("summary.json"), &bounds)?;
    Ok(bounds)
}

