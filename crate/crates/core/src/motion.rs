//! Speed / yaw-rate measurement models and inter-frame dead reckoning.
//!
//! Sensors produce readings on a fixed tick. Each reading is held constant
//! over its tick and integrated as an exact constant-twist arc, so the only
//! source of estimation error is the measurement error itself.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se2::{wrap_angle, Pose2};

/// Default wheel-speed / yaw-rate sensor rate.
pub const SENSOR_PERIOD: f64 = 0.01;

/// Below this yaw rate (rad/s) an arc step is integrated as a straight line.
const STRAIGHT_YAWRATE: f64 = 1e-9;

/// ChaCha stream carrying sensor noise.
pub const SENSOR_STREAM: u64 = 0;

/// Name of the generator used for all sampled noise; written to run logs.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), StandardNormal ziggurat (rand_distr 0.5)";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorErrorModel {
    /// m/s
    pub v_offset: f64,
    /// m/s
    pub sigma_v: f64,
    /// rad/s
    pub yawrate_offset: f64,
    /// rad/s
    pub sigma_yawrate: f64,
}

impl SensorErrorModel {
    pub fn new(v_offset: f64, sigma_v: f64, yawrate_offset: f64, sigma_yawrate: f64) -> Result<Self> {
        let m = Self {
            v_offset,
            sigma_v,
            yawrate_offset,
            sigma_yawrate,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a model from yaw-rate parameters given in degrees per second.
    pub fn from_degrees(v_offset: f64, sigma_v: f64, yawrate_offset_dps: f64, sigma_yawrate_dps: f64) -> Result<Self> {
        Self::new(
            v_offset,
            sigma_v,
            yawrate_offset_dps.to_radians(),
            sigma_yawrate_dps.to_radians(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_offset, self.sigma_v, self.yawrate_offset, self.sigma_yawrate];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("sensor error parameters must be finite"));
        }
        if self.sigma_v < 0.0 || self.sigma_yawrate < 0.0 {
            return Err(Error::validation("sensor standard deviations must be nonnegative"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        *self == Self::default()
    }
}

/// True speed and yaw rate held over one sensor tick starting at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSample {
    pub t: f64,
    pub v: f64,
    pub yawrate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    pub t: f64,
    pub v_m: f64,
    pub yawrate_m: f64,
}

/// Estimated (or true) pose change between consecutive planning frames,
/// expressed in the earlier frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseDelta(pub Pose2);

impl PoseDelta {
    pub fn pose(&self) -> &Pose2 {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimationError {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl EstimationError {
    pub fn as_array(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dtheta]
    }
}

/// Seeded measurement generator. One instance is owned by a simulation run.
#[derive(Debug, Clone)]
pub struct SensorSimulator {
    model: SensorErrorModel,
    rng: ChaCha8Rng,
}

impl SensorSimulator {
    pub fn new(model: SensorErrorModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SENSOR_STREAM);
        Self { model, rng }
    }

    pub fn from_rng(model: SensorErrorModel, rng: ChaCha8Rng) -> Self {
        Self { model, rng }
    }

    pub fn model(&self) -> &SensorErrorModel {
        &self.model
    }

    pub fn measure(&mut self, truth: &TruthSample) -> MotionSample {
        // both draws are taken even for zero sigma so the stream layout does
        // not depend on the model
        let zv: f64 = StandardNormal.sample(&mut self.rng);
        let zw: f64 = StandardNormal.sample(&mut self.rng);
        MotionSample {
            t: truth.t,
            v_m: self.model.v_offset + (truth.v + self.model.sigma_v * zv),
            yawrate_m: self.model.yawrate_offset + (truth.yawrate + self.model.sigma_yawrate * zw),
        }
    }

    pub fn sample(&mut self, profile: &[TruthSample]) -> Result<Vec<MotionSample>> {
        check_increasing(profile.iter().map(|s| s.t))?;
        Ok(profile.iter().map(|s| self.measure(s)).collect())
    }
}

fn check_increasing(times: impl Iterator<Item = f64>) -> Result<()> {
    let mut last = f64::NEG_INFINITY;
    for t in times {
        if t <= last || !t.is_finite() {
            return Err(Error::validation("sample times must be finite and strictly increasing"));
        }
        last = t;
    }
    Ok(())
}

/// Draws `v_m = v_offset + N(v, sigma_v)` and the analogous yaw-rate reading
/// for every tick of `true_profile`.
pub fn sample_measurements(true_profile: &[TruthSample], model: &SensorErrorModel, rng_seed: u64) -> Result<Vec<MotionSample>> {
    model.validate()?;
    SensorSimulator::new(*model, rng_seed).sample(true_profile)
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Advances `pose` along a constant (speed, yaw rate) arc for `dt` seconds.
pub fn arc_step(pose: &Pose2, v: f64, yawrate: f64, dt: f64) -> Pose2 {
    let dtheta = yawrate * dt;
    let (chord, mid) = if yawrate.abs() < STRAIGHT_YAWRATE {
        (v * dt, pose.theta)
    } else {
        (v * dt * sinc(0.5 * dtheta), pose.theta + 0.5 * dtheta)
    };
    Pose2::new(pose.x + chord * mid.cos(), pose.y + chord * mid.sin(), pose.theta + dtheta)
}

/// Integrates wheel-speed and yaw-rate readings held over ticks of length
/// `period` into the pose change of the interval.
pub fn dead_reckon_wheel(samples: &[MotionSample], period: f64) -> Result<PoseDelta> {
    if samples.is_empty() {
        return Err(Error::validation("dead reckoning needs at least one sample"));
    }
    if !(period > 0.0) {
        return Err(Error::validation("sensor period must be positive"));
    }
    check_increasing(samples.iter().map(|s| s.t))?;
    let pose = samples
        .iter()
        .fold(Pose2::identity(), |p, s| arc_step(&p, s.v_m, s.yawrate_m, period));
    Ok(PoseDelta(pose))
}

/// Double-integrates body-frame accelerations rotated by the running
/// heading estimate, starting from body-frame velocity `v0`.
///
/// `accel` holds `(t, a_x, a_y)` and `yawrate` holds `(t, yaw rate)` on the
/// same grid of ticks of length `period`.
pub fn dead_reckon_imu(accel: &[(f64, f64, f64)], yawrate: &[(f64, f64)], v0: (f64, f64), period: f64) -> Result<PoseDelta> {
    if accel.is_empty() {
        return Err(Error::validation("dead reckoning needs at least one sample"));
    }
    if accel.len() != yawrate.len() || accel.iter().zip(yawrate).any(|(a, w)| (a.0 - w.0).abs() > 1e-9) {
        return Err(Error::validation("acceleration and yaw-rate grids are misaligned"));
    }
    if !(period > 0.0) {
        return Err(Error::validation("sensor period must be positive"));
    }
    check_increasing(accel.iter().map(|a| a.0))?;

    let (mut x, mut y, mut theta) = (0.0, 0.0, 0.0);
    let (mut vx, mut vy) = v0;
    for (&(_, ax, ay), &(_, w)) in accel.iter().zip(yawrate) {
        let mid = theta + 0.5 * w * period;
        let (s, c) = mid.sin_cos();
        let awx = c * ax - s * ay;
        let awy = s * ax + c * ay;
        x += vx * period + 0.5 * awx * period * period;
        y += vy * period + 0.5 * awy * period * period;
        vx += awx * period;
        vy += awy * period;
        theta += w * period;
    }
    Ok(PoseDelta(Pose2::new(x, y, theta)))
}

/// Componentwise `true - estimate`, heading wrapped.
pub fn estimation_error(true_delta: &PoseDelta, est_delta: &PoseDelta) -> EstimationError {
    let (t, e) = (true_delta.0, est_delta.0);
    EstimationError {
        dx: t.x - e.x,
        dy: t.y - e.y,
        dtheta: wrap_angle(t.theta - e.theta),
    }
}

/// A piecewise-constant (speed, yaw rate) profile on `ticks` sensor ticks
/// that carries a unicycle from the origin exactly to `delta`.
///
/// The motion is two circular arcs of equal chord length, symmetric about
/// the overall chord, with the first half of the ticks on the first arc.
/// Reversing motion (delta behind the origin) uses negative speed.
pub fn profile_reaching(delta: &Pose2, t0: f64, period: f64, ticks: usize) -> Result<Vec<TruthSample>> {
    if ticks < 2 {
        return Err(Error::validation("an exact two-arc profile needs at least two ticks"));
    }
    let dist = delta.translation_norm();
    let dir = if delta.x < 0.0 { -1.0 } else { 1.0 };
    let bearing = if dist == 0.0 { 0.0 } else { (dir * delta.y).atan2(dir * delta.x) };
    let turn1 = 2.0 * bearing - 0.5 * delta.theta;
    let turn2 = delta.theta - turn1;
    let chord = dir * dist / (2.0 * (0.25 * delta.theta).cos());

    let n1 = ticks / 2;
    let n2 = ticks - n1;
    let arc = |turn: f64, n: usize| {
        let tau = n as f64 * period;
        (chord / (tau * sinc(0.5 * turn)), turn / tau)
    };
    let (v1, w1) = arc(turn1, n1);
    let (v2, w2) = arc(turn2, n2);
    Ok((0..ticks)
        .map(|i| {
            let (v, yawrate) = if i < n1 { (v1, w1) } else { (v2, w2) };
            TruthSample {
                t: t0 + i as f64 * period,
                v,
                yawrate,
            }
        })
        .collect())
}
