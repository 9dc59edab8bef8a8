//! Cartesian <-> Frenet state conversion.
//!
//! Frenet states carry time derivatives. The arc-length derivatives `d'`
//! and `d''` needed for heading and curvature are recovered by dividing by
//! `s_dot`, which is regularized below [`LOW_SPEED`] so a vehicle at rest
//! keeps a finite heading.

use serde::{Deserialize, Serialize};

use super::reference::ReferenceLine;
use crate::error::{Error, Result};
use crate::se2::{wrap_angle, Pose2};

/// Longitudinal speed (m/s) below which lateral arc-length derivatives are
/// faded out.
pub const LOW_SPEED: f64 = 1.0;

const SINGULAR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
}

impl FrenetState {
    pub fn as_array(&self) -> [f64; 6] {
        [self.s, self.s_dot, self.s_ddot, self.d, self.d_dot, self.d_ddot]
    }

    fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Cartesian mirror of a Frenet state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub pose: Pose2,
    pub v: f64,
    pub a: f64,
    pub curvature: f64,
}

fn one_minus_kd(kappa: f64, d: f64) -> Result<f64> {
    let g = 1.0 - kappa * d;
    if g < SINGULAR {
        return Err(Error::Conversion(format!(
            "offset {d:.3} m is at or beyond the reference curvature center"
        )));
    }
    Ok(g)
}

/// Frenet state of a vehicle at `pose` moving with signed speed `v`,
/// acceleration `a` and path curvature `curvature`.
pub fn cartesian_to_frenet(pose: &Pose2, v: f64, a: f64, curvature: f64, reference: &ReferenceLine) -> Result<FrenetState> {
    let (s, d) = reference.project(pose.x, pose.y)?;
    let r = reference.query(s);
    let g = one_minus_kd(r.kappa, d)?;
    let dtheta = wrap_angle(pose.theta - r.theta);
    let (sin_t, cos_t) = dtheta.sin_cos();
    if cos_t < SINGULAR {
        return Err(Error::Conversion("heading is perpendicular to or against the reference line".into()));
    }
    let tan_t = sin_t / cos_t;

    let d1 = g * tan_t;
    let kappa_term = r.dkappa * d + r.kappa * d1;
    let d2 = -kappa_term * tan_t + g / (cos_t * cos_t) * (curvature * g / cos_t - r.kappa);

    let s_dot = v * cos_t / g;
    let dtheta1 = g / cos_t * curvature - r.kappa;
    let s_ddot = (a * cos_t - s_dot * s_dot * (d1 * dtheta1 - kappa_term)) / g;

    let out = FrenetState {
        s,
        s_dot,
        s_ddot,
        d,
        d_dot: d1 * s_dot,
        d_ddot: d2 * s_dot * s_dot + d1 * s_ddot,
    };
    if !out.is_finite() {
        return Err(Error::Conversion("non-finite frenet state".into()));
    }
    Ok(out)
}

/// Arc-length derivatives `(d', d'')` from time derivatives.
pub fn lateral_arc_derivatives(state: &FrenetState) -> (f64, f64) {
    let sd2 = state.s_dot * state.s_dot;
    let fade = (sd2 / (LOW_SPEED * LOW_SPEED)).min(1.0);
    let inv = if fade < 1.0 { 1.0 / (LOW_SPEED * LOW_SPEED) } else { 1.0 / sd2 };
    let d1 = state.d_dot * state.s_dot * inv;
    let d2 = (state.d_ddot - d1 * state.s_ddot) * inv * fade;
    (d1, d2)
}

pub fn frenet_to_cartesian(state: &FrenetState, reference: &ReferenceLine) -> Result<CartesianState> {
    if !state.is_finite() {
        return Err(Error::Conversion("non-finite frenet state".into()));
    }
    let r = reference.query(state.s);
    let d = state.d;
    let g = one_minus_kd(r.kappa, d)?;
    let (d1, d2) = lateral_arc_derivatives(state);

    let (nx, ny) = r.normal();
    let dtheta = d1.atan2(g);
    let (sin_t, cos_t) = dtheta.sin_cos();
    let tan_t = sin_t / cos_t;
    let kappa_term = r.dkappa * d + r.kappa * d1;
    let curvature = ((d2 + kappa_term * tan_t) * cos_t * cos_t / g + r.kappa) * cos_t / g;

    let v = state.s_dot * g / cos_t;
    let dtheta1 = g / cos_t * curvature - r.kappa;
    let a = state.s_ddot * g / cos_t + state.s_dot * state.s_dot / cos_t * (d1 * dtheta1 - kappa_term);

    Ok(CartesianState {
        pose: Pose2::new(r.x + d * nx, r.y + d * ny, r.theta + dtheta),
        v,
        a,
        curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn straight() -> ReferenceLine {
        ReferenceLine::new((0..=50).map(|i| (i as f64 * 2.0, 0.0)).collect()).unwrap()
    }

    #[test]
    fn aligned_on_straight_line() {
        let f = cartesian_to_frenet(&Pose2::new(5.0, 0.0, 0.0), 10.0, 0.0, 0.0, &straight()).unwrap();
        assert!((f.s - 5.0).abs() < 1e-12 && (f.s_dot - 10.0).abs() < 1e-12);
        assert!(f.d.abs() < 1e-12 && f.d_dot.abs() < 1e-12);
    }

    #[test]
    fn pure_left_offset() {
        let f = cartesian_to_frenet(&Pose2::new(5.0, 1.0, 0.0), 7.0, 0.0, 0.0, &straight()).unwrap();
        assert!((f.d - 1.0).abs() < 1e-12 && (f.s_dot - 7.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let line = straight();
        let c = frenet_to_cartesian(&FrenetState { s_dot: 10.0, ..Default::default() }, &line).unwrap();
        assert!(c.pose.x.abs() < 1e-12 && c.pose.y.abs() < 1e-12 && c.pose.theta.abs() < 1e-12);
        assert!((c.v - 10.0).abs() < 1e-12);
        let c = frenet_to_cartesian(&FrenetState { s: 3.0, d: 2.0, ..Default::default() }, &line).unwrap();
        assert!((c.pose.x - 3.0).abs() < 1e-12 && (c.pose.y - 2.0).abs() < 1e-12 && c.pose.theta == 0.0);
    }

    #[test]
    fn singular_offset_rejected() {
        // circle of radius 20, left turn: center lies at d = +20
        let pts = (0..=20)
            .map(|i| {
                let a = 0.05 * i as f64;
                (20.0 * a.sin(), 20.0 * (1.0 - a.cos()))
            })
            .collect();
        let line = ReferenceLine::new(pts).unwrap();
        let state = FrenetState { s: 10.0, d: 20.0, ..Default::default() };
        assert!(matches!(frenet_to_cartesian(&state, &line), Err(Error::Conversion(_))));
    }

    #[test]
    fn standstill_has_finite_heading() {
        let state = FrenetState { s: 4.0, d: 0.5, d_dot: 0.0, ..Default::default() };
        let c = frenet_to_cartesian(&state, &straight()).unwrap();
        assert_eq!(c.pose.theta, 0.0);
        assert_eq!(c.v, 0.0);
    }

    #[test]
    fn round_trip_on_curved_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts = (0..=60)
            .map(|i| {
                let x = i as f64 * 2.0;
                (x, 8.0 * (x / 25.0).sin())
            })
            .collect();
        let line = ReferenceLine::new(pts).unwrap();
        for _ in 0..1000 {
            let s = rng.random_range(5.0..110.0);
            let r = line.query(s);
            let d_max = if r.kappa.abs() > 1e-9 { (0.5 / r.kappa.abs()).min(4.0) } else { 4.0 };
            let d = rng.random_range(-d_max..d_max);
            let (x, y) = line.point_at(s, d);
            let pose = Pose2::new(x, y, r.theta + rng.random_range(-0.5..0.5));
            let v = rng.random_range(2.0..20.0);
            let a = rng.random_range(-3.0..3.0);
            let k = rng.random_range(-0.05..0.05);
            let f = cartesian_to_frenet(&pose, v, a, k, &line).unwrap();
            let c = frenet_to_cartesian(&f, &line).unwrap();
            assert!((c.pose.x - pose.x).abs() < 1e-6);
            assert!((c.pose.y - pose.y).abs() < 1e-6);
            assert!(wrap_angle(c.pose.theta - pose.theta).abs() < 1e-6);
            assert!((c.v - v).abs() < 1e-6);
            assert!((c.a - a).abs() < 1e-6);
            assert!((c.curvature - k).abs() < 1e-6);
        }
    }
}
