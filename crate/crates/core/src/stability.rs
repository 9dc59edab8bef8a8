//! Lyapunov bookkeeping for the closed loop `x_k = x_{k-1} + rho_k` and
//! empirical containment analysis of its orbit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se2::{wrap_angle, Pose2};

pub type Vec3 = [f64; 3];

/// ChaCha stream used for toy-orbit disturbances; sensor noise uses stream 0.
pub const TOY_ORBIT_STREAM: u64 = 1;

fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn norm(v: &Vec3) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Diagonal weighting of the Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovWeights(Vec3);

impl Default for LyapunovWeights {
    fn default() -> Self {
        Self([1.0; 3])
    }
}

impl LyapunovWeights {
    pub fn new(w: Vec3) -> Result<Self> {
        if w.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::validation("Lyapunov weights must be positive"));
        }
        Ok(Self(w))
    }

    pub fn as_array(&self) -> Vec3 {
        self.0
    }

    /// Weighted inner product `a^T W b`.
    pub fn dot(&self, a: &Vec3, b: &Vec3) -> f64 {
        (0..3).map(|i| self.0[i] * a[i] * b[i]).sum()
    }
}

/// Ego state relative to the terminal state, heading wrapped.
pub fn analysis_state(pose: &Pose2, terminal: &Pose2) -> Vec3 {
    [pose.x - terminal.x, pose.y - terminal.y, wrap_angle(pose.theta - terminal.theta)]
}

pub fn lyapunov_value(x: &Vec3, w: &LyapunovWeights) -> f64 {
    w.dot(x, x)
}

/// `V(x + rho) - V(x)` in the factored form `(2x + rho)^T W rho`.
pub fn delta_v(x: &Vec3, rho: &Vec3, w: &LyapunovWeights) -> f64 {
    let two_x_rho = [2.0 * x[0] + rho[0], 2.0 * x[1] + rho[1], 2.0 * x[2] + rho[2]];
    w.dot(&two_x_rho, rho)
}

/// `(x^T W rho <= 0, rho^T W rho < -2 x^T W rho)`
pub fn check_convergence_condition(x: &Vec3, rho: &Vec3, w: &LyapunovWeights) -> (bool, bool) {
    let inner = w.dot(x, rho);
    (inner <= 0.0, w.dot(rho, rho) < -2.0 * inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub k: u64,
    pub x_prev: Vec3,
    pub planned_step: Vec3,
    pub epsilon: Vec3,
    pub rho: Vec3,
    #[serde(rename = "V")]
    pub v: f64,
    pub delta_v: f64,
    pub cond_inner: bool,
    pub cond_norm: bool,
}

impl StabilityRecord {
    pub fn new(k: u64, x_prev: Vec3, planned_step: Vec3, epsilon: Vec3, w: &LyapunovWeights) -> Self {
        let rho = add(&planned_step, &epsilon);
        let (cond_inner, cond_norm) = check_convergence_condition(&x_prev, &rho, w);
        Self {
            k,
            x_prev,
            planned_step,
            epsilon,
            rho,
            v: lyapunov_value(&x_prev, w),
            delta_v: delta_v(&x_prev, &rho, w),
            cond_inner,
            cond_norm,
        }
    }

    pub fn x_next(&self) -> Vec3 {
        add(&self.x_prev, &self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBounds {
    pub rho_bar: f64,
    pub eta_hat: f64,
    pub containment_radius: f64,
    /// First orbit index from which every later state lies in the ball.
    pub entry_step: Option<usize>,
    pub contained: bool,
    /// Number of records used to estimate `eta_hat` and `rho_bar`.
    pub calibration_len: usize,
    /// Fraction of records with `delta_V <= 0` among those outside the
    /// `eta_hat` ball.
    pub descent_coverage: f64,
}

/// Estimates the ball radius from the first half of the trace and checks
/// that the orbit over the second half stays inside the closed ball.
///
/// The orbit is `x_prev` of the first record followed by `x_prev + rho` of
/// every record. `eta_hat` is the largest `|x_prev|` at which `V` increased
/// during calibration; `rho_bar` is the largest calibration `|rho|`.
pub fn analyze_trace(records: &[StabilityRecord]) -> Result<StabilityBounds> {
    if records.is_empty() {
        return Err(Error::validation("cannot analyze an empty trace"));
    }
    let split = records.len().div_ceil(2);
    let calibration = &records[..split];
    let rho_bar = calibration.iter().map(|r| norm(&r.rho)).fold(0.0, f64::max);
    let eta_hat = calibration
        .iter()
        .filter(|r| r.delta_v > 0.0)
        .map(|r| norm(&r.x_prev))
        .fold(0.0, f64::max);
    let radius = eta_hat + rho_bar;

    let orbit: Vec<f64> = std::iter::once(norm(&records[0].x_prev))
        .chain(records.iter().map(|r| norm(&r.x_next())))
        .collect();
    let inside = |n: &f64| *n <= radius;
    let contained = orbit[split..].iter().all(inside);
    let entry_step = if contained {
        let last_outside = orbit.iter().rposition(|n| !inside(n));
        Some(last_outside.map_or(0, |i| i + 1))
    } else {
        None
    };

    let outside: Vec<_> = records.iter().filter(|r| norm(&r.x_prev) > eta_hat).collect();
    let descent_coverage = if outside.is_empty() {
        1.0
    } else {
        outside.iter().filter(|r| r.delta_v <= 0.0).count() as f64 / outside.len() as f64
    };

    Ok(StabilityBounds {
        rho_bar,
        eta_hat,
        containment_radius: radius,
        entry_step,
        contained,
        calibration_len: split,
        descent_coverage,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyOrbitConfig {
    pub x0: Vec3,
    pub step_gain: f64,
    pub step_cap: f64,
    pub eps_bound: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl Default for ToyOrbitConfig {
    fn default() -> Self {
        Self {
            x0: [8.0, 6.0, 0.0],
            step_gain: 0.5,
            step_cap: 0.5,
            eps_bound: 0.01,
            n_steps: 1000,
            seed: 0,
        }
    }
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec3 {
    if radius == 0.0 {
        return [0.0; 3];
    }
    loop {
        let g: Vec3 = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = norm(&g);
        if n > 1e-12 {
            let r = radius * rng.random::<f64>().cbrt();
            return g.map(|c| c * r / n);
        }
    }
}

/// Synthetic closed loop: each planned step heads straight for the origin
/// with length `min(c |x|, step_cap)` and is perturbed by a disturbance
/// drawn uniformly from the ball of radius `eps_bound`.
pub fn toy_orbit_sim(cfg: &ToyOrbitConfig, w: &LyapunovWeights) -> Result<Vec<StabilityRecord>> {
    if !(cfg.step_gain > 0.0 && cfg.step_gain <= 1.0) {
        return Err(Error::validation("step gain must lie in (0, 1]"));
    }
    if !(cfg.step_cap > 0.0) {
        return Err(Error::validation("step cap must be positive"));
    }
    if !(cfg.eps_bound >= 0.0) || !cfg.eps_bound.is_finite() {
        return Err(Error::validation("disturbance bound must be finite and nonnegative"));
    }
    if cfg.x0.iter().any(|c| !c.is_finite()) {
        return Err(Error::validation("initial state must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(TOY_ORBIT_STREAM);
    let mut x = cfg.x0;
    let mut out = Vec::with_capacity(cfg.n_steps);
    for k in 0..cfg.n_steps {
        let n = norm(&x);
        let planned = if n > 0.0 {
            let len = (cfg.step_gain * n).min(cfg.step_cap);
            x.map(|c| -len * c / n)
        } else {
            [0.0; 3]
        };
        let eps = uniform_in_ball(&mut rng, cfg.eps_bound);
        let rec = StabilityRecord::new(k as u64 + 1, x, planned, eps, w);
        x = rec.x_next();
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ID: LyapunovWeights = LyapunovWeights([1.0; 3]);

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(&[0.0; 3], &ID), 0.0);
        assert_eq!(lyapunov_value(&[3.0, 4.0, 0.0], &ID), 25.0);
        let w = LyapunovWeights::new([1.0, 1.0, 0.1]).unwrap();
        assert!((lyapunov_value(&[0.0, 0.0, 1.0], &w) - 0.1).abs() < 1e-15);
        assert!(LyapunovWeights::new([1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn delta_v_examples() {
        assert_eq!(delta_v(&[1.0, 2.0, 3.0], &[0.0; 3], &ID), 0.0);
        assert!((delta_v(&[1.0, 0.0, 0.0], &[-0.1, 0.0, 0.0], &ID) + 0.19).abs() < 1e-15);
    }

    #[test]
    fn condition_examples() {
        let x = [1.0, 0.0, 0.0];
        assert_eq!(check_convergence_condition(&x, &[-0.5, 0.0, 0.0], &ID), (true, true));
        assert!(!check_convergence_condition(&x, &[0.5, 0.0, 0.0], &ID).0);
        assert_eq!(check_convergence_condition(&x, &[-3.0, 0.0, 0.0], &ID), (true, false));
    }

    #[test]
    fn record_fields_are_consistent() {
        let r = StabilityRecord::new(4, [1.0, -2.0, 0.3], [-0.2, 0.1, 0.0], [0.01, 0.0, -0.001], &ID);
        assert_eq!(r.rho, [-0.19, 0.1, -0.001]);
        let diff = lyapunov_value(&r.x_next(), &ID) - lyapunov_value(&r.x_prev, &ID);
        assert!((r.delta_v - diff).abs() <= 1e-12 * diff.abs().max(1.0));
    }

    #[test]
    fn empty_trace_rejected() {
        assert!(analyze_trace(&[]).is_err());
    }

    #[test]
    fn resting_trace_is_contained_immediately() {
        let recs: Vec<_> = (0..10).map(|k| StabilityRecord::new(k, [0.0; 3], [0.0; 3], [0.0; 3], &ID)).collect();
        let b = analyze_trace(&recs).unwrap();
        assert_eq!((b.rho_bar, b.eta_hat), (0.0, 0.0));
        assert!(b.contained);
        assert_eq!(b.entry_step, Some(0));
    }

    #[test]
    fn noiseless_contraction_halves_each_step() {
        let cfg = ToyOrbitConfig { step_cap: 1e3, eps_bound: 0.0, n_steps: 30, ..Default::default() };
        let recs = toy_orbit_sim(&cfg, &ID).unwrap();
        for (k, r) in recs.iter().enumerate() {
            let expect = 10.0 * 0.5f64.powi(k as i32 + 1);
            assert!((norm(&r.x_next()) - expect).abs() <= 1e-12 * 10.0);
        }
        let b = analyze_trace(&recs).unwrap();
        assert!(b.contained && b.eta_hat == 0.0);
        assert!(b.entry_step.unwrap() < recs.len());
    }

    #[test]
    fn diverging_orbit_is_not_contained() {
        let mut x = [1.0, 0.0, 0.0];
        let recs: Vec<_> = (0..200)
            .map(|k| {
                let n = norm(&x);
                let r = StabilityRecord::new(k, x, x.map(|c| 0.1 * c / n), [0.0; 3], &ID);
                x = r.x_next();
                r
            })
            .collect();
        let b = analyze_trace(&recs).unwrap();
        assert!(!b.contained && b.entry_step.is_none());
    }

    #[test]
    fn toy_orbit_is_seeded() {
        let cfg = ToyOrbitConfig { n_steps: 50, seed: 3, ..Default::default() };
        assert_eq!(toy_orbit_sim(&cfg, &ID).unwrap(), toy_orbit_sim(&cfg, &ID).unwrap());
        let other = ToyOrbitConfig { seed: 4, ..cfg };
        assert_ne!(toy_orbit_sim(&cfg, &ID).unwrap(), toy_orbit_sim(&other, &ID).unwrap());
        assert!(toy_orbit_sim(&ToyOrbitConfig { step_gain: 1.5, ..cfg }, &ID).is_err());
        assert!(toy_orbit_sim(&ToyOrbitConfig { step_cap: 0.0, ..cfg }, &ID).is_err());
    }

    #[test]
    fn disturbances_stay_in_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples: Vec<_> = (0..20_000).map(|_| uniform_in_ball(&mut rng, 2.0)).collect();
        assert!(samples.iter().all(|s| norm(s) <= 2.0));
        // uniform in volume: P(|e| < 1) = 1/8
        let inner = samples.iter().filter(|s| norm(s) < 1.0).count() as f64 / samples.len() as f64;
        assert!((inner - 0.125).abs() < 0.01);
    }
}
