//! Boundary-value polynomials in time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest admissible polynomial duration, seconds.
pub const MIN_DURATION: f64 = 1e-6;

/// Polynomial with coefficients in ascending order: `c[0] + c[1] t + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `n`-th derivative at `t`.
    pub fn derivative(&self, n: usize, t: f64) -> f64 {
        let mut acc = 0.0;
        for i in (n..self.coeffs.len()).rev() {
            acc = acc * t + falling(i, n) * self.coeffs[i];
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `[p, p', p'']` at `t`.
    pub fn state(&self, t: f64) -> [f64; 3] {
        [self.derivative(0, t), self.derivative(1, t), self.derivative(2, t)]
    }

    /// Closed-form `int_0^T (p''')^2 dt`.
    pub fn jerk_squared_integral(&self, duration: f64) -> f64 {
        let jerk: Vec<f64> = (3..self.coeffs.len())
            .map(|i| falling(i, 3) * self.coeffs[i])
            .collect();
        let mut total = 0.0;
        for (m, jm) in jerk.iter().enumerate() {
            for (n, jn) in jerk.iter().enumerate() {
                let p = (m + n + 1) as i32;
                total += jm * jn * duration.powi(p) / p as f64;
            }
        }
        total
    }
}

/// `i (i-1) ... (i-n+1)`
fn falling(i: usize, n: usize) -> f64 {
    (0..n).map(|k| (i - k) as f64).product()
}

fn check_inputs(values: &[f64], duration: f64) -> Result<()> {
    if !duration.is_finite() || duration <= 0.0 {
        return Err(Error::validation(format!("polynomial duration must be positive, got {duration}")));
    }
    if duration < MIN_DURATION {
        return Err(Error::validation(format!("polynomial duration {duration} is too short to fit")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("boundary conditions must be finite"));
    }
    Ok(())
}

/// Degree-5 polynomial with position, velocity and acceleration fixed at
/// both `t = 0` and `t = T`.
pub fn fit_quintic(p0: f64, v0: f64, a0: f64, pt: f64, vt: f64, at: f64, duration: f64) -> Result<Polynomial> {
    check_inputs(&[p0, v0, a0, pt, vt, at], duration)?;
    let t = duration;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h = pt - (p0 + v0 * t + 0.5 * a0 * t2);
    let dv = vt - (v0 + a0 * t);
    let da = at - a0;
    Ok(Polynomial::new(vec![
        p0,
        v0,
        0.5 * a0,
        (10.0 * h - 4.0 * dv * t + 0.5 * da * t2) / t3,
        (-15.0 * h + 7.0 * dv * t - da * t2) / t4,
        (6.0 * h - 3.0 * dv * t + 0.5 * da * t2) / t5,
    ]))
}

/// Degree-4 polynomial with position, velocity and acceleration fixed at
/// `t = 0` and only velocity and acceleration fixed at `t = T`.
pub fn fit_quartic(s0: f64, sd0: f64, sdd0: f64, sdt: f64, sddt: f64, duration: f64) -> Result<Polynomial> {
    check_inputs(&[s0, sd0, sdd0, sdt, sddt], duration)?;
    let t = duration;
    let dv = sdt - (sd0 + sdd0 * t);
    let da = sddt - sdd0;
    Ok(Polynomial::new(vec![
        s0,
        sd0,
        0.5 * sdd0,
        (3.0 * dv - da * t) / (3.0 * t * t),
        (-2.0 * dv + da * t) / (4.0 * t * t * t),
    ]))
}
