use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural cubic spline over increasing knots. Outside the knot range the
/// end segments are continued linearly.
#[derive(Debug, Clone, PartialEq)]
struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// second derivative at each knot
    m: Vec<f64>,
}

impl CubicSpline {
    fn natural(knots: &[f64], values: &[f64]) -> Self {
        let n = knots.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior rows
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            m,
        }
    }

    fn segment(&self, u: f64) -> usize {
        let last = self.knots.len() - 2;
        self.knots.partition_point(|k| *k <= u).saturating_sub(1).min(last)
    }

    /// Value and first three derivatives at `u`.
    fn eval(&self, u: f64) -> [f64; 4] {
        let n = self.knots.len();
        let (u0, un) = (self.knots[0], self.knots[n - 1]);
        if u < u0 || u > un {
            let edge = if u < u0 { u0 } else { un };
            let [f, df, _, _] = self.eval(edge);
            return [f + df * (u - edge), df, 0.0, 0.0];
        }
        let i = self.segment(u);
        let h = self.knots[i + 1] - self.knots[i];
        let tau = u - self.knots[i];
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let b = (self.values[i + 1] - self.values[i]) / h - h * (2.0 * m0 + m1) / 6.0;
        let c = 0.5 * m0;
        let d = (m1 - m0) / (6.0 * h);
        [
            self.values[i] + tau * (b + tau * (c + tau * d)),
            b + tau * (2.0 * c + 3.0 * d * tau),
            2.0 * c + 6.0 * d * tau,
            6.0 * d,
        ]
    }
}

/// Geometry of the reference line at one arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub kappa: f64,
    pub dkappa: f64,
}

impl RefPoint {
    /// Left-pointing unit normal.
    pub fn normal(&self) -> (f64, f64) {
        (-self.theta.sin(), self.theta.cos())
    }
}

/// Smooth centerline through waypoints, parametrized by arc length.
///
/// Knots are placed at the arc length of each waypoint, refined from the
/// chord lengths by re-measuring the interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLine {
    waypoints: Vec<(f64, f64)>,
    sx: CubicSpline,
    sy: CubicSpline,
}

const KNOT_REFINEMENTS: usize = 3;

// 5-point Gauss-Legendre nodes and weights on [-1, 1]
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683,
    0.538_469_310_105_683,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
    0.236_926_885_056_189,
];

impl ReferenceLine {
    pub fn new(waypoints: Vec<(f64, f64)>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::validation("reference line needs at least two waypoints"));
        }
        if waypoints.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::validation("reference line waypoints must be finite"));
        }
        let mut knots = vec![0.0];
        for w in waypoints.windows(2) {
            let step = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            if step < 1e-6 {
                return Err(Error::validation("reference line waypoints must be distinct"));
            }
            knots.push(knots[knots.len() - 1] + step);
        }
        let xs: Vec<f64> = waypoints.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = waypoints.iter().map(|p| p.1).collect();
        let mut line = Self {
            sx: CubicSpline::natural(&knots, &xs),
            sy: CubicSpline::natural(&knots, &ys),
            waypoints,
        };
        for _ in 0..KNOT_REFINEMENTS {
            let mut refined = vec![0.0];
            for w in line.sx.knots.windows(2) {
                let len = line.segment_length(w[0], w[1]);
                refined.push(refined[refined.len() - 1] + len);
            }
            line.sx = CubicSpline::natural(&refined, &xs);
            line.sy = CubicSpline::natural(&refined, &ys);
        }
        Ok(line)
    }

    fn segment_length(&self, u0: f64, u1: f64) -> f64 {
        let half = 0.5 * (u1 - u0);
        let mid = 0.5 * (u0 + u1);
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(n, w)| {
                let u = mid + half * n;
                w * self.sx.eval(u)[1].hypot(self.sy.eval(u)[1])
            })
            .sum::<f64>()
            * half
    }

    pub fn waypoints(&self) -> &[(f64, f64)] {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        self.sx.knots[self.sx.knots.len() - 1]
    }

    /// Geometry at arc length `s`; beyond either end the line continues
    /// straight along the end tangent.
    pub fn query(&self, s: f64) -> RefPoint {
        let [x, dx, ddx, dddx] = self.sx.eval(s);
        let [y, dy, ddy, dddy] = self.sy.eval(s);
        let speed = dx.hypot(dy);
        let num = dx * ddy - dy * ddx;
        let kappa = num / speed.powi(3);
        let dnum = dx * dddy - dy * dddx;
        let dspeed = (dx * ddx + dy * ddy) / speed;
        let dkappa = (dnum / speed.powi(3) - 3.0 * num * dspeed / speed.powi(4)) / speed;
        RefPoint {
            s,
            x,
            y,
            theta: dy.atan2(dx),
            kappa,
            dkappa,
        }
    }

    /// Cartesian point at `(s, d)`.
    pub fn point_at(&self, s: f64, d: f64) -> (f64, f64) {
        let r = self.query(s);
        let (nx, ny) = r.normal();
        (r.x + d * nx, r.y + d * ny)
    }

    /// Nearest-point projection returning `(s, d)`, `d` positive to the left.
    pub fn project(&self, px: f64, py: f64) -> Result<(f64, f64)> {
        let (s, d, overshoot) = self.project_unchecked(px, py);
        if overshoot > 1e-6 {
            return Err(Error::Conversion(format!(
                "point ({px:.3}, {py:.3}) projects {overshoot:.3} m outside the reference line"
            )));
        }
        Ok((s, d))
    }

    /// Projection that continues the line straight past its ends. Also
    /// returns how far past the nearer end the foot point lies.
    pub fn project_unchecked(&self, px: f64, py: f64) -> (f64, f64, f64) {
        let knots = &self.sx.knots;
        let mut best = (f64::INFINITY, 0.0);
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let (ex, ey) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let alpha = (((px - w[0].0) * ex + (py - w[0].1) * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
            let dist = (px - w[0].0 - alpha * ex).hypot(py - w[0].1 - alpha * ey);
            if dist < best.0 {
                best = (dist, knots[i] + alpha * (knots[i + 1] - knots[i]));
            }
        }
        let mut u = best.1;
        for _ in 0..30 {
            let [x, dx, ddx, _] = self.sx.eval(u);
            let [y, dy, ddy, _] = self.sy.eval(u);
            let (rx, ry) = (x - px, y - py);
            let g = rx * dx + ry * dy;
            let dg = dx * dx + dy * dy + rx * ddx + ry * ddy;
            if dg <= 0.0 {
                break;
            }
            let step = g / dg;
            u -= step;
            if step.abs() < 1e-12 {
                break;
            }
        }
        let len = self.length();
        let overshoot = if u < 0.0 { -u } else if u > len { u - len } else { 0.0 };
        let r = self.query(u);
        let (nx, ny) = r.normal();
        (u, (px - r.x) * nx + (py - r.y) * ny, overshoot)
    }
}
