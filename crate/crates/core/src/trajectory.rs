//! Prescribed C¹ position paths `t ↦ (f(t), g(t))` on `[0, T]`.

use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("a waypoint spline needs at least two waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint times must start at 0 and increase strictly")]
    WaypointTimes,
    #[error("{waypoints} waypoints but {times} times")]
    WaypointCount { waypoints: usize, times: usize },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

pub trait Trajectory {
    fn position(&self, t: f64) -> Vector2<f64>;

    /// Horizon `T` (s).
    fn horizon(&self) -> f64;

    /// `(f′, g′)`; central differences with step `1e-6·T` unless overridden.
    fn velocity(&self, t: f64) -> Vector2<f64> {
        let h = 1e-6 * self.horizon().max(f64::MIN_POSITIVE);
        (self.position(t + h) - self.position(t - h)) / (2.0 * h)
    }
}

/// Straight line from `start` along `heading` at constant `speed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub start_um: [f64; 2],
    pub heading_rad: f64,
    pub speed_um_s: f64,
    pub duration_s: f64,
}

impl Trajectory for Line {
    fn position(&self, t: f64) -> Vector2<f64> {
        Vector2::from(self.start_um) + self.direction() * (self.speed_um_s * t)
    }
    fn horizon(&self) -> f64 {
        self.duration_s
    }
    fn velocity(&self, _t: f64) -> Vector2<f64> {
        self.direction() * self.speed_um_s
    }
}

impl Line {
    fn direction(&self) -> Vector2<f64> {
        let (s, c) = self.heading_rad.sin_cos();
        Vector2::new(c, s)
    }
}

/// `center + r (cos(φ₀ + ωt), sin(φ₀ + ωt))` for `turns` revolutions.
/// A negative `angular_rate` runs clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circle {
    pub center_um: [f64; 2],
    pub radius_um: f64,
    pub angular_rate_rad_s: f64,
    pub turns: f64,
    pub start_angle_rad: f64,
}

impl Circle {
    /// Circle through `start` whose initial velocity points along `heading`.
    pub fn through(
        start: [f64; 2],
        heading: f64,
        radius: f64,
        angular_rate: f64,
        turns: f64,
    ) -> Self {
        // Center lies to the left of the heading for counterclockwise motion.
        let side = if angular_rate >= 0.0 { 1.0 } else { -1.0 };
        let to_center = heading + side * std::f64::consts::FRAC_PI_2;
        let center = [
            start[0] + radius * to_center.cos(),
            start[1] + radius * to_center.sin(),
        ];
        Self {
            center_um: center,
            radius_um: radius,
            angular_rate_rad_s: angular_rate,
            turns,
            start_angle_rad: to_center + std::f64::consts::PI,
        }
    }
}

impl Trajectory for Circle {
    fn position(&self, t: f64) -> Vector2<f64> {
        let phi = self.start_angle_rad + self.angular_rate_rad_s * t;
        Vector2::from(self.center_um) + Vector2::new(phi.cos(), phi.sin()) * self.radius_um
    }
    fn horizon(&self) -> f64 {
        TAU * self.turns / self.angular_rate_rad_s.abs()
    }
    fn velocity(&self, t: f64) -> Vector2<f64> {
        let phi = self.start_angle_rad + self.angular_rate_rad_s * t;
        Vector2::new(-phi.sin(), phi.cos()) * (self.radius_um * self.angular_rate_rad_s)
    }
}

/// Stay at `point` for `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constant {
    pub point_um: [f64; 2],
    pub duration_s: f64,
}

impl Trajectory for Constant {
    fn position(&self, _t: f64) -> Vector2<f64> {
        Vector2::from(self.point_um)
    }
    fn horizon(&self) -> f64 {
        self.duration_s
    }
    fn velocity(&self, _t: f64) -> Vector2<f64> {
        Vector2::zeros()
    }
}

/// Cubic spline through timed waypoints with clamped end velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSpline {
    times: Vec<f64>,
    points: Vec<Vector2<f64>>,
    slopes: Vec<Vector2<f64>>,
}

impl WaypointSpline {
    pub fn new(
        waypoints: &[[f64; 2]],
        times: &[f64],
        start_velocity: [f64; 2],
        end_velocity: [f64; 2],
    ) -> Result<Self, TrajectoryError> {
        let n = waypoints.len();
        if n < 2 {
            return Err(TrajectoryError::TooFewWaypoints(n));
        }
        if times.len() != n {
            return Err(TrajectoryError::WaypointCount {
                waypoints: n,
                times: times.len(),
            });
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0] && w[1].is_finite())) {
            return Err(TrajectoryError::WaypointTimes);
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(TrajectoryError::NonFinite("waypoints"));
        }
        let points: Vec<Vector2<f64>> = waypoints.iter().map(|&p| Vector2::from(p)).collect();
        let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();

        // Slopes mᵢ from C² continuity at interior knots (tridiagonal system).
        let mut slopes = vec![Vector2::zeros(); n];
        slopes[0] = Vector2::from(start_velocity);
        slopes[n - 1] = Vector2::from(end_velocity);
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut lower = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![Vector2::zeros(); m];
            for k in 0..m {
                let i = k + 1;
                lower[k] = h[i];
                diag[k] = 2.0 * (h[i - 1] + h[i]);
                upper[k] = h[i - 1];
                rhs[k] = ((points[i] - points[i - 1]) * (h[i] / h[i - 1])
                    + (points[i + 1] - points[i]) * (h[i - 1] / h[i]))
                    * 3.0;
            }
            rhs[0] -= slopes[0] * lower[0];
            rhs[m - 1] -= slopes[n - 1] * upper[m - 1];
            // Thomas algorithm; the system is strictly diagonally dominant.
            for k in 1..m {
                let w = lower[k] / diag[k - 1];
                diag[k] -= w * upper[k - 1];
                let prev = rhs[k - 1];
                rhs[k] -= prev * w;
            }
            slopes[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                slopes[k + 1] = (rhs[k] - slopes[k + 2] * upper[k]) / diag[k];
            }
        }
        Ok(Self {
            times: times.to_vec(),
            points,
            slopes,
        })
    }

    fn segment(&self, t: f64) -> (usize, f64, f64) {
        let last = self.times.len() - 2;
        let i = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        };
        let h = self.times[i + 1] - self.times[i];
        (i, h, (t - self.times[i]) / h)
    }
}

impl Trajectory for WaypointSpline {
    fn position(&self, t: f64) -> Vector2<f64> {
        let (i, h, s) = self.segment(t);
        let (s2, s3) = (s * s, s * s * s);
        self.points[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + self.slopes[i] * ((s3 - 2.0 * s2 + s) * h)
            + self.points[i + 1] * (-2.0 * s3 + 3.0 * s2)
            + self.slopes[i + 1] * ((s3 - s2) * h)
    }
    fn horizon(&self) -> f64 {
        *self.times.last().expect("at least two knots")
    }
    fn velocity(&self, t: f64) -> Vector2<f64> {
        let (i, h, s) = self.segment(t);
        let s2 = s * s;
        (self.points[i] * (6.0 * s2 - 6.0 * s) + self.points[i + 1] * (6.0 * s - 6.0 * s2)) / h
            + self.slopes[i] * (3.0 * s2 - 4.0 * s + 1.0)
            + self.slopes[i + 1] * (3.0 * s2 - 2.0 * s)
    }
}
