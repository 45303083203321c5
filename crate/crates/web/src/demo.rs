use std::f64::consts::PI;

use swimmer_core::controllability::{kalman_submatrix_determinant, DEFAULT_RANK_TOLERANCE};
use swimmer_core::model::joint_points;
use swimmer_core::trajectory::{Circle, Line};
use swimmer_core::{
    bent_submatrix_determinant, kalman_matrix, linearize, partial_controllability,
    scan_determinant, simulate_closed_loop, ClosedLoopOptions, IntegratorOptions, Method,
    SwimmerParams, TrackingOutcome, Trajectory,
};

/// Longest run the page may request (s).
pub const MAX_DURATION: f64 = 20.0;

/// Values per row of [`TrackingRun::rows`].
pub const ROW_WIDTH: usize = 19;

/// `rows` holds, per sample, `t, x, y, θ, α₁, α₂, H∥, H⊥, D, target x,
/// target y` followed by the four joint points `x1, y1, …, tip x, tip y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRun {
    pub status: &'static str,
    pub t_stop: f64,
    pub tracking_error: f64,
    pub rows: Vec<f64>,
}

impl TrackingRun {
    pub fn len(&self) -> usize {
        self.rows.len() / ROW_WIDTH
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * ROW_WIDTH..(k + 1) * ROW_WIDTH]
    }
}

fn params(alpha0: f64) -> Result<SwimmerParams, String> {
    if !(alpha0.is_finite() && alpha0.abs() < PI) {
        return Err("alpha0 must lie in (-pi, pi)".into());
    }
    Ok(SwimmerParams::table1(alpha0))
}

/// `D(α₁, α₂)` on the cell-centred `n × n` grid over `(−π, π)²`, row-major in
/// `α₁`, for the reference parameters with rest angle `alpha0`.
pub fn determinant_grid(alpha0: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(2..=400).contains(&n) {
        return Err("grid size must be between 2 and 400".into());
    }
    Ok(scan_determinant(&params(alpha0)?, n)
        .map_err(|e| e.to_string())?
        .values)
}

fn run(traj: &dyn Trajectory, alpha0: f64, samples: usize) -> Result<TrackingRun, String> {
    let p = params(alpha0)?;
    let start = traj.position(0.0);
    // The trapezoidal method keeps the stiff closed loop interactive.
    let opts = ClosedLoopOptions {
        integrator: IntegratorOptions::with_method(Method::TrapezoidalAdaptive),
        samples: Some(samples.clamp(10, 5000)),
        ..ClosedLoopOptions::default()
    };
    let result = simulate_closed_loop(&p.equilibrium(start[0], start[1], 0.0), traj, &p, &opts)
        .map_err(|e| e.to_string())?;
    let mut rows = Vec::with_capacity(result.record.rows.len() * ROW_WIDTH);
    for r in &result.record.rows {
        let target = traj.position(r.t);
        rows.extend([
            r.t, r.x, r.y, r.theta, r.alpha1, r.alpha2, r.h_par, r.h_perp, r.d_value, target[0],
            target[1],
        ]);
        for q in joint_points(&r.state(), &p) {
            rows.extend([q[0], q[1]]);
        }
    }
    Ok(TrackingRun {
        status: match result.status.outcome {
            TrackingOutcome::Completed => "completed",
            TrackingOutcome::SingularAbort => "singular_abort",
            TrackingOutcome::IntegratorFailure => "integrator_failure",
        },
        t_stop: result.status.t_stop,
        tracking_error: result.tracking_error,
        rows,
    })
}

/// Straight line from the origin; the swimmer starts at rest with `θ = 0`.
pub fn track_line(
    alpha0: f64,
    heading: f64,
    speed: f64,
    duration: f64,
    samples: usize,
) -> Result<TrackingRun, String> {
    if !(speed.is_finite() && heading.is_finite() && duration > 0.0 && duration <= MAX_DURATION) {
        return Err(format!(
            "speed and heading must be finite and duration in (0, {MAX_DURATION}] s"
        ));
    }
    let line = Line {
        start_um: [0.0, 0.0],
        heading_rad: heading,
        speed_um_s: speed,
        duration_s: duration,
    };
    run(&line, alpha0, samples)
}

/// Circle through the origin, leaving it along `heading`; a negative `rate`
/// turns clockwise.
pub fn track_circle(
    alpha0: f64,
    heading: f64,
    radius: f64,
    rate: f64,
    turns: f64,
    samples: usize,
) -> Result<TrackingRun, String> {
    if !(radius > 0.0
        && radius.is_finite()
        && heading.is_finite()
        && rate.is_finite()
        && rate != 0.0
        && turns > 0.0)
    {
        return Err("radius and turns must be positive and rate nonzero".into());
    }
    if turns * 2.0 * PI / rate.abs() > MAX_DURATION {
        return Err(format!("run longer than {MAX_DURATION} s"));
    }
    run(
        &Circle::through([0.0, 0.0], heading, radius, rate, turns),
        alpha0,
        samples,
    )
}

/// For `n` rest angles evenly spread over `(−π, π)`: rows of `α₀`, the rank
/// of the first two Kalman rows, the closed-form and the numeric 2×2
/// determinants.
pub fn controllability_sweep(n: usize) -> Result<Vec<f64>, String> {
    if !(1..=2000).contains(&n) {
        return Err("sweep size must be between 1 and 2000".into());
    }
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        let alpha0 = -PI + (k as f64 + 0.5) * 2.0 * PI / n as f64;
        let p = params(alpha0)?;
        let lin = linearize(&p.equilibrium(0.0, 0.0, 0.0), &p).map_err(|e| e.to_string())?;
        let verdict = partial_controllability(&kalman_matrix(&lin), 2, DEFAULT_RANK_TOLERANCE)
            .map_err(|e| e.to_string())?;
        let numeric = kalman_submatrix_determinant(&p).map_err(|e| e.to_string())?;
        out.extend([
            alpha0,
            verdict.rank as f64,
            bent_submatrix_determinant(alpha0, &p),
            numeric,
        ]);
    }
    Ok(out)
}
