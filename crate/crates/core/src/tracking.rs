//! Exact position tracking by feedback on the magnetic field.
//!
//! The position rows of the control system read
//!
//! ```text
//! r_{−θ} (ẋ, ẏ) = F₀,xy + H∥ F₁,xy + H⊥ F₂,xy
//! ```
//!
//! so imposing `(ẋ, ẏ) = (f′, g′)` leaves a 2×2 linear system for `(H∥, H⊥)`
//! whose determinant `D(α₁, α₂)` vanishes at the straight shape. Along a run the
//! swimmer follows the path exactly until `|D|` drops below a threshold.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{control_vector_fields, ControlVectorFields, DynamicsError};
use crate::integrators::{integrate, IntegratorOptions, OptionsError, Singularity, Termination};
use crate::model::{planar_rotation, rotation_block, ControlField, SwimmerParams, SwimmerState};
use crate::record::{emit_lab_frame_controls, RecordRow, SimRecord};
use crate::trajectory::Trajectory;

/// Default singularity threshold on `|D|` (internal units).
pub const DEFAULT_EPS_D: f64 = 1e-8;

/// Allowed mismatch between the initial position and `(f(0), g(0))` (µm).
pub const INITIAL_POSITION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("tracking matrix is singular: |D| = {d:e} at {state:?}")]
    Singular { d: f64, state: SwimmerState },
    #[error(
        "initial position ({x}, {y}) differs from the trajectory start ({f0}, {g0}); exact tracking has no error correction"
    )]
    InitialMismatch { x: f64, y: f64, f0: f64, g0: f64 },
    #[error("invalid initial state: {0}")]
    InvalidState(#[from] crate::model::ModelError),
    #[error("trajectory horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error(transparent)]
    Integrator(#[from] OptionsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn position_block(fields: &ControlVectorFields) -> Matrix2<f64> {
    Matrix2::new(fields.f1[0], fields.f2[0], fields.f1[1], fields.f2[1])
}

fn determinant_of(fields: &ControlVectorFields) -> f64 {
    fields.f1[0] * fields.f2[1] - fields.f1[1] * fields.f2[0]
}

/// `D(α₁, α₂) = F₁ₓF₂ᵧ − F₁ᵧF₂ₓ`.
pub fn tracking_determinant(
    alpha1: f64,
    alpha2: f64,
    params: &SwimmerParams,
) -> Result<f64, DynamicsError> {
    Ok(determinant_of(&control_vector_fields(
        alpha1, alpha2, params,
    )?))
}

/// `D` sampled on a cell-centred `n × n` grid over `(−π, π)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantScan {
    pub grid_n: usize,
    /// Grid coordinates, shared by both axes.
    pub alphas: Vec<f64>,
    /// `values[i * grid_n + j] = D(alphas[i], alphas[j])`.
    pub values: Vec<f64>,
    pub d_origin: f64,
    /// Radius of the excluded ball around the origin.
    pub exclusion_radius: f64,
    pub min_abs_off_origin: f64,
    pub argmin_off_origin: (f64, f64),
    pub max_abs: f64,
}

pub const SCAN_EXCLUSION_RADIUS: f64 = 0.05;

pub fn scan_determinant(
    params: &SwimmerParams,
    grid_n: usize,
) -> Result<DeterminantScan, DynamicsError> {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let step = 2.0 * PI / grid_n as f64;
    let alphas: Vec<f64> = (0..grid_n).map(|k| -PI + (k as f64 + 0.5) * step).collect();
    let mut values = Vec::with_capacity(grid_n * grid_n);
    let mut min_abs = f64::INFINITY;
    let mut argmin = (f64::NAN, f64::NAN);
    let mut max_abs = 0.0f64;
    for &a1 in &alphas {
        for &a2 in &alphas {
            let d = tracking_determinant(a1, a2, params)?;
            values.push(d);
            max_abs = max_abs.max(d.abs());
            if a1.hypot(a2) > SCAN_EXCLUSION_RADIUS && d.abs() < min_abs {
                min_abs = d.abs();
                argmin = (a1, a2);
            }
        }
    }
    Ok(DeterminantScan {
        grid_n,
        alphas,
        values,
        d_origin: tracking_determinant(0.0, 0.0, params)?,
        exclusion_radius: SCAN_EXCLUSION_RADIUS,
        min_abs_off_origin: min_abs,
        argmin_off_origin: argmin,
        max_abs,
    })
}

/// Feedback field together with the quantities it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingControl {
    pub field: ControlField,
    pub d: f64,
    /// Max-norm residual of the 2×2 system.
    pub residual: f64,
}

fn solve_with_fields(
    state: &SwimmerState,
    demand: Vector2<f64>,
    fields: &ControlVectorFields,
) -> Option<(ControlField, f64)> {
    let block = position_block(fields);
    let rhs = -Vector2::new(fields.f0[0], fields.f0[1]) + planar_rotation(-state.theta) * demand;
    let h = block.lu().solve(&rhs)?;
    let residual = (block * h - rhs).amax();
    Some((ControlField::new(h[0], h[1]), residual))
}

/// Field `(H∥, H⊥)` that makes `(ẋ, ẏ) = demand`.
///
/// The body-frame demand is `r_{−θ}(f′, g′)`, the inverse of the rotation that
/// carries body velocities to the lab frame.
pub fn solve_tracking_controls(
    state: &SwimmerState,
    demand: Vector2<f64>,
    params: &SwimmerParams,
    eps_d: f64,
) -> Result<TrackingControl, TrackingError> {
    let fields = control_vector_fields(state.alpha1, state.alpha2, params)?;
    let d = determinant_of(&fields);
    let singular = TrackingError::Singular { d, state: *state };
    if !(d.abs() > eps_d) {
        return Err(singular);
    }
    let (field, residual) = solve_with_fields(state, demand, &fields).ok_or(singular)?;
    Ok(TrackingControl { field, d, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingOutcome {
    Completed,
    SingularAbort,
    IntegratorFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingStatus {
    pub outcome: TrackingOutcome,
    pub t_stop: f64,
    /// Smallest `|D|` over every right-hand side evaluation.
    pub min_abs_d: f64,
    /// Largest `‖(H∥, H⊥)‖` over every successful evaluation.
    pub max_field_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopOptions {
    pub integrator: IntegratorOptions,
    pub eps_d: f64,
    /// Uniform output samples over `[0, T]`; `None` records every accepted step.
    pub samples: Option<usize>,
}

impl Default for ClosedLoopOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default(),
            eps_d: DEFAULT_EPS_D,
            samples: Some(1000),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub record: SimRecord,
    pub status: TrackingStatus,
    /// `max ‖(x, y) − (f, g)‖` over the finite rows.
    pub tracking_error: f64,
    /// Largest 2×2 residual over the recorded rows.
    pub max_feedback_residual: f64,
    pub accepted_steps: usize,
    pub evaluations: usize,
}

fn sample_times(t_end: f64, samples: Option<usize>) -> Vec<f64> {
    match samples {
        Some(n) if n > 0 => (0..=n).map(|k| t_end * k as f64 / n as f64).collect(),
        _ => vec![],
    }
}

fn shape_is_physical(z: &Vector5<f64>) -> bool {
    z[3].abs() < PI && z[4].abs() < PI
}

/// Integrates the closed loop `Ż = R_θ(F₀ + H∥F₁ + H⊥F₂)` with the tracking
/// feedback evaluated at every right-hand side call.
pub fn simulate_closed_loop(
    initial: &SwimmerState,
    traj: &dyn Trajectory,
    params: &SwimmerParams,
    opts: &ClosedLoopOptions,
) -> Result<ClosedLoopRun, TrackingError> {
    initial.validate()?;
    let t_end = traj.horizon();
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(TrackingError::Horizon(t_end));
    }
    let start = traj.position(0.0);
    if (initial.position() - start).norm() > INITIAL_POSITION_TOLERANCE {
        return Err(TrackingError::InitialMismatch {
            x: initial.x,
            y: initial.y,
            f0: start[0],
            g0: start[1],
        });
    }

    let mut min_abs_d = f64::INFINITY;
    let mut max_field_norm = 0.0f64;
    let eps_d = opts.eps_d;
    let rhs = |t: f64, z: &Vector5<f64>| -> Result<Vector5<f64>, Singularity> {
        if !shape_is_physical(z) {
            return Ok(Vector5::repeat(f64::NAN));
        }
        let state = SwimmerState::from_vector(z);
        let Ok(fields) = control_vector_fields(state.alpha1, state.alpha2, params) else {
            return Ok(Vector5::repeat(f64::NAN));
        };
        let d = determinant_of(&fields);
        min_abs_d = min_abs_d.min(d.abs());
        if !(d.abs() > eps_d) {
            return Err(Singularity);
        }
        let Some((field, _)) = solve_with_fields(&state, traj.velocity(t), &fields) else {
            return Err(Singularity);
        };
        max_field_norm = max_field_norm.max(field.norm());
        Ok(rotation_block(state.theta) * fields.body_velocity(&field))
    };

    let times = sample_times(t_end, opts.samples);
    let sol = integrate(
        rhs,
        initial.to_vector(),
        (0.0, t_end),
        &times,
        &opts.integrator,
    )?;

    let row_at = |t: f64, z: &Vector5<f64>| -> RecordRow {
        let state = SwimmerState::from_vector(z);
        match control_vector_fields(state.alpha1, state.alpha2, params) {
            Ok(fields) => {
                let d = determinant_of(&fields);
                let field = solve_with_fields(&state, traj.velocity(t), &fields)
                    .map(|(f, _)| f)
                    .unwrap_or(ControlField::new(f64::NAN, f64::NAN));
                RecordRow::new(t, &state, &field, d)
            }
            Err(_) => RecordRow::new(t, &state, &ControlField::new(f64::NAN, f64::NAN), f64::NAN),
        }
    };

    let mut record = SimRecord::default();
    if opts.samples.is_some_and(|n| n > 0) {
        for (t, z) in &sol.samples {
            record.push(row_at(*t, z));
        }
    } else {
        for node in &sol.nodes {
            record.push(row_at(node.t, &node.z));
        }
    }

    let last = *sol.last();
    let (outcome, t_stop) = match &sol.termination {
        Termination::Completed => (TrackingOutcome::Completed, t_end),
        Termination::Singular { t, z } => {
            if record.last().is_none_or(|r| r.t < last.t) {
                record.push(row_at(last.t, &last.z));
            }
            if record.last().is_none_or(|r| r.t < *t) {
                record.push(row_at(*t, z));
            }
            (TrackingOutcome::SingularAbort, *t)
        }
        Termination::StepCollapse { t, .. } | Termination::MaxSteps { t } => {
            if record.last().is_none_or(|r| r.t < last.t) {
                record.push(row_at(last.t, &last.z));
            }
            (TrackingOutcome::IntegratorFailure, *t)
        }
    };
    emit_lab_frame_controls(&mut record);

    let mut tracking_error = 0.0f64;
    let mut max_feedback_residual = 0.0f64;
    for row in record.rows.iter().filter(|r| r.is_finite()) {
        let target = traj.position(row.t);
        tracking_error = tracking_error.max((Vector2::new(row.x, row.y) - target).norm());
        if let Ok(c) = solve_tracking_controls(&row.state(), traj.velocity(row.t), params, 0.0) {
            max_feedback_residual = max_feedback_residual.max(c.residual);
        }
    }

    Ok(ClosedLoopRun {
        record,
        status: TrackingStatus {
            outcome,
            t_stop,
            min_abs_d,
            max_field_norm,
        },
        tracking_error,
        max_feedback_residual,
        accepted_steps: sol.stats.accepted,
        evaluations: sol.stats.evaluations,
    })
}

/// Outcome of an open-loop run with a prescribed field.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenLoopRun {
    pub record: SimRecord,
    pub outcome: TrackingOutcome,
    pub t_stop: f64,
    pub final_state: SwimmerState,
    pub accepted_steps: usize,
}

/// Integrates the uncontrolled-feedback system with a field program
/// `H(t, state)` given in the body frame.
pub fn simulate_open_loop<F>(
    initial: &SwimmerState,
    field: F,
    t_end: f64,
    params: &SwimmerParams,
    integrator: &IntegratorOptions,
    samples: Option<usize>,
) -> Result<OpenLoopRun, TrackingError>
where
    F: Fn(f64, &SwimmerState) -> ControlField,
{
    initial.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(TrackingError::Horizon(t_end));
    }
    let rhs = |t: f64, z: &Vector5<f64>| -> Result<Vector5<f64>, Singularity> {
        if !shape_is_physical(z) {
            return Ok(Vector5::repeat(f64::NAN));
        }
        let state = SwimmerState::from_vector(z);
        let h = field(t, &state);
        let Ok(fields) = control_vector_fields(state.alpha1, state.alpha2, params) else {
            return Ok(Vector5::repeat(f64::NAN));
        };
        Ok(rotation_block(state.theta) * fields.body_velocity(&h))
    };
    let times = sample_times(t_end, samples);
    let sol = integrate(rhs, initial.to_vector(), (0.0, t_end), &times, integrator)?;

    let row_at = |t: f64, z: &Vector5<f64>| {
        let state = SwimmerState::from_vector(z);
        let d = tracking_determinant(state.alpha1, state.alpha2, params).unwrap_or(f64::NAN);
        RecordRow::new(t, &state, &field(t, &state), d)
    };
    let mut record = SimRecord::default();
    if samples.is_some_and(|n| n > 0) {
        for (t, z) in &sol.samples {
            record.push(row_at(*t, z));
        }
    } else {
        for node in &sol.nodes {
            record.push(row_at(node.t, &node.z));
        }
    }
    let last = *sol.last();
    if record.last().is_none_or(|r| r.t < last.t) {
        record.push(row_at(last.t, &last.z));
    }
    emit_lab_frame_controls(&mut record);
    let (outcome, t_stop) = match sol.termination {
        Termination::Completed => (TrackingOutcome::Completed, t_end),
        Termination::Singular { t, .. } => (TrackingOutcome::SingularAbort, t),
        Termination::StepCollapse { t, .. } | Termination::MaxSteps { t } => {
            (TrackingOutcome::IntegratorFailure, t)
        }
    };
    Ok(OpenLoopRun {
        record,
        outcome,
        t_stop,
        final_state: SwimmerState::from_vector(&last.z),
        accepted_steps: sol.stats.accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Constant;

    #[test]
    fn zero_demand_at_equilibrium_needs_no_field() {
        let p = SwimmerParams::table1(PI / 3.0);
        let c = solve_tracking_controls(
            &p.equilibrium(1.0, 2.0, 0.3),
            Vector2::zeros(),
            &p,
            DEFAULT_EPS_D,
        )
        .unwrap();
        assert_eq!(c.field, ControlField::ZERO);
    }

    #[test]
    fn straight_shape_is_singular() {
        let p = SwimmerParams::table1(PI / 3.0);
        let s = SwimmerState::new(0.0, 0.0, 0.7, 0.0, 0.0);
        assert!(matches!(
            solve_tracking_controls(&s, Vector2::new(1.0, -2.0), &p, DEFAULT_EPS_D),
            Err(TrackingError::Singular { .. })
        ));
    }

    #[test]
    fn degenerate_scan_grid() {
        let scan = scan_determinant(&SwimmerParams::table1(PI / 3.0), 2).unwrap();
        assert_eq!(scan.values.len(), 4);
        assert!(scan.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn mismatched_start_is_rejected() {
        let p = SwimmerParams::table1(PI / 3.0);
        let traj = Constant {
            point_um: [1.0, 0.0],
            duration_s: 1.0,
        };
        let err = simulate_closed_loop(
            &p.equilibrium(0.0, 0.0, 0.0),
            &traj,
            &p,
            &ClosedLoopOptions::default(),
        );
        assert!(matches!(err, Err(TrackingError::InitialMismatch { .. })));
    }

    #[test]
    fn constant_trajectory_keeps_equilibrium() {
        let p = SwimmerParams::table1(PI / 3.0);
        let eq = p.equilibrium(2.0, -1.0, 0.4);
        let traj = Constant {
            point_um: [2.0, -1.0],
            duration_s: 0.5,
        };
        let run = simulate_closed_loop(&eq, &traj, &p, &ClosedLoopOptions::default()).unwrap();
        assert_eq!(run.status.outcome, TrackingOutcome::Completed);
        for row in &run.record.rows {
            assert!((row.state().to_vector() - eq.to_vector()).amax() < 1e-14);
            assert!(row.field().norm() < 1e-9);
        }
    }
}
