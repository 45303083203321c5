//! Resistive Force Theory equations of motion.
//!
//! The five balance equations (total force, total torque about `x₁`, torque
//! of S₂+S₃ about `x₂`, torque of S₃ about `x₃`) read
//!
//! ```text
//! M(α₁, α₂) · R_{−θ} Ż = Y
//! ```
//!
//! where the left side collects the hydrodynamic terms (linear in the body
//! frame velocities) and `Y = −(magnetic + elastic)`. The force rows are
//! projected on `(e₁∥, e₁⊥)`, which coincide with `(Ox, Oy)` when θ = 0; this
//! is what makes `M` independent of `(x, y, θ)`.
//!
//! Per segment, with `x_s = oᵢ + s·eᵢ` for `s ∈ [0, ℓ]` and velocity
//! `Vᵢ + s·Ωᵢ·nᵢ`, the drag integrals are polynomial in `s` and integrate to
//!
//! ```text
//! Fᵢ = −ξℓ (Vᵢ·eᵢ) eᵢ − η (ℓ Vᵢ·nᵢ + ℓ²/2 Ωᵢ) nᵢ
//! τᵢ = −η (ℓ²/2 Vᵢ·nᵢ + ℓ³/3 Ωᵢ)            (torque about oᵢ)
//! ```

use nalgebra::{Matrix5, Vector2, Vector5};
use thiserror::Error;

use crate::model::{rotation_block, segment_frames, ControlField, SwimmerParams, SwimmerState};

/// `|det M|` below this (internal units) triggers a conditioning warning.
pub const MOBILITY_CONDITION_WARNING: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    /// `det M` never vanishes on physical shapes; hitting this means the
    /// assembly or the inputs are broken.
    #[error("mobility matrix is singular at (alpha1, alpha2) = ({alpha1}, {alpha2}), det = {det}")]
    SingularMobility { alpha1: f64, alpha2: f64, det: f64 },
}

#[inline]
fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Drag-coefficient matrix `M(α₁, α₂)` with its determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityMatrix {
    pub m: Matrix5<f64>,
    pub det_m: f64,
}

/// Hydrodynamic side of the balance equations for body-frame generalized
/// velocity `q = (u, v, ω, α̇₁, α̇₂)`.
fn hydrodynamic_side(
    q: &Vector5<f64>,
    alpha1: f64,
    alpha2: f64,
    p: &SwimmerParams,
) -> Vector5<f64> {
    let (ell, xi, eta) = (p.ell, p.xi, p.eta);
    let body = SwimmerState::new(0.0, 0.0, 0.0, alpha1, alpha2);
    let frames = segment_frames(&body, p);

    let omega = [q[2], q[2] + q[3], q[2] + q[3] + q[4]];
    let mut v = [Vector2::new(q[0], q[1]); 3];
    v[1] = v[0] + frames[0].normal * (ell * omega[0]);
    v[2] = v[1] + frames[1].normal * (ell * omega[1]);

    let mut force = [Vector2::zeros(); 3];
    let mut own_torque = [0.0; 3];
    for i in 0..3 {
        let (e, n) = (frames[i].tangent, frames[i].normal);
        let vn = v[i].dot(&n);
        force[i] =
            e * (-xi * ell * v[i].dot(&e)) - n * (eta * (ell * vn + 0.5 * ell * ell * omega[i]));
        own_torque[i] = -eta * (0.5 * ell * ell * vn + ell * ell * ell / 3.0 * omega[i]);
    }
    let torque_about = |from: usize| -> f64 {
        let pivot = frames[from].origin;
        (from..3)
            .map(|i| cross(frames[i].origin - pivot, force[i]) + own_torque[i])
            .sum()
    };
    let total = force[0] + force[1] + force[2];
    Vector5::new(
        total[0],
        total[1],
        torque_about(0),
        torque_about(1),
        torque_about(2),
    )
}

pub fn build_mobility_matrix(alpha1: f64, alpha2: f64, params: &SwimmerParams) -> MobilityMatrix {
    let mut m = Matrix5::zeros();
    for k in 0..5 {
        let mut q = Vector5::zeros();
        q[k] = 1.0;
        m.set_column(k, &hydrodynamic_side(&q, alpha1, alpha2, params));
    }
    let det_m = m.determinant();
    MobilityMatrix { m, det_m }
}

/// Right-hand side `Y` split by physical origin.
///
/// Rows 1–2 are zero: magnetic and elastic effects only enter as torques.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedForce {
    pub y: Vector5<f64>,
    pub magnetic: Vector5<f64>,
    pub elastic: Vector5<f64>,
}

/// Assembles `Y` from the segment frames: magnetic torques `Mᵢ eᵢ∥ × H` and
/// restoring spring torques `−κα₁` on S₂ and `−κ(α₂−α₀)` on S₃.
pub fn assemble_generalized_force(
    state: &SwimmerState,
    field: &ControlField,
    params: &SwimmerParams,
) -> GeneralizedForce {
    let frames = segment_frames(state, params);
    let h1 = frames[0].tangent * field.h_par + frames[0].normal * field.h_perp;
    let tm: [f64; 3] = std::array::from_fn(|i| params.m[i] * cross(frames[i].tangent, h1));

    let spring2 = -params.kappa * state.alpha1;
    let spring3 = -params.kappa * (state.alpha2 - params.alpha0);

    let magnetic = -Vector5::new(0.0, 0.0, tm[0] + tm[1] + tm[2], tm[1] + tm[2], tm[2]);
    let elastic = -Vector5::new(0.0, 0.0, 0.0, spring2, spring3);
    GeneralizedForce {
        y: magnetic + elastic,
        magnetic,
        elastic,
    }
}

/// Drift and control fields of `R_{−θ} Ż = F₀ + H∥ F₁ + H⊥ F₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlVectorFields {
    pub f0: Vector5<f64>,
    pub f1: Vector5<f64>,
    pub f2: Vector5<f64>,
    /// Columns 3–5 of `M⁻¹`.
    pub x3: Vector5<f64>,
    pub x4: Vector5<f64>,
    pub x5: Vector5<f64>,
}

impl ControlVectorFields {
    /// Body-frame generalized velocity `F₀ + H∥F₁ + H⊥F₂`.
    pub fn body_velocity(&self, field: &ControlField) -> Vector5<f64> {
        self.f0 + self.f1 * field.h_par + self.f2 * field.h_perp
    }
}

pub fn control_vector_fields(
    alpha1: f64,
    alpha2: f64,
    params: &SwimmerParams,
) -> Result<ControlVectorFields, DynamicsError> {
    let MobilityMatrix { m, det_m } = build_mobility_matrix(alpha1, alpha2, params);
    let singular = || DynamicsError::SingularMobility {
        alpha1,
        alpha2,
        det: det_m,
    };
    if !(det_m.is_finite() && det_m != 0.0) {
        return Err(singular());
    }
    if det_m.abs() < MOBILITY_CONDITION_WARNING {
        log::warn!("ill-conditioned mobility matrix at ({alpha1}, {alpha2}): det = {det_m:e}");
    }
    let lu = m.lu();
    let column = |k: usize| -> Result<Vector5<f64>, DynamicsError> {
        let mut e = Vector5::zeros();
        e[k] = 1.0;
        lu.solve(&e).ok_or_else(singular)
    };
    let (x3, x4, x5) = (column(2)?, column(3)?, column(4)?);

    let [m1, m2, m3] = params.m;
    let (s1, c1) = alpha1.sin_cos();
    let (s12, c12) = (alpha1 + alpha2).sin_cos();
    let sin_sum = m2 * s1 + m3 * s12;
    let cos_sum = m2 * c1 + m3 * c12;

    let f0 = (x4 * alpha1 + x5 * (alpha2 - params.alpha0)) * params.kappa;
    let f1 = (x3 + x4) * sin_sum + x5 * (m3 * s12);
    let f2 = -x3 * m1 - (x3 + x4) * cos_sum - x5 * (m3 * c12);
    Ok(ControlVectorFields {
        f0,
        f1,
        f2,
        x3,
        x4,
        x5,
    })
}

/// `Ż = R_θ (F₀ + H∥F₁ + H⊥F₂)`.
pub fn state_derivative(
    state: &SwimmerState,
    field: &ControlField,
    params: &SwimmerParams,
) -> Result<Vector5<f64>, DynamicsError> {
    let fields = control_vector_fields(state.alpha1, state.alpha2, params)?;
    Ok(rotation_block(state.theta) * fields.body_velocity(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mobility_is_deterministic_and_negative() {
        let p = SwimmerParams::table1(PI / 3.0);
        let a = build_mobility_matrix(0.3, -0.7, &p);
        let b = build_mobility_matrix(0.3, -0.7, &p);
        assert_eq!(a.m, b.m);
        assert!(build_mobility_matrix(0.0, 0.0, &p).det_m < 0.0);
    }

    #[test]
    fn equilibrium_without_field_is_at_rest() {
        let p = SwimmerParams::table1(PI / 3.0);
        let eq = p.equilibrium(4.0, -1.0, 0.8);
        let y = assemble_generalized_force(&eq, &ControlField::ZERO, &p);
        assert_eq!(y.y, Vector5::zeros());
        let zd = state_derivative(&eq, &ControlField::ZERO, &p).unwrap();
        assert_eq!(zd, Vector5::zeros());
    }

    #[test]
    fn straight_perpendicular_field_row() {
        let p = SwimmerParams::table1(0.2);
        let s = SwimmerState::new(0.0, 0.0, 1.1, 0.0, 0.0);
        let y = assemble_generalized_force(&s, &ControlField::new(0.0, 7.0), &p);
        let expected = -7.0 * (p.m[0] + p.m[1] + p.m[2]);
        assert!((y.y[2] - expected).abs() < 1e-12);
        assert_eq!(y.y[0], 0.0);
        assert_eq!(y.y[1], 0.0);
    }

    #[test]
    fn drift_vanishes_at_rest_shape_and_f1_at_straight_shape() {
        let p = SwimmerParams::table1(PI / 3.0);
        let at_rest = control_vector_fields(0.0, p.alpha0, &p).unwrap();
        assert_eq!(at_rest.f0, Vector5::zeros());
        let straight = control_vector_fields(0.0, 0.0, &p).unwrap();
        assert_eq!(straight.f1, Vector5::zeros());
        assert!(at_rest.f2.norm() > 0.0);
    }

    #[test]
    fn singular_mobility_is_reported() {
        let mut p = SwimmerParams::table1(0.5);
        p.eta = f64::NAN;
        assert!(matches!(
            control_vector_fields(0.1, 0.2, &p),
            Err(DynamicsError::SingularMobility { .. })
        ));
    }
}
