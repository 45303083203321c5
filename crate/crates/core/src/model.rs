//! Domain types shared by every module: parameters, state, segment frames and
//! the magnetic control field.
//!
//! # Units
//!
//! Everything inside the crate uses a coherent (µm, s, pN) system:
//!
//! | quantity            | public (input) unit | internal unit  | factor |
//! |---------------------|---------------------|----------------|--------|
//! | length `ell`        | µm                  | µm             | 1      |
//! | drag `xi`, `eta`    | N·s·m⁻²             | pN·s·µm⁻²      | 1      |
//! | stiffness `kappa`   | N·µm                | pN·µm          | 1e12   |
//! | moment `m1..m3`     | A·µm²               | A·µm²          | 1      |
//! | field `H`           | µT                  | µT             | 1      |
//!
//! A drag density of 1 N·s·m⁻² is a force per length per velocity, and
//! 1 N/m / (m/s) = 1e12 pN / 1e12 µm² · s, so the numeric value is unchanged.
//! A moment of 1 A·µm² in a field of 1 µT carries a torque of
//! 1e-12 A·m² × 1e-6 T = 1e-18 N·m = 1 pN·µm, which is why the field is
//! expressed in µT (flux density µ₀H).

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix5, Vector2, Vector5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// pN·µm per N·µm.
pub const PICONEWTON_PER_NEWTON: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("rest angle alpha0 = {0} lies outside (-pi, pi)")]
    RestAngle(f64),
    #[error("shape angle `{name}` = {value} lies outside (-pi, pi); the segments would overlap")]
    ShapeAngle { name: &'static str, value: f64 },
}

/// Physical constants of the swimmer, stored in internal units.
///
/// All three segments share `ell`, `xi` and `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwimmerParams {
    /// Segment length (µm).
    pub ell: f64,
    /// Parallel drag coefficient (pN·s·µm⁻²).
    pub xi: f64,
    /// Perpendicular drag coefficient (pN·s·µm⁻²).
    pub eta: f64,
    /// Magnetic moments of S₁, S₂, S₃ (A·µm²).
    pub m: [f64; 3],
    /// Torsional stiffness of both springs (pN·µm).
    pub kappa: f64,
    /// Rest angle of the S₂–S₃ spring (rad).
    pub alpha0: f64,
}

impl SwimmerParams {
    /// Builds parameters from the published units (µm, N·s·m⁻², A·µm², N·µm)
    /// and validates them.
    pub fn from_table_units(
        ell_um: f64,
        xi_n_s_m2: f64,
        eta_n_s_m2: f64,
        m_a_um2: [f64; 3],
        kappa_n_um: f64,
        alpha0: f64,
    ) -> Result<Self, ModelError> {
        let params = Self {
            ell: ell_um,
            xi: xi_n_s_m2,
            eta: eta_n_s_m2,
            m: m_a_um2,
            kappa: kappa_n_um * PICONEWTON_PER_NEWTON,
            alpha0,
        };
        params.validate()?;
        Ok(params)
    }

    /// The reference parameter set: ℓ = 10 µm, η = 12.4e-3, ξ = 6.2e-3 N·s·m⁻²,
    /// M = (1.6, 2.4, 3.2) A·µm², κ = 8.3e-7 N·µm.
    pub fn table1(alpha0: f64) -> Self {
        Self::from_table_units(10.0, 6.2e-3, 12.4e-3, [1.6, 2.4, 3.2], 8.3e-7, alpha0)
            .expect("reference parameters are valid")
    }

    /// Stiffness converted back to N·µm.
    pub fn kappa_n_um(&self) -> f64 {
        self.kappa / PICONEWTON_PER_NEWTON
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("ell", self.ell),
            ("xi", self.xi),
            ("eta", self.eta),
            ("kappa", self.kappa),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        for (name, value) in [("m1", self.m[0]), ("m2", self.m[1]), ("m3", self.m[2])] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        if !(self.alpha0.is_finite() && self.alpha0.abs() < PI) {
            return Err(ModelError::RestAngle(self.alpha0));
        }
        Ok(())
    }

    /// The bent equilibrium at the given pose.
    pub fn equilibrium(&self, x: f64, y: f64, theta: f64) -> SwimmerState {
        SwimmerState::new(x, y, theta, 0.0, self.alpha0)
    }
}

/// Configuration `Z = (x, y, θ, α₁, α₂)`.
///
/// `(x, y)` is the free end of S₁; the chain extends along `+e₁∥`. Shape angles
/// are counterclockwise from the previous segment. `theta` is never wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwimmerState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl SwimmerState {
    pub const fn new(x: f64, y: f64, theta: f64, alpha1: f64, alpha2: f64) -> Self {
        Self {
            x,
            y,
            theta,
            alpha1,
            alpha2,
        }
    }

    pub fn from_vector(z: &Vector5<f64>) -> Self {
        Self::new(z[0], z[1], z[2], z[3], z[4])
    }

    pub fn to_vector(&self) -> Vector5<f64> {
        Vector5::new(self.x, self.y, self.theta, self.alpha1, self.alpha2)
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    /// Checks that the shape angles lie in the physical square (−π, π)².
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("x", self.x), ("y", self.y), ("theta", self.theta)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        for (name, value) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(value.is_finite() && value.abs() < PI) {
                return Err(ModelError::ShapeAngle { name, value });
            }
        }
        Ok(())
    }
}

/// Moving frame `(e_{i,∥}, e_{i,⊥})` attached at the proximal end of a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFrame {
    pub origin: Vector2<f64>,
    pub tangent: Vector2<f64>,
    pub normal: Vector2<f64>,
}

impl SegmentFrame {
    fn at_angle(origin: Vector2<f64>, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            origin,
            tangent: Vector2::new(c, s),
            normal: Vector2::new(-s, c),
        }
    }

    pub fn end(&self, ell: f64) -> Vector2<f64> {
        self.origin + self.tangent * ell
    }
}

/// Frames of S₁, S₂, S₃ with directions θ, θ+α₁, θ+α₁+α₂.
pub fn segment_frames(state: &SwimmerState, params: &SwimmerParams) -> [SegmentFrame; 3] {
    let f1 = SegmentFrame::at_angle(state.position(), state.theta);
    let f2 = SegmentFrame::at_angle(f1.end(params.ell), state.theta + state.alpha1);
    let f3 = SegmentFrame::at_angle(
        f2.end(params.ell),
        state.theta + state.alpha1 + state.alpha2,
    );
    [f1, f2, f3]
}

/// The four chain points `x₁, x₂, x₃` and the distal tip.
pub fn joint_points(state: &SwimmerState, params: &SwimmerParams) -> [Vector2<f64>; 4] {
    let [f1, f2, f3] = segment_frames(state, params);
    [f1.origin, f2.origin, f3.origin, f3.end(params.ell)]
}

/// Planar counterclockwise rotation by `theta`.
pub fn planar_rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `R_θ`: planar rotation by θ on (x, y), identity on (θ, α₁, α₂).
///
/// `R_θ` maps body-frame generalized velocities to lab-frame ones and
/// `R_{−θ}` is its inverse.
pub fn rotation_block(theta: f64) -> Matrix5<f64> {
    let mut r = Matrix5::identity();
    r.fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&planar_rotation(theta));
    r
}

/// Magnetic field in the S₁ body frame (µT).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlField {
    pub h_par: f64,
    pub h_perp: f64,
}

/// Magnetic field in the lab frame (µT).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabField {
    pub h_x: f64,
    pub h_y: f64,
}

impl ControlField {
    pub const ZERO: Self = Self {
        h_par: 0.0,
        h_perp: 0.0,
    };

    pub const fn new(h_par: f64, h_perp: f64) -> Self {
        Self { h_par, h_perp }
    }

    pub fn norm(&self) -> f64 {
        self.h_par.hypot(self.h_perp)
    }

    /// `(Hx, Hy) = r_θ (H∥, H⊥)`.
    pub fn to_lab(&self, theta: f64) -> LabField {
        let v = planar_rotation(theta) * Vector2::new(self.h_par, self.h_perp);
        LabField {
            h_x: v[0],
            h_y: v[1],
        }
    }

    pub fn from_lab(lab: LabField, theta: f64) -> Self {
        let v = planar_rotation(-theta) * Vector2::new(lab.h_x, lab.h_y);
        Self::new(v[0], v[1])
    }
}
