//! Linearization at the bent equilibria and the Kalman partial-controllability
//! test on the position coordinates.

use nalgebra::{DMatrix, Matrix5, Matrix5x2, SMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{control_vector_fields, DynamicsError};
use crate::model::{rotation_block, SwimmerParams, SwimmerState};

/// Shape must be within this distance of `(0, α₀)` to count as an equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-12;

/// Relative singular-value threshold used by default for rank decisions.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllabilityError {
    #[error(
        "state is not an equilibrium: expected (alpha1, alpha2) = (0, {alpha0}), got ({alpha1}, {alpha2})"
    )]
    NotEquilibrium {
        alpha1: f64,
        alpha2: f64,
        alpha0: f64,
    },
    #[error("row count p = {0} must lie in 1..=5")]
    RowCount(usize),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `Ż ≈ A (Z − Z_eq) + B H` around an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSystem {
    pub a: Matrix5<f64>,
    pub b: Matrix5x2<f64>,
    pub equilibrium: SwimmerState,
}

/// `[B, AB, A²B, A³B, A⁴B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanMatrix {
    pub k: SMatrix<f64, 5, 10>,
}

impl KalmanMatrix {
    /// Block `j` (columns `2j, 2j+1`), equal to `Aʲ B`.
    pub fn block(&self, j: usize) -> Matrix5x2<f64> {
        self.k.fixed_view::<5, 2>(0, 2 * j).into_owned()
    }

    /// Determinant of the first two entries of the first columns of `B` and `AB`.
    pub fn leading_submatrix_determinant(&self) -> f64 {
        let k = &self.k;
        k[(0, 0)] * k[(1, 2)] - k[(1, 0)] * k[(0, 2)]
    }
}

/// Analytic linearization at `(x, y, θ, 0, α₀)`.
///
/// With `F₀ = κ(α₁X₄ + (α₂−α₀)X₅)`, every term carrying a derivative of `Xₖ`
/// is multiplied by a vanishing coefficient at the equilibrium, so
/// `∂F₀/∂α₁ = κX₄` and `∂F₀/∂α₂ = κX₅` there. The θ column is `R′_θ F₀ = 0`.
pub fn linearize(
    equilibrium: &SwimmerState,
    params: &SwimmerParams,
) -> Result<LinearizedSystem, ControllabilityError> {
    if equilibrium.alpha1.abs() > EQUILIBRIUM_TOLERANCE
        || (equilibrium.alpha2 - params.alpha0).abs() > EQUILIBRIUM_TOLERANCE
    {
        return Err(ControllabilityError::NotEquilibrium {
            alpha1: equilibrium.alpha1,
            alpha2: equilibrium.alpha2,
            alpha0: params.alpha0,
        });
    }
    let fields = control_vector_fields(0.0, params.alpha0, params)?;
    let r = rotation_block(equilibrium.theta);

    let mut a = Matrix5::zeros();
    a.set_column(3, &(r * fields.x4 * params.kappa));
    a.set_column(4, &(r * fields.x5 * params.kappa));
    let mut b = Matrix5x2::zeros();
    b.set_column(0, &(r * fields.f1));
    b.set_column(1, &(r * fields.f2));
    Ok(LinearizedSystem {
        a,
        b,
        equilibrium: *equilibrium,
    })
}

pub fn kalman_matrix(lin: &LinearizedSystem) -> KalmanMatrix {
    let mut k = SMatrix::<f64, 5, 10>::zeros();
    let mut block = lin.b;
    for j in 0..5 {
        k.fixed_view_mut::<5, 2>(0, 2 * j).copy_from(&block);
        block = lin.a * block;
    }
    KalmanMatrix { k }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialControllability {
    pub controllable: bool,
    pub rank: usize,
    pub p: usize,
    pub singular_values: [f64; 5],
}

/// Rank test on the first `p` rows of `K`: controllable iff rank = `p`.
///
/// Singular values below `rel_tol · σ_max` count as zero.
pub fn partial_controllability(
    kalman: &KalmanMatrix,
    p: usize,
    rel_tol: f64,
) -> Result<PartialControllability, ControllabilityError> {
    if !(1..=5).contains(&p) {
        return Err(ControllabilityError::RowCount(p));
    }
    let rows = DMatrix::from_fn(p, 10, |i, j| kalman.k[(i, j)]);
    let sv = rows.singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let threshold = rel_tol * sigma_max;
    let rank = if sigma_max > 0.0 {
        sv.iter().filter(|&&s| s > threshold).count()
    } else {
        0
    };
    let mut singular_values = [0.0; 5];
    let mut sorted: Vec<f64> = sv.iter().cloned().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    singular_values[..sorted.len()].copy_from_slice(&sorted);
    Ok(PartialControllability {
        controllable: rank == p,
        rank,
        p,
        singular_values,
    })
}

/// `η² + 34ηξ + 28ξ² − (η² − 11ηξ + 28ξ²) cos 2α₀`, strictly positive for any
/// positive drag coefficients.
pub fn bent_denominator_base(alpha0: f64, params: &SwimmerParams) -> f64 {
    let (eta, xi) = (params.eta, params.xi);
    eta * eta + 34.0 * eta * xi + 28.0 * xi * xi
        - (eta * eta - 11.0 * eta * xi + 28.0 * xi * xi) * (2.0 * alpha0).cos()
}

/// `Ξ = η² + 19ηξ + 7ξ² − (η² − 8ηξ + 7ξ²) cos 2α₀`.
pub fn bent_xi_term(alpha0: f64, params: &SwimmerParams) -> f64 {
    let (eta, xi) = (params.eta, params.xi);
    eta * eta + 19.0 * eta * xi + 7.0 * xi * xi
        - (eta * eta - 8.0 * eta * xi + 7.0 * xi * xi) * (2.0 * alpha0).cos()
}

/// Published closed form of the leading 2×2 Kalman submatrix determinant,
/// in internal units, with the segment length standing for `L`:
///
/// ```text
/// 108 M₃² κ (−9ηξ(19η + 54ξ) cos α₀ − 2Ξ(η + 2ξ)) sin³α₀
/// ───────────────────────────────────────────────────────
///          L⁷ η² (η² + 34ηξ + 28ξ² − (η² − 11ηξ + 28ξ²) cos 2α₀)²
/// ```
///
/// The formula was derived with an anti-restoring spring convention. With the
/// restoring springs used by [`crate::dynamics`], the numerically assembled
/// determinant equals the negative of this value (see
/// [`kalman_submatrix_determinant`]).
pub fn bent_submatrix_determinant(alpha0: f64, params: &SwimmerParams) -> f64 {
    let (eta, xi, ell, m3) = (params.eta, params.xi, params.ell, params.m[2]);
    let numerator = 108.0
        * m3
        * m3
        * params.kappa
        * (-9.0 * eta * xi * (19.0 * eta + 54.0 * xi) * alpha0.cos()
            - 2.0 * bent_xi_term(alpha0, params) * (eta + 2.0 * xi))
        * alpha0.sin().powi(3);
    let base = bent_denominator_base(alpha0, params);
    numerator / (ell.powi(7) * eta * eta * base * base)
}

/// The same determinant computed from the assembled linearization at
/// `(0, 0, 0, 0, α₀)`.
pub fn kalman_submatrix_determinant(params: &SwimmerParams) -> Result<f64, ControllabilityError> {
    let lin = linearize(&params.equilibrium(0.0, 0.0, 0.0), params)?;
    Ok(kalman_matrix(&lin).leading_submatrix_determinant())
}

/// Everything `check-controllability` prints for one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllabilityReport {
    pub equilibrium: SwimmerState,
    /// Row-major rows of `A`, `B` and `K`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub kalman: Vec<Vec<f64>>,
    pub partial: PartialControllability,
    /// First row of `K` vanishes identically (the aligned-rest case).
    pub first_row_zero: bool,
    pub closed_form_determinant: f64,
    pub numeric_determinant: f64,
}

impl ControllabilityReport {
    /// `numeric / closed form`, or `None` when the closed form is zero.
    pub fn determinant_ratio(&self) -> Option<f64> {
        (self.closed_form_determinant != 0.0)
            .then(|| self.numeric_determinant / self.closed_form_determinant)
    }
}

fn rows<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> Vec<Vec<f64>> {
    (0..R)
        .map(|i| (0..C).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Linearizes at `equilibrium` and runs the partial rank test on `p` rows.
pub fn analyze_controllability(
    equilibrium: &SwimmerState,
    params: &SwimmerParams,
    p: usize,
    rank_rel_tol: f64,
) -> Result<ControllabilityReport, ControllabilityError> {
    let lin = linearize(equilibrium, params)?;
    let kalman = kalman_matrix(&lin);
    let partial = partial_controllability(&kalman, p, rank_rel_tol)?;
    Ok(ControllabilityReport {
        equilibrium: *equilibrium,
        a: rows(&lin.a),
        b: rows(&lin.b),
        kalman: rows(&kalman.k),
        partial,
        first_row_zero: kalman.k.row(0).iter().all(|&v| v == 0.0),
        closed_form_determinant: bent_submatrix_determinant(params.alpha0, params),
        numeric_determinant: kalman_submatrix_determinant(params)?,
    })
}
