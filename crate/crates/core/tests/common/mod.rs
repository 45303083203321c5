//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the assembly code it is used to check: the mobility
//! oracle integrates drag densities numerically, the inverse oracle uses
//! cofactors, and Jacobians come from central differences.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix5, Vector2, Vector5};
use swimmer_core::SwimmerParams;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Hydrodynamic side of the five balance equations, obtained by integrating
/// `f = −ξ u∥ e∥ − η u⊥ e⊥` with `nodes`-point Gauss quadrature per segment.
/// Point velocities come from `∂x_s/∂Z · q` with `∂x_s/∂φⱼ = (ℓ or s) n_j`.
pub fn quadrature_mobility(
    alpha1: f64,
    alpha2: f64,
    p: &SwimmerParams,
    nodes: usize,
) -> Matrix5<f64> {
    let gl = gauss_legendre(nodes);
    let phi = [0.0, alpha1, alpha1 + alpha2];
    let dir = |a: f64| Vector2::new(a.cos(), a.sin());
    let nor = |a: f64| Vector2::new(-a.sin(), a.cos());
    // dφⱼ/d(θ, α₁, α₂)
    let dphi = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]];
    let point = |i: usize, s: f64| -> Vector2<f64> {
        let mut x = Vector2::zeros();
        for j in 0..i {
            x += dir(phi[j]) * p.ell;
        }
        x + dir(phi[i]) * s
    };
    let joint = |i: usize| point(i, 0.0);

    let mut m = Matrix5::zeros();
    for k in 0..5 {
        let mut q = [0.0; 5];
        q[k] = 1.0;
        let mut force = Vector2::zeros();
        let mut torque = [0.0; 3];
        for i in 0..3 {
            for &(xg, wg) in &gl {
                let s = 0.5 * p.ell * (xg + 1.0);
                let w = 0.5 * p.ell * wg;
                let mut u = Vector2::new(q[0], q[1]);
                for j in 0..=i {
                    let lever = if j < i { p.ell } else { s };
                    let rate: f64 = (0..3).map(|c| dphi[j][c] * q[2 + c]).sum();
                    u += nor(phi[j]) * (lever * rate);
                }
                let (e, n) = (dir(phi[i]), nor(phi[i]));
                let f = -e * (p.xi * u.dot(&e)) - n * (p.eta * u.dot(&n));
                let x = point(i, s);
                force += f * w;
                for (r, t) in torque.iter_mut().enumerate() {
                    if i >= r {
                        *t += w * cross(x - joint(r), f);
                    }
                }
            }
        }
        m.set_column(
            k,
            &Vector5::new(force[0], force[1], torque[0], torque[1], torque[2]),
        );
    }
    m
}

fn det_recursive(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 1 {
        return a[(0, 0)];
    }
    (0..n)
        .map(|j| {
            let minor = a.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[(0, j)] * det_recursive(&minor)
        })
        .sum()
}

/// `M⁻¹ = adj(M) / det M` by Laplace expansion.
pub fn cofactor_inverse(m: &Matrix5<f64>) -> Matrix5<f64> {
    let d = DMatrix::from_fn(5, 5, |i, j| m[(i, j)]);
    let det = det_recursive(&d);
    Matrix5::from_fn(|i, j| {
        // (i, j) entry of the inverse is cofactor (j, i) / det
        let minor = d.clone().remove_row(j).remove_column(i);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * det_recursive(&minor) / det
    })
}

/// Control fields rebuilt from an explicit inverse; returns (F₀, F₁, F₂).
pub fn fields_from_inverse(
    inv: &Matrix5<f64>,
    alpha1: f64,
    alpha2: f64,
    p: &SwimmerParams,
) -> (Vector5<f64>, Vector5<f64>, Vector5<f64>) {
    let [m1, m2, m3] = p.m;
    let y_el = Vector5::new(
        0.0,
        0.0,
        0.0,
        p.kappa * alpha1,
        p.kappa * (alpha2 - p.alpha0),
    );
    let y_par = Vector5::new(
        0.0,
        0.0,
        m2 * alpha1.sin() + m3 * (alpha1 + alpha2).sin(),
        m2 * alpha1.sin() + m3 * (alpha1 + alpha2).sin(),
        m3 * (alpha1 + alpha2).sin(),
    );
    let y_perp = -Vector5::new(
        0.0,
        0.0,
        m1 + m2 * alpha1.cos() + m3 * (alpha1 + alpha2).cos(),
        m2 * alpha1.cos() + m3 * (alpha1 + alpha2).cos(),
        m3 * (alpha1 + alpha2).cos(),
    );
    (inv * y_el, inv * y_par, inv * y_perp)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Seeded generator so oracle sweeps are reproducible.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}
