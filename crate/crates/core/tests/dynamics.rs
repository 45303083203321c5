mod common;

use std::f64::consts::PI;

use common::{cofactor_inverse, fields_from_inverse, quadrature_mobility, rel_err, rng};
use nalgebra::{Vector2, Vector5};
use rand::Rng;
use swimmer_core::integrators::{IntegratorOptions, Method};
use swimmer_core::model::rotation_block;
use swimmer_core::tracking::simulate_open_loop;
use swimmer_core::{
    assemble_generalized_force, build_mobility_matrix, control_vector_fields, state_derivative,
    tracking_determinant, ControlField, SwimmerParams, SwimmerState,
};

fn table1() -> SwimmerParams {
    SwimmerParams::table1(PI / 3.0)
}

fn max_rel_entry_err(a: &nalgebra::Matrix5<f64>, b: &nalgebra::Matrix5<f64>) -> f64 {
    // Entries that vanish analytically are compared against the matrix scale.
    let scale = a.amax();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-13 * scale))
        .fold(0.0, f64::max)
}

#[test]
fn mobility_matches_quadrature_at_reference_shape() {
    let p = table1();
    let m = build_mobility_matrix(0.5, 1.0, &p).m;
    let q = quadrature_mobility(0.5, 1.0, &p, 8);
    assert!(max_rel_entry_err(&m, &q) <= 1e-10, "{m}\n{q}");
}

#[test]
fn mobility_matches_quadrature_at_random_shapes() {
    let p = table1();
    let mut r = rng(11);
    for _ in 0..50 {
        let a1 = r.gen_range(-PI..PI);
        let a2 = r.gen_range(-PI..PI);
        let err = max_rel_entry_err(
            &build_mobility_matrix(a1, a2, &p).m,
            &quadrature_mobility(a1, a2, &p, 8),
        );
        assert!(err <= 1e-10, "({a1}, {a2}): {err:e}");
    }
}

#[test]
fn mobility_ignores_pose() {
    // M is built in the body frame; the pose only enters through R_θ.
    let p = table1();
    let s = SwimmerState::new(3.0, -2.0, 1.1, 0.4, -0.2);
    let z = state_derivative(&s, &ControlField::new(5.0, -3.0), &p).unwrap();
    let s0 = SwimmerState::new(0.0, 0.0, 0.0, 0.4, -0.2);
    let z0 = state_derivative(&s0, &ControlField::new(5.0, -3.0), &p).unwrap();
    assert!((z - rotation_block(1.1) * z0).amax() <= 1e-12 * z0.amax());
}

#[test]
fn determinant_negative_on_grid() {
    let p = table1();
    let n = 101;
    let lo = -PI + 0.01;
    let step = 2.0 * (PI - 0.01) / (n - 1) as f64;
    let mut violations = 0;
    for i in 0..n {
        for j in 0..n {
            let det = build_mobility_matrix(lo + i as f64 * step, lo + j as f64 * step, &p).det_m;
            if !(det < 0.0) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn straight_shape_torque_row() {
    let p = table1();
    let h_perp = 7.5;
    let y = assemble_generalized_force(
        &SwimmerState::new(0.0, 0.0, 0.3, 0.0, 0.0),
        &ControlField::new(0.0, h_perp),
        &p,
    );
    let expected = -h_perp * (p.m[0] + p.m[1] + p.m[2]);
    assert!((y.magnetic[2] - expected).abs() <= 1e-12 * expected.abs());
}

/// Magnetic rows against the printed closed forms; elastic rows against the
/// restoring-spring convention (`+κα₁`, `+κ(α₂−α₀)` on the right-hand side).
#[test]
fn generalized_force_rows_match_closed_forms() {
    let mut r = rng(5);
    for _ in 0..1000 {
        let mut p = table1();
        p.alpha0 = r.gen_range(-3.0..3.0);
        let s = SwimmerState::new(
            r.gen_range(-50.0..50.0),
            r.gen_range(-50.0..50.0),
            r.gen_range(-10.0..10.0),
            r.gen_range(-3.1..3.1),
            r.gen_range(-3.1..3.1),
        );
        let h = ControlField::new(r.gen_range(-1e3..1e3), r.gen_range(-1e3..1e3));
        let y = assemble_generalized_force(&s, &h, &p);
        let [m1, m2, m3] = p.m;
        let (a1, a12) = (s.alpha1, s.alpha1 + s.alpha2);
        let sin_sum = m2 * a1.sin() + m3 * a12.sin();
        let cos_sum = m2 * a1.cos() + m3 * a12.cos();
        let magnetic = [
            h.h_par * sin_sum - h.h_perp * (m1 + cos_sum),
            h.h_par * sin_sum - h.h_perp * cos_sum,
            h.h_par * m3 * a12.sin() - h.h_perp * m3 * a12.cos(),
        ];
        let elastic = [0.0, p.kappa * s.alpha1, p.kappa * (s.alpha2 - p.alpha0)];
        assert_eq!(y.y[0], 0.0);
        assert_eq!(y.y[1], 0.0);
        for k in 0..3 {
            let scale = 1.0 + magnetic[k].abs();
            assert!((y.magnetic[2 + k] - magnetic[k]).abs() <= 1e-12 * scale);
            assert!((y.elastic[2 + k] - elastic[k]).abs() <= 1e-12 * (1.0 + elastic[k].abs()));
            assert!(
                (y.y[2 + k] - magnetic[k] - elastic[k]).abs() <= 1e-12 * (scale + elastic[k].abs())
            );
        }
    }
}

#[test]
fn generalized_force_from_independent_cross_products() {
    // Σ Mᵢ eᵢ × H evaluated with lab-frame vectors, no frame helpers.
    let p = table1();
    let mut r = rng(6);
    for _ in 0..200 {
        let (th, a1, a2) = (
            r.gen_range(-4.0..4.0),
            r.gen_range(-3.0..3.0),
            r.gen_range(-3.0..3.0),
        );
        let lab = Vector2::new(r.gen_range(-50.0..50.0), r.gen_range(-50.0..50.0));
        let h = ControlField::from_lab(
            swimmer_core::LabField {
                h_x: lab[0],
                h_y: lab[1],
            },
            th,
        );
        let angles = [th, th + a1, th + a1 + a2];
        let tm: Vec<f64> = (0..3)
            .map(|i| p.m[i] * (angles[i].cos() * lab[1] - angles[i].sin() * lab[0]))
            .collect();
        let y = assemble_generalized_force(&SwimmerState::new(0.0, 0.0, th, a1, a2), &h, &p);
        let expected = [-(tm[0] + tm[1] + tm[2]), -(tm[1] + tm[2]), -tm[2]];
        for k in 0..3 {
            assert!((y.magnetic[2 + k] - expected[k]).abs() <= 1e-11 * (1.0 + expected[k].abs()));
        }
    }
}

#[test]
fn control_fields_match_cofactor_inverse() {
    let mut r = rng(7);
    let p = table1();
    let mut shapes = vec![(0.0, p.alpha0), (0.4, -0.9)];
    shapes.extend((0..30).map(|_| (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0))));
    for (a1, a2) in shapes {
        let inv = cofactor_inverse(&build_mobility_matrix(a1, a2, &p).m);
        let (f0, f1, f2) = fields_from_inverse(&inv, a1, a2, &p);
        let fields = control_vector_fields(a1, a2, &p).unwrap();
        let close =
            |a: &Vector5<f64>, b: &Vector5<f64>| (a - b).amax() <= 1e-9 * b.amax().max(1e-300);
        assert!(close(&fields.f1, &f1), "F1 at ({a1}, {a2})");
        assert!(close(&fields.f2, &f2), "F2 at ({a1}, {a2})");
        if f0.amax() > 0.0 {
            assert!(close(&fields.f0, &f0), "F0 at ({a1}, {a2})");
        }
    }
    // F₂ at the equilibrium is a genuine nonzero vector.
    let f2 = control_vector_fields(0.0, p.alpha0, &p).unwrap().f2;
    assert!(f2.iter().all(|v| v.abs() > 0.0));
}

#[test]
fn tracking_determinant_matches_cofactor_path() {
    let p = table1();
    let (a1, a2) = (0.4, -0.9);
    let inv = cofactor_inverse(&build_mobility_matrix(a1, a2, &p).m);
    let (_, f1, f2) = fields_from_inverse(&inv, a1, a2, &p);
    let oracle = f1[0] * f2[1] - f1[1] * f2[0];
    assert!(rel_err(tracking_determinant(a1, a2, &p).unwrap(), oracle) <= 1e-9);
}

#[test]
fn elementary_field_identities() {
    let p = table1();
    let at_eq = control_vector_fields(0.0, p.alpha0, &p).unwrap();
    assert_eq!(at_eq.f0, Vector5::zeros());
    let straight = control_vector_fields(0.0, 0.0, &p).unwrap();
    assert_eq!(straight.f1, Vector5::zeros());
}

#[test]
fn state_derivative_is_equivariant() {
    let mut r = rng(9);
    for _ in 0..1000 {
        let mut p = table1();
        p.alpha0 = r.gen_range(-3.0..3.0);
        let s = SwimmerState::new(
            r.gen_range(-20.0..20.0),
            r.gen_range(-20.0..20.0),
            r.gen_range(-PI..PI),
            r.gen_range(-3.0..3.0),
            r.gen_range(-3.0..3.0),
        );
        let h = ControlField::new(r.gen_range(-1e4..1e4), r.gen_range(-1e4..1e4));
        let z = state_derivative(&s, &h, &p).unwrap();
        let scale = z.amax().max(1e-300);

        let shifted = SwimmerState {
            x: s.x + r.gen_range(-100.0..100.0),
            y: s.y - 7.0,
            ..s
        };
        assert!((state_derivative(&shifted, &h, &p).unwrap() - z).amax() <= 1e-12 * scale);

        // Rotating the swimmer and the lab-frame field together: the body
        // frame field is unchanged and Ż rotates with R_φ.
        let phi = r.gen_range(-PI..PI);
        let rotated = SwimmerState {
            theta: s.theta + phi,
            ..s
        };
        let zr = state_derivative(&rotated, &h, &p).unwrap();
        assert!((zr - rotation_block(phi) * z).amax() <= 1e-12 * scale);
    }
}

#[test]
fn rest_only_at_bent_shape() {
    let p = table1();
    let eq = p.equilibrium(1.0, 2.0, 3.0);
    assert_eq!(
        state_derivative(&eq, &ControlField::ZERO, &p).unwrap(),
        Vector5::zeros()
    );
    let n = 60;
    for i in 0..n {
        for j in 0..n {
            let a1 = -PI + 0.01 + (2.0 * PI - 0.02) * i as f64 / (n - 1) as f64;
            let a2 = -PI + 0.01 + (2.0 * PI - 0.02) * j as f64 / (n - 1) as f64;
            if a1.hypot(a2 - p.alpha0) < 1e-6 {
                continue;
            }
            let z = state_derivative(
                &SwimmerState::new(0.0, 0.0, 0.0, a1, a2),
                &ControlField::ZERO,
                &p,
            )
            .unwrap();
            assert!(z.norm() > 0.0, "at rest at ({a1}, {a2})");
        }
    }
}

#[test]
fn relaxation_to_bent_shape_with_both_methods() {
    let p = table1();
    let start = SwimmerState::new(0.0, 0.0, 0.0, 0.3, p.alpha0 + 0.4);
    let mut finals = vec![];
    for method in [Method::AdaptiveExplicitRk45, Method::TrapezoidalAdaptive] {
        let run = simulate_open_loop(
            &start,
            |_, _| ControlField::ZERO,
            0.01,
            &p,
            &IntegratorOptions::with_method(method),
            Some(100),
        )
        .unwrap();
        let f = run.final_state;
        assert!(f.alpha1.abs() <= 1e-6, "{method:?}: {f:?}");
        assert!((f.alpha2 - p.alpha0).abs() <= 1e-6, "{method:?}: {f:?}");
        finals.push(f);
    }
    assert!((finals[0].alpha1 - finals[1].alpha1).abs() <= 1e-6);
    assert!((finals[0].alpha2 - finals[1].alpha2).abs() <= 1e-6);
}
