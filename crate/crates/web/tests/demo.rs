use std::f64::consts::PI;

use swimmer_web::demo::{
    controllability_sweep, determinant_grid, track_circle, track_line, ROW_WIDTH,
};

#[test]
fn grid_has_zero_at_origin_cell() {
    let n = 41;
    let d = determinant_grid(PI / 3.0, n).unwrap();
    assert_eq!(d.len(), n * n);
    let centre = d[(n / 2) * n + n / 2];
    assert!(centre.abs() < 1e-12);
    assert!(d.iter().filter(|v| v.abs() > 1.0).count() > n * n / 2);
    assert!(determinant_grid(PI / 3.0, 1).is_err());
    assert!(determinant_grid(4.0, 11).is_err());
}

#[test]
fn circle_run_closes_and_carries_geometry() {
    let run = track_circle(PI / 3.0, -PI / 2.0, 5.0, 2.0 * PI, 1.0, 200).unwrap();
    assert_eq!(run.status, "completed");
    assert_eq!(run.len(), 201);
    assert_eq!(run.rows.len(), 201 * ROW_WIDTH);
    assert!(run.tracking_error < 1e-5);
    let last = run.row(200);
    assert!(last[1].hypot(last[2]) < 1e-5);
    // First joint point is the swimmer position; segments have length ℓ = 10.
    for k in [0, 100, 200] {
        let r = run.row(k);
        assert_eq!((r[11], r[12]), (r[1], r[2]));
        for s in 0..3 {
            let (a, b) = (11 + 2 * s, 13 + 2 * s);
            assert!(((r[b] - r[a]).hypot(r[b + 1] - r[a + 1]) - 10.0).abs() < 1e-9);
        }
    }
}

#[test]
fn line_against_the_bend_aborts() {
    let run = track_line(PI / 3.0, PI, 10.0, 2.0, 400).unwrap();
    assert_eq!(run.status, "singular_abort");
    assert!(run.t_stop < 2.0);
    let ok = track_line(PI / 3.0, PI / 4.0, 10.0, 2.0, 100).unwrap();
    assert_eq!(ok.status, "completed");
    assert!(track_line(PI / 3.0, 0.0, 1.0, 50.0, 100).is_err());
}

#[test]
fn sweep_ranks_and_determinant_ratio() {
    let rows = controllability_sweep(24).unwrap();
    assert_eq!(rows.len(), 24 * 4);
    for r in rows.chunks(4) {
        assert_eq!(r[1], 2.0, "alpha0 = {}", r[0]);
        assert!((r[3] / r[2] + 1.0).abs() < 1e-8);
    }
}
