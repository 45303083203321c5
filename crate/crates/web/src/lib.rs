//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Everything crosses the boundary as flat `f64` arrays so the page needs no
//! glue beyond what `wasm-bindgen` generates. The computations live in
//! [`demo`], which is plain Rust and tested natively.

use wasm_bindgen::prelude::*;

pub mod demo;

pub use demo::ROW_WIDTH;

/// Sampled closed-loop run; see [`demo::TrackingRun`] for the row layout.
#[wasm_bindgen]
pub struct TrackingRun(demo::TrackingRun);

#[wasm_bindgen]
impl TrackingRun {
    /// `completed`, `singular_abort` or `integrator_failure`.
    #[wasm_bindgen(getter)]
    pub fn status(&self) -> String {
        self.0.status.to_string()
    }

    #[wasm_bindgen(getter)]
    pub fn t_stop(&self) -> f64 {
        self.0.t_stop
    }

    #[wasm_bindgen(getter)]
    pub fn tracking_error(&self) -> f64 {
        self.0.tracking_error
    }

    #[wasm_bindgen(getter)]
    pub fn row_width(&self) -> usize {
        ROW_WIDTH
    }

    pub fn rows(&self) -> Vec<f64> {
        self.0.rows.clone()
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub fn determinant_grid(alpha0: f64, n: usize) -> Result<Vec<f64>, JsError> {
    demo::determinant_grid(alpha0, n).map_err(js)
}

#[wasm_bindgen]
pub fn track_line(
    alpha0: f64,
    heading: f64,
    speed: f64,
    duration: f64,
    samples: usize,
) -> Result<TrackingRun, JsError> {
    demo::track_line(alpha0, heading, speed, duration, samples)
        .map(TrackingRun)
        .map_err(js)
}

#[wasm_bindgen]
pub fn track_circle(
    alpha0: f64,
    heading: f64,
    radius: f64,
    rate: f64,
    turns: f64,
    samples: usize,
) -> Result<TrackingRun, JsError> {
    demo::track_circle(alpha0, heading, radius, rate, turns, samples)
        .map(TrackingRun)
        .map_err(js)
}

#[wasm_bindgen]
pub fn controllability_sweep(n: usize) -> Result<Vec<f64>, JsError> {
    demo::controllability_sweep(n).map_err(js)
}
