//! Time series emitted by simulations.

use serde::{Deserialize, Serialize};

use crate::model::{ControlField, SwimmerState};

/// Exact CSV header of a [`SimRecord`].
pub const CSV_HEADER: &str = "t,x,y,theta,alpha1,alpha2,h_par,h_perp,h_x,h_y,d_value";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub h_par: f64,
    pub h_perp: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub d_value: f64,
}

impl RecordRow {
    /// Row with body-frame controls; the lab-frame columns are filled by
    /// [`emit_lab_frame_controls`].
    pub fn new(t: f64, state: &SwimmerState, field: &ControlField, d_value: f64) -> Self {
        Self {
            t,
            x: state.x,
            y: state.y,
            theta: state.theta,
            alpha1: state.alpha1,
            alpha2: state.alpha2,
            h_par: field.h_par,
            h_perp: field.h_perp,
            h_x: f64::NAN,
            h_y: f64::NAN,
            d_value,
        }
    }

    pub fn state(&self) -> SwimmerState {
        SwimmerState::new(self.x, self.y, self.theta, self.alpha1, self.alpha2)
    }

    pub fn field(&self) -> ControlField {
        ControlField::new(self.h_par, self.h_perp)
    }

    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.x,
            self.y,
            self.theta,
            self.alpha1,
            self.alpha2,
            self.h_par,
            self.h_perp,
            self.h_x,
            self.h_y,
            self.d_value,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub rows: Vec<RecordRow>,
}

impl SimRecord {
    pub fn push(&mut self, row: RecordRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&RecordRow> {
        self.rows.last()
    }

    /// CSV text with [`CSV_HEADER`], LF line endings and shortest round-trip
    /// float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row.values() {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format!("{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    /// Strictly increasing time column.
    pub fn times_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].t > w[0].t)
    }
}

/// Fills `(h_x, h_y) = r_θ (h_par, h_perp)` on every row.
pub fn emit_lab_frame_controls(record: &mut SimRecord) {
    for row in &mut record.rows {
        let lab = row.field().to_lab(row.theta);
        row.h_x = lab.h_x;
        row.h_y = lab.h_y;
    }
}
