//! Scenario files: loading, validation, execution and output writing.
//!
//! Scenarios are TOML documents whose keys carry their units (`ell_um`,
//! `kappa_N_um`, ...). Unknown keys are rejected. [`to_toml`] writes the
//! canonical form, which [`parse_scenario`] reads back unchanged.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controllability::{
    analyze_controllability, ControllabilityReport, DEFAULT_RANK_TOLERANCE,
};
use crate::integrators::{IntegratorOptions, Method};
use crate::model::{joint_points, ControlField, LabField, SwimmerParams, SwimmerState};
use crate::record::SimRecord;
use crate::tracking::{
    scan_determinant, simulate_closed_loop, simulate_open_loop, ClosedLoopOptions, ClosedLoopRun,
    DeterminantScan, OpenLoopRun, TrackingOutcome, DEFAULT_EPS_D, INITIAL_POSITION_TOLERANCE,
};
use crate::trajectory::{Circle, Constant, Line, Trajectory, TrajectoryError, WaypointSpline};

/// Process exit code for configuration errors.
pub const EXIT_CONFIG_ERROR: i32 = 4;
/// Process exit code for I/O failures while writing outputs.
pub const EXIT_IO_ERROR: i32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown key: {0}")]
    UnknownKey(String),
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("run failed: {0}")]
    Run(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Write { .. } => EXIT_IO_ERROR,
            _ => EXIT_CONFIG_ERROR,
        }
    }

    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Validation {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OpenLoop,
    ClosedLoop,
    Controllability,
    DeterminantScan,
}

/// Physical parameters in the published units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ParamsConfig {
    pub ell_um: f64,
    pub xi_N_s_m2: f64,
    pub eta_N_s_m2: f64,
    pub m_A_um2: [f64; 3],
    pub kappa_N_um: f64,
    pub alpha0_rad: f64,
}

impl ParamsConfig {
    pub fn table1(alpha0_rad: f64) -> Self {
        Self {
            ell_um: 10.0,
            xi_N_s_m2: 6.2e-3,
            eta_N_s_m2: 12.4e-3,
            m_A_um2: [1.6, 2.4, 3.2],
            kappa_N_um: 8.3e-7,
            alpha0_rad,
        }
    }

    pub fn to_params(&self) -> Result<SwimmerParams, ScenarioError> {
        SwimmerParams::from_table_units(
            self.ell_um,
            self.xi_N_s_m2,
            self.eta_N_s_m2,
            self.m_A_um2,
            self.kappa_N_um,
            self.alpha0_rad,
        )
        .map_err(|e| ScenarioError::invalid("params", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub x_um: f64,
    pub y_um: f64,
    pub theta_rad: f64,
    pub alpha1_rad: f64,
    pub alpha2_rad: f64,
}

impl InitialConfig {
    pub fn state(&self) -> SwimmerState {
        SwimmerState::new(
            self.x_um,
            self.y_um,
            self.theta_rad,
            self.alpha1_rad,
            self.alpha2_rad,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineConfig {
    pub waypoints_um: Vec<[f64; 2]>,
    pub times_s: Vec<f64>,
    #[serde(default)]
    pub start_velocity_um_s: [f64; 2],
    #[serde(default)]
    pub end_velocity_um_s: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum TrajectoryConfig {
    Line(Line),
    Circle(Circle),
    WaypointSpline(SplineConfig),
    Constant(Constant),
}

impl TrajectoryConfig {
    pub fn build(&self) -> Result<Box<dyn Trajectory + Send + Sync>, TrajectoryError> {
        let positive = |v: f64, name| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(TrajectoryError::NonPositive(name))
            }
        };
        let finite = |vs: &[f64], name| {
            if vs.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(TrajectoryError::NonFinite(name))
            }
        };
        Ok(match self {
            Self::Line(l) => {
                positive(l.duration_s, "duration_s")?;
                finite(
                    &[l.start_um[0], l.start_um[1], l.heading_rad, l.speed_um_s],
                    "line",
                )?;
                Box::new(*l)
            }
            Self::Circle(c) => {
                positive(c.radius_um, "radius_um")?;
                positive(c.turns, "turns")?;
                positive(c.angular_rate_rad_s.abs(), "|angular_rate_rad_s|")?;
                finite(
                    &[c.center_um[0], c.center_um[1], c.start_angle_rad],
                    "circle",
                )?;
                Box::new(*c)
            }
            Self::WaypointSpline(s) => {
                finite(
                    &[s.start_velocity_um_s[0], s.start_velocity_um_s[1]],
                    "start_velocity_um_s",
                )?;
                finite(
                    &[s.end_velocity_um_s[0], s.end_velocity_um_s[1]],
                    "end_velocity_um_s",
                )?;
                Box::new(WaypointSpline::new(
                    &s.waypoints_um,
                    &s.times_s,
                    s.start_velocity_um_s,
                    s.end_velocity_um_s,
                )?)
            }
            Self::Constant(c) => {
                positive(c.duration_s, "duration_s")?;
                finite(&c.point_um, "point_um")?;
                Box::new(*c)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFrame {
    /// Components are `(H∥, H⊥)`.
    Body,
    /// Components are `(Hx, Hy)`.
    Lab,
}

/// `offset + amplitude · sin(2π f t + phase)` on `[from_s, to_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct FieldPiece {
    pub from_s: f64,
    pub to_s: f64,
    pub frame: FieldFrame,
    #[serde(default)]
    pub offset_uT: [f64; 2],
    #[serde(default)]
    pub amplitude_uT: [f64; 2],
    #[serde(default)]
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: [f64; 2],
}

/// Piecewise open-loop field; zero outside every piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldProgram {
    pub duration_s: f64,
    #[serde(default)]
    pub pieces: Vec<FieldPiece>,
}

impl FieldProgram {
    /// Body-frame field at time `t` for a swimmer at orientation `theta`.
    pub fn field(&self, t: f64, theta: f64) -> ControlField {
        let Some(piece) = self.pieces.iter().find(|p| p.from_s <= t && t < p.to_s) else {
            return ControlField::ZERO;
        };
        let c = |i: usize| {
            piece.offset_uT[i]
                + piece.amplitude_uT[i] * (TAU * piece.frequency_hz * t + piece.phase_rad[i]).sin()
        };
        match piece.frame {
            FieldFrame::Body => ControlField::new(c(0), c(1)),
            FieldFrame::Lab => ControlField::from_lab(
                LabField {
                    h_x: c(0),
                    h_y: c(1),
                },
                theta,
            ),
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ScenarioError::invalid(
                "field_program.duration_s",
                "must be positive and finite",
            ));
        }
        let mut previous_end = f64::NEG_INFINITY;
        for (i, p) in self.pieces.iter().enumerate() {
            let field = |name: &str| format!("field_program.pieces[{i}].{name}");
            let values = [
                p.from_s,
                p.to_s,
                p.offset_uT[0],
                p.offset_uT[1],
                p.amplitude_uT[0],
                p.amplitude_uT[1],
                p.frequency_hz,
                p.phase_rad[0],
                p.phase_rad[1],
            ];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ScenarioError::invalid(
                    field("*"),
                    "all values must be finite",
                ));
            }
            if !(p.from_s >= 0.0 && p.from_s < p.to_s) {
                return Err(ScenarioError::invalid(
                    field("to_s"),
                    "need 0 <= from_s < to_s",
                ));
            }
            if p.from_s < previous_end {
                return Err(ScenarioError::invalid(
                    field("from_s"),
                    "pieces must be sorted and must not overlap",
                ));
            }
            previous_end = p.to_s;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init_s: f64,
    pub h_min_s: f64,
    pub h_max_s: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::from(IntegratorOptions::default())
    }
}

impl From<IntegratorOptions> for IntegratorConfig {
    fn from(o: IntegratorOptions) -> Self {
        Self {
            method: o.method,
            abs_tol: o.abs_tol,
            rel_tol: o.rel_tol,
            h_init_s: o.h_init,
            h_min_s: o.h_min,
            h_max_s: o.h_max,
            max_steps: o.max_steps,
        }
    }
}

impl IntegratorConfig {
    pub fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            method: self.method,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            h_init: self.h_init_s,
            h_min: self.h_min_s,
            h_max: self.h_max_s,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingConfig {
    /// Abort threshold on `|D|` (internal units).
    pub eps_d: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            eps_d: DEFAULT_EPS_D,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub grid_n: usize,
    pub rank_rel_tol: f64,
    pub partial_rows: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            grid_n: 101,
            rank_rel_tol: DEFAULT_RANK_TOLERANCE,
            partial_rows: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Uniform samples over the run; 0 records every accepted step.
    pub samples: usize,
    /// Times at which to write segment geometry.
    pub snapshot_times_s: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            snapshot_times_s: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub params: ParamsConfig,
    /// Defaults to the bent equilibrium at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_program: Option<FieldProgram>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub tracking: TrackingConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

impl Scenario {
    pub fn swimmer_params(&self) -> Result<SwimmerParams, ScenarioError> {
        self.params.to_params()
    }

    pub fn initial_state(&self) -> SwimmerState {
        match self.initial {
            Some(i) => i.state(),
            None => SwimmerState::new(0.0, 0.0, 0.0, 0.0, self.params.alpha0_rad),
        }
    }

    /// Checks every cross-field invariant.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(ScenarioError::invalid(
                "name",
                "must be non-empty and use only [A-Za-z0-9_-]",
            ));
        }
        let params = self.swimmer_params()?;
        self.integrator
            .options()
            .validate()
            .map_err(|e| ScenarioError::invalid("integrator", e))?;
        if !(self.tracking.eps_d.is_finite() && self.tracking.eps_d >= 0.0) {
            return Err(ScenarioError::invalid(
                "tracking.eps_d",
                "must be finite and >= 0",
            ));
        }
        if self
            .outputs
            .snapshot_times_s
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(ScenarioError::invalid(
                "outputs.snapshot_times_s",
                "times must be finite and >= 0",
            ));
        }
        let initial = self.initial_state();
        match self.mode {
            Mode::ClosedLoop => {
                let cfg = self.trajectory.as_ref().ok_or_else(|| {
                    ScenarioError::invalid("trajectory", "closed_loop mode requires a trajectory")
                })?;
                if self.field_program.is_some() {
                    return Err(ScenarioError::invalid(
                        "field_program",
                        "only allowed in open_loop mode",
                    ));
                }
                initial
                    .validate()
                    .map_err(|e| ScenarioError::invalid("initial", e))?;
                let traj = cfg
                    .build()
                    .map_err(|e| ScenarioError::invalid("trajectory", e))?;
                let start = traj.position(0.0);
                if (initial.position() - start).norm() > INITIAL_POSITION_TOLERANCE {
                    return Err(ScenarioError::invalid(
                        "initial",
                        format!(
                            "position ({}, {}) must equal the trajectory start ({}, {})",
                            initial.x, initial.y, start[0], start[1]
                        ),
                    ));
                }
            }
            Mode::OpenLoop => {
                let program = self.field_program.as_ref().ok_or_else(|| {
                    ScenarioError::invalid(
                        "field_program",
                        "open_loop mode requires a field_program",
                    )
                })?;
                if self.trajectory.is_some() {
                    return Err(ScenarioError::invalid(
                        "trajectory",
                        "only allowed in closed_loop mode",
                    ));
                }
                program.validate()?;
                initial
                    .validate()
                    .map_err(|e| ScenarioError::invalid("initial", e))?;
            }
            Mode::Controllability => {
                self.reject_run_sections()?;
                if !(1..=5).contains(&self.analysis.partial_rows) {
                    return Err(ScenarioError::invalid(
                        "analysis.partial_rows",
                        "must be in 1..=5",
                    ));
                }
                if !(self.analysis.rank_rel_tol.is_finite() && self.analysis.rank_rel_tol > 0.0) {
                    return Err(ScenarioError::invalid(
                        "analysis.rank_rel_tol",
                        "must be positive and finite",
                    ));
                }
                if self.initial.is_some()
                    && (initial.alpha1 != 0.0 || initial.alpha2 != params.alpha0)
                {
                    return Err(ScenarioError::invalid(
                        "initial",
                        "controllability mode needs an equilibrium shape (0, alpha0)",
                    ));
                }
            }
            Mode::DeterminantScan => {
                self.reject_run_sections()?;
                if self.analysis.grid_n < 2 {
                    return Err(ScenarioError::invalid(
                        "analysis.grid_n",
                        "must be at least 2",
                    ));
                }
            }
        }
        Ok(())
    }

    fn reject_run_sections(&self) -> Result<(), ScenarioError> {
        if self.trajectory.is_some() {
            return Err(ScenarioError::invalid(
                "trajectory",
                "only allowed in closed_loop mode",
            ));
        }
        if self.field_program.is_some() {
            return Err(ScenarioError::invalid(
                "field_program",
                "only allowed in open_loop mode",
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(to_toml(self).as_bytes()))
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    // Syntax errors first, so that they are never reported as schema errors.
    text.parse::<toml::Table>()
        .map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let message = e.to_string();
        if message.contains("unknown field") || message.contains("unknown variant") {
            ScenarioError::UnknownKey(message)
        } else {
            ScenarioError::Parse(message)
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Canonical TOML text of a scenario.
pub fn to_toml(scenario: &Scenario) -> String {
    toml::to_string(scenario).expect("scenarios always serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    SingularAbort,
    IntegratorFailure,
}

impl RunStatus {
    /// 0 completed, 2 singular abort, 3 integrator failure.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Completed => 0,
            Self::SingularAbort => 2,
            Self::IntegratorFailure => 3,
        }
    }
}

impl From<TrackingOutcome> for RunStatus {
    fn from(o: TrackingOutcome) -> Self {
        match o {
            TrackingOutcome::Completed => Self::Completed,
            TrackingOutcome::SingularAbort => Self::SingularAbort,
            TrackingOutcome::IntegratorFailure => Self::IntegratorFailure,
        }
    }
}

/// In-memory result of [`execute`].
#[derive(Debug, Clone)]
pub enum ScenarioResult {
    ClosedLoop(ClosedLoopRun),
    OpenLoop(OpenLoopRun),
    Controllability(ControllabilityReport),
    DeterminantScan(DeterminantScan),
}

impl ScenarioResult {
    pub fn status(&self) -> RunStatus {
        match self {
            Self::ClosedLoop(run) => run.status.outcome.into(),
            Self::OpenLoop(run) => run.outcome.into(),
            Self::Controllability(_) | Self::DeterminantScan(_) => RunStatus::Completed,
        }
    }

    pub fn record(&self) -> Option<&SimRecord> {
        match self {
            Self::ClosedLoop(run) => Some(&run.record),
            Self::OpenLoop(run) => Some(&run.record),
            _ => None,
        }
    }
}

/// Runs a validated scenario without touching the file system.
pub fn execute(scenario: &Scenario) -> Result<ScenarioResult, ScenarioError> {
    scenario.validate()?;
    let params = scenario.swimmer_params()?;
    let initial = scenario.initial_state();
    let samples = (scenario.outputs.samples > 0).then_some(scenario.outputs.samples);
    let run_error = |e: &dyn std::fmt::Display| ScenarioError::Run(e.to_string());
    Ok(match scenario.mode {
        Mode::ClosedLoop => {
            let traj = scenario
                .trajectory
                .as_ref()
                .expect("validated")
                .build()
                .map_err(|e| run_error(&e))?;
            let opts = ClosedLoopOptions {
                integrator: scenario.integrator.options(),
                eps_d: scenario.tracking.eps_d,
                samples,
            };
            ScenarioResult::ClosedLoop(
                simulate_closed_loop(&initial, traj.as_ref(), &params, &opts)
                    .map_err(|e| run_error(&e))?,
            )
        }
        Mode::OpenLoop => {
            let program = scenario.field_program.as_ref().expect("validated");
            let run = simulate_open_loop(
                &initial,
                |t, s: &SwimmerState| program.field(t, s.theta),
                program.duration_s,
                &params,
                &scenario.integrator.options(),
                samples,
            )
            .map_err(|e| run_error(&e))?;
            ScenarioResult::OpenLoop(run)
        }
        Mode::Controllability => {
            let eq = params.equilibrium(initial.x, initial.y, initial.theta);
            ScenarioResult::Controllability(
                analyze_controllability(
                    &eq,
                    &params,
                    scenario.analysis.partial_rows,
                    scenario.analysis.rank_rel_tol,
                )
                .map_err(|e| run_error(&e))?,
            )
        }
        Mode::DeterminantScan => ScenarioResult::DeterminantScan(
            scan_determinant(&params, scenario.analysis.grid_n).map_err(|e| run_error(&e))?,
        ),
    })
}

/// Files written and the summary of one scenario run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
    pub result: ScenarioResult,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

fn state_json(s: &SwimmerState) -> serde_json::Value {
    json!({
        "x_um": s.x,
        "y_um": s.y,
        "theta_rad": s.theta,
        "alpha1_rad": s.alpha1,
        "alpha2_rad": s.alpha2,
    })
}

/// Geometry of the three segments at the recorded row nearest to each
/// requested time: `t,point,x_um,y_um` with points `x1, x2, x3, tip`.
pub fn snapshot_csv(record: &SimRecord, t: f64, params: &SwimmerParams) -> Option<String> {
    let row = record
        .rows
        .iter()
        .filter(|r| r.is_finite() || r.state().to_vector().iter().all(|v| v.is_finite()))
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))?;
    let points = joint_points(&row.state(), params);
    let mut out = String::from("t,point,x_um,y_um\n");
    for (name, p) in ["x1", "x2", "x3", "tip"].iter().zip(points.iter()) {
        let _ = writeln!(out, "{:?},{},{:?},{:?}", row.t, name, p[0], p[1]);
    }
    Some(out)
}

fn scan_csv(scan: &DeterminantScan) -> String {
    let mut out = String::from("alpha1,alpha2,d_value\n");
    for (i, a1) in scan.alphas.iter().enumerate() {
        for (j, a2) in scan.alphas.iter().enumerate() {
            let _ = writeln!(out, "{a1:?},{a2:?},{:?}", scan.values[i * scan.grid_n + j]);
        }
    }
    out
}

fn write_file(
    path: PathBuf,
    contents: &str,
    files: &mut Vec<PathBuf>,
) -> Result<(), ScenarioError> {
    std::fs::write(&path, contents).map_err(|source| ScenarioError::Write {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

/// Executes a scenario and writes `<name>.csv`, `<name>.summary.json`,
/// snapshot and scan files into `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunReport, ScenarioError> {
    let started = Instant::now();
    let result = execute(scenario)?;
    let wall_time = started.elapsed().as_secs_f64();
    let params = scenario.swimmer_params()?;
    std::fs::create_dir_all(out_dir).map_err(|source| ScenarioError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let name = &scenario.name;
    let mut files = Vec::new();
    let status = result.status();
    let mut summary = json!({
        "scenario": name,
        "mode": scenario.mode,
        "scenario_sha256": scenario.hash(),
        "params": scenario.params,
        "status": status,
        "exit_code": status.exit_code(),
        "wall_time_s": wall_time,
    });
    let extra = match &result {
        ScenarioResult::ClosedLoop(run) => json!({
            "t_stop_s": run.status.t_stop,
            "min_abs_d": run.status.min_abs_d,
            "max_field_norm_uT": run.status.max_field_norm,
            "tracking_error_um": run.tracking_error,
            "max_feedback_residual": run.max_feedback_residual,
            "eps_d": scenario.tracking.eps_d,
            "accepted_steps": run.accepted_steps,
            "rhs_evaluations": run.evaluations,
            "final_state": run.record.last().map(|r| state_json(&r.state())),
        }),
        ScenarioResult::OpenLoop(run) => json!({
            "t_stop_s": run.t_stop,
            "accepted_steps": run.accepted_steps,
            "final_state": state_json(&run.final_state),
        }),
        ScenarioResult::Controllability(report) => json!({
            "controllability": report,
            "determinant_ratio": report.determinant_ratio(),
        }),
        ScenarioResult::DeterminantScan(scan) => json!({
            "grid_n": scan.grid_n,
            "d_origin": scan.d_origin,
            "exclusion_radius": scan.exclusion_radius,
            "min_abs_d_off_origin": scan.min_abs_off_origin,
            "argmin_off_origin": [scan.argmin_off_origin.0, scan.argmin_off_origin.1],
            "max_abs_d": scan.max_abs,
        }),
    };
    if let (Some(map), serde_json::Value::Object(more)) = (summary.as_object_mut(), extra) {
        map.extend(more);
    }

    if let Some(record) = result.record() {
        write_file(
            out_dir.join(format!("{name}.csv")),
            &record.to_csv(),
            &mut files,
        )?;
        for (k, &t) in scenario.outputs.snapshot_times_s.iter().enumerate() {
            if let Some(csv) = snapshot_csv(record, t, &params) {
                write_file(
                    out_dir.join(format!("{name}.snapshot_{k:03}.csv")),
                    &csv,
                    &mut files,
                )?;
            }
        }
    }
    if let ScenarioResult::DeterminantScan(scan) = &result {
        write_file(
            out_dir.join(format!("{name}.scan.csv")),
            &scan_csv(scan),
            &mut files,
        )?;
    }
    let written: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    if let Some(map) = summary.as_object_mut() {
        map.insert("files".into(), json!(written));
    }
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_file(
        out_dir.join(format!("{name}.summary.json")),
        &text,
        &mut files,
    )?;

    Ok(RunReport {
        status,
        summary,
        files,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "scan"
mode = "determinant_scan"

[params]
ell_um = 10
xi_N_s_m2 = 6.2e-3
eta_N_s_m2 = 12.4e-3
m_A_um2 = [1.6, 2.4, 3.2]
kappa_N_um = 8.3e-7
alpha0_rad = 1.0
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.analysis.grid_n, 101);
        assert_eq!(s.integrator.options(), IntegratorOptions::default());
        assert_eq!(
            s.initial_state(),
            SwimmerState::new(0.0, 0.0, 0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn error_kinds_are_distinct() {
        let syntax = MINIMAL.replace("ell_um = 10", "ell_um = = 10");
        assert!(matches!(
            parse_scenario(&syntax),
            Err(ScenarioError::Parse(_))
        ));
        let unknown = MINIMAL.replace("ell_um = 10", "ell_um = 10\nell_mm = 0.01");
        assert!(matches!(
            parse_scenario(&unknown),
            Err(ScenarioError::UnknownKey(_))
        ));
        let invalid = MINIMAL.replace("ell_um = 10", "ell_um = -10");
        assert!(matches!(
            parse_scenario(&invalid),
            Err(ScenarioError::Validation { .. })
        ));
        let wrong_type = MINIMAL.replace("ell_um = 10", "ell_um = \"ten\"");
        assert!(matches!(
            parse_scenario(&wrong_type),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let unknown = MINIMAL.replace("kappa_N_um", "kappa_Nm");
        let msg = parse_scenario(&unknown).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn piece_lookup_and_lab_frame() {
        let program = FieldProgram {
            duration_s: 1.0,
            pieces: vec![
                FieldPiece {
                    from_s: 0.0,
                    to_s: 0.5,
                    frame: FieldFrame::Body,
                    offset_uT: [1.0, 2.0],
                    amplitude_uT: [0.0; 2],
                    frequency_hz: 0.0,
                    phase_rad: [0.0; 2],
                },
                FieldPiece {
                    from_s: 0.5,
                    to_s: 0.75,
                    frame: FieldFrame::Lab,
                    offset_uT: [1.0, 0.0],
                    amplitude_uT: [0.0; 2],
                    frequency_hz: 0.0,
                    phase_rad: [0.0; 2],
                },
            ],
        };
        assert_eq!(program.field(0.1, 0.3), ControlField::new(1.0, 2.0));
        let h = program.field(0.6, std::f64::consts::FRAC_PI_2);
        assert!((h.h_par - 0.0).abs() < 1e-15 && (h.h_perp + 1.0).abs() < 1e-15);
        assert_eq!(program.field(0.9, 0.0), ControlField::ZERO);
    }
}
