//! Simulation, controllability analysis and exact trajectory tracking for a
//! three-link magnetized microswimmer whose second spring rests at a nonzero
//! angle.
//!
//! The model is planar and inertia-free: Resistive Force Theory drag on three
//! rigid segments, torsional springs at the two joints, and a uniform magnetic
//! field acting on the segment moments. See [`model`] for unit conventions.

pub mod controllability;
pub mod dynamics;
pub mod integrators;
pub mod model;
pub mod record;
pub mod scenario;
pub mod tracking;
pub mod trajectory;

pub use controllability::{
    analyze_controllability, bent_submatrix_determinant, kalman_matrix, linearize,
    partial_controllability, ControllabilityReport, KalmanMatrix, LinearizedSystem,
};
pub use dynamics::{
    assemble_generalized_force, build_mobility_matrix, control_vector_fields, state_derivative,
    ControlVectorFields, GeneralizedForce, MobilityMatrix,
};
pub use integrators::{integrate, IntegratorOptions, Method};
pub use model::{
    rotation_block, segment_frames, ControlField, LabField, SegmentFrame, SwimmerParams,
    SwimmerState,
};
pub use record::{emit_lab_frame_controls, RecordRow, SimRecord};
pub use scenario::{load_scenario, parse_scenario, run_scenario, Scenario, ScenarioError};
pub use tracking::{
    scan_determinant, simulate_closed_loop, simulate_open_loop, solve_tracking_controls,
    tracking_determinant, ClosedLoopOptions, ClosedLoopRun, DeterminantScan, OpenLoopRun,
    TrackingOutcome, TrackingStatus,
};
pub use trajectory::Trajectory;
