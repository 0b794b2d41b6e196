//! Satellite ADCS simulation toolkit comparing two geomagnetic field models —
//! a direct dipole and IGRF-13 — across two control tasks: EKF-based attitude
//! stabilization with a reaction-wheel tetrahedron, and B-dot magnetorquer
//! unloading of accumulated wheel momentum.
//!
//! Everything is deterministic and seedable: a scenario config plus a seed
//! reproduces a run byte for byte.
//!
//! # Conventions
//!
//! * Quaternions are Hamilton, scalar-first. A frame quaternion `q_a2b` is the
//!   rotation carrying frame *a* onto frame *b*; coordinates of a vector map
//!   with the conjugate sandwich, `v_b = q̃ ⊗ v_a ⊗ q` ([`Quaternion::transform`]).
//!   With that choice the kinematics take the familiar form
//!   `q̇ = ½ q ⊗ (0, ω_rel)`.
//! * The orbital frame has x along velocity, z radial away from Earth, and y
//!   completing the right-handed triad (the orbit normal for a circular orbit).
//! * The truth state quaternion is orbital→body; body rates are relative to
//!   inertial, expressed in body axes. A body perfectly tracking the orbital
//!   frame therefore spins at the mean motion about its y axis.
//! * All magnetic fields are tesla internally; the IGRF coefficient file is
//!   converted from nT at load.

pub mod actuators;
pub mod control;
pub mod estimation;
pub mod geomag;
pub mod math;
pub mod metrics;
pub mod orbit;
pub mod quaternion;
pub mod scenario;
pub mod sensors;
pub mod sim;
pub mod sun;
pub mod time;
pub mod vehicle;

pub use math::{Mat3, Vec3};
pub use quaternion::Quaternion;
pub use scenario::ScenarioConfig;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("coefficient file parse error at line {line}: {msg}")]
    CoefficientParse { line: usize, msg: String },

    #[error("date {0} outside the supported range")]
    DateOutOfRange(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("singular matrix in {0}")]
    SingularMatrix(String),

    #[error("non-finite {what} at t = {t} s")]
    NonFinite { what: String, t: f64 },

    #[error("estimator divergence at t = {t} s: {msg}")]
    EstimatorDivergence { t: f64, msg: String },

    #[error("unloading plan is empty: {0}")]
    EmptyPlan(String),

    #[error("telemetry error: {0}")]
    Telemetry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
