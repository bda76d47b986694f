use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("mixer is not invertible: arm length {d_arm} m, torque ratio {c_ratio} m")]
    SingularAllocation { d_arm: f64, c_ratio: f64 },
    #[error("object inertial wrench requested in mission state {0:?}")]
    ObjectNotGrasped(crate::mission::Mission),
}

#[derive(Debug, Error, PartialEq)]
pub enum ContactError {
    #[error("negative penetration {0} m passed to the normal contact law")]
    NegativePenetration(f64),
    #[error("dimension mismatch: grasp matrix is {rows}x{cols}, contact vector has {len} entries")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("thrust direction is degenerate (commanded force cancels gravity)")]
    DegenerateThrust,
}

#[derive(Debug, Error, PartialEq)]
pub enum MissionError {
    #[error("inconsistent mission events: {0}")]
    InconsistentEvents(&'static str),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation diverged at t = {time:.6} s: {detail}")]
    Divergence { time: f64, detail: String },
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
