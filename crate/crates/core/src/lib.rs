//! Dynamics, control and simulation of a quadrotor carrying a delta
//! manipulator and an underactuated gripper.

pub mod contact;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod mission;
pub mod scenario;
pub mod sim;
pub mod spatial;

pub use contact::{ContactParams, ContactSet, GraspMatrix, GripperGeometry};
pub use control::{ControllerGains, ImpedanceGains, Setpoints};
pub use dynamics::{GripperParams, ManipulatorParams, ObjectParams, SystemState, UavParams};
pub use error::{ContactError, ControlError, DynamicsError, MissionError, SimError};
pub use mission::Mission;
pub use scenario::{parse_scenario, run_scenario, ScenarioConfig, SummaryMetrics};
pub use sim::{Engine, Integrator, Model, SimConfig, SimTrace, TraceRow};
pub use spatial::{Frame, Mat3, Pose, Rot3, Vec3, Wrench};
