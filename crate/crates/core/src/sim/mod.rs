//! Time integration of the closed-loop system.

pub mod closed_loop;
pub mod energy;
pub mod engine;
pub mod integrator;
pub mod trace;

pub use energy::{passivity_monitor, PassivityReport, PassivityTolerance};
pub use engine::{simulate, Accelerations, ConstantSetpoints, Controls, Engine, Model, SetpointSource, SimConfig};
pub use integrator::{integrate_step, Integrator, OdeSystem};
pub use trace::{SimTrace, SubsystemEnergy, TraceRow};
