//! Scenario files: configuration, reference generation, presets and outputs.

pub mod config;
pub mod metrics;
pub mod output;
pub mod presets;
pub mod setpoints;

pub use config::{parse_scenario, ConfigError, ScenarioConfig};
pub use metrics::{summarize, PhaseRms, SummaryMetrics};
pub use output::{emit_outputs, passivity_tolerance, EmittedFiles, OutputError};
pub use presets::{preset, preset_names, preset_source, PRESETS};
pub use setpoints::{generate_setpoints, interpolate, tracking_weight, Disturbance, ScenarioSource};

use crate::error::SimError;
use crate::sim::{Engine, SimTrace};

/// Runs a validated scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimTrace, SimError> {
    let model = cfg.model();
    let initial = cfg.initial_state();
    let mut engine = Engine::new(model, cfg.sim_config(), &initial, ScenarioSource::new(cfg));
    engine.run()?;
    Ok(engine.into_trace())
}
