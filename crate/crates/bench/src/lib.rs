//! Shared fixtures for the benchmarks.

use flyhand_core::contact::N_CONTACTS;
use flyhand_core::scenario::ScenarioSource;
use flyhand_core::{Engine, GripperGeometry, Pose, Rot3, ScenarioConfig, Vec3};

/// A hover engine ready to step.
pub fn hover_engine() -> Engine<ScenarioSource> {
    scenario_engine(&ScenarioConfig::default())
}

pub fn scenario_engine(cfg: &ScenarioConfig) -> Engine<ScenarioSource> {
    Engine::new(cfg.model(), cfg.sim_config(), &cfg.initial_state(), ScenarioSource::new(cfg))
}

/// Contact frames on the default gripper at the given aperture.
pub fn contact_frames(aperture: f64) -> [Pose; N_CONTACTS] {
    let geometry = GripperGeometry::default();
    let mut frames = [Pose::identity(); N_CONTACTS];
    for (i, f) in frames.iter_mut().enumerate().skip(1) {
        let p = geometry.phalange_point(i - 1, aperture);
        let tilt = Rot3::from_axis_angle(&Vec3::new(-p.y, p.x, 0.0).normalize(), 0.3 * i as f64);
        *f = Pose::new(p, tilt);
    }
    frames
}
