//! Scenario files.
//!
//! Scenarios are TOML documents. Every section and key is optional and falls
//! back to the defaults listed in the README; unknown keys are rejected.
//! Vectors are written as three-element arrays.

use serde::{Deserialize, Serialize};

use crate::contact::{ContactParams, GripperGeometry};
use crate::control::{AttitudeGains, ControllerGains, GripperIdle, ImpedanceGains, ScalarGains};
use crate::dynamics::{
    default_mount_rotation, GripperParams, GyroModel, ManipulatorParams, ObjectParams, SystemState, UavParams,
    STANDARD_GRAVITY,
};
use crate::sim::{Integrator, Model, SimConfig};
use crate::spatial::{Mat3, Pose, Vec3};

fn v(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub seed: u64,
    pub divergence_limit: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self { dt: d.dt, t_end: d.t_end, integrator: d.integrator, seed: 0, divergence_limit: d.divergence_limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavSection {
    pub mass: f64,
    /// Principal moments of inertia, kg·m².
    pub inertia: [f64; 3],
    pub d_arm: f64,
    pub c_ratio: f64,
    /// Rotor inertia for the gyroscopic model; zero disables it.
    pub rotor_inertia: f64,
    pub thrust_coefficient: f64,
}

impl Default for UavSection {
    fn default() -> Self {
        let d = UavParams::default();
        Self {
            mass: d.mass,
            inertia: [d.inertia[(0, 0)], d.inertia[(1, 1)], d.inertia[(2, 2)]],
            d_arm: d.d_arm,
            c_ratio: d.c_ratio,
            rotor_inertia: 0.0,
            thrust_coefficient: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulatorSection {
    pub mass: f64,
    /// Base origin in the body frame.
    pub mount_position: [f64; 3],
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
}

impl Default for ManipulatorSection {
    fn default() -> Self {
        let d = ManipulatorParams::default();
        Self {
            mass: d.mass,
            mount_position: d.mount.position.into(),
            workspace_min: d.workspace_min.into(),
            workspace_max: d.workspace_max.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperSection {
    pub phalange_mass: f64,
    pub aperture_min: f64,
    pub aperture_max: f64,
    pub palm_radius: f64,
    pub proximal_axial: f64,
    pub distal_axial: f64,
    pub proximal_synergy: f64,
    pub distal_synergy: f64,
}

impl Default for GripperSection {
    fn default() -> Self {
        let p = GripperParams::default();
        let g = GripperGeometry::default();
        Self {
            phalange_mass: p.phalange_mass,
            aperture_min: p.aperture_min,
            aperture_max: p.aperture_max,
            palm_radius: g.palm_radius,
            proximal_axial: g.proximal_axial,
            distal_axial: g.distal_axial,
            proximal_synergy: g.proximal_synergy,
            distal_synergy: g.distal_synergy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectSection {
    pub mass: f64,
    /// Object centre on the wall, inertial frame.
    pub position: [f64; 3],
    pub com_offset: [f64; 3],
    pub radius: f64,
    /// Outward wall normal, inertial frame.
    pub wall_normal: [f64; 3],
    pub breakaway_force: f64,
}

impl Default for ObjectSection {
    fn default() -> Self {
        let d = ObjectParams::default();
        let m = Model::default();
        Self {
            mass: d.mass,
            position: d.attach_pose.position.into(),
            com_offset: d.com_offset.into(),
            radius: d.radius,
            wall_normal: m.wall_normal.into(),
            breakaway_force: m.breakaway_force,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactSection {
    pub stiffness: f64,
    pub exponent: f64,
    pub damping: f64,
    pub friction: f64,
    pub v_reg: f64,
}

impl From<ContactParams> for ContactSection {
    fn from(p: ContactParams) -> Self {
        Self { stiffness: p.stiffness, exponent: p.exponent, damping: p.damping, friction: p.friction, v_reg: p.v_reg }
    }
}

impl From<ContactSection> for ContactParams {
    fn from(c: ContactSection) -> Self {
        Self { stiffness: c.stiffness, exponent: c.exponent, damping: c.damping, friction: c.friction, v_reg: c.v_reg }
    }
}

impl Default for ContactSection {
    fn default() -> Self {
        ContactParams::default().into()
    }
}

fn default_end_stop() -> ContactSection {
    Model::default().end_stop.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsSection {
    pub uav_stiffness: [f64; 3],
    pub uav_damping: [f64; 3],
    pub manipulator_stiffness: [f64; 3],
    pub manipulator_damping: [f64; 3],
    pub gripper_stiffness: f64,
    pub gripper_damping: f64,
    pub attitude_kr: f64,
    pub attitude_kw: f64,
    pub open_hold: f64,
    pub closed_hold: f64,
    pub yaw: f64,
}

impl Default for GainsSection {
    fn default() -> Self {
        let g = ControllerGains::default();
        Self {
            uav_stiffness: g.uav.stiffness.into(),
            uav_damping: g.uav.damping.into(),
            manipulator_stiffness: g.manipulator.stiffness.into(),
            manipulator_damping: g.manipulator.damping.into(),
            gripper_stiffness: g.gripper.stiffness,
            gripper_damping: g.gripper.damping,
            attitude_kr: g.attitude.k_r,
            attitude_kw: g.attitude.k_w,
            open_hold: g.idle.open_hold,
            closed_hold: g.idle.closed_hold,
            yaw: g.yaw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionSection {
    /// Per-phalange normal force that counts as loaded, N.
    pub grasp_threshold: f64,
    pub grasp_hold_time: f64,
}

impl Default for MissionSection {
    fn default() -> Self {
        let m = Model::default();
        Self { grasp_threshold: m.grasp_threshold, grasp_hold_time: m.grasp_hold_time }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub uav_position: [f64; 3],
    pub ee_position: [f64; 3],
    /// Starting aperture; omitted means resting open against the stop.
    pub aperture: Option<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { uav_position: [0.0, 0.0, -1.0], ee_position: [0.05, 0.0, 0.02], aperture: None }
    }
}

/// A timed reference point. With `step = true` the reference jumps to
/// `position` at `t`; otherwise it moves linearly from the previous point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: [f64; 3],
    #[serde(default)]
    pub step: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarWaypoint {
    pub t: f64,
    pub value: f64,
    #[serde(default)]
    pub step: bool,
}

/// Interval during which the end-effector reference follows the object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingWindow {
    pub t_on: f64,
    pub t_off: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    /// UAV position references, inertial frame.
    pub waypoints: Vec<Waypoint>,
    /// End-effector references in the manipulator base frame.
    pub manipulator_waypoints: Vec<Waypoint>,
    pub finger_waypoints: Vec<ScalarWaypoint>,
    /// Optional speed cap on moving references, m/s.
    pub max_speed: Option<f64>,
    pub tracking: Vec<TrackingWindow>,
    /// Offset from the object centre to the tracked point, inertial frame.
    pub tracking_offset: [f64; 3],
    /// Blend time into and out of a tracking window.
    pub tracking_ramp: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            waypoints: Vec::new(),
            manipulator_waypoints: Vec::new(),
            finger_waypoints: Vec::new(),
            max_speed: None,
            tracking: Vec::new(),
            tracking_offset: [0.0; 3],
            tracking_ramp: 0.5,
        }
    }
}

/// Random force on the UAV, resampled every `hold` seconds from a seeded
/// generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    pub enabled: bool,
    /// Standard deviation per axis, N.
    pub force_std: f64,
    /// Constant bias force, N.
    pub bias: [f64; 3],
    pub hold: f64,
    pub t_on: f64,
    pub t_off: f64,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        Self { enabled: false, force_std: 0.0, bias: [0.0; 3], hold: 0.05, t_on: 0.0, t_off: f64::MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub csv: String,
    pub metrics: String,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), csv: "trace.csv".into(), metrics: "metrics.json".into(), plots: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PassivitySection {
    pub step_coeff: f64,
    pub impact_fraction: f64,
    pub settle_time: f64,
}

impl Default for PassivitySection {
    fn default() -> Self {
        let t = crate::sim::PassivityTolerance::default();
        Self { step_coeff: t.step_coeff, impact_fraction: t.impact_fraction, settle_time: t.settle_time }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub gravity: f64,
    pub sim: SimSection,
    pub uav: UavSection,
    pub manipulator: ManipulatorSection,
    pub gripper: GripperSection,
    pub object: ObjectSection,
    pub contact: ContactSection,
    #[serde(default = "default_end_stop")]
    pub end_stop: ContactSection,
    pub gains: GainsSection,
    pub mission: MissionSection,
    pub initial: InitialSection,
    pub trajectory: TrajectorySection,
    pub disturbance: DisturbanceSection,
    pub passivity: PassivitySection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            gravity: STANDARD_GRAVITY,
            sim: SimSection::default(),
            uav: UavSection::default(),
            manipulator: ManipulatorSection::default(),
            gripper: GripperSection::default(),
            object: ObjectSection::default(),
            contact: ContactSection::default(),
            end_stop: default_end_stop(),
            gains: GainsSection::default(),
            mission: MissionSection::default(),
            initial: InitialSection::default(),
            trajectory: TrajectorySection::default(),
            disturbance: DisturbanceSection::default(),
            passivity: PassivitySection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(errors))
    }
}

fn check_times<'a>(name: &str, times: impl Iterator<Item = &'a f64>, errors: &mut Vec<String>) {
    let times: Vec<f64> = times.copied().collect();
    for (i, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            errors.push(format!(
                "{name}: times must be strictly increasing, but entry {} (t = {}) is not after entry {} (t = {})",
                i + 1,
                w[1],
                i,
                w[0]
            ));
        }
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        errors.push(format!("{name}: time {t} must be finite and >= 0"));
    }
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Every semantic problem in the configuration.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let s = &self.sim;
        if !(s.dt > 0.0) {
            errors.push(format!("sim.dt must be > 0 (got {})", s.dt));
        }
        if !(s.t_end > s.dt) {
            errors.push(format!("sim.t_end must exceed sim.dt (got t_end = {}, dt = {})", s.t_end, s.dt));
        }
        if !(s.divergence_limit > 0.0) {
            errors.push("sim.divergence_limit must be > 0".into());
        }
        if self.uav.rotor_inertia < 0.0 || !(self.uav.thrust_coefficient > 0.0) {
            errors.push("uav: rotor_inertia must be >= 0 and thrust_coefficient > 0".into());
        }
        self.model().validate(&mut errors);

        let t = &self.trajectory;
        check_times("trajectory.waypoints", t.waypoints.iter().map(|w| &w.t), &mut errors);
        check_times("trajectory.manipulator_waypoints", t.manipulator_waypoints.iter().map(|w| &w.t), &mut errors);
        check_times("trajectory.finger_waypoints", t.finger_waypoints.iter().map(|w| &w.t), &mut errors);
        if let Some(v) = t.max_speed {
            if !(v > 0.0) {
                errors.push(format!("trajectory.max_speed must be > 0 (got {v})"));
            }
        }
        if !(t.tracking_ramp >= 0.0) {
            errors.push("trajectory.tracking_ramp must be >= 0".into());
        }
        for (i, w) in t.tracking.iter().enumerate() {
            if !(w.t_on >= 0.0 && w.t_on < w.t_off && w.t_off <= s.t_end) {
                errors.push(format!(
                    "trajectory.tracking[{i}]: window ({}, {}) must satisfy 0 <= t_on < t_off <= t_end = {}",
                    w.t_on, w.t_off, s.t_end
                ));
            }
        }
        for (i, w) in t.tracking.windows(2).enumerate() {
            if w[1].t_on < w[0].t_off {
                errors.push(format!("trajectory.tracking[{}] overlaps tracking[{i}]", i + 1));
            }
        }
        let d = &self.disturbance;
        if d.enabled && !(d.hold > 0.0 && d.force_std >= 0.0) {
            errors.push("disturbance: hold must be > 0 and force_std >= 0".into());
        }
        if let Some(a) = self.initial.aperture {
            if !a.is_finite() {
                errors.push("initial.aperture must be finite".into());
            }
        }
        let p = &self.passivity;
        if !(p.step_coeff > 0.0 && p.impact_fraction >= 0.0 && p.settle_time >= 0.0) {
            errors.push("passivity: step_coeff must be > 0, impact_fraction and settle_time >= 0".into());
        }
        errors
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            integrator: self.sim.integrator,
            divergence_limit: self.sim.divergence_limit,
        }
    }

    pub fn model(&self) -> Model {
        let u = &self.uav;
        let gyro = if u.rotor_inertia > 0.0 {
            GyroModel::RotorMomentum { rotor_inertia: u.rotor_inertia, thrust_coefficient: u.thrust_coefficient }
        } else {
            GyroModel::Zero
        };
        let g = &self.gains;
        let gr = &self.gripper;
        Model {
            gravity: self.gravity,
            uav: UavParams {
                mass: u.mass,
                inertia: Mat3::from_diagonal(&v(u.inertia)),
                d_arm: u.d_arm,
                c_ratio: u.c_ratio,
                gyro,
            },
            manipulator: ManipulatorParams {
                mass: self.manipulator.mass,
                mount: Pose::new(v(self.manipulator.mount_position), default_mount_rotation()),
                workspace_min: v(self.manipulator.workspace_min),
                workspace_max: v(self.manipulator.workspace_max),
            },
            gripper: GripperParams {
                phalange_mass: gr.phalange_mass,
                aperture_min: gr.aperture_min,
                aperture_max: gr.aperture_max,
                ..GripperParams::default()
            },
            geometry: GripperGeometry {
                palm_radius: gr.palm_radius,
                proximal_axial: gr.proximal_axial,
                distal_axial: gr.distal_axial,
                proximal_synergy: gr.proximal_synergy,
                distal_synergy: gr.distal_synergy,
                ..GripperGeometry::default()
            },
            object: ObjectParams {
                mass: self.object.mass,
                attach_pose: Pose::from_position(v(self.object.position)),
                com_offset: v(self.object.com_offset),
                radius: self.object.radius,
            },
            contact: self.contact.into(),
            end_stop: self.end_stop.into(),
            gains: ControllerGains {
                uav: ImpedanceGains { stiffness: v(g.uav_stiffness), damping: v(g.uav_damping) },
                manipulator: ImpedanceGains { stiffness: v(g.manipulator_stiffness), damping: v(g.manipulator_damping) },
                gripper: ScalarGains { stiffness: g.gripper_stiffness, damping: g.gripper_damping },
                attitude: AttitudeGains { k_r: g.attitude_kr, k_w: g.attitude_kw },
                idle: GripperIdle { open_hold: g.open_hold, closed_hold: g.closed_hold },
                yaw: g.yaw,
            },
            wall_normal: v(self.object.wall_normal),
            breakaway_force: self.object.breakaway_force,
            grasp_threshold: self.mission.grasp_threshold,
            grasp_hold_time: self.mission.grasp_hold_time,
        }
    }

    pub fn initial_state(&self) -> SystemState {
        let model = self.model();
        let aperture = self.initial.aperture.unwrap_or_else(|| model.open_rest_aperture());
        SystemState::at_rest(v(self.initial.uav_position), v(self.initial.ee_position), aperture, model.object.attach_pose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let cfg = parse_scenario("[uav]\nmass = 1.5\n[manipulator]\nmass = 0.25\n").unwrap();
        assert_eq!(cfg.uav.mass, 1.5);
        assert_eq!(cfg.manipulator.mass, 0.25);
        let d = ScenarioConfig::default();
        assert_eq!(cfg.gains, d.gains);
        assert_eq!(cfg.sim, d.sim);
        assert_eq!(cfg.contact, d.contact);
        assert_eq!(cfg.model().uav.mass, 1.5);
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(parse_scenario("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = parse_scenario("[uav]\nmass = 1.0\nmasss = 2.0\n").unwrap_err();
        match err {
            ConfigError::Parse { line, column, message } => {
                assert_eq!(line, 3);
                assert_eq!(column, 1);
                assert!(message.contains("masss"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let err = parse_scenario("[sim]\ndt = 0.001\nt_end = = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn decreasing_waypoints_name_the_pair() {
        let text = r#"
[[trajectory.waypoints]]
t = 0.0
position = [0.0, 0.0, -1.0]
[[trajectory.waypoints]]
t = 3.0
position = [1.0, 0.0, -1.0]
[[trajectory.waypoints]]
t = 2.0
position = [1.0, 1.0, -1.0]
"#;
        let err = parse_scenario(text).unwrap_err();
        let ConfigError::Invalid(list) = err else { panic!() };
        assert_eq!(list.len(), 1);
        assert!(list[0].contains("entry 2 (t = 2)") && list[0].contains("entry 1 (t = 3)"), "{}", list[0]);
    }

    #[test]
    fn all_semantic_errors_are_listed() {
        let text = "[sim]\ndt = -1.0\n[uav]\nmass = 0.0\n[contact]\nfriction = -0.1\n";
        let ConfigError::Invalid(list) = parse_scenario(text).unwrap_err() else { panic!() };
        assert!(list.len() >= 3, "{list:?}");
        assert!(list.iter().any(|e| e.contains("sim.dt")));
        assert!(list.iter().any(|e| e.contains("uav.mass")));
        assert!(list.iter().any(|e| e.contains("contact.friction")));
    }

    #[test]
    fn tracking_window_outside_run_is_invalid() {
        let text = "[sim]\nt_end = 5.0\n[[trajectory.tracking]]\nt_on = 4.0\nt_off = 6.0\n";
        let ConfigError::Invalid(list) = parse_scenario(text).unwrap_err() else { panic!() };
        assert!(list[0].contains("tracking[0]"));
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let mut cfg = ScenarioConfig::default();
        cfg.trajectory.waypoints.push(Waypoint { t: 1.0, position: [0.1, 0.2, -1.0], step: true });
        cfg.trajectory.max_speed = Some(0.3);
        cfg.initial.aperture = Some(0.03);
        let text = cfg.to_toml();
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(parse_scenario(&back.to_toml()).unwrap(), back);
    }
}
