//! Cascaded impedance controllers for the UAV, the manipulator and the
//! gripper, plus the high-gain attitude loop that makes the reduced
//! translational UAV model valid.

use nalgebra::DMatrix;

use crate::contact::{GraspMatrix, GripperGeometry, N_CONTACTS};
use crate::dynamics::gravity_axis;
use crate::error::ControlError;
use crate::mission::Mission;
use crate::spatial::{pinv, vee, Mat3, Pose, Rot3, Vec3, Wrench};

/// Diagonal stiffness and damping of a Cartesian impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    pub stiffness: Vec3,
    pub damping: Vec3,
}

impl ImpedanceGains {
    pub fn isotropic(k: f64, d: f64) -> Self {
        Self { stiffness: Vec3::repeat(k), damping: Vec3::repeat(d) }
    }

    pub fn stiffness_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.stiffness)
    }

    pub fn damping_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.damping)
    }

    pub fn validate(&self, name: &str, errors: &mut Vec<String>) {
        if !self.stiffness.iter().chain(self.damping.iter()).all(|&v| v > 0.0) {
            errors.push(format!("{name}: stiffness and damping entries must be > 0"));
        }
    }
}

/// Scalar impedance of the gripper DOF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarGains {
    pub stiffness: f64,
    pub damping: f64,
}

impl ScalarGains {
    pub fn validate(&self, name: &str, errors: &mut Vec<String>) {
        if !(self.stiffness > 0.0 && self.damping > 0.0) {
            errors.push(format!("{name}: stiffness and damping must be > 0"));
        }
    }
}

/// SO(3) PD gains per unit inertia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeGains {
    pub k_r: f64,
    pub k_w: f64,
}

/// Constant forces the gripper applies while idle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperIdle {
    /// Opening force held in free flight, N.
    pub open_hold: f64,
    /// Closing force held after the grasp, N.
    pub closed_hold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub uav: ImpedanceGains,
    pub manipulator: ImpedanceGains,
    pub gripper: ScalarGains,
    pub attitude: AttitudeGains,
    pub idle: GripperIdle,
    /// Heading held by the attitude loop, radians (0 faces `+x^i`).
    pub yaw: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            uav: ImpedanceGains::isotropic(8.0, 5.0),
            manipulator: ImpedanceGains::isotropic(50.0, 8.0),
            gripper: ScalarGains { stiffness: 100.0, damping: 5.0 },
            attitude: AttitudeGains { k_r: 100.0, k_w: 20.0 },
            idle: GripperIdle { open_hold: 0.2, closed_hold: 0.5 },
            yaw: 0.0,
        }
    }
}

/// Gravity compensation terms for the three impedance laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedForward {
    /// `u_FF_uav` in `F_i`.
    pub uav: Vec3,
    /// `u_FF_man` in `F_m`.
    pub manipulator: Vec3,
    /// `u_FF_h`, scalar along the aperture.
    pub gripper: f64,
}

/// Masses carried below each controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadMasses {
    pub manipulator: f64,
    pub phalanges: f64,
    pub object: f64,
}

/// Feed-forward for the given mission. Dock keeps the free-flight values;
/// the object weight is only compensated once it has left the wall.
pub fn feed_forward(
    mission: Mission,
    masses: &PayloadMasses,
    g: f64,
    gravity_m: &Vec3,
    object_gravity_gripper: f64,
) -> FeedForward {
    let carried_obj = if mission == Mission::AerialGrasp { masses.object } else { 0.0 };
    FeedForward {
        uav: (masses.manipulator + masses.phalanges + carried_obj) * g * gravity_axis(),
        manipulator: (masses.phalanges + carried_obj) * gravity_m,
        gripper: if mission == Mission::AerialGrasp { object_gravity_gripper } else { 0.0 },
    }
}

/// Aperture force balancing the object weight when carried: the weight
/// wrench is distributed over the contacts with `G⁺` and projected on the
/// synergy. `object_in_ee` is the rotation of `F_o` in `F_e`.
pub fn gripper_weight_feed_forward(
    grasp: &GraspMatrix,
    frames_rot: &[Rot3; N_CONTACTS],
    geometry: &GripperGeometry,
    object_in_ee: &Rot3,
    weight: &Wrench,
) -> f64 {
    let w = nalgebra::DVector::from_vec(vec![
        weight.force.x,
        weight.force.y,
        weight.force.z,
        weight.moment.x,
        weight.moment.y,
        weight.moment.z,
    ]);
    let f_c = grasp.pinv() * w;
    let j = geometry.synergy_jacobian();
    (0..N_CONTACTS)
        .map(|i| {
            let local = Vec3::new(f_c[3 * i], f_c[3 * i + 1], f_c[3 * i + 2]);
            let f_e = object_in_ee.apply(&frames_rot[i].apply(&local));
            Vec3::new(j[3 * i], j[3 * i + 1], j[3 * i + 2]).dot(&f_e)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoints {
    /// `p_b^{*i}`
    pub uav_position: Vec3,
    /// `p_e^{*m}`
    pub ee_position: Vec3,
    /// `p_f^{*e}`, desired finger aperture.
    pub finger_position: f64,
    pub object_tracking_enabled: bool,
    /// Set when the tracked wall point was outside the workspace.
    pub tracking_clamped: bool,
}

/// `u_uav = -K(p - p*) - D·ṗ - u_FF`.
pub fn uav_control(position: &Vec3, velocity: &Vec3, setpoint: &Vec3, gains: &ImpedanceGains, ff: &Vec3) -> Vec3 {
    -gains.stiffness.component_mul(&(position - setpoint)) - gains.damping.component_mul(velocity) - ff
}

/// Thrust magnitude and desired attitude realizing
/// `f_p^b·R_b^i·[0,0,-1]ᵀ = u - m·g·ẑ^i` with the heading held at `yaw`.
pub fn thrust_attitude_from_u(u: &Vec3, mass: f64, g: f64, yaw: f64) -> Result<(f64, Rot3), ControlError> {
    let thrust_vec = u - mass * g * gravity_axis();
    let thrust = thrust_vec.norm();
    if thrust <= 1e-9 * (1.0 + mass * g) {
        return Err(ControlError::DegenerateThrust);
    }
    let z_b = -thrust_vec / thrust;
    let heading = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let y_raw = z_b.cross(&heading);
    if y_raw.norm() < 1e-9 {
        return Err(ControlError::DegenerateThrust);
    }
    let y_b = y_raw.normalize();
    let x_b = y_b.cross(&z_b);
    Ok((thrust, Rot3::from_matrix_unchecked(Mat3::from_columns(&[x_b, y_b, z_b]))))
}

/// Attitude error `½·vee(R*ᵀR - RᵀR*)`.
pub fn attitude_error(current: &Rot3, desired: &Rot3) -> Vec3 {
    let r = current.matrix();
    let rd = desired.matrix();
    0.5 * vee(&(rd.transpose() * r - r.transpose() * rd))
}

/// High-authority attitude torque `J(-k_R·e_R - k_ω·ω) - τ_reaction`, where
/// `reaction` is the moment the manipulator and gripper impose on the body.
pub fn attitude_authority(
    current: &Rot3,
    rate: &Vec3,
    desired: &Rot3,
    gains: &AttitudeGains,
    inertia: &Mat3,
    reaction: &Vec3,
) -> Vec3 {
    let e = attitude_error(current, desired);
    inertia * (-gains.k_r * e - gains.k_w * rate) - reaction
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorCommand {
    /// Impedance force `u_man` in `F_m`.
    pub u_man: Vec3,
    /// Force the delta applies to the end-effector, `u_man + η_man`.
    pub actuator_force: Vec3,
    /// Resulting load on the UAV base, `-actuator_force`.
    pub reaction_force: Vec3,
}

/// `u_man = -K(p - p*) - D·ṗ - u_FF` with the holding term `η_man` added so
/// the arm behaves as `m·p̈ = u_man + F_ext`.
pub fn manipulator_control(
    position: &Vec3,
    velocity: &Vec3,
    setpoint: &Vec3,
    gains: &ImpedanceGains,
    ff: &Vec3,
    eta_man: &Vec3,
) -> ManipulatorCommand {
    let u_man = -gains.stiffness.component_mul(&(position - setpoint)) - gains.damping.component_mul(velocity) - ff;
    let actuator_force = u_man + eta_man;
    ManipulatorCommand { u_man, actuator_force, reaction_force: -actuator_force }
}

/// Finger coordinate and rate recovered from the stacked contact-point
/// positions through the pseudoinverse of the synergy map.
pub fn finger_coordinates(geometry: &GripperGeometry, aperture: f64, aperture_rate: f64) -> (f64, f64) {
    let j = geometry.synergy_jacobian();
    let j_pinv: DMatrix<f64> = pinv(&j);
    let x = geometry.stacked_points(aperture);
    let x_dot = &j * aperture_rate;
    ((&j_pinv * x)[0], (&j_pinv * x_dot)[0])
}

/// Actuator force on the aperture DOF. In dock the impedance law
/// `u_h = -K_h(p_f - p_f*) - D_h·ṗ_f - u_FF_h` is active; otherwise the
/// gripper idles open (free flight) or closed (aerial grasp).
pub fn gripper_control(
    mission: Mission,
    aperture: f64,
    aperture_rate: f64,
    setpoint: f64,
    gains: &ScalarGains,
    idle: &GripperIdle,
    ff: f64,
    geometry: &GripperGeometry,
) -> f64 {
    match mission {
        Mission::FreeFlight => idle.open_hold,
        Mission::AerialGrasp => -idle.closed_hold - ff,
        Mission::Dock => {
            let (p_f, v_f) = finger_coordinates(geometry, aperture, aperture_rate);
            -gains.stiffness * (p_f - setpoint) - gains.damping * v_f - ff
        }
    }
}

/// Desired end-effector position: the wall target seen from the measured
/// UAV pose, clamped to the workspace; returns the nominal point when
/// tracking is off. The flag reports clamping.
pub fn object_tracking_setpoint(
    uav_pose: &Pose,
    mount: &Pose,
    target: &Vec3,
    nominal: &Vec3,
    workspace: (&Vec3, &Vec3),
    enabled: bool,
) -> (Vec3, bool) {
    if !enabled {
        return (*nominal, false);
    }
    let base = uav_pose.compose(mount);
    let local = base.inverse().transform_point(target);
    let clamped = local.zip_zip_map(workspace.0, workspace.1, |v, lo, hi| v.clamp(lo, hi));
    let was_clamped = clamped != local;
    (clamped, was_clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{default_mount_rotation, gravity_in, gravity_term, STANDARD_GRAVITY as G};
    use proptest::prelude::*;

    #[test]
    fn uav_law_examples() {
        let gains = ImpedanceGains::isotropic(4.0, 1.0);
        let z = Vec3::zeros();
        assert_eq!(uav_control(&Vec3::new(1.0, 2.0, 3.0), &z, &Vec3::new(1.0, 2.0, 3.0), &gains, &z), z);
        assert_eq!(uav_control(&Vec3::new(1.0, 0.0, 0.0), &z, &z, &gains, &z), Vec3::new(-4.0, 0.0, 0.0));
    }

    #[test]
    fn aerial_grasp_feed_forward_adds_object_weight() {
        let masses = PayloadMasses { manipulator: 0.3, phalanges: 0.03, object: 0.1 };
        let g_m = gravity_in(&default_mount_rotation(), G);
        let free = feed_forward(Mission::FreeFlight, &masses, G, &g_m, 0.0);
        let dock = feed_forward(Mission::Dock, &masses, G, &g_m, 0.0);
        let grasp = feed_forward(Mission::AerialGrasp, &masses, G, &g_m, 0.0);
        assert_eq!(free, dock);
        assert!(((grasp.uav - free.uav).z - 0.981).abs() < 1e-12);
        assert!((grasp.manipulator - free.manipulator - 0.1 * g_m).norm() < 1e-12);
    }

    #[test]
    fn hover_thrust_and_level_attitude() {
        let (f, r) = thrust_attitude_from_u(&Vec3::zeros(), 1.3, G, 0.0).unwrap();
        assert!((f - 1.3 * G).abs() < 1e-12);
        assert_eq!(*r.matrix(), Mat3::identity());
    }

    #[test]
    fn lateral_command_tilts_forty_five_degrees() {
        let m = 1.3;
        let (f, r) = thrust_attitude_from_u(&Vec3::new(m * G, 0.0, 0.0), m, G, 0.0).unwrap();
        assert!((f - m * G * 2f64.sqrt()).abs() < 1e-12);
        let thrust_dir = r.apply(&Vec3::new(0.0, 0.0, -1.0));
        let tilt = thrust_dir.dot(&Vec3::new(0.0, 0.0, -1.0)).acos();
        assert!((tilt - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(Rot3::from_matrix(*r.matrix()).is_some());
    }

    #[test]
    fn gravity_cancelling_command_is_degenerate() {
        let m = 1.3;
        let u = Vec3::new(0.0, 0.0, m * G);
        assert_eq!(thrust_attitude_from_u(&u, m, G, 0.0), Err(ControlError::DegenerateThrust));
    }

    #[test]
    fn attitude_at_reference_is_zero_torque() {
        let j = Mat3::from_diagonal(&Vec3::new(0.03, 0.03, 0.05));
        let r = Rot3::from_axis_angle(&Vec3::new(0.1, 0.3, 0.9), 0.3);
        let gains = AttitudeGains { k_r: 20.0, k_w: 4.0 };
        assert_eq!(attitude_authority(&r, &Vec3::zeros(), &r, &gains, &j, &Vec3::zeros()), Vec3::zeros());
        let m = attitude_authority(&r, &Vec3::zeros(), &r, &gains, &j, &Vec3::new(0.1, 0.0, 0.0));
        assert_eq!(m, Vec3::new(-0.1, 0.0, 0.0));
    }

    /// Rigid body about one axis with an uncompensated disturbance.
    fn simulate_attitude(disturbance: Vec3, initial: Rot3, t_end: f64) -> Vec<(f64, Rot3, Vec3)> {
        let j = Mat3::from_diagonal(&Vec3::new(0.03, 0.03, 0.05));
        let j_inv = j.try_inverse().unwrap();
        let gains = AttitudeGains { k_r: 20.0, k_w: 4.0 };
        let dt = 1e-4;
        let mut r = initial;
        let mut w = Vec3::zeros();
        let mut out = vec![];
        let steps = (t_end / dt).round() as usize;
        for k in 0..steps {
            let m = attitude_authority(&r, &w, &Rot3::identity(), &gains, &j, &Vec3::zeros()) + disturbance;
            let w_dot = j_inv * (m - w.cross(&(j * w)));
            w += dt * w_dot;
            r = Rot3::orthonormalize(&(r.matrix() * (Mat3::identity() + crate::spatial::skew(&(w * dt)))));
            out.push(((k + 1) as f64 * dt, r, w));
        }
        out
    }

    #[test]
    fn constant_disturbance_settles_at_bounded_offset() {
        // steady state: J·k_R·e_R = m_d  →  e_R = m_d / (J·k_R)
        let m_d = Vec3::new(0.01, 0.0, 0.0);
        let traj = simulate_attitude(m_d, Rot3::identity(), 6.0);
        let (_, r, _) = traj.last().unwrap();
        let e = attitude_error(r, &Rot3::identity());
        let expected = 0.01 / (0.03 * 20.0);
        assert!((e.x - expected).abs() < 1e-4 * expected + 1e-9, "{} vs {}", e.x, expected);
        let j = Mat3::from_diagonal(&Vec3::new(0.03, 0.03, 0.05));
        let gains = AttitudeGains { k_r: 20.0, k_w: 4.0 };
        let torque = attitude_authority(r, &Vec3::zeros(), &Rot3::identity(), &gains, &j, &Vec3::zeros());
        assert!((torque + m_d).norm() < 1e-4 * m_d.norm());
    }

    #[test]
    fn small_step_decays_at_linearized_rate() {
        // θ̈ + k_ω θ̇ + k_R θ = 0: envelope e^{-k_ω t / 2}
        let angle = 0.01;
        let traj = simulate_attitude(Vec3::zeros(), Rot3::from_axis_angle(&Vec3::x(), angle), 4.0);
        let amp = |t0: f64, t1: f64| {
            traj.iter()
                .filter(|(t, _, _)| *t >= t0 && *t < t1)
                .map(|(_, r, _)| r.angle_to(&Rot3::identity()))
                .fold(0.0, f64::max)
        };
        // successive peaks are one damped period apart
        let wd = (20.0f64 - 4.0).sqrt();
        let period = 2.0 * std::f64::consts::PI / wd;
        let a0 = amp(0.5, 0.5 + period);
        let a1 = amp(0.5 + period, 0.5 + 2.0 * period);
        let log_dec = (a0 / a1).ln();
        let expected = 2.0 * period;
        assert!((log_dec - expected).abs() < 0.02 * expected, "{log_dec} vs {expected}");
    }

    #[test]
    fn arm_at_setpoint_outputs_holding_force() {
        let g_m = gravity_in(&default_mount_rotation(), G);
        let eta = gravity_term(0.3, &g_m);
        let gains = ImpedanceGains::isotropic(50.0, 8.0);
        let p = Vec3::new(0.06, 0.0, 0.02);
        let cmd = manipulator_control(&p, &Vec3::zeros(), &p, &gains, &Vec3::zeros(), &eta);
        assert_eq!(cmd.u_man, Vec3::zeros());
        assert_eq!(cmd.actuator_force, eta);
        assert_eq!(cmd.reaction_force, -eta);
    }

    #[test]
    fn arm_step_response_matches_second_order_solution() {
        // m·p̈ + D·ṗ + K·(p - p*) = 0 with m = 0.5, K = 50, D = 8, unit-free 1-D box
        let (m, k, d) = (0.5, 50.0, 8.0);
        let gains = ImpedanceGains::isotropic(k, d);
        let target = Vec3::new(0.02, 0.0, 0.0);
        let (mut p, mut v) = (Vec3::zeros(), Vec3::zeros());
        let dt = 1e-5;
        let wn = (k / m).sqrt();
        let zeta = d / (2.0 * (k * m).sqrt());
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let exact = |t: f64| {
            let e0 = -0.02;
            let c = zeta * wn * e0 / wd;
            0.02 + (-zeta * wn * t).exp() * (e0 * (wd * t).cos() + c * (wd * t).sin())
        };
        let mut max_err: f64 = 0.0;
        for k_step in 1..=100_000 {
            let accel = |p: &Vec3, v: &Vec3| {
                manipulator_control(p, v, &target, &gains, &Vec3::zeros(), &Vec3::zeros()).actuator_force / m
            };
            // RK2 (Heun)
            let a1 = accel(&p, &v);
            let (p1, v1) = (p + dt * v, v + dt * a1);
            let a2 = accel(&p1, &v1);
            p += 0.5 * dt * (v + v1);
            v += 0.5 * dt * (a1 + a2);
            max_err = max_err.max((p.x - exact(k_step as f64 * dt)).abs());
        }
        assert!(max_err < 1e-8, "max error {max_err}");
    }

    #[test]
    fn gripper_law_examples() {
        let geo = GripperGeometry::default();
        let gains = ScalarGains { stiffness: 100.0, damping: 5.0 };
        let idle = GripperIdle { open_hold: 0.2, closed_hold: 0.5 };
        let u = gripper_control(Mission::Dock, 0.02, 0.0, 0.02, &gains, &idle, 0.3, &geo);
        assert!((u + 0.3).abs() < 1e-12);
        let u = gripper_control(Mission::Dock, 0.03, 0.0, 0.02, &gains, &idle, 0.0, &geo);
        assert!((u + 1.0).abs() < 1e-12);
        assert_eq!(gripper_control(Mission::FreeFlight, 0.01, 0.4, 0.02, &gains, &idle, 0.0, &geo), 0.2);
        assert_eq!(gripper_control(Mission::AerialGrasp, 0.01, 0.0, 0.02, &gains, &idle, 0.0, &geo), -0.5);
    }

    #[test]
    fn finger_coordinates_are_synergy_weighted_mean() {
        let geo = GripperGeometry::default();
        let (p, v) = finger_coordinates(&geo, 0.0234, -0.1);
        assert!((p - 0.0234).abs() < 1e-12);
        assert!((v + 0.1).abs() < 1e-12);
    }

    #[test]
    fn tracking_setpoint_examples() {
        let mount = Pose::new(Vec3::new(0.2, 0.0, 0.05), default_mount_rotation());
        let nominal = Vec3::new(0.06, 0.0, 0.02);
        let ws = (Vec3::new(0.0, -0.05, 0.0), Vec3::new(0.12, 0.05, 0.05));
        let uav = Pose::from_position(Vec3::new(1.0, 0.0, -1.0));
        let target = uav.compose(&mount).transform_point(&nominal);
        let (sp, clamped) = object_tracking_setpoint(&uav, &mount, &target, &nominal, (&ws.0, &ws.1), true);
        assert!((sp - nominal).norm() < 1e-12 && !clamped);
        // 10 mm further from the wall: reach extends 10 mm along z_m
        let far = Pose::from_position(Vec3::new(0.99, 0.0, -1.0));
        let (sp, _) = object_tracking_setpoint(&far, &mount, &target, &nominal, (&ws.0, &ws.1), true);
        assert!((sp - (nominal + Vec3::new(0.0, 0.0, 0.01))).norm() < 1e-12);
        // far beyond reach is clamped
        let very_far = Pose::from_position(Vec3::new(0.5, 0.0, -1.0));
        let (sp, clamped) = object_tracking_setpoint(&very_far, &mount, &target, &nominal, (&ws.0, &ws.1), true);
        assert!(clamped && sp.z == 0.05);
        let (sp, clamped) = object_tracking_setpoint(&very_far, &mount, &target, &nominal, (&ws.0, &ws.1), false);
        assert_eq!(sp, nominal);
        assert!(!clamped);
    }

    fn vec3(s: f64) -> impl Strategy<Value = Vec3> {
        (-s..s, -s..s, -s..s).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn impedance_laws_are_translation_equivariant(p in vec3(2.0), sp in vec3(2.0), v in vec3(1.0), c in vec3(5.0)) {
            let gains = ImpedanceGains { stiffness: Vec3::new(8.0, 9.0, 10.0), damping: Vec3::new(5.0, 4.0, 3.0) };
            let ff = Vec3::new(0.0, 0.0, 3.2);
            let a = uav_control(&p, &v, &sp, &gains, &ff);
            let b = uav_control(&(p + c), &v, &(sp + c), &gains, &ff);
            prop_assert!((a - b).norm() < 1e-9);
            let a = manipulator_control(&p, &v, &sp, &gains, &ff, &Vec3::zeros()).u_man;
            let b = manipulator_control(&(p + c), &v, &(sp + c), &gains, &ff, &Vec3::zeros()).u_man;
            prop_assert!((a - b).norm() < 1e-9);
        }

        #[test]
        fn impedance_laws_are_affine(e1 in vec3(1.0), e2 in vec3(1.0), v1 in vec3(1.0), v2 in vec3(1.0)) {
            let gains = ImpedanceGains::isotropic(8.0, 5.0);
            let ff = Vec3::new(0.1, 0.2, 0.3);
            let z = Vec3::zeros();
            let u = |e: &Vec3, v: &Vec3| uav_control(e, v, &z, &gains, &ff) + ff;
            prop_assert!((u(&(e1 + e2), &(v1 + v2)) - u(&e1, &v1) - u(&e2, &v2)).norm() < 1e-9);
            prop_assert_eq!(uav_control(&z, &z, &z, &gains, &ff), -ff);
        }

        #[test]
        fn desired_attitude_realizes_thrust_vector(u in vec3(10.0), yaw in -3.0..3.0f64) {
            let m = 1.3;
            if let Ok((f, r)) = thrust_attitude_from_u(&u, m, G, yaw) {
                let realized = f * r.apply(&Vec3::new(0.0, 0.0, -1.0));
                prop_assert!((realized - (u - m * G * Vec3::z())).norm() < 1e-9);
                prop_assert!(Rot3::from_matrix(*r.matrix()).is_some());
            }
        }
    }
}
