//! Forward dynamics of the cascade: quadrotor, point-mass manipulator,
//! single-DOF gripper and the object contribution.
//!
//! Sign conventions used throughout:
//!
//! * the inertial `z` axis points down, so gravity is `+g·ẑ` and positive
//!   thrust acts along `-ẑ` of the body frame;
//! * every interconnection wrench is the load the downstream body exerts on
//!   the upstream one: `f_man^m` acts on the UAV at the manipulator base,
//!   `f_h^e` acts on the end-effector, `w_obj` acts on the gripper;
//! * gravity terms `η` are holding forces (`η = -m·g` in the local frame), so
//!   a static arm loads the UAV with `-η_man`.

use nalgebra::Matrix4;

use crate::error::DynamicsError;
use crate::mission::Mission;
use crate::spatial::{wrench_transform, Frame, Mat3, Pose, Rot3, Vec3, Wrench};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Gravity direction in the inertial frame (down).
pub fn gravity_axis() -> Vec3 {
    Vec3::z()
}

/// Gravitational acceleration expressed in a frame whose inertial orientation is `r`.
pub fn gravity_in(r: &Rot3, g: f64) -> Vec3 {
    r.transpose().apply(&(gravity_axis() * g))
}

/// Holding force that balances the weight of `mass` (`η = -m·g`).
pub fn gravity_term(mass: f64, gravity_local: &Vec3) -> Vec3 {
    -mass * gravity_local
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GyroModel {
    /// `M_gy = 0`.
    Zero,
    /// `M_gy = Σ J_r·Ω_i·(ω × ẑ^b)` with rotor speeds from `f_i = k_f·Ω_i²`.
    RotorMomentum { rotor_inertia: f64, thrust_coefficient: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavParams {
    pub mass: f64,
    pub inertia: Mat3,
    pub d_arm: f64,
    pub c_ratio: f64,
    pub gyro: GyroModel,
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            mass: 1.3,
            inertia: Mat3::from_diagonal(&Vec3::new(0.03, 0.03, 0.05)),
            d_arm: 0.21,
            c_ratio: 0.0125,
            gyro: GyroModel::Zero,
        }
    }
}

impl UavParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.mass > 0.0) {
            errors.push(format!("uav.mass must be > 0 (got {})", self.mass));
        }
        let sym = (self.inertia - self.inertia.transpose()).abs().max();
        let pd = self.inertia.symmetric_eigenvalues().iter().all(|&e| e > 0.0);
        if sym > 1e-12 || !pd {
            errors.push("uav.inertia must be symmetric positive definite".into());
        }
        if !(self.d_arm > 0.0) {
            errors.push(format!("uav.d_arm must be > 0 (got {})", self.d_arm));
        }
        if !(self.c_ratio > 0.0) {
            errors.push(format!("uav.c_ratio must be > 0 (got {})", self.c_ratio));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorParams {
    pub mass: f64,
    /// Pose of `F_m` in `F_b`.
    pub mount: Pose,
    pub workspace_min: Vec3,
    pub workspace_max: Vec3,
}

/// Base frame axes in the body frame: `x_m` is the arm height (up), `y_m`
/// sideways and `z_m` the forward reach.
pub fn default_mount_rotation() -> Rot3 {
    Rot3::from_columns(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0))
        .expect("mount rotation")
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self {
            mass: 0.3,
            mount: Pose::new(Vec3::new(0.2, 0.0, 0.05), default_mount_rotation()),
            workspace_min: Vec3::new(0.0, -0.05, 0.0),
            workspace_max: Vec3::new(0.120, 0.05, 0.050),
        }
    }
}

impl ManipulatorParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.mass > 0.0) {
            errors.push(format!("manipulator.mass must be > 0 (got {})", self.mass));
        }
        for i in 0..3 {
            if !(self.workspace_min[i] < self.workspace_max[i]) {
                errors.push(format!("manipulator workspace axis {i}: min must be < max"));
            }
        }
    }

    pub fn clamp_to_workspace(&self, p: &Vec3) -> (Vec3, bool) {
        let c = p.zip_zip_map(&self.workspace_min, &self.workspace_max, |v, lo, hi| v.clamp(lo, hi));
        let clamped = c != *p;
        (c, clamped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GripperParams {
    /// Lumped mass of the six phalanges.
    pub phalange_mass: f64,
    pub n_fingers: usize,
    pub phalanges_per_finger: usize,
    pub aperture_min: f64,
    pub aperture_max: f64,
}

impl Default for GripperParams {
    fn default() -> Self {
        Self { phalange_mass: 0.03, n_fingers: 3, phalanges_per_finger: 2, aperture_min: 0.005, aperture_max: 0.05 }
    }
}

impl GripperParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.phalange_mass > 0.0) {
            errors.push(format!("gripper.phalange_mass must be > 0 (got {})", self.phalange_mass));
        }
        if !(self.aperture_min < self.aperture_max) {
            errors.push("gripper.aperture_min must be < aperture_max".into());
        }
        if self.n_fingers != 3 || self.phalanges_per_finger != 2 {
            errors.push("gripper must have three fingers with two phalanges each".into());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectParams {
    pub mass: f64,
    /// Pose of `F_o` in `F_i` while the object is on the wall.
    pub attach_pose: Pose,
    /// Centre of gravity in `F_o`.
    pub com_offset: Vec3,
    /// Radius of the spherical grasp surface.
    pub radius: f64,
}

impl Default for ObjectParams {
    fn default() -> Self {
        Self {
            mass: 0.1,
            attach_pose: Pose::from_position(Vec3::new(1.5, 0.0, -1.0)),
            com_offset: Vec3::zeros(),
            radius: 0.02,
        }
    }
}

impl ObjectParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.mass >= 0.0) {
            errors.push(format!("object.mass must be >= 0 (got {})", self.mass));
        }
        if !(self.radius > 0.0) {
            errors.push(format!("object.radius must be > 0 (got {})", self.radius));
        }
    }
}

/// Full mechanical state of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// `p_b^i`
    pub uav_position: Vec3,
    /// `v^i`
    pub uav_velocity: Vec3,
    /// `R_b^i`
    pub uav_attitude: Rot3,
    /// `ω_b^{b,i}`
    pub uav_rate: Vec3,
    /// `p_e^m`
    pub ee_position: Vec3,
    /// `ṗ_e^m`
    pub ee_velocity: Vec3,
    /// Gripper DOF `s` (finger radial aperture).
    pub aperture: f64,
    pub aperture_rate: f64,
    /// Pose of `F_o` in `F_i`.
    pub object_pose: Pose,
    pub mission: Mission,
}

impl SystemState {
    pub fn at_rest(uav_position: Vec3, ee_position: Vec3, aperture: f64, object_pose: Pose) -> Self {
        Self {
            uav_position,
            uav_velocity: Vec3::zeros(),
            uav_attitude: Rot3::identity(),
            uav_rate: Vec3::zeros(),
            ee_position,
            ee_velocity: Vec3::zeros(),
            aperture,
            aperture_rate: 0.0,
            object_pose,
            mission: Mission::FreeFlight,
        }
    }

    pub fn is_finite(&self) -> bool {
        let vecs = [
            self.uav_position,
            self.uav_velocity,
            self.uav_rate,
            self.ee_position,
            self.ee_velocity,
            self.object_pose.position,
        ];
        vecs.iter().all(|v| v.iter().all(|x| x.is_finite()))
            && self.uav_attitude.matrix().iter().all(|x| x.is_finite())
            && self.aperture.is_finite()
            && self.aperture_rate.is_finite()
    }

    /// Largest absolute value across the state, used for divergence detection.
    pub fn magnitude(&self) -> f64 {
        [
            self.uav_position.amax(),
            self.uav_velocity.amax(),
            self.uav_rate.amax(),
            self.ee_position.amax(),
            self.ee_velocity.amax(),
            self.aperture.abs(),
            self.aperture_rate.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Pose of `F_m` in `F_i`.
    pub fn base_pose(&self, manipulator: &ManipulatorParams) -> Pose {
        Pose::new(self.uav_position, self.uav_attitude).compose(&manipulator.mount)
    }

    /// Pose of `F_e` in `F_i`; the delta keeps the end-effector aligned with its base.
    pub fn ee_pose(&self, manipulator: &ManipulatorParams) -> Pose {
        self.base_pose(manipulator).compose(&Pose::from_position(self.ee_position))
    }

    /// Inertial velocity of the end-effector origin.
    pub fn ee_inertial_velocity(&self, manipulator: &ManipulatorParams) -> Vec3 {
        let r = manipulator.mount.transform_point(&self.ee_position);
        let r_dot = manipulator.mount.rotation.apply(&self.ee_velocity);
        self.uav_velocity + self.uav_attitude.apply(&(self.uav_rate.cross(&r) + r_dot))
    }
}

/// Inputs to the UAV rigid body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavInput {
    /// Total thrust `f_p^b`.
    pub thrust: f64,
    /// Control torque `M_p^b`.
    pub torque: Vec3,
    /// Individual propeller thrusts (only used by the rotor-momentum gyro model).
    pub rotor_thrusts: [f64; 4],
}

fn mixer_matrix(p: &UavParams) -> Matrix4<f64> {
    let (d, c) = (p.d_arm, p.c_ratio);
    Matrix4::new(1.0, 1.0, 1.0, 1.0, 0.0, -d, 0.0, d, d, 0.0, -d, 0.0, -c, c, -c, c)
}

/// Total thrust and body torque produced by the four propellers.
pub fn mixer_forward(thrusts: [f64; 4], params: &UavParams) -> (f64, Vec3) {
    let out = mixer_matrix(params) * nalgebra::Vector4::from(thrusts);
    (out[0], Vec3::new(out[1], out[2], out[3]))
}

/// Propeller thrusts realizing `(thrust, torque)`.
pub fn mixer_inverse(thrust: f64, torque: &Vec3, params: &UavParams) -> Result<[f64; 4], DynamicsError> {
    let (d, c) = (params.d_arm, params.c_ratio);
    if d == 0.0 || c == 0.0 || !d.is_finite() || !c.is_finite() {
        return Err(DynamicsError::SingularAllocation { d_arm: d, c_ratio: c });
    }
    let odd = 0.5 * (thrust - torque.z / c); // f1 + f3
    let even = 0.5 * (thrust + torque.z / c); // f2 + f4
    let f1 = 0.5 * (odd + torque.y / d);
    let f3 = 0.5 * (odd - torque.y / d);
    let f4 = 0.5 * (even + torque.x / d);
    let f2 = 0.5 * (even - torque.x / d);
    Ok([f1, f2, f3, f4])
}

/// Gyroscopic moment of the propellers for the configured model.
pub fn gyro_moment(params: &UavParams, rotor_thrusts: &[f64; 4], rate: &Vec3) -> Vec3 {
    match params.gyro {
        GyroModel::Zero => Vec3::zeros(),
        GyroModel::RotorMomentum { rotor_inertia, thrust_coefficient } => {
            // spin directions follow the reaction-torque row of the mixer
            const SPIN: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];
            let net: f64 = rotor_thrusts
                .iter()
                .zip(SPIN)
                .map(|(f, s)| s * (f.max(0.0) / thrust_coefficient).sqrt())
                .sum();
            rotor_inertia * net * rate.cross(&Vec3::z())
        }
    }
}

/// Linear acceleration `v̇^i` and angular acceleration `ω̇_b^{b,i}` of the UAV.
///
/// `w_man` is the wrench the manipulator exerts on the UAV, in `F_m` about
/// its origin; `mount` is the pose of `F_m` in `F_b`. The moment line is the
/// body-frame Euler equation with the reaction transported to the c.g.
pub fn uav_accel(
    state: &SystemState,
    input: &UavInput,
    w_man: &Wrench,
    params: &UavParams,
    mount: &Pose,
    g: f64,
) -> (Vec3, Vec3) {
    let r_bi = &state.uav_attitude;
    let f_man_b = mount.rotation.apply(&w_man.force);
    let thrust_i = r_bi.apply(&Vec3::new(0.0, 0.0, -input.thrust));
    let v_dot = (params.mass * g * gravity_axis() + thrust_i + r_bi.apply(&f_man_b)) / params.mass;

    let w = state.uav_rate;
    let reaction = wrench_transform(w_man, mount, Frame::Body);
    let torque = -w.cross(&(params.inertia * w))
        + gyro_moment(params, &input.rotor_thrusts, &w)
        + input.torque
        + reaction.moment;
    let w_dot = params.inertia.try_inverse().expect("inertia is positive definite") * torque;
    (v_dot, w_dot)
}

/// Wrench the manipulator exerts on the UAV at its base, in `F_m`.
///
/// `eta_man` is the holding gravity term of the arm, `ee_accel` the absolute
/// end-effector acceleration expressed in `F_m`, `f_h` the load the gripper
/// exerts on the end-effector (in `F_e`) and `ee_in_base` the pose of `F_e`
/// in `F_m`. The arm mass is a point mass at the end-effector.
pub fn manipulator_reaction(
    eta_man: &Vec3,
    mass: f64,
    ee_accel: &Vec3,
    f_h: &Wrench,
    ee_in_base: &Pose,
) -> Wrench {
    let inertial = -eta_man - mass * ee_accel;
    let transmitted = wrench_transform(f_h, ee_in_base, Frame::ManipulatorBase);
    Wrench::new(
        inertial + transmitted.force,
        ee_in_base.position.cross(&inertial) + transmitted.moment,
        Frame::ManipulatorBase,
    )
}

/// Wrench the gripper exerts on the end-effector, in `F_e`:
/// `f_h^e = -η_h + f_phal + R_o^e·f_obj^o` with the object moment transported
/// from `F_o` (`object_in_ee` is the pose of `F_o` in `F_e`).
pub fn gripper_reaction(eta_h: &Vec3, f_phal: &Vec3, w_obj: &Wrench, object_in_ee: &Pose) -> Wrench {
    let transmitted = wrench_transform(w_obj, object_in_ee, Frame::EndEffector);
    Wrench::new(-eta_h + f_phal + transmitted.force, transmitted.moment, Frame::EndEffector)
}

/// Inertial force of the phalanges moving with the end-effector. The radial
/// finger motion is symmetric about the palm axis and cancels in the sum.
pub fn phalange_inertial_force(phalange_mass: f64, ee_accel: &Vec3) -> Vec3 {
    -phalange_mass * ee_accel
}

/// Gravity and inertial wrench of the rigidly grasped object, in `F_o` about its origin.
///
/// `gravity_o` and `accel_o` are the gravitational and absolute accelerations
/// of the object expressed in `F_o`.
pub fn object_inertial_wrench(
    mission: Mission,
    object: &ObjectParams,
    gravity_o: &Vec3,
    accel_o: &Vec3,
) -> Result<Wrench, DynamicsError> {
    if mission != Mission::AerialGrasp {
        return Err(DynamicsError::ObjectNotGrasped(mission));
    }
    let f = object.mass * (gravity_o - accel_o);
    Ok(Wrench::new(f, object.com_offset.cross(&f), Frame::Object))
}
