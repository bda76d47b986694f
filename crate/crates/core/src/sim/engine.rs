//! Coupled time-domain simulation of the UAV, delta manipulator, gripper and
//! object.
//!
//! The end-effector is a point mass (arm and phalanges, plus the object once
//! carried). The delta actuator is a force source between the manipulator
//! base and that mass, so the absolute end-effector acceleration follows from
//! the forces on it alone; the load on the UAV is then obtained from the
//! reaction chain and the relative arm acceleration from rigid-body
//! kinematics. Controls and setpoints are held constant over a step.

use serde::Serialize;

use crate::contact::{
    build_grasp_matrix, hunt_crossley_normal, resolve_contacts, ContactParams, ContactSet, GripperGeometry,
    GripperKinematics, WallAttachment, N_CONTACTS,
};
use crate::control::{
    attitude_authority, feed_forward, gripper_control, gripper_weight_feed_forward, manipulator_control,
    thrust_attitude_from_u, uav_control, ControllerGains, PayloadMasses, Setpoints,
};
use crate::dynamics::{
    gravity_in, gravity_term, gripper_reaction, manipulator_reaction, mixer_forward, mixer_inverse,
    object_inertial_wrench, phalange_inertial_force, uav_accel, GripperParams, ManipulatorParams, ObjectParams,
    SystemState, UavInput, UavParams, STANDARD_GRAVITY,
};
use crate::error::SimError;
use crate::mission::{step_mission, GraspMonitor, Mission, MissionState, TransitionEvents};
use crate::sim::energy::{storage_scalar, storage_vec};
use crate::sim::integrator::{integrate_step, Integrator, OdeSystem};
use crate::sim::trace::{SimTrace, SubsystemEnergy, TraceRow};
use crate::spatial::{skew, wrench_transform, Frame, Mat3, Pose, Rot3, Vec3, Wrench};

/// Physical and controller parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub gravity: f64,
    pub uav: UavParams,
    pub manipulator: ManipulatorParams,
    pub gripper: GripperParams,
    pub geometry: GripperGeometry,
    pub object: ObjectParams,
    pub contact: ContactParams,
    /// Penalty law of the workspace and aperture limits.
    pub end_stop: ContactParams,
    pub gains: ControllerGains,
    /// Outward wall normal in `F_i`.
    pub wall_normal: Vec3,
    pub breakaway_force: f64,
    pub grasp_threshold: f64,
    pub grasp_hold_time: f64,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            gravity: STANDARD_GRAVITY,
            uav: UavParams::default(),
            manipulator: ManipulatorParams::default(),
            gripper: GripperParams::default(),
            geometry: GripperGeometry::default(),
            object: ObjectParams::default(),
            contact: ContactParams::default(),
            end_stop: ContactParams { stiffness: 1e5, exponent: 1.5, damping: 5.0, friction: 0.0, v_reg: 1e-3 },
            gains: ControllerGains::default(),
            wall_normal: Vec3::new(-1.0, 0.0, 0.0),
            breakaway_force: 5.0,
            grasp_threshold: 0.1,
            grasp_hold_time: 0.05,
        }
    }
}

impl Model {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.gravity > 0.0) {
            errors.push(format!("gravity must be > 0 (got {})", self.gravity));
        }
        self.uav.validate(errors);
        self.manipulator.validate(errors);
        self.gripper.validate(errors);
        self.geometry.validate(errors);
        self.object.validate(errors);
        self.contact.validate("contact", errors);
        self.end_stop.validate("end_stop", errors);
        if !(self.wall_normal.norm() > 0.0) {
            errors.push("wall_normal must be non-zero".into());
        }
        if !(self.breakaway_force >= 0.0) {
            errors.push("breakaway_force must be >= 0".into());
        }
        if !(self.grasp_hold_time >= 0.0) {
            errors.push("grasp_hold_time must be >= 0".into());
        }
    }

    /// Aperture at which the open-hold force balances the upper end-stop.
    pub fn open_rest_aperture(&self) -> f64 {
        let f = self.gains.idle.open_hold.max(0.0);
        self.gripper.aperture_max + (f / self.end_stop.stiffness).powf(1.0 / self.end_stop.exponent)
    }

    fn masses(&self) -> PayloadMasses {
        PayloadMasses {
            manipulator: self.manipulator.mass,
            phalanges: self.gripper.phalange_mass,
            object: self.object.mass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    /// Any state component beyond this magnitude aborts the run.
    pub divergence_limit: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 10.0, integrator: Integrator::Rk4, divergence_limit: 1e6 }
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Supplies the references each step.
pub trait SetpointSource {
    fn setpoints(&mut self, t: f64, state: &SystemState, model: &Model) -> Setpoints;
    /// External force on the UAV in `F_i`, held over the step.
    fn disturbance(&mut self, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
}

/// Fixed references for the whole run.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSetpoints(pub Setpoints);

impl SetpointSource for ConstantSetpoints {
    fn setpoints(&mut self, _t: f64, _state: &SystemState, _model: &Model) -> Setpoints {
        self.0
    }
}

/// Commands held over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub thrust: f64,
    pub torque: Vec3,
    pub rotor_thrusts: [f64; 4],
    pub u_uav: Vec3,
    pub attitude_command: Rot3,
    pub actuator_force: Vec3,
    pub u_h: f64,
}

/// Everything a derivative evaluation needs besides the state.
#[derive(Debug, Clone)]
struct Held {
    mission: Mission,
    controls: Controls,
    setpoints: Setpoints,
    /// Pose of `F_o` in `F_i` while on the wall.
    object_pose: Pose,
    /// Pose of `F_o` in `F_e` once grasped.
    grasp_offset: Pose,
    disturbance: Vec3,
}

const N_STATE: usize = 32;
const ACC: usize = 26;

#[derive(Debug, Clone, Copy)]
struct Kin {
    p: Vec3,
    v: Vec3,
    r: Rot3,
    w: Vec3,
    pe: Vec3,
    ve: Vec3,
    s: f64,
    s_dot: f64,
}

fn v3(y: &[f64], i: usize) -> Vec3 {
    Vec3::new(y[i], y[i + 1], y[i + 2])
}

fn put(y: &mut [f64], i: usize, v: &Vec3) {
    y[i..i + 3].copy_from_slice(v.as_slice());
}

fn unpack(y: &[f64]) -> Kin {
    let r = Mat3::from_row_slice(&y[6..15]);
    Kin {
        p: v3(y, 0),
        v: v3(y, 3),
        r: Rot3::from_matrix_unchecked(r),
        w: v3(y, 15),
        pe: v3(y, 18),
        ve: v3(y, 21),
        s: y[24],
        s_dot: y[25],
    }
}

fn pack(st: &SystemState, acc: &[f64; 6]) -> [f64; N_STATE] {
    let mut y = [0.0; N_STATE];
    put(&mut y, 0, &st.uav_position);
    put(&mut y, 3, &st.uav_velocity);
    let m = st.uav_attitude.matrix();
    for i in 0..3 {
        for j in 0..3 {
            y[6 + 3 * i + j] = m[(i, j)];
        }
    }
    put(&mut y, 15, &st.uav_rate);
    put(&mut y, 18, &st.ee_position);
    put(&mut y, 21, &st.ee_velocity);
    y[24] = st.aperture;
    y[25] = st.aperture_rate;
    y[ACC..].copy_from_slice(acc);
    y
}

/// Result of one evaluation of the coupled dynamics.
#[derive(Debug, Clone)]
struct Eval {
    v_dot: Vec3,
    w_dot: Vec3,
    pe_ddot: Vec3,
    s_ddot: f64,
    w_man: Wrench,
    f_h: Wrench,
    w_obj: Wrench,
    contacts: ContactSet,
    /// Rotation of `F_o` in `F_i`.
    object_rotation: Rot3,
    contact_energy: f64,
    stop_mask: u8,
}

fn hc_energy(p: &ContactParams, depth: f64) -> f64 {
    p.stiffness * depth.powf(p.exponent + 1.0) / (p.exponent + 1.0)
}

/// Penalty force of a one-sided limit: returns force along the coordinate,
/// its elastic energy and whether it is engaged.
fn limit_force(x: f64, x_dot: f64, lo: f64, hi: f64, p: &ContactParams) -> (f64, f64, bool) {
    if x < lo {
        let d = lo - x;
        (hunt_crossley_normal(d, -x_dot, p).unwrap_or(0.0), hc_energy(p, d), true)
    } else if x > hi {
        let d = x - hi;
        (-hunt_crossley_normal(d, x_dot, p).unwrap_or(0.0), hc_energy(p, d), true)
    } else {
        (0.0, 0.0, false)
    }
}

fn contact_energy(set: &ContactSet, p: &ContactParams) -> f64 {
    set.points.iter().map(|c| if c.in_contact() { hc_energy(p, c.penetration) } else { 0.0 }).sum()
}

fn evaluate(model: &Model, held: &Held, k: &Kin, probe_contacts: bool) -> Eval {
    let mount = &model.manipulator.mount;
    let base_rot = k.r.compose(&mount.rotation);
    let g_m = gravity_in(&base_rot, model.gravity);
    let ee_pose = Pose::new(k.p, k.r).compose(mount).compose(&Pose::from_position(k.pe));
    let r = mount.transform_point(&k.pe);
    let r_dot = mount.rotation.apply(&k.ve);
    let v_ee = k.v + k.r.apply(&(k.w.cross(&r) + r_dot));
    let w_i = k.r.apply(&k.w);

    let mut stop_mask = 0u8;
    let mut stop_energy = 0.0;
    let mut ws_force = Vec3::zeros();
    for i in 0..3 {
        let (lo, hi) = (model.manipulator.workspace_min[i], model.manipulator.workspace_max[i]);
        let (f, e, on) = limit_force(k.pe[i], k.ve[i], lo, hi, &model.end_stop);
        ws_force[i] = f;
        stop_energy += e;
        stop_mask |= (on as u8) << i;
    }
    let (ap_force, ap_energy, ap_on) =
        limit_force(k.s, k.s_dot, model.gripper.aperture_min, model.gripper.aperture_max, &model.end_stop);
    stop_energy += ap_energy;
    stop_mask |= (ap_on as u8) << 3;

    let grasped = held.mission == Mission::AerialGrasp;
    let (object_pose, rel_velocity, rel_rate) = if grasped {
        (ee_pose.compose(&held.grasp_offset), Vec3::zeros(), Vec3::zeros())
    } else {
        let o = held.object_pose;
        (o, o.rotation.transpose().apply(&v_ee), o.rotation.transpose().apply(&w_i))
    };
    let ee_in_o = object_pose.inverse().compose(&ee_pose);
    let object_in_ee = ee_in_o.inverse();
    let contacts = if held.mission == Mission::FreeFlight && !probe_contacts {
        ContactSet::empty()
    } else {
        let kin = GripperKinematics {
            ee_pose: ee_in_o,
            ee_velocity: rel_velocity,
            ee_rate: rel_rate,
            aperture: k.s,
            aperture_rate: k.s_dot,
        };
        resolve_contacts(&kin, &model.geometry, model.object.radius, &model.contact)
    };
    let applied = held.mission != Mission::FreeFlight;

    let m_phal = model.gripper.phalange_mass;
    let m_man = model.manipulator.mass;
    let m_e = m_man + m_phal + if grasped { model.object.mass } else { 0.0 };
    let f_link = held.controls.actuator_force + ws_force;

    let docked_wrench = if held.mission == Mission::Dock {
        let g = build_grasp_matrix(&contacts.frames());
        let w = &g.0 * contacts.stacked_forces();
        Wrench::new(Vec3::new(w[0], w[1], w[2]), Vec3::new(w[3], w[4], w[5]), Frame::Object)
    } else {
        Wrench::zero(Frame::Object)
    };
    let f_contact_e = object_in_ee.rotation.apply(&docked_wrench.force);
    let a_ee = (m_e * g_m + f_link + f_contact_e) / m_e;
    let w_obj = if grasped {
        let r_oe = object_in_ee.rotation.transpose();
        object_inertial_wrench(Mission::AerialGrasp, &model.object, &r_oe.apply(&g_m), &r_oe.apply(&a_ee))
            .expect("mission is aerial grasp")
    } else {
        docked_wrench
    };

    let q = if applied { contacts.aperture_force(&model.geometry, &object_in_ee.rotation) } else { 0.0 };
    let s_ddot = (held.controls.u_h + q + ap_force) / m_phal;

    let eta_h = gravity_term(m_phal, &g_m);
    let f_phal = phalange_inertial_force(m_phal, &a_ee);
    let f_h = gripper_reaction(&eta_h, &f_phal, &w_obj, &object_in_ee);
    let eta_man = gravity_term(m_man, &g_m);
    let w_man = manipulator_reaction(&eta_man, m_man, &a_ee, &f_h, &Pose::from_position(k.pe));

    let st = SystemState {
        uav_position: k.p,
        uav_velocity: k.v,
        uav_attitude: k.r,
        uav_rate: k.w,
        ee_position: k.pe,
        ee_velocity: k.ve,
        aperture: k.s,
        aperture_rate: k.s_dot,
        object_pose,
        mission: held.mission,
    };
    let input = UavInput {
        thrust: held.controls.thrust,
        torque: held.controls.torque,
        rotor_thrusts: held.controls.rotor_thrusts,
    };
    let (v_dot, w_dot) = uav_accel(&st, &input, &w_man, &model.uav, mount, model.gravity);
    let v_dot = v_dot + held.disturbance / model.uav.mass;

    let rel = mount.rotation.apply(&a_ee)
        - k.r.transpose().apply(&v_dot)
        - w_dot.cross(&r)
        - k.w.cross(&k.w.cross(&r))
        - 2.0 * k.w.cross(&r_dot);
    let pe_ddot = mount.rotation.transpose().apply(&rel);

    let contact_energy = if applied { contact_energy(&contacts, &model.contact) } else { 0.0 } + stop_energy;
    Eval {
        v_dot,
        w_dot,
        pe_ddot,
        s_ddot,
        w_man,
        f_h,
        w_obj,
        contacts,
        object_rotation: object_pose.rotation,
        contact_energy,
        stop_mask,
    }
}

/// Storage of the three subsystems for a state and setpoint.
fn storages(model: &Model, k: &Kin, sp: &Setpoints) -> [(f64, f64); 3] {
    let g = &model.gains;
    [
        storage_vec(model.uav.mass, &k.v, &g.uav.stiffness, &(k.p - sp.uav_position)),
        storage_vec(
            model.manipulator.mass + model.gripper.phalange_mass,
            &k.ve,
            &g.manipulator.stiffness,
            &(k.pe - sp.ee_position),
        ),
        storage_scalar(model.gripper.phalange_mass, k.s_dot, g.gripper.stiffness, k.s - sp.finger_position),
    ]
}

struct StepSystem<'a> {
    model: &'a Model,
    held: &'a Held,
}

impl OdeSystem for StepSystem<'_> {
    fn dim(&self) -> usize {
        N_STATE
    }

    fn derivative(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let k = unpack(y);
        let e = evaluate(self.model, self.held, &k, false);
        let g = &self.model.gains;
        let sp = &self.held.setpoints;
        put(dy, 0, &k.v);
        put(dy, 3, &e.v_dot);
        let r_dot = k.r.matrix() * skew(&k.w);
        for i in 0..3 {
            for j in 0..3 {
                dy[6 + 3 * i + j] = r_dot[(i, j)];
            }
        }
        put(dy, 15, &e.w_dot);
        put(dy, 18, &k.ve);
        put(dy, 21, &e.pe_ddot);
        dy[24] = k.s_dot;
        dy[25] = e.s_ddot;

        let m_arm = self.model.manipulator.mass + self.model.gripper.phalange_mass;
        let m_phal = self.model.gripper.phalange_mass;
        let damp_uav = g.uav.damping.component_mul(&k.v);
        let d_uav = self.model.uav.mass * e.v_dot + damp_uav + g.uav.stiffness.component_mul(&(k.p - sp.uav_position));
        let damp_man = g.manipulator.damping.component_mul(&k.ve);
        let d_man = m_arm * e.pe_ddot + damp_man + g.manipulator.stiffness.component_mul(&(k.pe - sp.ee_position));
        let damp_h = g.gripper.damping * k.s_dot;
        let d_h = m_phal * e.s_ddot + damp_h + g.gripper.stiffness * (k.s - sp.finger_position);
        dy[ACC] = d_uav.dot(&k.v);
        dy[ACC + 1] = d_man.dot(&k.ve);
        dy[ACC + 2] = d_h * k.s_dot;
        dy[ACC + 3] = k.v.dot(&damp_uav);
        dy[ACC + 4] = k.ve.dot(&damp_man);
        dy[ACC + 5] = damp_h * k.s_dot;
    }

    fn is_velocity(&self, i: usize) -> bool {
        matches!(i, 3..=5 | 15..=17 | 21..=23 | 25)
    }
}

/// Accelerations of the coupled system at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerations {
    /// `v̇` in `F_i`.
    pub uav_linear: Vec3,
    /// `ω̇` in `F_b`.
    pub uav_angular: Vec3,
    /// `p̈_e` in `F_m`.
    pub ee: Vec3,
    pub aperture: f64,
}

/// Fixed-step simulation of one scenario.
pub struct Engine<S: SetpointSource> {
    model: Model,
    config: SimConfig,
    source: S,
    y: [f64; N_STATE],
    object_pose: Pose,
    grasp_offset: Pose,
    step_index: usize,
    mission: MissionState,
    monitor: GraspMonitor,
    attachment: WallAttachment,
    gripper_ff: f64,
    prev_setpoints: Option<Setpoints>,
    pull: f64,
    trace: SimTrace,
}

impl<S: SetpointSource> Engine<S> {
    /// `initial.object_pose` is ignored; the object starts at its wall pose.
    pub fn new(model: Model, config: SimConfig, initial: &SystemState, source: S) -> Self {
        let attach = model.object.attach_pose;
        let attachment = WallAttachment::new(attach, model.wall_normal, model.breakaway_force);
        let monitor = GraspMonitor::new(model.grasp_threshold, model.grasp_hold_time);
        Self {
            y: pack(initial, &[0.0; 6]),
            object_pose: attach,
            grasp_offset: Pose::identity(),
            step_index: 0,
            mission: MissionState { mission: initial.mission, entry_time: 0.0 },
            monitor,
            attachment,
            gripper_ff: 0.0,
            prev_setpoints: None,
            pull: 0.0,
            trace: SimTrace::default(),
            model,
            config,
            source,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.config.dt
    }

    pub fn mission(&self) -> Mission {
        self.mission.mission
    }

    pub fn trace(&self) -> &SimTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SimTrace {
        self.trace
    }

    pub fn state(&self) -> SystemState {
        let k = unpack(&self.y);
        SystemState {
            uav_position: k.p,
            uav_velocity: k.v,
            uav_attitude: k.r,
            uav_rate: k.w,
            ee_position: k.pe,
            ee_velocity: k.ve,
            aperture: k.s,
            aperture_rate: k.s_dot,
            object_pose: self.current_object_pose(&k),
            mission: self.mission.mission,
        }
    }

    /// Accelerations at the current state under the controls the next step
    /// would hold.
    pub fn accelerations(&mut self) -> Result<Accelerations, SimError> {
        let t = self.time();
        let state = self.state();
        let sp = self.source.setpoints(t, &state, &self.model);
        let k = unpack(&self.y);
        let controls = self.controls(&k, &sp)?;
        let disturbance = self.source.disturbance(t);
        let e = evaluate(&self.model, &self.held(controls, sp, disturbance), &k, false);
        Ok(Accelerations { uav_linear: e.v_dot, uav_angular: e.w_dot, ee: e.pe_ddot, aperture: e.s_ddot })
    }

    fn current_object_pose(&self, k: &Kin) -> Pose {
        if self.mission.mission == Mission::AerialGrasp {
            Pose::new(k.p, k.r)
                .compose(&self.model.manipulator.mount)
                .compose(&Pose::from_position(k.pe))
                .compose(&self.grasp_offset)
        } else {
            self.object_pose
        }
    }

    fn held(&self, controls: Controls, setpoints: Setpoints, disturbance: Vec3) -> Held {
        Held {
            mission: self.mission.mission,
            controls,
            setpoints,
            object_pose: self.object_pose,
            grasp_offset: self.grasp_offset,
            disturbance,
        }
    }

    fn controls(&self, k: &Kin, sp: &Setpoints) -> Result<Controls, SimError> {
        let m = &self.model;
        let mission = self.mission.mission;
        let g_m = gravity_in(&k.r.compose(&m.manipulator.mount.rotation), m.gravity);
        let ff = feed_forward(mission, &m.masses(), m.gravity, &g_m, self.gripper_ff);
        let u_uav = uav_control(&k.p, &k.v, &sp.uav_position, &m.gains.uav, &ff.uav);
        let (thrust, attitude_command) = thrust_attitude_from_u(&u_uav, m.uav.mass, m.gravity, m.gains.yaw)?;
        let eta_man = gravity_term(m.manipulator.mass, &g_m);
        let man = manipulator_control(&k.pe, &k.ve, &sp.ee_position, &m.gains.manipulator, &ff.manipulator, &eta_man);
        let u_h = gripper_control(
            mission,
            k.s,
            k.s_dot,
            sp.finger_position,
            &m.gains.gripper,
            &m.gains.idle,
            ff.gripper,
            &m.geometry,
        );
        let mut c = Controls {
            thrust,
            torque: Vec3::zeros(),
            rotor_thrusts: [thrust / 4.0; 4],
            u_uav,
            attitude_command,
            actuator_force: man.actuator_force,
            u_h,
        };
        // the reaction moment does not depend on the UAV torque
        let e = evaluate(m, &self.held(c, *sp, Vec3::zeros()), k, false);
        let reaction = wrench_transform(&e.w_man, &m.manipulator.mount, Frame::Body).moment;
        let torque = attitude_authority(&k.r, &k.w, &attitude_command, &m.gains.attitude, &m.uav.inertia, &reaction);
        let rotors = mixer_inverse(thrust, &torque, &m.uav)?;
        let (thrust, torque) = mixer_forward(rotors, &m.uav);
        c.thrust = thrust;
        c.torque = torque;
        c.rotor_thrusts = rotors;
        Ok(c)
    }

    /// Setpoints, controls and the trace row for the current instant.
    fn sample(&mut self) -> Result<(Held, TraceRow), SimError> {
        let t = self.time();
        let state = self.state();
        let sp = self.source.setpoints(t, &state, &self.model);
        let k = unpack(&self.y);
        if let Some(prev) = self.prev_setpoints {
            let before = storages(&self.model, &k, &prev);
            let after = storages(&self.model, &k, &sp);
            for j in 0..3 {
                self.y[ACC + j] += after[j].1 - before[j].1;
            }
        }
        self.prev_setpoints = Some(sp);
        let controls = self.controls(&k, &sp)?;
        let disturbance = self.source.disturbance(t);
        let held = self.held(controls, sp, disturbance);
        let e = evaluate(&self.model, &held, &k, false);
        let st = storages(&self.model, &k, &sp);

        let mut contact_forces = [Vec3::zeros(); N_CONTACTS];
        let mut penetration = [0.0; N_CONTACTS];
        for (i, c) in e.contacts.points.iter().enumerate() {
            contact_forces[i] = c.local_force();
            penetration[i] = c.penetration;
        }
        let mut energy = [SubsystemEnergy::default(); 3];
        for j in 0..3 {
            energy[j] = SubsystemEnergy {
                kinetic: st[j].0,
                potential: st[j].1,
                supply: self.y[ACC + j],
                dissipation: self.y[ACC + 3 + j],
            };
        }
        let row = TraceRow {
            time: t,
            mission: self.mission.mission,
            uav_position: k.p,
            uav_velocity: k.v,
            uav_attitude: k.r,
            uav_rate: k.w,
            ee_position: k.pe,
            ee_velocity: k.ve,
            aperture: k.s,
            aperture_rate: k.s_dot,
            ee_world: state.ee_pose(&self.model.manipulator).position,
            object_position: state.object_pose.position,
            sp_uav: sp.uav_position,
            sp_ee: sp.ee_position,
            sp_finger: sp.finger_position,
            tracking_enabled: sp.object_tracking_enabled,
            tracking_clamped: sp.tracking_clamped,
            thrust: controls.thrust,
            torque: controls.torque,
            rotor_thrusts: controls.rotor_thrusts,
            u_uav: controls.u_uav,
            actuator_force: controls.actuator_force,
            u_h: controls.u_h,
            f_man: e.w_man.force,
            m_man: e.w_man.moment,
            f_h: e.f_h.force,
            m_h: e.f_h.moment,
            f_obj: e.w_obj.force,
            m_obj: e.w_obj.moment,
            contact_forces,
            penetration,
            attitude_error: k.r.angle_to(&controls.attitude_command),
            energy,
            contact_energy: e.contact_energy,
            impact: false,
            pull: self.pull,
            attached: self.attachment.attached,
            grasp_secured: self.monitor.secured(),
        };
        Ok((held, row))
    }

    fn check_divergence(&self) -> Result<(), SimError> {
        let t = self.time();
        if let Some(i) = self.y[..ACC].iter().position(|x| !x.is_finite()) {
            return Err(SimError::Divergence { time: t, detail: format!("state component {i} is not finite") });
        }
        let mag = self.state().magnitude();
        if mag > self.config.divergence_limit {
            return Err(SimError::Divergence {
                time: t,
                detail: format!("state magnitude {mag:.3e} exceeds {:.3e}", self.config.divergence_limit),
            });
        }
        Ok(())
    }

    /// Advances one step and records the row at its start.
    pub fn step(&mut self) -> Result<(), SimError> {
        let (held, row) = self.sample()?;
        let k0 = unpack(&self.y);
        let start = evaluate(&self.model, &held, &k0, false);
        self.trace.rows.push(row);

        let dt = self.config.dt;
        let t = self.time();
        {
            let mut sys = StepSystem { model: &self.model, held: &held };
            integrate_step(&mut sys, self.config.integrator, t, &mut self.y, dt);
        }
        let r = Rot3::orthonormalize(&Mat3::from_row_slice(&self.y[6..15]));
        let m = r.matrix();
        for i in 0..3 {
            for j in 0..3 {
                self.y[6 + 3 * i + j] = m[(i, j)];
            }
        }
        self.step_index += 1;
        self.check_divergence()?;

        let k1 = unpack(&self.y);
        let end = evaluate(&self.model, &held, &k1, true);
        let before = self.mission;
        self.update_mission(&end, dt)?;
        let impact = start.contacts.active_mask() != end.contacts.active_mask() && held.mission != Mission::FreeFlight
            || start.stop_mask != end.stop_mask
            || before.mission != self.mission.mission;
        if let Some(r) = self.trace.rows.last_mut() {
            r.impact = impact;
        }
        Ok(())
    }

    fn update_mission(&mut self, end: &Eval, dt: f64) -> Result<(), SimError> {
        let mission = self.mission.mission;
        let contact_made = mission != Mission::FreeFlight || end.contacts.palm().in_contact();
        let mut grasp_secured = false;
        let mut detach = false;
        if mission == Mission::Dock {
            grasp_secured = self.monitor.update(&end.contacts, dt);
            let pull = Wrench::new(-end.object_rotation.apply(&end.w_obj.force), Vec3::zeros(), Frame::Inertial);
            self.pull = self.attachment.tensile_force(&pull);
            if grasp_secured {
                self.attachment.attached = crate::contact::check_detach(&pull, &self.attachment);
                detach = !self.attachment.attached;
            }
        }
        let events = TransitionEvents { contact_made, grasp_secured, detach };
        let now = self.time();
        let next = step_mission(self.mission, events, now)?;
        if next.mission == Mission::AerialGrasp && mission == Mission::Dock {
            self.enter_aerial_grasp(end);
        }
        self.mission = next;
        Ok(())
    }

    fn enter_aerial_grasp(&mut self, end: &Eval) {
        let k = unpack(&self.y);
        let ee_pose = Pose::new(k.p, k.r).compose(&self.model.manipulator.mount).compose(&Pose::from_position(k.pe));
        self.grasp_offset = ee_pose.inverse().compose(&self.object_pose);
        let obj = &self.model.object;
        let g_o = self.object_pose.rotation.transpose().apply(&(self.model.gravity * Vec3::z()));
        let f = obj.mass * g_o;
        let weight = Wrench::new(f, obj.com_offset.cross(&f), Frame::Object);
        let frames = end.contacts.frames();
        let grasp = build_grasp_matrix(&frames);
        let rots = frames.map(|p| p.rotation);
        self.gripper_ff =
            gripper_weight_feed_forward(&grasp, &rots, &self.model.geometry, &self.grasp_offset.rotation, &weight);
    }

    /// Runs to `t_end`, recording a final row at `t_end`.
    pub fn run(&mut self) -> Result<(), SimError> {
        let n = self.config.steps();
        while self.step_index < n {
            self.step()?;
        }
        let (_, row) = self.sample()?;
        self.trace.rows.push(row);
        Ok(())
    }
}

/// Runs a scenario to completion and returns its trace.
pub fn simulate<S: SetpointSource>(
    model: Model,
    config: SimConfig,
    initial: &SystemState,
    source: S,
) -> Result<SimTrace, SimError> {
    let mut engine = Engine::new(model, config, initial, source);
    engine.run()?;
    Ok(engine.into_trace())
}
