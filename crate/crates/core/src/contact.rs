//! Compliant contact between the gripper and the object: Hunt-Crossley
//! normal law, regularized Coulomb friction, the grasp matrix and the
//! breakable wall attachment.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::ContactError;
use crate::spatial::{skew, Frame, Pose, Rot3, Vec3, Wrench};

/// Six phalange contacts followed by the palm.
pub const N_CONTACTS: usize = 7;
pub const N_PHALANGES: usize = 6;
pub const PALM_INDEX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// `k` in N/m^n.
    pub stiffness: f64,
    /// Hertz exponent `n`.
    pub exponent: f64,
    /// `λ` in s/m.
    pub damping: f64,
    /// Coulomb coefficient `μ`.
    pub friction: f64,
    /// Regularization velocity of the friction law, m/s.
    pub v_reg: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { stiffness: 5000.0, exponent: 1.5, damping: 0.5, friction: 0.5, v_reg: 1e-3 }
    }
}

impl ContactParams {
    pub fn validate(&self, prefix: &str, errors: &mut Vec<String>) {
        if !(self.stiffness > 0.0) {
            errors.push(format!("{prefix}.stiffness must be > 0"));
        }
        if !(self.exponent >= 1.0) {
            errors.push(format!("{prefix}.exponent must be >= 1"));
        }
        if !(self.damping >= 0.0) {
            errors.push(format!("{prefix}.damping must be >= 0"));
        }
        if !(self.friction >= 0.0) {
            errors.push(format!("{prefix}.friction must be >= 0"));
        }
        if !(self.v_reg > 0.0) {
            errors.push(format!("{prefix}.v_reg must be > 0"));
        }
    }
}

/// Normal force `k·δ^n·(1 + λ·δ̇)`, never tensile.
pub fn hunt_crossley_normal(penetration: f64, rate: f64, params: &ContactParams) -> Result<f64, ContactError> {
    if penetration < 0.0 {
        return Err(ContactError::NegativePenetration(penetration));
    }
    if penetration == 0.0 {
        return Ok(0.0);
    }
    let f = params.stiffness * penetration.powf(params.exponent) * (1.0 + params.damping * rate);
    Ok(f.max(0.0))
}

/// Regularized Coulomb friction opposing the tangential sliding velocity.
pub fn tangential_friction(v_t: &Vec3, f_n: f64, params: &ContactParams) -> Vec3 {
    let speed = v_t.norm();
    if speed == 0.0 || f_n <= 0.0 {
        return Vec3::zeros();
    }
    -params.friction * f_n * v_t / speed.max(params.v_reg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactId {
    /// Phalange `0..6`: finger `i / 2`, proximal for even `i`, distal for odd `i`.
    Phalange(u8),
    Palm,
}

impl ContactId {
    pub fn all() -> [ContactId; N_CONTACTS] {
        [
            ContactId::Phalange(0),
            ContactId::Phalange(1),
            ContactId::Phalange(2),
            ContactId::Phalange(3),
            ContactId::Phalange(4),
            ContactId::Phalange(5),
            ContactId::Palm,
        ]
    }

    pub fn index(&self) -> usize {
        match self {
            ContactId::Phalange(i) => *i as usize,
            ContactId::Palm => PALM_INDEX,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ContactId::Phalange(i) => format!("f{}", i + 1),
            ContactId::Palm => "palm".into(),
        }
    }
}

/// Gripper kinematics in `F_e`. The palm is the `x_e`-`y_e` plane facing
/// `+z_e`; phalange contact points sit at axial offsets along `z_e` and at
/// radius `synergy·s` around it, with `s` the single actuated DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct GripperGeometry {
    pub palm_radius: f64,
    pub proximal_axial: f64,
    pub distal_axial: f64,
    pub proximal_synergy: f64,
    pub distal_synergy: f64,
    /// Finger azimuths around the palm axis, radians.
    pub finger_angles: [f64; 3],
}

impl Default for GripperGeometry {
    fn default() -> Self {
        Self {
            palm_radius: 0.03,
            proximal_axial: 0.01,
            distal_axial: 0.032,
            proximal_synergy: 1.0,
            distal_synergy: 0.8,
            finger_angles: [PI / 2.0, PI / 2.0 + 2.0 * PI / 3.0, PI / 2.0 + 4.0 * PI / 3.0],
        }
    }
}

impl GripperGeometry {
    fn radial(&self, finger: usize) -> Vec3 {
        let a = self.finger_angles[finger];
        Vec3::new(a.cos(), a.sin(), 0.0)
    }

    fn axial_and_synergy(&self, phalange: usize) -> (f64, f64) {
        if phalange % 2 == 0 {
            (self.proximal_axial, self.proximal_synergy)
        } else {
            (self.distal_axial, self.distal_synergy)
        }
    }

    /// Phalange contact point `i` in `F_e` for aperture `s`.
    pub fn phalange_point(&self, i: usize, aperture: f64) -> Vec3 {
        let (axial, synergy) = self.axial_and_synergy(i);
        synergy * aperture * self.radial(i / 2) + axial * Vec3::z()
    }

    /// `∂c_i/∂s` in `F_e`.
    pub fn phalange_jacobian(&self, i: usize) -> Vec3 {
        let (_, synergy) = self.axial_and_synergy(i);
        synergy * self.radial(i / 2)
    }

    /// Stacked `∂x_c/∂s` over all seven contacts (palm rows are zero).
    pub fn synergy_jacobian(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3 * N_CONTACTS, 1);
        for i in 0..N_PHALANGES {
            let c = self.phalange_jacobian(i);
            j.fixed_view_mut::<3, 1>(3 * i, 0).copy_from(&c);
        }
        j
    }

    /// Stacked contact-point positions in `F_e` (palm at the origin).
    pub fn stacked_points(&self, aperture: f64) -> DVector<f64> {
        let mut x = DVector::zeros(3 * N_CONTACTS);
        for i in 0..N_PHALANGES {
            x.fixed_rows_mut::<3>(3 * i).copy_from(&self.phalange_point(i, aperture));
        }
        x
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.palm_radius > 0.0) {
            errors.push("gripper.palm_radius must be > 0".into());
        }
        if !(self.proximal_axial >= 0.0 && self.distal_axial > self.proximal_axial) {
            errors.push("gripper: need 0 <= proximal_axial < distal_axial".into());
        }
        if !(self.proximal_synergy > 0.0 && self.distal_synergy > 0.0) {
            errors.push("gripper synergy ratios must be > 0".into());
        }
    }
}

/// Resolved state of one contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub id: ContactId,
    /// Pose of the contact frame `F_fi` in `F_o`; its `z` axis is the normal
    /// along which the object pushes the gripper.
    pub frame: Pose,
    pub penetration: f64,
    pub penetration_rate: f64,
    pub tangential_velocity: Vec3,
    pub normal_force: f64,
    /// Friction force in `F_o`.
    pub tangential_force: Vec3,
    /// Total force on the gripper at this contact, in `F_o`.
    pub force: Vec3,
}

impl ContactPoint {
    fn inactive(id: ContactId) -> Self {
        Self {
            id,
            frame: Pose::identity(),
            penetration: 0.0,
            penetration_rate: 0.0,
            tangential_velocity: Vec3::zeros(),
            normal_force: 0.0,
            tangential_force: Vec3::zeros(),
            force: Vec3::zeros(),
        }
    }

    pub fn in_contact(&self) -> bool {
        self.penetration > 0.0
    }

    /// Force components in the contact frame `(t1, t2, n)`.
    pub fn local_force(&self) -> Vec3 {
        self.frame.rotation.transpose().apply(&self.force)
    }
}

/// All seven contacts; `f_c ∈ R^21` is the stacked local forces.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSet {
    pub points: [ContactPoint; N_CONTACTS],
}

impl ContactSet {
    pub fn empty() -> Self {
        let ids = ContactId::all();
        Self { points: ids.map(ContactPoint::inactive) }
    }

    pub fn stacked_forces(&self) -> DVector<f64> {
        let mut f = DVector::zeros(3 * N_CONTACTS);
        for (i, p) in self.points.iter().enumerate() {
            f.fixed_rows_mut::<3>(3 * i).copy_from(&p.local_force());
        }
        f
    }

    pub fn frames(&self) -> [Pose; N_CONTACTS] {
        self.points.map(|p| p.frame)
    }

    pub fn palm(&self) -> &ContactPoint {
        &self.points[PALM_INDEX]
    }

    pub fn phalanges(&self) -> &[ContactPoint] {
        &self.points[..N_PHALANGES]
    }

    pub fn max_penetration(&self) -> f64 {
        self.points.iter().map(|p| p.penetration).fold(0.0, f64::max)
    }

    pub fn active_mask(&self) -> u8 {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.in_contact())
            .fold(0u8, |m, (i, _)| m | (1 << i))
    }

    /// Generalized force on the aperture DOF, `Σ (∂c_i/∂s)·F_i`.
    /// `object_in_ee` is the rotation of `F_o` in `F_e`.
    pub fn aperture_force(&self, geometry: &GripperGeometry, object_in_ee: &Rot3) -> f64 {
        self.phalanges()
            .iter()
            .enumerate()
            .map(|(i, p)| geometry.phalange_jacobian(i).dot(&object_in_ee.apply(&p.force)))
            .sum()
    }
}

/// Kinematic inputs for contact resolution, all in `F_o`.
#[derive(Debug, Clone, Copy)]
pub struct GripperKinematics {
    /// Pose of `F_e` in `F_o`.
    pub ee_pose: Pose,
    /// Velocity of the `F_e` origin relative to the object, in `F_o`.
    pub ee_velocity: Vec3,
    /// Angular velocity of `F_e` relative to the object, in `F_o`.
    pub ee_rate: Vec3,
    pub aperture: f64,
    pub aperture_rate: f64,
}

/// Orthonormal contact frame with `z` along `normal`.
fn contact_frame(origin: Vec3, normal: &Vec3) -> Pose {
    let n = normal.normalize();
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = helper.cross(&n).normalize();
    let t2 = n.cross(&t1);
    Pose::new(origin, Rot3::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[t1, t2, n])))
}

fn resolve_point(
    id: ContactId,
    location: Vec3,
    normal: Vec3,
    penetration: f64,
    point_velocity: &Vec3,
    params: &ContactParams,
) -> ContactPoint {
    if penetration <= 0.0 {
        return ContactPoint::inactive(id);
    }
    let rate = -point_velocity.dot(&normal);
    let v_t = point_velocity - point_velocity.dot(&normal) * normal;
    let f_n = hunt_crossley_normal(penetration, rate, params).expect("penetration is positive");
    let f_t = tangential_friction(&v_t, f_n, params);
    ContactPoint {
        id,
        frame: contact_frame(location, &normal),
        penetration,
        penetration_rate: rate,
        tangential_velocity: v_t,
        normal_force: f_n,
        tangential_force: f_t,
        force: f_n * normal + f_t,
    }
}

/// Resolves the six phalange contacts and the palm against a sphere of
/// `radius` centred at the `F_o` origin.
pub fn resolve_contacts(
    kin: &GripperKinematics,
    geometry: &GripperGeometry,
    radius: f64,
    params: &ContactParams,
) -> ContactSet {
    let mut set = ContactSet::empty();
    let r_eo = kin.ee_pose.rotation;
    let point_velocity = |offset_o: &Vec3, local_rate: Vec3| kin.ee_velocity + kin.ee_rate.cross(offset_o) + local_rate;

    for i in 0..N_PHALANGES {
        let c_e = geometry.phalange_point(i, kin.aperture);
        let offset = r_eo.apply(&c_e);
        let c = kin.ee_pose.position + offset;
        let dist = c.norm();
        if dist == 0.0 || dist >= radius {
            continue;
        }
        let normal = c / dist;
        let v = point_velocity(&offset, r_eo.apply(&(geometry.phalange_jacobian(i) * kin.aperture_rate)));
        set.points[i] = resolve_point(ContactId::Phalange(i as u8), c, normal, radius - dist, &v, params);
    }

    let n_palm = r_eo.apply(&Vec3::z());
    let to_center = -kin.ee_pose.position;
    let depth = to_center.dot(&n_palm);
    let lateral = to_center - depth * n_palm;
    if depth > 0.0 && depth < radius && lateral.norm() <= geometry.palm_radius {
        let q = kin.ee_pose.position + lateral;
        let v = point_velocity(&lateral, Vec3::zeros());
        set.points[PALM_INDEX] = resolve_point(ContactId::Palm, q, -n_palm, radius - depth, &v, params);
    }
    set
}

/// `G ∈ R^{6×21}` mapping stacked local contact forces to the wrench on the
/// gripper about the `F_o` origin.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspMatrix(pub DMatrix<f64>);

impl GraspMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn pinv(&self) -> DMatrix<f64> {
        crate::spatial::pinv(&self.0)
    }
}

/// Each 3-column block is `[R_ci; skew(p_ci)·R_ci]`.
pub fn build_grasp_matrix(frames: &[Pose; N_CONTACTS]) -> GraspMatrix {
    let mut g = DMatrix::zeros(6, 3 * N_CONTACTS);
    for (i, f) in frames.iter().enumerate() {
        let r = f.rotation.matrix();
        g.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(r);
        g.fixed_view_mut::<3, 3>(3, 3 * i).copy_from(&(skew(&f.position) * r));
    }
    GraspMatrix(g)
}

/// `(f_obj^o, M_obj^o) = G·f_c`.
pub fn object_wrench_docked(g: &GraspMatrix, f_c: &DVector<f64>) -> Result<Wrench, ContactError> {
    let (rows, cols) = g.0.shape();
    if rows != 6 || cols != f_c.len() {
        return Err(ContactError::DimensionMismatch { rows, cols, len: f_c.len() });
    }
    let w = &g.0 * f_c;
    Ok(Wrench::new(Vec3::new(w[0], w[1], w[2]), Vec3::new(w[3], w[4], w[5]), Frame::Object))
}

/// Breakable bond holding the object on the wall.
#[derive(Debug, Clone, PartialEq)]
pub struct WallAttachment {
    pub attach_pose: Pose,
    /// Outward wall normal in `F_i` (pointing away from the wall).
    pub wall_normal: Vec3,
    pub breakaway_force: f64,
    pub attached: bool,
}

impl WallAttachment {
    pub fn new(attach_pose: Pose, wall_normal: Vec3, breakaway_force: f64) -> Self {
        Self { attach_pose, wall_normal: wall_normal.normalize(), breakaway_force, attached: true }
    }

    /// Tensile component of the force the gripper applies to the object (`F_i`).
    pub fn tensile_force(&self, pull: &Wrench) -> f64 {
        pull.force.dot(&self.wall_normal)
    }
}

/// Attachment flag after one step with the given pull; the pull is sampled
/// once per step at its end and held over the step.
pub fn check_detach(pull: &Wrench, attachment: &WallAttachment) -> bool {
    attachment.attached && attachment.tensile_force(pull) <= attachment.breakaway_force
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> ContactParams {
        ContactParams::default()
    }

    #[test]
    fn normal_force_examples() {
        assert_eq!(hunt_crossley_normal(0.0, 1.0, &params()).unwrap(), 0.0);
        let p = ContactParams { stiffness: 1000.0, exponent: 1.5, damping: 0.0, ..params() };
        assert!((hunt_crossley_normal(0.01, 0.3, &p).unwrap() - 1.0).abs() < 1e-12);
        // 1 + λ·δ̇ < 0 on fast withdrawal
        assert_eq!(hunt_crossley_normal(0.01, -10.0, &params()).unwrap(), 0.0);
        assert!(matches!(hunt_crossley_normal(-1e-6, 0.0, &params()), Err(ContactError::NegativePenetration(_))));
    }

    #[test]
    fn normal_force_is_continuous_at_first_touch() {
        let p = params();
        let mut last = f64::INFINITY;
        for k in 1..12 {
            let d = 10f64.powi(-k);
            let f = hunt_crossley_normal(d, 0.5, &p).unwrap();
            assert!(f < last);
            last = f;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn friction_examples() {
        let p = ContactParams { friction: 0.5, ..params() };
        assert_eq!(tangential_friction(&Vec3::zeros(), 2.0, &p), Vec3::zeros());
        let v = Vec3::new(3.0, -4.0, 0.0);
        let f = tangential_friction(&v, 2.0, &p);
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!(f.dot(&v) < 0.0);
        let half = Vec3::new(p.v_reg / 2.0, 0.0, 0.0);
        assert!((tangential_friction(&half, 2.0, &p).norm() - 0.5).abs() < 1e-12);
    }

    fn open_kinematics(ee_z: f64, aperture: f64) -> GripperKinematics {
        // palm faces +z_e; put F_e on the -z side of the object, aligned
        GripperKinematics {
            ee_pose: Pose::from_position(Vec3::new(0.0, 0.0, ee_z)),
            ee_velocity: Vec3::zeros(),
            ee_rate: Vec3::zeros(),
            aperture,
            aperture_rate: 0.0,
        }
    }

    #[test]
    fn open_gripper_away_from_object_has_no_contact() {
        let set = resolve_contacts(&open_kinematics(-0.1, 0.05), &GripperGeometry::default(), 0.02, &params());
        assert!(set.stacked_forces().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn palm_press_loads_only_the_palm() {
        let set = resolve_contacts(&open_kinematics(-0.015, 0.05), &GripperGeometry::default(), 0.02, &params());
        for p in set.phalanges() {
            assert!(!p.in_contact());
        }
        let palm = set.palm();
        assert!((palm.penetration - 0.005).abs() < 1e-15);
        let expected = hunt_crossley_normal(0.005, 0.0, &params()).unwrap();
        assert!((palm.normal_force - expected).abs() < 1e-12);
        assert!((palm.force - Vec3::new(0.0, 0.0, -expected)).norm() < 1e-12);
    }

    #[test]
    fn symmetric_grasp_cancels_sideways() {
        let mut kin = open_kinematics(-0.02, 0.012);
        kin.ee_velocity = Vec3::new(0.0, 0.0, 0.01);
        kin.aperture_rate = -0.01;
        let set = resolve_contacts(&kin, &GripperGeometry::default(), 0.02, &params());
        assert!(set.phalanges().iter().all(|p| p.in_contact()));
        let net: Vec3 = set.phalanges().iter().map(|p| p.tangential_force).sum();
        assert!(net.x.abs() < 1e-9 && net.y.abs() < 1e-9);
        let net: Vec3 = set.phalanges().iter().map(|p| p.force).sum();
        assert!(net.x.abs() < 1e-9 && net.y.abs() < 1e-9);
    }

    #[test]
    fn aligned_contact_at_origin_gives_identity_block() {
        let mut frames = [Pose::identity(); N_CONTACTS];
        frames[1] = Pose::from_position(Vec3::new(0.0, 0.0, 0.1));
        let g = build_grasp_matrix(&frames);
        let block = g.0.view((0, 0), (6, 3));
        let mut expected = DMatrix::zeros(6, 3);
        expected.view_mut((0, 0), (3, 3)).copy_from(&DMatrix::identity(3, 3));
        assert_eq!(block, expected);
        // unit x-force at (0,0,0.1): moment = p × f = (0, 0.1, 0)
        let mut fc = DVector::zeros(21);
        fc[3] = 1.0;
        let w = object_wrench_docked(&g, &fc).unwrap();
        assert_eq!(w.force, Vec3::x());
        assert!((w.moment - Vec3::new(0.0, 0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn docked_wrench_edge_cases() {
        let frames = [Pose::from_position(Vec3::new(0.01, 0.02, 0.0)); N_CONTACTS];
        let g = build_grasp_matrix(&frames);
        let w = object_wrench_docked(&g, &DVector::zeros(21)).unwrap();
        assert_eq!(w, Wrench::zero(Frame::Object));
        let mut fc = DVector::zeros(21);
        fc[3 * PALM_INDEX + 2] = 1.0;
        let w = object_wrench_docked(&g, &fc).unwrap();
        let col = g.0.column(3 * PALM_INDEX + 2);
        assert_eq!(w.force, Vec3::new(col[0], col[1], col[2]));
        assert_eq!(w.moment, Vec3::new(col[3], col[4], col[5]));
        assert!(matches!(
            object_wrench_docked(&g, &DVector::zeros(20)),
            Err(ContactError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn detach_examples() {
        let att = WallAttachment::new(Pose::identity(), Vec3::new(-1.0, 0.0, 0.0), 5.0);
        assert!(check_detach(&Wrench::zero(Frame::Inertial), &att));
        let pull = Wrench::new(Vec3::new(-10.0, 0.0, 0.0), Vec3::zeros(), Frame::Inertial);
        assert!(!check_detach(&pull, &att));
        // pushing into the wall never detaches
        let push = Wrench::new(Vec3::new(100.0, 0.0, 0.0), Vec3::zeros(), Frame::Inertial);
        assert!(check_detach(&push, &att));
    }

    #[test]
    fn ramped_pull_detaches_within_one_step_of_crossing() {
        let dt = 1e-3;
        let rate = 2.0; // N/s
        let mut att = WallAttachment::new(Pose::identity(), Vec3::new(-1.0, 0.0, 0.0), 5.0);
        let crossing = 5.0 / rate;
        let mut t = 0.0;
        let mut k = 0u32;
        while att.attached {
            k += 1;
            t = k as f64 * dt;
            let pull = Wrench::new(Vec3::new(-rate * t, 0.0, 0.0), Vec3::zeros(), Frame::Inertial);
            att.attached = check_detach(&pull, &att);
        }
        assert!(t >= crossing && t - crossing <= dt + 1e-12, "detached at {t}, crossing {crossing}");
    }

    /// 1-D mass bouncing on a Hunt-Crossley wall, integrated finely.
    fn bounce(m: f64, v0: f64, p: &ContactParams) -> f64 {
        let dt = 1e-6;
        let (mut x, mut v) = (0.0f64, v0); // x = penetration
        let accel = |x: f64, v: f64| {
            if x > 0.0 {
                -hunt_crossley_normal(x, v, p).unwrap() / m
            } else {
                0.0
            }
        };
        loop {
            // midpoint step
            let a1 = accel(x, v);
            let (xm, vm) = (x + 0.5 * dt * v, v + 0.5 * dt * a1);
            let a2 = accel(xm, vm);
            x += dt * vm;
            v += dt * a2;
            if x <= 0.0 && v < 0.0 {
                return v;
            }
        }
    }

    #[test]
    fn approach_retreat_cycle_dissipates() {
        let p = params();
        let v_out = bounce(0.3, 0.2, &p);
        assert!(v_out.abs() < 0.2, "rebound speed {v_out}");
        let elastic = ContactParams { damping: 0.0, ..p };
        let v_el = bounce(0.3, 0.2, &elastic);
        assert!((v_el.abs() - 0.2).abs() < 1e-4);
    }

    /// Brute-force accumulation of each contact's force and moment.
    fn accumulate(frames: &[Pose; N_CONTACTS], fc: &DVector<f64>) -> (Vec3, Vec3) {
        let mut f = Vec3::zeros();
        let mut m = Vec3::zeros();
        for (i, fr) in frames.iter().enumerate() {
            let local = Vec3::new(fc[3 * i], fc[3 * i + 1], fc[3 * i + 2]);
            let world = fr.rotation.apply(&local);
            f += world;
            m += fr.position.cross(&world);
        }
        (f, m)
    }

    fn pose() -> impl Strategy<Value = Pose> {
        (
            (-0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64),
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        )
            .prop_filter("quaternion", |(_, q)| q.0 * q.0 + q.1 * q.1 + q.2 * q.2 + q.3 * q.3 > 1e-3)
            .prop_map(|(p, q)| Pose::new(Vec3::new(p.0, p.1, p.2), Rot3::from_quaternion(q.0, q.1, q.2, q.3)))
    }

    proptest! {
        #[test]
        fn grasp_matrix_matches_accumulation(
            frames in proptest::array::uniform7(pose()),
            fc in proptest::collection::vec(-10.0..10.0f64, 21),
        ) {
            let fc = DVector::from_vec(fc);
            let g = build_grasp_matrix(&frames);
            let w = object_wrench_docked(&g, &fc).unwrap();
            let (f, m) = accumulate(&frames, &fc);
            prop_assert!((w.force - f).norm() <= 1e-10 * (1.0 + f.norm()));
            prop_assert!((w.moment - m).norm() <= 1e-10 * (1.0 + m.norm()));
        }

        #[test]
        fn friction_inside_cone(
            v in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), f_n in 0.0..50.0f64, mu in 0.0..2.0f64,
        ) {
            let p = ContactParams { friction: mu, ..params() };
            let f = tangential_friction(&Vec3::new(v.0, v.1, v.2), f_n, &p);
            prop_assert!(f.norm() <= mu * f_n + 1e-12);
        }

        #[test]
        fn resolved_contacts_respect_cone(
            z in -0.04..-0.0f64, s in 0.005..0.05f64, vz in -0.2..0.2f64, vx in -0.2..0.2f64, sd in -0.2..0.2f64,
        ) {
            let mut kin = open_kinematics(z, s);
            kin.ee_velocity = Vec3::new(vx, 0.0, vz);
            kin.aperture_rate = sd;
            let p = params();
            let set = resolve_contacts(&kin, &GripperGeometry::default(), 0.02, &p);
            for c in &set.points {
                prop_assert!(c.normal_force >= 0.0);
                prop_assert!(c.tangential_force.norm() <= p.friction * c.normal_force + 1e-12);
                prop_assert!(c.frame.rotation.matrix().iter().all(|x| x.is_finite()));
            }
        }
    }
}
