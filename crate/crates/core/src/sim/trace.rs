//! Time-stamped simulation records and their CSV form.
//!
//! Every column is an `f64`; booleans are stored as `0`/`1` and the mission
//! as its numeric code. Values are written with the shortest round-trip
//! representation so reading a file back reproduces the trace bit for bit.

use std::io::{Read, Write};

use crate::contact::N_CONTACTS;
use crate::mission::Mission;
use crate::spatial::{Mat3, Rot3, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header: expected {expected} columns, found {found}")]
    Header { expected: usize, found: usize },
    #[error("column `{column}` mismatch in header")]
    Column { column: String },
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Value { row: usize, column: String, value: String },
    #[error("row {row}: invalid mission code {code}")]
    Mission { row: usize, code: f64 },
}

/// Energy bookkeeping of one impedance-controlled subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SubsystemEnergy {
    pub kinetic: f64,
    pub potential: f64,
    /// Cumulative `∫ d·ṗ dt` plus setpoint-port jumps.
    pub supply: f64,
    /// Cumulative `∫ ṗ·D·ṗ dt`.
    pub dissipation: f64,
}

impl SubsystemEnergy {
    pub fn storage(&self) -> f64 {
        self.kinetic + self.potential
    }
}

pub const SUBSYSTEMS: [&str; 3] = ["uav", "man", "grip"];

/// One sample of the closed-loop system, taken at the start of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub mission: Mission,
    pub uav_position: Vec3,
    pub uav_velocity: Vec3,
    pub uav_attitude: Rot3,
    pub uav_rate: Vec3,
    pub ee_position: Vec3,
    pub ee_velocity: Vec3,
    pub aperture: f64,
    pub aperture_rate: f64,
    /// End-effector origin in `F_i`.
    pub ee_world: Vec3,
    pub object_position: Vec3,
    pub sp_uav: Vec3,
    pub sp_ee: Vec3,
    pub sp_finger: f64,
    pub tracking_enabled: bool,
    pub tracking_clamped: bool,
    pub thrust: f64,
    pub torque: Vec3,
    pub rotor_thrusts: [f64; 4],
    pub u_uav: Vec3,
    pub actuator_force: Vec3,
    pub u_h: f64,
    pub f_man: Vec3,
    pub m_man: Vec3,
    pub f_h: Vec3,
    pub m_h: Vec3,
    pub f_obj: Vec3,
    pub m_obj: Vec3,
    /// Local contact forces `(t1, t2, n)` per contact, on the gripper.
    pub contact_forces: [Vec3; N_CONTACTS],
    pub penetration: [f64; N_CONTACTS],
    /// Angle between the attitude and its command, radians.
    pub attitude_error: f64,
    pub energy: [SubsystemEnergy; 3],
    /// Elastic energy stored in contact and end-stop penetrations.
    pub contact_energy: f64,
    /// Set when the step starting here changes the contact set or mission.
    pub impact: bool,
    /// Tensile pull on the wall bond, newtons.
    pub pull: f64,
    pub attached: bool,
    pub grasp_secured: bool,
}

impl Default for TraceRow {
    fn default() -> Self {
        Self {
            time: 0.0,
            mission: Mission::FreeFlight,
            uav_position: Vec3::zeros(),
            uav_velocity: Vec3::zeros(),
            uav_attitude: Rot3::identity(),
            uav_rate: Vec3::zeros(),
            ee_position: Vec3::zeros(),
            ee_velocity: Vec3::zeros(),
            aperture: 0.0,
            aperture_rate: 0.0,
            ee_world: Vec3::zeros(),
            object_position: Vec3::zeros(),
            sp_uav: Vec3::zeros(),
            sp_ee: Vec3::zeros(),
            sp_finger: 0.0,
            tracking_enabled: false,
            tracking_clamped: false,
            thrust: 0.0,
            torque: Vec3::zeros(),
            rotor_thrusts: [0.0; 4],
            u_uav: Vec3::zeros(),
            actuator_force: Vec3::zeros(),
            u_h: 0.0,
            f_man: Vec3::zeros(),
            m_man: Vec3::zeros(),
            f_h: Vec3::zeros(),
            m_h: Vec3::zeros(),
            f_obj: Vec3::zeros(),
            m_obj: Vec3::zeros(),
            contact_forces: [Vec3::zeros(); N_CONTACTS],
            penetration: [0.0; N_CONTACTS],
            attitude_error: 0.0,
            energy: [SubsystemEnergy::default(); 3],
            contact_energy: 0.0,
            impact: false,
            pull: 0.0,
            attached: true,
            grasp_secured: false,
        }
    }
}

/// Visits every scalar column of a row by name.
trait Columns {
    fn scalar(&mut self, name: &str, v: &mut f64);
    fn flag(&mut self, name: &str, v: &mut bool) {
        let mut x = if *v { 1.0 } else { 0.0 };
        self.scalar(name, &mut x);
        *v = x != 0.0;
    }
    fn vec3(&mut self, name: &str, v: &mut Vec3) {
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            self.scalar(&format!("{name}_{axis}"), &mut v[i]);
        }
    }
}

impl TraceRow {
    fn visit<C: Columns>(&mut self, c: &mut C) {
        c.scalar("t", &mut self.time);
        let mut code = self.mission.code() as f64;
        c.scalar("mission", &mut code);
        self.mission = Mission::from_code(code as u8).unwrap_or(Mission::FreeFlight);
        c.vec3("uav_p", &mut self.uav_position);
        c.vec3("uav_v", &mut self.uav_velocity);
        let mut r: Mat3 = *self.uav_attitude.matrix();
        for i in 0..3 {
            for j in 0..3 {
                c.scalar(&format!("uav_r{i}{j}"), &mut r[(i, j)]);
            }
        }
        self.uav_attitude = Rot3::from_matrix_unchecked(r);
        c.vec3("uav_w", &mut self.uav_rate);
        c.vec3("ee_p", &mut self.ee_position);
        c.vec3("ee_v", &mut self.ee_velocity);
        c.scalar("s", &mut self.aperture);
        c.scalar("s_dot", &mut self.aperture_rate);
        c.vec3("ee_world", &mut self.ee_world);
        c.vec3("obj_p", &mut self.object_position);
        c.vec3("sp_uav", &mut self.sp_uav);
        c.vec3("sp_ee", &mut self.sp_ee);
        c.scalar("sp_finger", &mut self.sp_finger);
        c.flag("tracking", &mut self.tracking_enabled);
        c.flag("tracking_clamped", &mut self.tracking_clamped);
        c.scalar("thrust", &mut self.thrust);
        c.vec3("torque", &mut self.torque);
        for (i, f) in self.rotor_thrusts.iter_mut().enumerate() {
            c.scalar(&format!("rotor{}", i + 1), f);
        }
        c.vec3("u_uav", &mut self.u_uav);
        c.vec3("f_act", &mut self.actuator_force);
        c.scalar("u_h", &mut self.u_h);
        c.vec3("f_man", &mut self.f_man);
        c.vec3("m_man", &mut self.m_man);
        c.vec3("f_h", &mut self.f_h);
        c.vec3("m_h", &mut self.m_h);
        c.vec3("f_obj", &mut self.f_obj);
        c.vec3("m_obj", &mut self.m_obj);
        for (i, f) in self.contact_forces.iter_mut().enumerate() {
            let label = contact_label(i);
            c.scalar(&format!("fc_{label}_t1"), &mut f[0]);
            c.scalar(&format!("fc_{label}_t2"), &mut f[1]);
            c.scalar(&format!("fc_{label}_n"), &mut f[2]);
        }
        for (i, d) in self.penetration.iter_mut().enumerate() {
            c.scalar(&format!("delta_{}", contact_label(i)), d);
        }
        c.scalar("att_err", &mut self.attitude_error);
        for (e, name) in self.energy.iter_mut().zip(SUBSYSTEMS) {
            c.scalar(&format!("{name}_kinetic"), &mut e.kinetic);
            c.scalar(&format!("{name}_potential"), &mut e.potential);
            c.scalar(&format!("{name}_supply"), &mut e.supply);
            c.scalar(&format!("{name}_dissipation"), &mut e.dissipation);
        }
        c.scalar("contact_energy", &mut self.contact_energy);
        c.flag("impact", &mut self.impact);
        c.scalar("pull", &mut self.pull);
        c.flag("attached", &mut self.attached);
        c.flag("grasp_secured", &mut self.grasp_secured);
    }

    /// Column names in file order.
    pub fn header() -> Vec<String> {
        struct Names(Vec<String>);
        impl Columns for Names {
            fn scalar(&mut self, name: &str, _v: &mut f64) {
                self.0.push(name.to_string());
            }
        }
        let mut n = Names(Vec::new());
        TraceRow::default().visit(&mut n);
        n.0
    }

    pub fn values(&self) -> Vec<f64> {
        struct Values(Vec<f64>);
        impl Columns for Values {
            fn scalar(&mut self, _name: &str, v: &mut f64) {
                self.0.push(*v);
            }
        }
        let mut out = Values(Vec::new());
        self.clone().visit(&mut out);
        out.0
    }

    fn from_values(values: &[f64]) -> Self {
        struct Fill<'a>(std::slice::Iter<'a, f64>);
        impl Columns for Fill<'_> {
            fn scalar(&mut self, _name: &str, v: &mut f64) {
                *v = *self.0.next().expect("length checked against header");
            }
        }
        let mut row = TraceRow::default();
        row.visit(&mut Fill(values.iter()));
        row
    }

    /// Sum of the three subsystem storages.
    pub fn total_storage(&self) -> f64 {
        self.energy.iter().map(SubsystemEnergy::storage).sum()
    }
}

fn contact_label(i: usize) -> String {
    if i < crate::contact::N_PHALANGES {
        format!("p{}", i + 1)
    } else {
        "palm".into()
    }
}

/// Ordered samples of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// First time at which the mission was `m`.
    pub fn mission_entry(&self, m: Mission) -> Option<f64> {
        self.rows.iter().find(|r| r.mission == m).map(|r| r.time)
    }

    /// Missions in order of appearance, consecutive repeats merged.
    pub fn missions(&self) -> Vec<Mission> {
        let mut out: Vec<Mission> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.mission) {
                out.push(r.mission);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TraceError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TraceRow::header())?;
        for row in &self.rows {
            out.write_record(row.values().iter().map(|v| v.to_string()))?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, TraceError> {
        let mut rdr = csv::Reader::from_reader(r);
        let expected = TraceRow::header();
        let header = rdr.headers()?.clone();
        if header.len() != expected.len() {
            return Err(TraceError::Header { expected: expected.len(), found: header.len() });
        }
        if let Some((name, _)) = expected.iter().zip(header.iter()).find(|(a, b)| a != b) {
            return Err(TraceError::Column { column: name.clone() });
        }
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut vals = Vec::with_capacity(expected.len());
            for (field, name) in rec.iter().zip(&expected) {
                let v: f64 = field.parse().map_err(|_| TraceError::Value {
                    row: k + 1,
                    column: name.clone(),
                    value: field.to_string(),
                })?;
                vals.push(v);
            }
            let code = vals[1];
            if Mission::from_code(code as u8).is_none() || code.fract() != 0.0 {
                return Err(TraceError::Mission { row: k + 1, code });
            }
            rows.push(TraceRow::from_values(&vals));
        }
        Ok(Self { rows })
    }
}
