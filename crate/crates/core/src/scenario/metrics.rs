//! Summary figures computed from a finished trace.

use serde::Serialize;

use crate::mission::Mission;
use crate::sim::{passivity_monitor, PassivityReport, PassivityTolerance, SimTrace, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRms {
    pub mission: &'static str,
    pub samples: usize,
    /// UAV position error per axis, m.
    pub uav: [f64; 3],
    /// End-effector error per axis in the base frame, m.
    pub ee: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryMetrics {
    pub name: String,
    pub steps: usize,
    pub duration: f64,
    pub missions: Vec<&'static str>,
    pub rms: Vec<PhaseRms>,
    pub contact_time: Option<f64>,
    pub grasp_secured_time: Option<f64>,
    pub detach_time: Option<f64>,
    /// Largest UAV position error within one second of contact, m.
    pub impact_overshoot: Option<f64>,
    /// Largest UAV position error while docked, m.
    pub max_dock_deviation: Option<f64>,
    pub max_attitude_error_deg: f64,
    /// Largest `|f_t| - μ·f_n` over all contacts and steps, N.
    pub friction_cone_margin: f64,
    pub final_uav_error: f64,
    pub passivity: PassivityReport,
}

fn uav_error(r: &TraceRow) -> f64 {
    (r.uav_position - r.sp_uav).norm()
}

/// Metrics of `trace`; `friction` is the Coulomb coefficient of the contacts.
pub fn summarize(name: &str, trace: &SimTrace, friction: f64, tol: &PassivityTolerance) -> Option<SummaryMetrics> {
    let first = trace.rows.first()?;
    let last = trace.rows.last()?;
    let missions = trace.missions();

    let rms = [Mission::FreeFlight, Mission::Dock, Mission::AerialGrasp]
        .iter()
        .filter_map(|&m| {
            let rows: Vec<&TraceRow> = trace.rows.iter().filter(|r| r.mission == m).collect();
            if rows.is_empty() {
                return None;
            }
            let n = rows.len() as f64;
            let axis = |f: &dyn Fn(&TraceRow) -> [f64; 3]| {
                let mut sum = [0.0; 3];
                for r in &rows {
                    let e = f(r);
                    for i in 0..3 {
                        sum[i] += e[i] * e[i];
                    }
                }
                sum.map(|s| (s / n).sqrt())
            };
            Some(PhaseRms {
                mission: m.name(),
                samples: rows.len(),
                uav: axis(&|r| (r.uav_position - r.sp_uav).into()),
                ee: axis(&|r| (r.ee_position - r.sp_ee).into()),
            })
        })
        .collect();

    let contact_time = trace.mission_entry(Mission::Dock);
    let detach_time = trace.mission_entry(Mission::AerialGrasp);
    let grasp_secured_time = trace.rows.iter().find(|r| r.grasp_secured).map(|r| r.time);
    let impact_overshoot = contact_time.map(|tc| {
        trace.rows.iter().filter(|r| r.time >= tc && r.time <= tc + 1.0).map(uav_error).fold(0.0, f64::max)
    });
    let dock: Vec<f64> = trace.rows.iter().filter(|r| r.mission == Mission::Dock).map(uav_error).collect();
    let max_dock_deviation = (!dock.is_empty()).then(|| dock.iter().copied().fold(0.0, f64::max));

    let mut margin = f64::NEG_INFINITY;
    for r in &trace.rows {
        for f in &r.contact_forces {
            let tangential = (f.x * f.x + f.y * f.y).sqrt();
            margin = margin.max(tangential - friction * f.z);
        }
    }

    Some(SummaryMetrics {
        name: name.to_string(),
        steps: trace.len().saturating_sub(1),
        duration: last.time - first.time,
        missions: missions.iter().map(Mission::name).collect(),
        rms,
        contact_time,
        grasp_secured_time,
        detach_time,
        impact_overshoot,
        max_dock_deviation,
        max_attitude_error_deg: trace.rows.iter().map(|r| r.attitude_error).fold(0.0, f64::max).to_degrees(),
        friction_cone_margin: margin,
        final_uav_error: uav_error(last),
        passivity: passivity_monitor(trace, tol),
    })
}
