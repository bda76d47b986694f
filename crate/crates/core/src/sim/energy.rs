//! Energy storage of the impedance subsystems and the passivity check over a
//! recorded trace.
//!
//! Each subsystem is read as `m·p̈ + D·ṗ + K·(p - p*) = d` with storage
//! `V = ½m·|ṗ|² + ½(p - p*)ᵀK(p - p*)`, so along any trajectory with a fixed
//! setpoint `V̇ = d·ṗ - ṗᵀDṗ`. The engine integrates the supply `d·ṗ` and the
//! dissipation `ṗᵀDṗ` alongside the state and books the storage jump caused
//! by a setpoint change as supply. A step is flagged when the stored energy
//! rises by more than the supply minus the dissipation beyond a tolerance.

use serde::Serialize;

use crate::sim::trace::{SimTrace, SUBSYSTEMS};
use crate::spatial::Vec3;

/// `½m|v|² ` and `½eᵀKe` for a diagonal stiffness.
pub fn storage_vec(mass: f64, velocity: &Vec3, stiffness: &Vec3, error: &Vec3) -> (f64, f64) {
    let kinetic = 0.5 * mass * velocity.norm_squared();
    let potential = 0.5 * error.component_mul(stiffness).dot(error);
    (kinetic, potential)
}

pub fn storage_scalar(mass: f64, velocity: f64, stiffness: f64, error: f64) -> (f64, f64) {
    (0.5 * mass * velocity * velocity, 0.5 * stiffness * error * error)
}

/// Step tolerances of the passivity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassivityTolerance {
    /// Smooth steps may gain `step_coeff·dt⁴·(1 + V)` joules.
    pub step_coeff: f64,
    /// Impact steps may additionally gain this fraction of the elastic
    /// contact energy present at either end of the step.
    pub impact_fraction: f64,
    /// The impact allowance also covers steps starting within this many
    /// seconds after a flagged step, while the contact transient rings down.
    pub settle_time: f64,
}

impl Default for PassivityTolerance {
    fn default() -> Self {
        Self { step_coeff: 10.0, impact_fraction: 0.05, settle_time: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepViolation {
    pub time: f64,
    pub subsystem: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub impact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsystemPassivity {
    pub name: &'static str,
    /// Largest per-step `ΔV - (Δsupply - Δdissipation)`.
    pub max_residual: f64,
    /// Largest residual over smooth steps, relative to their tolerance.
    pub worst_ratio: f64,
    /// `V(T) - V(0) - (supply(T) - dissipation(T))`.
    pub cumulative_residual: f64,
    pub cumulative_tolerance: f64,
    pub final_supply: f64,
    pub final_dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassivityReport {
    pub subsystems: Vec<SubsystemPassivity>,
    pub violations: Vec<StepViolation>,
    pub impact_steps: usize,
    pub passed: bool,
}

/// Checks `ΔV ≤ Δsupply - Δdissipation + tol` on every step of `trace` and
/// the same inequality cumulatively.
pub fn passivity_monitor(trace: &SimTrace, tol: &PassivityTolerance) -> PassivityReport {
    let rows = &trace.rows;
    let mut subsystems = Vec::new();
    let mut violations = Vec::new();
    let impact_steps = rows.windows(2).filter(|w| w[0].impact).count();

    for (j, name) in SUBSYSTEMS.iter().enumerate() {
        let mut max_residual = f64::NEG_INFINITY;
        let mut worst_ratio: f64 = 0.0;
        let mut cumulative_tolerance = 0.0;
        let mut last_impact = f64::NEG_INFINITY;
        for w in rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.impact {
                last_impact = a.time;
            }
            let relaxed = a.time - last_impact <= tol.settle_time;
            let dt = b.time - a.time;
            let (ea, eb) = (a.energy[j], b.energy[j]);
            let residual =
                (eb.storage() - ea.storage()) - (eb.supply - ea.supply) + (eb.dissipation - ea.dissipation);
            let smooth = tol.step_coeff * dt.powi(4) * (1.0 + ea.storage().max(eb.storage()));
            let allowed = if relaxed {
                smooth + tol.impact_fraction * a.contact_energy.max(b.contact_energy)
            } else {
                smooth
            };
            cumulative_tolerance += allowed;
            max_residual = max_residual.max(residual);
            if !relaxed {
                worst_ratio = worst_ratio.max(residual / smooth);
            }
            if residual > allowed {
                violations.push(StepViolation {
                    time: a.time,
                    subsystem: name,
                    residual,
                    tolerance: allowed,
                    impact: relaxed,
                });
            }
        }
        let (first, last) = match (rows.first(), rows.last()) {
            (Some(f), Some(l)) => (f.energy[j], l.energy[j]),
            _ => Default::default(),
        };
        let cumulative_residual =
            (last.storage() - first.storage()) - (last.supply - first.supply) + (last.dissipation - first.dissipation);
        subsystems.push(SubsystemPassivity {
            name,
            max_residual: if max_residual.is_finite() { max_residual } else { 0.0 },
            worst_ratio,
            cumulative_residual,
            cumulative_tolerance,
            final_supply: last.supply,
            final_dissipation: last.dissipation,
        });
    }

    let passed = violations.is_empty() && subsystems.iter().all(|s| s.cumulative_residual <= s.cumulative_tolerance);
    PassivityReport { subsystems, violations, impact_steps, passed }
}
