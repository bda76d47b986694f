//! A single impedance-controlled body `m·p̈ + D·ṗ + K·(p - p*) = d(t)`.
//!
//! This is the closed-loop form every subsystem of the cascade reduces to
//! once gravity is compensated. It is used on its own for integrator and
//! passivity studies where an exact solution is available.

use crate::control::ImpedanceGains;
use crate::sim::energy::storage_vec;
use crate::sim::integrator::{integrate_step, Integrator, OdeSystem};
use crate::sim::trace::SubsystemEnergy;
use crate::spatial::Vec3;

pub struct ClosedLoop<F: FnMut(f64, &Vec3, &Vec3) -> Vec3> {
    pub mass: f64,
    pub gains: ImpedanceGains,
    pub setpoint: Vec3,
    /// External force `d(t, p, ṗ)`.
    pub disturbance: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopSample {
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub energy: SubsystemEnergy,
}

impl<F: FnMut(f64, &Vec3, &Vec3) -> Vec3> OdeSystem for ClosedLoop<F> {
    fn dim(&self) -> usize {
        8
    }

    fn derivative(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let p = Vec3::new(y[0], y[1], y[2]);
        let v = Vec3::new(y[3], y[4], y[5]);
        let d = (self.disturbance)(t, &p, &v);
        let damping = self.gains.damping.component_mul(&v);
        let a = (d - damping - self.gains.stiffness.component_mul(&(p - self.setpoint))) / self.mass;
        dy[..3].copy_from_slice(v.as_slice());
        dy[3..6].copy_from_slice(a.as_slice());
        dy[6] = d.dot(&v);
        dy[7] = v.dot(&damping);
    }

    fn is_velocity(&self, i: usize) -> bool {
        (3..6).contains(&i)
    }
}

impl<F: FnMut(f64, &Vec3, &Vec3) -> Vec3> ClosedLoop<F> {
    fn sample(&self, t: f64, y: &[f64]) -> ClosedLoopSample {
        let p = Vec3::new(y[0], y[1], y[2]);
        let v = Vec3::new(y[3], y[4], y[5]);
        let (kinetic, potential) = storage_vec(self.mass, &v, &self.gains.stiffness, &(p - self.setpoint));
        ClosedLoopSample {
            time: t,
            position: p,
            velocity: v,
            energy: SubsystemEnergy { kinetic, potential, supply: y[6], dissipation: y[7] },
        }
    }

    /// Integrates from `(p0, v0)` and returns the samples at every step, the
    /// initial one included.
    pub fn simulate(&mut self, p0: Vec3, v0: Vec3, dt: f64, t_end: f64, method: Integrator) -> Vec<ClosedLoopSample> {
        let steps = (t_end / dt).round() as usize;
        let mut y = [p0.x, p0.y, p0.z, v0.x, v0.y, v0.z, 0.0, 0.0];
        let mut out = Vec::with_capacity(steps + 1);
        out.push(self.sample(0.0, &y));
        for k in 0..steps {
            let t = k as f64 * dt;
            integrate_step(self, method, t, &mut y, dt);
            out.push(self.sample((k + 1) as f64 * dt, &y));
        }
        out
    }
}
