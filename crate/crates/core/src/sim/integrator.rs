//! Fixed-step integrators over flat `f64` state vectors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

/// A first-order ODE `ẏ = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn derivative(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
    /// Components updated first by the semi-implicit Euler scheme.
    fn is_velocity(&self, _index: usize) -> bool {
        false
    }
}

/// Advances `y` in place by one step of length `dt`.
pub fn integrate_step<S: OdeSystem + ?Sized>(sys: &mut S, method: Integrator, t: f64, y: &mut [f64], dt: f64) {
    match method {
        Integrator::Rk4 => rk4_step(sys, t, y, dt),
        Integrator::SemiImplicitEuler => semi_implicit_euler_step(sys, t, y, dt),
    }
}

fn rk4_step<S: OdeSystem + ?Sized>(sys: &mut S, t: f64, y: &mut [f64], dt: f64) {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    sys.derivative(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    sys.derivative(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    sys.derivative(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    sys.derivative(t + dt, &tmp, &mut k4);
    for i in 0..n {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Velocities first with the old state, then positions with the new velocities.
fn semi_implicit_euler_step<S: OdeSystem + ?Sized>(sys: &mut S, t: f64, y: &mut [f64], dt: f64) {
    let n = y.len();
    let mut dy = vec![0.0; n];
    sys.derivative(t, y, &mut dy);
    for i in 0..n {
        if sys.is_velocity(i) {
            y[i] += dt * dy[i];
        }
    }
    sys.derivative(t, y, &mut dy);
    for i in 0..n {
        if !sys.is_velocity(i) {
            y[i] += dt * dy[i];
        }
    }
}
