//! Reference generation from a scenario's waypoints and tracking windows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{object_tracking_setpoint, Setpoints};
use crate::dynamics::SystemState;
use crate::scenario::config::{DisturbanceSection, ScalarWaypoint, ScenarioConfig, Waypoint};
use crate::sim::{Model, SetpointSource};
use crate::spatial::{Pose, Vec3};

fn v(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Piecewise-linear reference through `(t, value)` points, optionally
/// speed-limited. Before the first point the first value is held; a point
/// flagged as a step is reached instantly at its time.
pub fn interpolate(points: &[(f64, Vec3, bool)], max_speed: Option<f64>, t: f64, fallback: Vec3) -> Vec3 {
    let Some(&(_, first, _)) = points.first() else {
        return fallback;
    };
    let mut current = first;
    for w in points.windows(2) {
        let ((t0, _, _), (t1, target, step)) = (w[0], w[1]);
        if t < t1 {
            if step || t <= t0 {
                return current;
            }
            return advance(current, target, (t - t0) / (t1 - t0), t - t0, max_speed);
        }
        current = if step { target } else { advance(current, target, 1.0, t1 - t0, max_speed) };
    }
    current
}

/// Moves from `from` toward `to`: a fraction `frac` of the way, or at most
/// `max_speed·elapsed` when capped.
fn advance(from: Vec3, to: Vec3, frac: f64, elapsed: f64, max_speed: Option<f64>) -> Vec3 {
    let linear = from + (to - from) * frac;
    match max_speed {
        Some(vmax) => {
            let gap = to - from;
            let reach = vmax * elapsed;
            let moved = (linear - from).norm();
            if moved > reach && gap.norm() > 0.0 {
                from + gap.normalize() * reach
            } else {
                linear
            }
        }
        None => linear,
    }
}

fn vec_points(w: &[Waypoint]) -> Vec<(f64, Vec3, bool)> {
    w.iter().map(|p| (p.t, v(p.position), p.step)).collect()
}

fn scalar_points(w: &[ScalarWaypoint]) -> Vec<(f64, Vec3, bool)> {
    w.iter().map(|p| (p.t, Vec3::new(p.value, 0.0, 0.0), p.step)).collect()
}

/// Blend weight of the tracking windows at `t`: ramps linearly from 0 to 1
/// over `ramp` after `t_on` and back to 0 over `ramp` after `t_off`.
pub fn tracking_weight(cfg: &ScenarioConfig, t: f64) -> f64 {
    let ramp = cfg.trajectory.tracking_ramp;
    let mut w: f64 = 0.0;
    for win in &cfg.trajectory.tracking {
        let up = if ramp > 0.0 { ((t - win.t_on) / ramp).clamp(0.0, 1.0) } else { (t >= win.t_on) as u8 as f64 };
        let down = if ramp > 0.0 { ((t - win.t_off) / ramp).clamp(0.0, 1.0) } else { (t >= win.t_off) as u8 as f64 };
        w = w.max(up - down);
    }
    w
}

/// References at time `t` given the measured state.
pub fn generate_setpoints(cfg: &ScenarioConfig, model: &Model, t: f64, state: &SystemState) -> Setpoints {
    let tr = &cfg.trajectory;
    let uav = interpolate(&vec_points(&tr.waypoints), tr.max_speed, t, v(cfg.initial.uav_position));
    let nominal = interpolate(&vec_points(&tr.manipulator_waypoints), tr.max_speed, t, v(cfg.initial.ee_position));
    let initial_aperture = cfg.initial.aperture.unwrap_or_else(|| model.open_rest_aperture());
    let finger =
        interpolate(&scalar_points(&tr.finger_waypoints), None, t, Vec3::new(initial_aperture, 0.0, 0.0)).x;

    let weight = tracking_weight(cfg, t);
    let enabled = weight > 0.0;
    let target = model.object.attach_pose.position + v(tr.tracking_offset);
    let uav_pose = Pose::new(state.uav_position, state.uav_attitude);
    let m = &model.manipulator;
    let (tracked, clamped) = object_tracking_setpoint(
        &uav_pose,
        &m.mount,
        &target,
        &nominal,
        (&m.workspace_min, &m.workspace_max),
        enabled,
    );
    Setpoints {
        uav_position: uav,
        ee_position: nominal + (tracked - nominal) * weight,
        finger_position: finger,
        object_tracking_enabled: enabled,
        tracking_clamped: clamped,
    }
}

/// Seeded piecewise-constant random force on the UAV.
#[derive(Debug, Clone)]
pub struct Disturbance {
    cfg: DisturbanceSection,
    rng: ChaCha8Rng,
    current: Vec3,
    next_sample: f64,
}

impl Disturbance {
    pub fn new(cfg: &DisturbanceSection, seed: u64) -> Self {
        Self { cfg: cfg.clone(), rng: ChaCha8Rng::seed_from_u64(seed), current: Vec3::zeros(), next_sample: 0.0 }
    }

    pub fn force(&mut self, t: f64) -> Vec3 {
        if !self.cfg.enabled || t < self.cfg.t_on || t >= self.cfg.t_off {
            return Vec3::zeros();
        }
        while t >= self.next_sample {
            let std = self.cfg.force_std;
            let mut draw = || {
                // sum of uniforms: cheap, bounded, roughly normal
                let u: f64 = (0..12).map(|_| self.rng.random::<f64>()).sum::<f64>() - 6.0;
                u * std
            };
            self.current = v(self.cfg.bias) + Vec3::new(draw(), draw(), draw());
            self.next_sample += self.cfg.hold;
        }
        self.current
    }
}

/// Setpoint source driven by a scenario description.
#[derive(Debug, Clone)]
pub struct ScenarioSource {
    cfg: ScenarioConfig,
    disturbance: Disturbance,
}

impl ScenarioSource {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self { disturbance: Disturbance::new(&cfg.disturbance, cfg.sim.seed), cfg: cfg.clone() }
    }
}

impl SetpointSource for ScenarioSource {
    fn setpoints(&mut self, t: f64, state: &SystemState, model: &Model) -> Setpoints {
        generate_setpoints(&self.cfg, model, t, state)
    }

    fn disturbance(&mut self, t: f64) -> Vec3 {
        self.disturbance.force(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::TrackingWindow;
    use proptest::prelude::*;

    fn pts() -> Vec<(f64, Vec3, bool)> {
        vec![
            (1.0, Vec3::new(0.0, 0.0, -1.0), false),
            (3.0, Vec3::new(1.0, 0.0, -1.0), false),
            (5.0, Vec3::new(1.0, 2.0, -1.0), true),
        ]
    }

    #[test]
    fn before_first_waypoint_holds_it() {
        assert_eq!(interpolate(&pts(), None, 0.0, Vec3::zeros()), Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn midpoint_is_linear() {
        assert_eq!(interpolate(&pts(), None, 2.0, Vec3::zeros()), Vec3::new(0.5, 0.0, -1.0));
    }

    #[test]
    fn step_jumps_at_its_time() {
        assert_eq!(interpolate(&pts(), None, 4.999, Vec3::zeros()), Vec3::new(1.0, 0.0, -1.0));
        assert_eq!(interpolate(&pts(), None, 5.0, Vec3::zeros()), Vec3::new(1.0, 2.0, -1.0));
        assert_eq!(interpolate(&pts(), None, 9.0, Vec3::zeros()), Vec3::new(1.0, 2.0, -1.0));
    }

    #[test]
    fn speed_cap_delays_arrival() {
        let p = interpolate(&pts(), Some(0.25), 3.0, Vec3::zeros());
        assert!((p - Vec3::new(0.5, 0.0, -1.0)).norm() < 1e-12);
        // the next segment starts from where the capped one stopped
        let mut longer = pts()[..2].to_vec();
        longer.push((7.0, Vec3::new(1.0, 0.0, -1.0), false));
        let p = interpolate(&longer, Some(0.25), 4.0, Vec3::zeros());
        assert!((p - Vec3::new(0.625, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn no_waypoints_uses_fallback() {
        assert_eq!(interpolate(&[], None, 2.0, Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn tracking_window_follows_object_in_base_frame() {
        let mut cfg = ScenarioConfig::default();
        cfg.sim.t_end = 10.0;
        cfg.trajectory.tracking = vec![TrackingWindow { t_on: 2.0, t_off: 6.0 }];
        cfg.trajectory.tracking_ramp = 0.5;
        let model = cfg.model();
        // UAV placed so the object lies inside the workspace
        let st = SystemState::at_rest(Vec3::new(1.27, 0.0, -1.0), Vec3::new(0.05, 0.0, 0.02), 0.05, Pose::identity());
        let before = generate_setpoints(&cfg, &model, 1.0, &st);
        assert!(!before.object_tracking_enabled);
        assert_eq!(before.ee_position, Vec3::new(0.05, 0.0, 0.02));
        let sp = generate_setpoints(&cfg, &model, 4.0, &st);
        assert!(sp.object_tracking_enabled && !sp.tracking_clamped);
        // oracle: F_m origin at p_b + mount; x_m up, z_m forward
        let base = Vec3::new(1.27 + 0.2, 0.0, -1.0 + 0.05);
        let d = model.object.attach_pose.position - base;
        let expected = Vec3::new(-d.z, d.y, d.x);
        assert!((sp.ee_position - expected).norm() < 1e-12, "{}", sp.ee_position);
        let half = generate_setpoints(&cfg, &model, 2.25, &st);
        assert!((half.ee_position - (Vec3::new(0.05, 0.0, 0.02) + expected) / 2.0).norm() < 1e-12);
    }

    #[test]
    fn disturbance_is_reproducible() {
        let d = DisturbanceSection { enabled: true, force_std: 0.5, ..Default::default() };
        let mut a = Disturbance::new(&d, 7);
        let mut b = Disturbance::new(&d, 7);
        let mut c = Disturbance::new(&d, 8);
        let fa: Vec<Vec3> = (0..100).map(|k| a.force(k as f64 * 0.01)).collect();
        let fb: Vec<Vec3> = (0..100).map(|k| b.force(k as f64 * 0.01)).collect();
        let fc: Vec<Vec3> = (0..100).map(|k| c.force(k as f64 * 0.01)).collect();
        assert_eq!(fa, fb);
        assert_ne!(fa, fc);
        assert!(fa.iter().all(|f| f.amax() <= 3.0 + 1e-12));
    }

    proptest! {
        #[test]
        fn reference_is_continuous_without_steps(
            t in 0.0..12.0f64,
            xs in proptest::collection::vec(-2.0..2.0f64, 4),
            cap in proptest::option::of(0.05..2.0f64),
        ) {
            let points: Vec<(f64, Vec3, bool)> = xs.iter().enumerate()
                .map(|(i, &x)| (1.0 + 3.0 * i as f64, Vec3::new(x, -x, 0.5 * x), false))
                .collect();
            let h = 1e-7;
            let a = interpolate(&points, cap, t, Vec3::zeros());
            let b = interpolate(&points, cap, t + h, Vec3::zeros());
            // slope of any segment is below 4/3 ·√(1 + 1 + 0.25) per second
            prop_assert!((a - b).norm() <= 2.1 * h + 1e-12);
        }
    }
}
