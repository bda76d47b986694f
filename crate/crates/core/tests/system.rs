use flyhand_core::dynamics::{gravity_axis, uav_accel, UavInput, STANDARD_GRAVITY};
use flyhand_core::scenario::config::{ScalarWaypoint, TrackingWindow, Waypoint};
use flyhand_core::scenario::{emit_outputs, parse_scenario, preset, preset_names, run_scenario};
use flyhand_core::sim::closed_loop::ClosedLoop;
use flyhand_core::sim::{integrate_step, OdeSystem};
use flyhand_core::{
    ImpedanceGains, Integrator, Mission, Model, Pose, Rot3, ScenarioConfig, SimTrace, SystemState, Vec3, Wrench,
};
use proptest::prelude::*;

struct Ballistic<'a> {
    model: &'a Model,
    state: SystemState,
}

impl OdeSystem for Ballistic<'_> {
    fn dim(&self) -> usize {
        6
    }

    fn derivative(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.state.uav_position = Vec3::new(y[0], y[1], y[2]);
        self.state.uav_velocity = Vec3::new(y[3], y[4], y[5]);
        let input = UavInput { thrust: 0.0, torque: Vec3::zeros(), rotor_thrusts: [0.0; 4] };
        let load = Wrench::zero(flyhand_core::Frame::ManipulatorBase);
        let (a, _) =
            uav_accel(&self.state, &input, &load, &self.model.uav, &self.model.manipulator.mount, self.model.gravity);
        dy[..3].copy_from_slice(&y[3..6]);
        dy[3..6].copy_from_slice(a.as_slice());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unpowered_uav_follows_a_parabola(
        v0 in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
        q in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64),
    ) {
        let mut model = Model::default();
        model.manipulator.mass = 0.0;
        model.object.mass = 0.0;
        let v0 = Vec3::new(v0.0, v0.1, v0.2);
        let mut st = SystemState::at_rest(Vec3::new(0.0, 0.0, -10.0), Vec3::zeros(), 0.03, Pose::identity());
        st.uav_attitude = Rot3::from_quaternion(q.3, q.0, q.1, q.2);
        let mut sys = Ballistic { model: &model, state: st };
        let mut y = [0.0, 0.0, -10.0, v0.x, v0.y, v0.z];
        let dt = 1e-3;
        let mut worst: f64 = 0.0;
        for k in 0..1000 {
            integrate_step(&mut sys, Integrator::Rk4, k as f64 * dt, &mut y, dt);
            let t = (k + 1) as f64 * dt;
            let exact = Vec3::new(0.0, 0.0, -10.0) + v0 * t + 0.5 * STANDARD_GRAVITY * gravity_axis() * t * t;
            worst = worst.max((Vec3::new(y[0], y[1], y[2]) - exact).norm());
        }
        prop_assert!(worst < 1e-6, "{worst:e}");
    }

    #[test]
    fn impedance_loops_decay_within_twenty_time_constants(
        e0 in (-0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64),
        v0 in (-0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64),
    ) {
        // gripper defaults are overdamped: its slow pole is far below D/m
        // and is covered separately
        let model = Model::default();
        let g = &model.gains;
        let cases = [
            (model.uav.mass, g.uav),
            (model.manipulator.mass + model.gripper.phalange_mass, g.manipulator),
        ];
        let e0 = Vec3::new(e0.0, e0.1, e0.2);
        let v0 = Vec3::new(v0.0, v0.1, v0.2);
        prop_assume!(e0.norm() > 1e-3);
        for (mass, gains) in cases {
            let lambda = gains.damping.min() / mass;
            let horizon = 20.0 / lambda;
            let mut sys = ClosedLoop {
                mass,
                gains,
                setpoint: Vec3::zeros(),
                disturbance: |_t: f64, _p: &Vec3, _v: &Vec3| Vec3::zeros(),
            };
            let out = sys.simulate(e0, v0, 1e-3, horizon, Integrator::Rk4);
            let last = out.last().unwrap();
            prop_assert!(last.position.norm() < 1e-3 * e0.norm(), "m = {mass}: {} after {horizon} s", last.position.norm());
        }
    }
}

/// Slowest decay rate of `m·ẍ + d·ẋ + k·x = 0`.
fn slowest_rate(m: f64, k: f64, d: f64) -> f64 {
    let a = d / (2.0 * m);
    let disc = a * a - k / m;
    if disc > 0.0 {
        a - disc.sqrt()
    } else {
        a
    }
}

#[test]
fn gripper_loop_decays_within_twenty_slow_time_constants() {
    let model = Model::default();
    let (m, g) = (model.gripper.phalange_mass, model.gains.gripper);
    let rate = slowest_rate(m, g.stiffness, g.damping);
    // the D/m horizon alone is too short for this overdamped loop
    assert!(20.0 / rate > 5.0 * 20.0 * m / g.damping);
    let mut sys = ClosedLoop {
        mass: m,
        gains: ImpedanceGains::isotropic(g.stiffness, g.damping),
        setpoint: Vec3::zeros(),
        disturbance: |_t: f64, _p: &Vec3, _v: &Vec3| Vec3::zeros(),
    };
    let out = sys.simulate(Vec3::new(0.02, 0.0, 0.0), Vec3::zeros(), 1e-4, 20.0 / rate, Integrator::Rk4);
    assert!(out.last().unwrap().position.norm() < 1e-3 * 0.02);
}

#[test]
fn coupled_system_regulates_to_rest() {
    let mut cfg = ScenarioConfig::default();
    cfg.sim.t_end = 20.0;
    cfg.initial.uav_position = [0.1, -0.1, -0.9];
    cfg.initial.ee_position = [0.06, 0.01, 0.03];
    cfg.trajectory.waypoints = vec![Waypoint { t: 0.0, position: [0.0, 0.0, -1.0], step: false }];
    cfg.trajectory.manipulator_waypoints = vec![Waypoint { t: 0.0, position: [0.05, 0.0, 0.02], step: false }];
    cfg.trajectory.finger_waypoints = vec![ScalarWaypoint { t: 0.0, value: 0.03, step: false }];
    let trace = run_scenario(&cfg).unwrap();
    let last = trace.last().unwrap();
    let model = cfg.model();
    let rotational = 0.5 * last.uav_rate.dot(&(model.uav.inertia * last.uav_rate));
    let kinetic: f64 = last.energy.iter().map(|e| e.kinetic).sum::<f64>() + rotational;
    assert!(kinetic < 1e-6, "{kinetic:e}");
}

#[test]
fn preset_mission_sequences_are_prefixes() {
    let full = [Mission::FreeFlight, Mission::Dock, Mission::AerialGrasp];
    for name in preset_names() {
        let trace = run_scenario(&preset(name).unwrap()).unwrap();
        let seq = trace.missions();
        assert!(full.starts_with(&seq), "{name}: {seq:?}");
    }
}

fn fig3() -> (ScenarioConfig, SimTrace) {
    let cfg = preset("fig3-mission").unwrap();
    let trace = run_scenario(&cfg).unwrap();
    (cfg, trace)
}

#[test]
fn fig3_trace_properties() {
    let (cfg, trace) = fig3();

    // contact force starts from zero at the FreeFlight -> Dock switch
    let first_dock = trace.rows.iter().position(|r| r.mission == Mission::Dock).unwrap();
    let before = &trace.rows[first_dock - 1];
    let at = &trace.rows[first_dock];
    assert!(before.contact_forces.iter().all(|f| *f == Vec3::zeros()));
    let onset = at.contact_forces.iter().map(|f| f.norm()).fold(0.0, f64::max);
    assert!(onset < 1e-2, "{onset}");
    let t_dock = at.time;
    assert!(trace.rows.iter().any(|r| r.impact && (r.time - t_dock).abs() < 0.05));

    // tilt stays small outside step scenarios
    let tilt = trace.rows.iter().map(|r| r.attitude_error).fold(0.0, f64::max).to_degrees();
    assert!(tilt < 2.0, "{tilt}");

    // the object leaves the wall with the gripper
    let end = trace.last().unwrap();
    assert!(!end.attached && end.grasp_secured);
    assert!((end.object_position - end.ee_world).norm() < 0.05);

    // bit-exact CSV round trip of a real trace
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let back = SimTrace::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.rows.len(), trace.rows.len());
    for (a, b) in trace.rows.iter().zip(&back.rows) {
        let (va, vb) = (a.values(), b.values());
        assert!(va.iter().zip(&vb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&trace, &cfg, dir.path()).unwrap();
    let m = files.summary;
    assert!(m.contact_time.is_some_and(|t| (6.0..=8.0).contains(&t)));
    assert!(m.detach_time.is_some_and(|t| (10.0..=12.0).contains(&t)));
    assert!(m.passivity.passed);
}

#[test]
fn hover_metrics_report_flat_tracking() {
    let cfg = preset("hover").unwrap();
    let trace = run_scenario(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&trace, &cfg, dir.path()).unwrap();
    let rms = &files.summary.rms[0];
    assert!(rms.uav.iter().chain(&rms.ee).all(|e| *e < 1e-6), "{rms:?}");
    let json = std::fs::read_to_string(files.metrics).unwrap();
    assert!(json.contains("\"passed\": true"));
    let svg = std::fs::read_to_string(dir.path().join("uav_tracking.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
}

fn arb_waypoints() -> impl Strategy<Value = Vec<Waypoint>> {
    proptest::collection::vec((0.01..2.0f64, -2.0..2.0f64, -2.0..0.0f64, any::<bool>()), 0..5).prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(dt, x, z, step)| {
                t += dt;
                Waypoint { t, position: [x, 0.5 * x, z], step }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_serialize_parse_is_idempotent(
        mass in 0.5..3.0f64,
        dt in 1e-4..1e-2f64,
        waypoints in arb_waypoints(),
        seed in any::<u64>(),
        window in proptest::option::of((0.0..5.0f64, 0.1..5.0f64)),
        friction in 0.0..1.5f64,
    ) {
        let mut cfg = ScenarioConfig { name: "p".into(), ..Default::default() };
        cfg.uav.mass = mass;
        cfg.sim.dt = dt;
        cfg.sim.seed = seed;
        cfg.contact.friction = friction;
        cfg.trajectory.waypoints = waypoints;
        if let Some((on, len)) = window {
            cfg.trajectory.tracking = vec![TrackingWindow { t_on: on, t_off: on + len }];
        }
        let once = parse_scenario(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&once, &cfg);
        let twice = parse_scenario(&once.to_toml()).unwrap();
        prop_assert_eq!(once.to_toml(), twice.to_toml());
    }
}
