//! Built-in scenarios.

use crate::scenario::config::{parse_scenario, ScenarioConfig};

const HOVER: &str = r#"
name = "hover"

[sim]
t_end = 5.0
"#;

const FIG3_MISSION: &str = r#"
name = "fig3-mission"

[sim]
t_end = 25.0

[object]
position = [1.5, 0.0, -1.0]
breakaway_force = 0.5

[contact]
v_reg = 0.05

[trajectory]
tracking_ramp = 0.5
tracking_offset = [-0.015, 0.0, 0.0]
tracking = [{ t_on = 6.0, t_off = 10.5 }]
waypoints = [
    { t = 0.0, position = [0.0, 0.0, -1.0] },
    { t = 6.0, position = [1.235, 0.0, -1.0] },
    { t = 9.0, position = [1.245, 0.0, -1.0] },
    { t = 10.5, position = [1.245, 0.0, -1.0] },
    { t = 12.5, position = [1.0, 0.0, -1.0] },
]
finger_waypoints = [
    { t = 7.0, value = 0.05 },
    { t = 7.5, value = 0.005 },
]
"#;

const FIG4_MANIPULATOR: &str = r#"
name = "fig4-manipulator"

[sim]
t_end = 12.0

[trajectory]
manipulator_waypoints = [
    { t = 0.0, position = [0.05, 0.0, 0.02] },
    { t = 2.0, position = [0.08, 0.02, 0.03] },
    { t = 4.0, position = [0.08, -0.02, 0.03] },
    { t = 6.0, position = [0.05, 0.0, 0.02] },
    { t = 7.0, position = [0.07, 0.0, 0.02], step = true },
    { t = 9.0, position = [0.05, 0.0, 0.02], step = true },
]
finger_waypoints = [
    { t = 1.0, value = 0.05 },
    { t = 3.0, value = 0.01 },
    { t = 5.0, value = 0.05 },
]
"#;

const PASSIVITY_SUITE: &str = r#"
name = "passivity-suite"

[sim]
t_end = 15.0
seed = 11

[trajectory]
waypoints = [
    { t = 0.0, position = [0.0, 0.0, -1.0] },
    { t = 1.0, position = [0.5, 0.0, -1.0], step = true },
    { t = 5.0, position = [0.5, 0.3, -1.3] },
    { t = 9.0, position = [0.0, 0.0, -1.0] },
]
manipulator_waypoints = [
    { t = 0.0, position = [0.05, 0.0, 0.02] },
    { t = 2.0, position = [0.07, 0.0, 0.02], step = true },
    { t = 6.0, position = [0.03, 0.03, 0.04] },
]
finger_waypoints = [
    { t = 3.0, value = 0.05 },
    { t = 4.0, value = 0.01 },
    { t = 8.0, value = 0.04, step = true },
]

[disturbance]
enabled = true
force_std = 0.2
hold = 0.1
t_on = 10.0
t_off = 13.0
"#;

/// Built-in scenarios by name.
pub const PRESETS: [(&str, &str); 4] = [
    ("hover", HOVER),
    ("fig3-mission", FIG3_MISSION),
    ("fig4-manipulator", FIG4_MANIPULATOR),
    ("passivity-suite", PASSIVITY_SUITE),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The TOML source of a preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    preset_source(name).map(|s| parse_scenario(s).expect("built-in preset is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
        }
        assert!(preset("nope").is_none());
    }
}
