//! Free flight → dock → aerial grasp lifecycle and the object wrench each
//! state implies.

use serde::{Deserialize, Serialize};

use crate::contact::{object_wrench_docked, ContactSet, GraspMatrix};
use crate::dynamics::{object_inertial_wrench, ObjectParams};
use crate::error::MissionError;
use crate::spatial::{Frame, Vec3, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mission {
    FreeFlight,
    Dock,
    AerialGrasp,
}

impl Mission {
    pub fn code(&self) -> u8 {
        match self {
            Mission::FreeFlight => 0,
            Mission::Dock => 1,
            Mission::AerialGrasp => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Mission::FreeFlight),
            1 => Some(Mission::Dock),
            2 => Some(Mission::AerialGrasp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mission::FreeFlight => "free-flight",
            Mission::Dock => "dock",
            Mission::AerialGrasp => "aerial-grasp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionState {
    pub mission: Mission,
    pub entry_time: f64,
}

impl MissionState {
    pub fn start() -> Self {
        Self { mission: Mission::FreeFlight, entry_time: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransitionEvents {
    pub contact_made: bool,
    pub grasp_secured: bool,
    pub detach: bool,
}

/// FreeFlight + contact → Dock; Dock + secured grasp + detach → AerialGrasp.
pub fn step_mission(state: MissionState, events: TransitionEvents, now: f64) -> Result<MissionState, MissionError> {
    if events.detach && !events.contact_made {
        return Err(MissionError::InconsistentEvents("detach reported before contact"));
    }
    if events.grasp_secured && !events.contact_made {
        return Err(MissionError::InconsistentEvents("grasp secured before contact"));
    }
    let next = match state.mission {
        Mission::FreeFlight if events.contact_made => Mission::Dock,
        Mission::Dock if events.grasp_secured && events.detach => Mission::AerialGrasp,
        m => m,
    };
    Ok(if next == state.mission { state } else { MissionState { mission: next, entry_time: now } })
}

/// Debounced "all six phalanges loaded" detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspMonitor {
    pub threshold: f64,
    pub hold_time: f64,
    loaded_for: f64,
    secured: bool,
}

impl GraspMonitor {
    pub fn new(threshold: f64, hold_time: f64) -> Self {
        Self { threshold, hold_time, loaded_for: 0.0, secured: false }
    }

    /// Feeds one step of contact data; once secured the flag stays set.
    pub fn update(&mut self, contacts: &ContactSet, dt: f64) -> bool {
        if self.secured {
            return true;
        }
        if contacts.phalanges().iter().all(|p| p.normal_force > self.threshold) {
            self.loaded_for += dt;
        } else {
            self.loaded_for = 0.0;
        }
        // rounding guard: hold_time is a multiple of dt in practice
        self.secured = self.loaded_for >= self.hold_time - 1e-9 * dt;
        self.secured
    }

    pub fn secured(&self) -> bool {
        self.secured
    }
}

/// Environment data needed to evaluate the object wrench.
pub enum EnvironmentData<'a> {
    FreeFlight,
    Dock { grasp: &'a GraspMatrix, contacts: &'a ContactSet },
    AerialGrasp { object: &'a ObjectParams, gravity_o: Vec3, accel_o: Vec3 },
}

/// `w_obj` in `F_o` for the current mission.
pub fn environment_wrench(data: &EnvironmentData<'_>) -> Wrench {
    match data {
        EnvironmentData::FreeFlight => Wrench::zero(Frame::Object),
        EnvironmentData::Dock { grasp, contacts } => {
            object_wrench_docked(grasp, &contacts.stacked_forces()).expect("grasp matrix is 6x21")
        }
        EnvironmentData::AerialGrasp { object, gravity_o, accel_o } => {
            object_inertial_wrench(Mission::AerialGrasp, object, gravity_o, accel_o)
                .expect("mission is aerial grasp")
        }
    }
}

/// True when `seq` (with repeats collapsed) is a prefix of the mission order.
pub fn is_valid_sequence(seq: &[Mission]) -> bool {
    let mut collapsed: Vec<Mission> = Vec::new();
    for &m in seq {
        if collapsed.last() != Some(&m) {
            collapsed.push(m);
        }
    }
    let order = [Mission::FreeFlight, Mission::Dock, Mission::AerialGrasp];
    collapsed.len() <= order.len() && collapsed.iter().zip(order.iter()).all(|(a, b)| a == b)
}
