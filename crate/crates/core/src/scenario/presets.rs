use nalgebra::Vector3;

use super::{Action, Event, Mode, ScenarioSpec, StartState};
use crate::environment::WindConfig;
use crate::guidance::{CrossTrackForm, LoiterSpec, PathSpec};
use crate::vehicle::Deflation;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 7] =
    ["exp2-loiter", "exp3-path", "exp4-wind-loiter", "exp4-wind-path", "exp5-deflate-loiter", "exp5-deflate-path", "tune"];

const ALTITUDE: f64 = 50.0;
const SQUARE_SIDE: f64 = 150.0;
const LOITER_DURATION: f64 = 300.0;
/// Four laps of the square.
const PATH_DURATION: f64 = 1260.0;
const DEFLATED_DURATION: f64 = 600.0;

fn loiter() -> LoiterSpec<f64> {
    LoiterSpec { hold: Vector3::new(0.0, 0.0, ALTITUDE), gain: 0.05 }
}

fn square() -> PathSpec<f64> {
    let s = SQUARE_SIDE;
    PathSpec {
        waypoints: vec![
            Vector3::new(0.0, 0.0, ALTITUDE),
            Vector3::new(s, 0.0, ALTITUDE),
            Vector3::new(s, s, ALTITUDE),
            Vector3::new(0.0, s, ALTITUDE),
        ],
        speed: 2.0,
        gain: 0.1,
        acceptance_radius: 12.0,
        cross_track: CrossTrackForm::Projection,
    }
}

fn gusty() -> WindConfig {
    WindConfig { speed: 1.5, from_deg: 135.0, magnitude: 3.0, seed: 1, ..WindConfig::default() }
}

fn base(name: &str, mode: Mode, duration: f64) -> ScenarioSpec {
    let (loiter, path, start) = match mode {
        Mode::Path => (
            None,
            Some(square()),
            StartState { position: [0.0, 0.0, ALTITUDE], yaw_deg: 0.0, speed: 2.0 },
        ),
        _ => (Some(loiter()), None, StartState { position: [0.0, 0.0, ALTITUDE], yaw_deg: 0.0, speed: 1.0 }),
    };
    ScenarioSpec {
        name: name.into(),
        vehicle: None,
        wind: WindConfig { seed: 1, ..WindConfig::default() },
        mode,
        loiter,
        path,
        manual: [0.0; 8],
        velocity: [0.0; 3],
        start,
        events: Vec::new(),
        duration,
        dt: 0.001,
        control_rate: 50.0,
        seed: None,
        output: None,
        gains: None,
    }
}

fn deflate_at(t: f64) -> Event {
    Event {
        t,
        action: Action::Deflate(Deflation { free_play_scale: 8.0, offset: 0.0, stiffness_scale: 0.2, buoyancy_scale: 0.95 }),
    }
}

/// A built-in scenario by name.
pub fn preset(name: &str) -> Option<ScenarioSpec> {
    let spec = match name {
        "exp2-loiter" => base(name, Mode::Loiter, LOITER_DURATION),
        "exp3-path" => base(name, Mode::Path, PATH_DURATION),
        "exp4-wind-loiter" => ScenarioSpec { wind: gusty(), ..base(name, Mode::Loiter, LOITER_DURATION) },
        "exp4-wind-path" => ScenarioSpec { wind: gusty(), ..base(name, Mode::Path, LOITER_DURATION) },
        "exp5-deflate-loiter" => ScenarioSpec {
            events: vec![deflate_at(DEFLATED_DURATION / 2.0)],
            ..base(name, Mode::Loiter, DEFLATED_DURATION)
        },
        "exp5-deflate-path" => ScenarioSpec {
            events: vec![deflate_at(DEFLATED_DURATION / 2.0)],
            ..base(name, Mode::Path, DEFLATED_DURATION)
        },
        // Setpoint steps for hand tuning the loops one at a time.
        "tune" => {
            let step = |t: f64, v: [f64; 3]| Event { t, action: Action::Setpoint { v } };
            ScenarioSpec {
                mode: Mode::Velocity,
                velocity: [1.5, 0.0, 0.0],
                events: vec![
                    step(40.0, [1.5, 0.0, 0.3]),
                    step(70.0, [1.5, 0.0, -0.3]),
                    step(100.0, [0.0, 1.5, 0.0]),
                    step(140.0, [-1.5, 0.0, 0.0]),
                ],
                ..base(name, Mode::Velocity, 180.0)
            }
        }
        _ => return None,
    };
    Some(spec)
}
