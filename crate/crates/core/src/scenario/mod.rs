//! Closed-loop scenario runner.
//!
//! A scenario couples a vehicle, the wind environment, guidance and the
//! controller, and replays a timeline of events (inflation changes, wind
//! changes, mode switches). Physics runs at `dt`; guidance and control run at
//! `control_rate`, which is also the telemetry rate.

mod presets;
mod summary;
mod telemetry;

use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ActuatorCommands, ControlOutput, Controller, ControllerGains, Setpoints, VirtualAxes};
use crate::environment::{Environment, WindConfig};
use crate::guidance::{advance_waypoint, cross_track, loiter_setpoint, path_setpoint, LoiterSpec, PathSpec};
use crate::multibody::{BodyId, MultibodyError};
use crate::num::Real;
use crate::vehicle::{convert_gains, reference_blimp, Deflation, Vehicle, VehicleConfig, VehicleError};

pub use presets::{preset, PRESETS};
pub use summary::{summarize, PhaseStats, Summary, WaypointTransition, HF_BAND_HZ, SETTLE_S, WELCH_SEGMENT};
pub use telemetry::{read_csv, write_csv, TelemetryFrame, TelemetryWriter, CSV_HEADER};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error("simulation diverged at t = {time} s: {source}")]
    NonFinite { time: f64, source: MultibodyError },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Source of the velocity setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Actuators commanded directly; guidance and the outer loops are bypassed.
    Manual,
    Loiter,
    Path,
    /// A fixed world-frame velocity setpoint.
    Velocity,
}

impl Mode {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Manual => "manual",
            Mode::Loiter => "loiter",
            Mode::Path => "path",
            Mode::Velocity => "velocity",
        }
    }
}

/// Something that can happen to a running simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    /// Inflation level in `[0, 1]`, mapped through the vehicle's scale laws.
    SetInflation { level: f64 },
    /// Explicit scale factors for the hull attachments and buoyancy.
    Deflate(Deflation),
    /// Mean wind and turbulence magnitude; the turbulence stream continues.
    Wind { speed: f64, from_deg: f64, magnitude: f64 },
    Mode { mode: Mode },
    /// Switches to velocity mode with setpoint `v`, ENU m/s.
    Setpoint { v: [f64; 3] },
    /// Manual actuator values, clamped to `[-1, 1]`.
    Actuators { values: [f64; 8] },
    Airspeed { enabled: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Simulated time, s. Applied at the first control tick at or after it.
    pub t: f64,
    #[serde(flatten)]
    pub action: Action,
}

/// Initial pose and motion of the vehicle frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartState {
    /// ENU, m.
    pub position: [f64; 3],
    /// Heading, degrees counter-clockwise from east.
    pub yaw_deg: f64,
    /// Initial forward speed of every body, m/s.
    pub speed: f64,
}

impl Default for StartState {
    fn default() -> Self {
        Self { position: [0.0, 0.0, 50.0], yaw_deg: 0.0, speed: 0.0 }
    }
}

fn default_dt() -> f64 {
    0.001
}

fn default_rate() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Vehicle document, relative to the scenario file. The reference blimp
    /// when absent.
    #[serde(default)]
    pub vehicle: Option<PathBuf>,
    #[serde(default)]
    pub wind: WindConfig,
    pub mode: Mode,
    #[serde(default)]
    pub loiter: Option<LoiterSpec<f64>>,
    #[serde(default)]
    pub path: Option<PathSpec<f64>>,
    #[serde(default)]
    pub manual: [f64; 8],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub start: StartState,
    #[serde(default)]
    pub events: Vec<Event>,
    /// Simulated time, s.
    pub duration: f64,
    /// Physics step, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Guidance, control and telemetry rate, Hz.
    #[serde(default = "default_rate")]
    pub control_rate: f64,
    /// Overrides `wind.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory for telemetry and summary.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Overrides the vehicle's gains.
    #[serde(default)]
    pub gains: Option<ControllerGains<f64>>,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| ScenarioError::Parse { path: e.path().to_string(), message: e.into_inner().to_string() })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Wind settings with the seed override applied.
    pub fn effective_wind(&self) -> WindConfig {
        let mut w = self.wind.clone();
        if let Some(seed) = self.seed {
            w.seed = seed;
        }
        w
    }

    /// Physics steps per control tick.
    pub fn steps_per_tick(&self) -> Result<usize, ScenarioError> {
        let ratio = 1.0 / (self.control_rate * self.dt);
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > 1e-6 {
            return Err(ScenarioError::Invalid(format!(
                "control period 1/{} s is not a whole number of {} s physics steps",
                self.control_rate, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Number of control ticks (telemetry frames) in the run.
    pub fn ticks(&self) -> u64 {
        (self.duration * self.control_rate).round() as u64
    }

    fn needs(&self, mode: Mode) -> Result<(), ScenarioError> {
        match mode {
            Mode::Loiter if self.loiter.is_none() => Err(ScenarioError::Invalid("loiter mode needs `loiter`".into())),
            Mode::Path if self.path.is_none() => Err(ScenarioError::Invalid("path mode needs `path`".into())),
            _ => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.into()));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.control_rate > 0.0 && self.control_rate.is_finite()) {
            return bad("dt and control_rate must be positive");
        }
        self.steps_per_tick()?;
        self.effective_wind().validate().map_err(ScenarioError::Invalid)?;
        if let Some(l) = &self.loiter {
            if !(l.gain > 0.0) {
                return bad("loiter.gain must be positive");
            }
        }
        if let Some(p) = &self.path {
            p.validate().map_err(|e| ScenarioError::Invalid(format!("path: {e}")))?;
        }
        if let Some(g) = &self.gains {
            g.validate().map_err(|e| ScenarioError::Invalid(format!("gains: {e}")))?;
        }
        self.needs(self.mode)?;
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.t >= last) || !e.t.is_finite() {
                return bad("events must be time-ordered");
            }
            last = e.t;
            match &e.action {
                Action::Mode { mode } => self.needs(*mode)?,
                Action::SetInflation { level } if !(0.0..=1.0).contains(level) => {
                    return bad("inflation level must lie in [0, 1]")
                }
                Action::Wind { speed, from_deg, magnitude } => {
                    let w = WindConfig { speed: *speed, from_deg: *from_deg, magnitude: *magnitude, ..self.wind.clone() };
                    w.validate().map_err(ScenarioError::Invalid)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Loads the vehicle document (relative paths resolve against `base`).
    pub fn vehicle_config(&self, base: &Path) -> Result<VehicleConfig, ScenarioError> {
        match &self.vehicle {
            None => Ok(reference_blimp()),
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&path)?;
                Ok(VehicleConfig::from_json(&text)?)
            }
        }
    }
}

/// What applying an action did beyond the state change itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionReport {
    /// Some manual actuator value was outside `[-1, 1]` and got clamped.
    pub clamped: bool,
}

fn v3<T: Real>(a: [f64; 3]) -> Vector3<T> {
    Vector3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]))
}

fn cast_loiter<T: Real>(l: &LoiterSpec<f64>) -> LoiterSpec<T> {
    LoiterSpec { hold: l.hold.map(T::lit), gain: T::lit(l.gain) }
}

fn cast_path<T: Real>(p: &PathSpec<f64>) -> PathSpec<T> {
    PathSpec {
        waypoints: p.waypoints.iter().map(|w| w.map(T::lit)).collect(),
        speed: T::lit(p.speed),
        gain: T::lit(p.gain),
        acceptance_radius: T::lit(p.acceptance_radius),
        cross_track: p.cross_track,
    }
}

fn idle_output<T: Real>(commands: ActuatorCommands<T>) -> ControlOutput<T> {
    let z = Vector3::zeros();
    ControlOutput {
        air: crate::control::AirData { flow: z, air_velocity: z },
        setpoints: Setpoints {
            velocity: z,
            air_velocity: z,
            scale: T::zero(),
            pitch: T::zero(),
            yaw_rate: T::zero(),
            thrust: T::zero(),
            gamma: T::zero(),
        },
        axes: VirtualAxes { pitch: T::zero(), yaw: T::zero(), thrust: T::zero() },
        commands,
    }
}

/// A running scenario.
#[derive(Debug, Clone)]
pub struct Simulation<T: Real> {
    vehicle: Vehicle<T>,
    controller: Controller<T>,
    env: Environment<T>,
    mode: Mode,
    loiter: Option<LoiterSpec<T>>,
    path: Option<PathSpec<T>>,
    segment: usize,
    manual: ActuatorCommands<T>,
    velocity: Vector3<T>,
    dt: T,
    steps_per_tick: usize,
    period: f64,
    tick: u64,
    events: Vec<Event>,
    next_event: usize,
}

impl<T: Real> Simulation<T> {
    pub fn new(spec: &ScenarioSpec, vehicle: &VehicleConfig) -> Result<Self, ScenarioError> {
        spec.validate()?;
        let steps_per_tick = spec.steps_per_tick()?;
        let period = steps_per_tick as f64 * spec.dt;
        let s = &spec.start;
        let placement = Isometry3::new(Vector3::from(s.position), Vector3::z() * s.yaw_deg.to_radians());
        let mut v = Vehicle::<T>::assemble(vehicle, placement)?;
        if s.speed != 0.0 {
            let forward = placement.rotation * Vector3::x() * s.speed;
            for i in 0..v.world.bodies().len() {
                v.world.state_mut(BodyId(i)).velocity = forward.map(T::lit);
            }
        }
        let mut gains: ControllerGains<T> = match &spec.gains {
            Some(g) => convert_gains(g),
            None => v.gains().clone(),
        };
        gains.period = T::lit(period);
        let (manual, _) = ActuatorCommands::saturated(spec.manual.map(T::lit));
        Ok(Self {
            vehicle: v,
            controller: Controller::new(gains),
            env: Environment::new(spec.effective_wind(), T::lit(spec.dt)),
            mode: spec.mode,
            loiter: spec.loiter.as_ref().map(cast_loiter),
            path: spec.path.as_ref().map(cast_path),
            segment: 0,
            manual,
            velocity: v3(spec.velocity),
            dt: T::lit(spec.dt),
            steps_per_tick,
            period,
            tick: 0,
            events: spec.events.clone(),
            next_event: 0,
        })
    }

    /// Simulated time of the next control tick, s.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.period
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn ticks_done(&self) -> u64 {
        self.tick
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn vehicle(&self) -> &Vehicle<T> {
        &self.vehicle
    }

    pub fn environment(&self) -> &Environment<T> {
        &self.env
    }

    pub fn controller(&self) -> &Controller<T> {
        &self.controller
    }

    /// Replaces the controller gains; the control period is kept.
    pub fn set_gains(&mut self, mut gains: ControllerGains<T>) {
        gains.period = T::lit(self.period);
        self.controller.set_gains(gains);
    }

    /// Applies an action immediately (between physics steps).
    pub fn apply(&mut self, action: &Action) -> Result<ActionReport, ScenarioError> {
        let mut report = ActionReport::default();
        match action {
            Action::SetInflation { level } => self.vehicle.set_inflation(T::lit(*level))?,
            Action::Deflate(d) => self.vehicle.deflate(d)?,
            Action::Wind { speed, from_deg, magnitude } => {
                let w = WindConfig { speed: *speed, from_deg: *from_deg, magnitude: *magnitude, ..self.env.config.clone() };
                w.validate().map_err(ScenarioError::Invalid)?;
                self.env.reconfigure(*speed, *from_deg, *magnitude);
            }
            Action::Mode { mode } => self.set_mode(*mode)?,
            Action::Setpoint { v } => {
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(ScenarioError::Invalid("setpoint must be finite".into()));
                }
                self.velocity = v3(*v);
                self.set_mode(Mode::Velocity)?;
            }
            Action::Actuators { values } => {
                if !values.iter().all(|x| x.is_finite()) {
                    return Err(ScenarioError::Invalid("actuator values must be finite".into()));
                }
                let (cmds, clamped) = ActuatorCommands::saturated(values.map(T::lit));
                self.manual = cmds;
                report.clamped = clamped;
            }
            Action::Airspeed { enabled } => self.vehicle.set_airspeed_enabled(*enabled),
        }
        Ok(report)
    }

    fn set_mode(&mut self, mode: Mode) -> Result<(), ScenarioError> {
        match mode {
            Mode::Loiter if self.loiter.is_none() => {
                return Err(ScenarioError::Invalid("no loiter point configured".into()));
            }
            Mode::Path if self.path.is_none() => return Err(ScenarioError::Invalid("no path configured".into())),
            _ => {}
        }
        if self.mode == Mode::Manual && mode != Mode::Manual {
            self.controller.reset();
        }
        self.mode = mode;
        Ok(())
    }

    /// One control tick: due events, sensing, guidance, control, then the
    /// physics steps up to the next tick. Returns the frame at the start of
    /// the tick.
    pub fn tick(&mut self) -> Result<TelemetryFrame, ScenarioError> {
        let t = self.time();
        let tolerance = 1e-9 * self.period;
        while let Some(e) = self.events.get(self.next_event) {
            if e.t > t + tolerance {
                break;
            }
            let action = e.action.clone();
            self.next_event += 1;
            self.apply(&action)?;
        }

        let wind = self.env.wind();
        let reading = self.vehicle.read_sensors(&wind);
        let position = reading.position;
        let (velocity_sp, reference, target, xt) = match self.mode {
            Mode::Manual => (None, position, position, T::zero()),
            Mode::Velocity => (Some(self.velocity), position, position, T::zero()),
            Mode::Loiter => {
                let l = self.loiter.as_ref().expect("checked on mode change");
                (Some(loiter_setpoint(&position, l)), l.hold, l.hold, T::zero())
            }
            Mode::Path => {
                let p = self.path.as_ref().expect("checked on mode change");
                let bad = |e| ScenarioError::Invalid(format!("path: {e}"));
                self.segment = advance_waypoint(&position, p, self.segment).map_err(bad)?;
                let sp = path_setpoint(&position, p, self.segment).map_err(bad)?;
                let (xt, foot) = cross_track(&position, p, self.segment).map_err(bad)?;
                let (_, end) = p.segment(self.segment).map_err(bad)?;
                (Some(sp), foot, end, xt)
            }
        };
        let output = match velocity_sp {
            Some(sp) => self.controller.update(&reading.nav, &reading.gyro, &sp),
            None => idle_output(self.manual),
        };
        let cmds = output.commands;
        let frame = TelemetryFrame::new(
            t,
            self.mode,
            &reading,
            &wind,
            &output,
            self.vehicle.inflation().level,
            self.segment,
            &reference,
            &target,
            xt,
        );

        for _ in 0..self.steps_per_tick {
            self.env.advance();
            let wind = self.env.wind();
            self.vehicle.step(self.dt, &wind, &cmds).map_err(|source| {
                let time = match &source {
                    MultibodyError::NonFiniteState { time, .. } => *time,
                    _ => t,
                };
                ScenarioError::NonFinite { time, source }
            })?;
        }
        self.tick += 1;
        Ok(frame)
    }
}

/// Result of a headless run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub frames: Vec<TelemetryFrame>,
    pub summary: Summary,
}

/// Runs a scenario to completion in memory.
pub fn run<T: Real>(spec: &ScenarioSpec, vehicle: &VehicleConfig) -> Result<RunOutput, ScenarioError> {
    let mut sim = Simulation::<T>::new(spec, vehicle)?;
    let n = spec.ticks();
    let mut frames = Vec::with_capacity(n as usize);
    for _ in 0..n {
        frames.push(sim.tick()?);
    }
    let summary = summarize(&frames).ok_or_else(|| ScenarioError::Invalid("empty run".into()))?;
    Ok(RunOutput { frames, summary })
}

/// Runs a scenario and writes `telemetry.csv` and `summary.json` to `dir`.
/// On divergence the frames recorded so far are still written.
pub fn run_to_dir<T: Real>(spec: &ScenarioSpec, vehicle: &VehicleConfig, dir: &Path) -> Result<Summary, ScenarioError> {
    std::fs::create_dir_all(dir)?;
    let mut sim = Simulation::<T>::new(spec, vehicle)?;
    let mut frames = Vec::with_capacity(spec.ticks() as usize);
    let mut failure = None;
    for _ in 0..spec.ticks() {
        match sim.tick() {
            Ok(f) => frames.push(f),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let file = std::fs::File::create(dir.join("telemetry.csv"))?;
    write_csv(std::io::BufWriter::new(file), &frames)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let summary = summarize(&frames).ok_or_else(|| ScenarioError::Invalid("empty run".into()))?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(summary)
}
