use airship::scenario::{Action, Mode, ScenarioError, ScenarioSpec, Simulation, TelemetryFrame};
use airship::vehicle::VehicleConfig;

use crate::protocol::{Ack, Command, StreamFrame};

/// A simulation plus the live-service state around it. Commands and ticks
/// are applied strictly in call order.
#[derive(Debug, Clone)]
pub struct Session {
    sim: Simulation<f64>,
    paused: bool,
    timescale: f64,
    latest: Option<TelemetryFrame>,
    halted: Option<String>,
}

impl Session {
    pub fn new(spec: &ScenarioSpec, vehicle: &VehicleConfig, timescale: f64) -> Result<Self, ScenarioError> {
        if !(timescale.is_finite() && timescale > 0.0) {
            return Err(ScenarioError::Invalid("timescale must be positive".into()));
        }
        Ok(Self { sim: Simulation::new(spec, vehicle)?, paused: false, timescale, latest: None, halted: None })
    }

    pub fn simulation(&self) -> &Simulation<f64> {
        &self.sim
    }

    /// Simulated time of the next tick, s.
    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn period(&self) -> f64 {
        self.sim.period()
    }

    pub fn paused(&self) -> bool {
        self.paused || self.halted.is_some()
    }

    pub fn timescale(&self) -> f64 {
        self.timescale
    }

    /// Why the simulation stopped, if it diverged.
    pub fn halted(&self) -> Option<&str> {
        self.halted.as_deref()
    }

    pub fn apply(&mut self, cmd: &Command) -> Ack {
        if let Err(e) = cmd.validate() {
            return Ack::error(e);
        }
        let action = match cmd {
            Command::Pause {} => {
                self.paused = true;
                return Ack::ok("paused");
            }
            Command::Resume {} => {
                self.paused = false;
                return Ack::ok("resumed");
            }
            Command::Timescale { factor } => {
                self.timescale = *factor;
                return Ack::ok(format!("timescale {factor}"));
            }
            Command::Actuators { values } => Action::Actuators { values: *values },
            Command::Mode { mode } => Action::Mode { mode: *mode },
            Command::Setpoint { v } => Action::Setpoint { v: *v },
            Command::Inflation { level } => Action::SetInflation { level: *level },
            Command::Wind { from_deg, speed, magnitude } => {
                Action::Wind { speed: *speed, from_deg: *from_deg, magnitude: *magnitude }
            }
        };
        match self.sim.apply(&action) {
            Ok(report) => {
                let mut ack = if report.clamped {
                    Ack::ok("actuator values clamped to [-1, 1]")
                } else if matches!(cmd, Command::Actuators { .. }) && self.sim.mode() != Mode::Manual {
                    Ack::ok("stored; takes effect in manual mode")
                } else {
                    Ack::ok("applied")
                };
                ack.clamped = report.clamped;
                ack
            }
            Err(e) => Ack::error(e.to_string()),
        }
    }

    /// Runs one control tick unless paused or halted and returns its frame.
    pub fn advance(&mut self) -> Option<TelemetryFrame> {
        if self.paused() {
            return None;
        }
        match self.sim.tick() {
            Ok(frame) => {
                self.latest = Some(frame);
                Some(frame)
            }
            Err(e) => {
                self.halted = Some(e.to_string());
                None
            }
        }
    }

    /// The most recent frame wrapped for streaming.
    pub fn stream_frame(&self, time_ratio: f64) -> Option<StreamFrame> {
        self.latest.map(|frame| StreamFrame { frame, mode: self.sim.mode(), paused: self.paused(), time_ratio })
    }
}
