//! JSON messages exchanged with clients. Every message is one JSON object
//! with a `type` field.

use airship::scenario::{Mode, TelemetryFrame};
use serde::{Deserialize, Serialize};

/// Inbound operator command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    /// Manual actuator values in channel order, each in `[-1, 1]`.
    Actuators { values: [f64; 8] },
    Mode { mode: Mode },
    /// World-frame velocity setpoint, m/s. Switches to velocity mode.
    Setpoint { v: [f64; 3] },
    Inflation { level: f64 },
    Wind { from_deg: f64, speed: f64, magnitude: f64 },
    Pause {},
    Resume {},
    Timescale { factor: f64 },
}

impl Command {
    /// Parses and validates one message.
    pub fn parse(text: &str) -> Result<Self, String> {
        let cmd: Self = serde_json::from_str(text).map_err(|e| format!("rejected message: {e}"))?;
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Command::Actuators { values } if !finite(values) => Err("actuator values must be finite".into()),
            Command::Setpoint { v } if !finite(v) => Err("setpoint must be finite".into()),
            Command::Inflation { level } if !(0.0..=1.0).contains(level) => Err("inflation level must lie in [0, 1]".into()),
            Command::Wind { from_deg, speed, magnitude } if !finite(&[*from_deg, *speed, *magnitude]) => {
                Err("wind values must be finite".into())
            }
            Command::Timescale { factor } if !(factor.is_finite() && *factor > 0.0) => {
                Err("timescale factor must be positive".into())
            }
            _ => Ok(()),
        }
    }
}

/// Reply to one inbound message, in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
    pub detail: String,
    /// Some actuator value was clamped to `[-1, 1]`.
    #[serde(default)]
    pub clamped: bool,
}

impl Ack {
    pub fn ok(detail: impl Into<String>) -> Self {
        Self { ok: true, detail: detail.into(), clamped: false }
    }

    pub fn error(detail: impl Into<String>) -> Self {
        Self { ok: false, detail: detail.into(), clamped: false }
    }
}

/// Telemetry as streamed to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamFrame {
    #[serde(flatten)]
    pub frame: TelemetryFrame,
    pub mode: Mode,
    pub paused: bool,
    /// Simulated seconds per wall-clock second since the previous frame.
    pub time_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    Frame(StreamFrame),
    Ack(Ack),
}

impl Outbound {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialize")
    }
}
