//! JSON vehicle description.
//!
//! All quantities are SI. Positions and orientations are given in the vehicle
//! frame (x forward, y left, z up, origin at the hull centre). Orientations are
//! `rpy = [roll, pitch, yaw]` in radians with `R = Rz(yaw) Ry(pitch) Rx(roll)`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::VehicleError;
use crate::aero::{AeroKind, AIR_DENSITY};
use crate::control::{Channel, ControllerGains};
use crate::multibody::Shape;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub name: String,
    pub mass: f64,
    /// Principal moments of inertia, kg·m².
    pub inertia: Vec3,
    pub shape: Shape,
    /// Centre of mass.
    pub position: Vec3,
    #[serde(default)]
    pub rpy: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub name: String,
    pub parent: String,
    pub child: String,
    /// Joint origin.
    pub anchor: Vec3,
    /// Joint axes.
    #[serde(default)]
    pub rpy: Vec3,
    pub linear_stiffness: Vec3,
    pub linear_damping: Vec3,
    pub rotational_stiffness: Vec3,
    pub rotational_damping: Vec3,
    #[serde(default)]
    pub linear_free_play: Vec3,
    #[serde(default)]
    pub rotational_free_play: Vec3,
    /// Joints that soften when the envelope loses pressure.
    #[serde(default)]
    pub hull_attachment: bool,
}

fn default_kq() -> f64 {
    0.5 * AIR_DENSITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeroConfig {
    pub name: String,
    pub body: String,
    pub kind: AeroKind,
    pub area: f64,
    pub cl0: f64,
    pub cd0: f64,
    pub cd1: f64,
    pub alpha_stall: f64,
    #[serde(default = "default_kq")]
    pub k_q: f64,
    /// Centre of pressure in the body frame.
    #[serde(default)]
    pub offset: Vec3,
    /// Primitive frame relative to the body frame.
    #[serde(default)]
    pub rpy: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuoyancyConfig {
    pub body: String,
    /// Displaced volume, m³.
    pub volume: f64,
    pub coefficient: f64,
    /// Centre of buoyancy in the body frame.
    #[serde(default)]
    pub center: Vec3,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActuatorConfig {
    /// Drives one rest angle of a joint toward `gain · command · max_angle`.
    Servo {
        channel: Channel,
        joint: String,
        axis: usize,
        max_angle: f64,
        /// rad/s.
        rate_limit: f64,
        #[serde(default = "one")]
        gain: f64,
    },
    /// Tilts every vectored thruster about its body y axis.
    VectorServo { channel: Channel, max_angle: f64, rate_limit: f64 },
    /// Force `command · max_thrust` along `direction`, applied at `point`.
    Thruster {
        channel: Channel,
        body: String,
        #[serde(default)]
        point: Vec3,
        direction: Vec3,
        max_thrust: f64,
        #[serde(default)]
        vectored: bool,
    },
}

impl ActuatorConfig {
    pub fn channel(&self) -> Channel {
        match self {
            ActuatorConfig::Servo { channel, .. }
            | ActuatorConfig::VectorServo { channel, .. }
            | ActuatorConfig::Thruster { channel, .. } => *channel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirspeedSensorConfig {
    pub body: String,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// Body whose state feeds navigation.
    pub nav_body: String,
    /// Reported position, in `nav_body` coordinates.
    #[serde(default)]
    pub nav_offset: Vec3,
    /// Body carrying the rate gyro.
    pub gyro_body: String,
    /// First-order low-pass cutoff applied to the gyro, Hz. Zero disables it.
    #[serde(default = "default_gyro_cutoff")]
    pub gyro_cutoff_hz: f64,
    pub airspeed: AirspeedSensorConfig,
}

fn default_gyro_cutoff() -> f64 {
    5.0
}

/// Maps an inflation level `s` to scale factors:
/// stiffness `s^stiffness_exponent`, buoyancy `s^buoyancy_exponent`,
/// free play `1 + free_play_slope (1 - s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InflationLaw {
    pub stiffness_exponent: f64,
    pub buoyancy_exponent: f64,
    pub free_play_slope: f64,
}

impl Default for InflationLaw {
    fn default() -> Self {
        Self { stiffness_exponent: 2.0, buoyancy_exponent: 1.0, free_play_slope: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    #[serde(default)]
    pub name: String,
    pub bodies: Vec<BodyConfig>,
    pub joints: Vec<JointConfig>,
    pub aero: Vec<AeroConfig>,
    pub buoyancy: Vec<BuoyancyConfig>,
    pub actuators: Vec<ActuatorConfig>,
    pub sensors: SensorConfig,
    #[serde(default)]
    pub gains: ControllerGains<f64>,
    #[serde(default)]
    pub inflation: InflationLaw,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> VehicleError {
    VehicleError::Schema { path: path.into(), message: message.into() }
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn non_negative(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite() && *x >= 0.0)
}

impl VehicleConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, VehicleError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vehicle config serializes")
    }

    pub fn body(&self, name: &str) -> Option<&BodyConfig> {
        self.bodies.iter().find(|b| b.name == name)
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass).sum()
    }

    /// Structural checks beyond what the JSON types enforce.
    pub fn validate(&self) -> Result<(), VehicleError> {
        if self.bodies.is_empty() {
            return Err(schema("bodies", "at least one body is required"));
        }
        let mut names = HashSet::new();
        for (i, b) in self.bodies.iter().enumerate() {
            if !(b.mass > 0.0) {
                return Err(VehicleError::NonPositiveMass(b.name.clone()));
            }
            if !b.inertia.iter().all(|m| *m > 0.0 && m.is_finite()) {
                return Err(schema(format!("bodies[{i}].inertia"), "principal moments must be positive"));
            }
            if !finite(&b.position) || !finite(&b.rpy) {
                return Err(schema(format!("bodies[{i}]"), "pose must be finite"));
            }
            if !names.insert(b.name.as_str()) {
                return Err(schema(format!("bodies[{i}].name"), format!("duplicate body `{}`", b.name)));
            }
        }
        let body_ref = |item: String, name: &str| -> Result<(), VehicleError> {
            if names.contains(name) {
                Ok(())
            } else {
                Err(VehicleError::DanglingReference { item, kind: "body", name: name.to_string() })
            }
        };

        let mut joint_names = HashSet::new();
        for (i, j) in self.joints.iter().enumerate() {
            let item = format!("joint `{}`", j.name);
            body_ref(item.clone(), &j.parent)?;
            body_ref(item, &j.child)?;
            if j.parent == j.child {
                return Err(schema(format!("joints[{i}]"), "parent and child must differ"));
            }
            if !joint_names.insert(j.name.as_str()) {
                return Err(schema(format!("joints[{i}].name"), format!("duplicate joint `{}`", j.name)));
            }
            let params = [
                &j.linear_stiffness,
                &j.linear_damping,
                &j.rotational_stiffness,
                &j.rotational_damping,
                &j.linear_free_play,
                &j.rotational_free_play,
            ];
            if !params.iter().all(|p| non_negative(&p[..])) {
                return Err(schema(format!("joints[{i}]"), "stiffness, damping and free play must be non-negative"));
            }
        }

        for (i, a) in self.aero.iter().enumerate() {
            body_ref(format!("aero `{}`", a.name), &a.body)?;
            let ok = a.area > 0.0
                && non_negative(&[a.cl0, a.cd0, a.cd1, a.k_q])
                && a.alpha_stall > 0.0
                && a.alpha_stall < std::f64::consts::FRAC_PI_2;
            if !ok {
                return Err(schema(format!("aero[{i}]"), "area > 0, coefficients >= 0, 0 < alpha_stall < pi/2"));
            }
        }

        let mut hull = HashSet::new();
        for (i, s) in self.buoyancy.iter().enumerate() {
            body_ref(format!("buoyancy[{i}]"), &s.body)?;
            if !(s.volume > 0.0) || !(s.coefficient >= 0.0) {
                return Err(schema(format!("buoyancy[{i}]"), "volume must be positive and coefficient non-negative"));
            }
            hull.insert(s.body.as_str());
        }
        if hull.len() < 2 {
            return Err(schema("buoyancy", "the hull needs at least two sections"));
        }

        let mut channels = HashSet::new();
        for (i, a) in self.actuators.iter().enumerate() {
            if !channels.insert(a.channel()) {
                return Err(schema(format!("actuators[{i}].channel"), "channel bound twice"));
            }
            match a {
                ActuatorConfig::Servo { joint, axis, max_angle, rate_limit, .. } => {
                    if !joint_names.contains(joint.as_str()) {
                        return Err(VehicleError::DanglingReference {
                            item: format!("actuators[{i}]"),
                            kind: "joint",
                            name: joint.clone(),
                        });
                    }
                    if *axis > 2 || !(*max_angle > 0.0) || !(*rate_limit > 0.0) {
                        return Err(schema(format!("actuators[{i}]"), "axis in 0..3, positive angle and rate"));
                    }
                }
                ActuatorConfig::VectorServo { max_angle, rate_limit, .. } => {
                    if !(*max_angle > 0.0) || !(*rate_limit > 0.0) {
                        return Err(schema(format!("actuators[{i}]"), "positive angle and rate"));
                    }
                }
                ActuatorConfig::Thruster { body, direction, max_thrust, .. } => {
                    body_ref(format!("actuators[{i}]"), body)?;
                    let n = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
                    if !(n > 0.0) || !(*max_thrust >= 0.0) {
                        return Err(schema(format!("actuators[{i}]"), "non-zero direction and non-negative thrust"));
                    }
                }
            }
        }

        body_ref("sensors.nav_body".into(), &self.sensors.nav_body)?;
        body_ref("sensors.gyro_body".into(), &self.sensors.gyro_body)?;
        body_ref("sensors.airspeed".into(), &self.sensors.airspeed.body)?;
        if !(self.sensors.gyro_cutoff_hz >= 0.0 && self.sensors.gyro_cutoff_hz.is_finite()) {
            return Err(schema("sensors.gyro_cutoff_hz", "must be finite and non-negative"));
        }
        self.gains.validate().map_err(|m| schema("gains", m))?;
        Ok(())
    }
}
