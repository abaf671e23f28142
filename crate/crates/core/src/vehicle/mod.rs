//! Assembled vehicles: bodies and joints in a [`World`], aerodynamic and
//! buoyancy bindings, actuators, sensors, and the inflation service.

mod config;
mod reference;

pub use config::*;
pub use reference::{reference_blimp, reference_gains, LIFT_TRIM};

use std::collections::HashMap;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{aero_force, AeroError, AeroPrimitive};
use crate::control::{ActuatorCommands, Channel, ControllerGains, NavState};
use crate::environment::{buoyancy_wrench, BuoyancySection};
use crate::multibody::{
    joint_displacement, BodyId, BodyPrimitive, BodyState, JointSpec, MultibodyError, World, Wrench,
};
use crate::num::Real;
use crate::GRAVITY;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VehicleError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{item} references unknown {kind} `{name}`")]
    DanglingReference { item: String, kind: &'static str, name: String },
    #[error("body `{0}`: mass must be positive")]
    NonPositiveMass(String),
    #[error("{what} {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error(transparent)]
    Multibody(#[from] MultibodyError),
    #[error(transparent)]
    Aero(#[from] AeroError),
}

fn v3<T: Real>(a: &Vec3) -> Vector3<T> {
    Vector3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]))
}

fn arr<T: Real>(v: &Vector3<T>) -> Vec3 {
    [v.x.to_f64_lossy(), v.y.to_f64_lossy(), v.z.to_f64_lossy()]
}

fn rpy_rotation(rpy: &Vec3) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2])
}

fn rotation_rpy(q: &UnitQuaternion<f64>) -> Vec3 {
    let (r, p, y) = q.euler_angles();
    [r, p, y]
}

fn pose_of(position: &Vec3, rpy: &Vec3) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::new(position[0], position[1], position[2]), rpy_rotation(rpy))
}

fn cast_pose<T: Real>(p: &Isometry3<f64>) -> Isometry3<T> {
    p.cast::<T>()
}

fn quat_to_f64<T: Real>(q: &UnitQuaternion<T>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_unchecked(Quaternion::from(q.as_ref().coords.map(|c| c.to_f64_lossy())))
}

fn pose_to_f64<T: Real>(p: &Isometry3<T>) -> Isometry3<f64> {
    let t = p.translation.vector.map(|c| c.to_f64_lossy());
    Isometry3::from_parts(Translation3::from(t), quat_to_f64(&p.rotation))
}

/// Converts gains between scalar types.
pub fn convert_gains<A: Real, B: Real>(gains: &ControllerGains<A>) -> ControllerGains<B> {
    let value = serde_json::to_value(gains).expect("gains serialize");
    serde_json::from_value(value).expect("gains deserialize")
}

/// `[roll, pitch, yaw]` of a body in ENU. Pitch is positive nose up, yaw is
/// counter-clockwise from east.
pub fn attitude<T: Real>(orientation: &UnitQuaternion<T>) -> Vector3<T> {
    let (roll, pitch, yaw) = orientation.euler_angles();
    Vector3::new(roll, -pitch, yaw)
}

/// Moves `angle` toward `target` by at most `rate · dt`.
pub fn slew<T: Real>(angle: T, target: T, rate: T, dt: T) -> T {
    let step = rate * dt;
    angle + (target - angle).clamp_to(-step, step)
}

/// An aerodynamic primitive attached to a body.
#[derive(Debug, Clone)]
pub struct AeroBinding<T: Real> {
    pub name: String,
    pub body: BodyId,
    pub primitive: AeroPrimitive<T>,
    /// Centre of pressure, body frame.
    pub offset: Vector3<T>,
    /// Primitive frame relative to the body frame.
    pub rotation: UnitQuaternion<T>,
}

#[derive(Debug, Clone)]
struct Servo<T: Real> {
    channel: Channel,
    joint: usize,
    axis: usize,
    max_angle: T,
    rate_limit: T,
    gain: T,
    angle: T,
}

#[derive(Debug, Clone)]
struct VectorServo<T: Real> {
    channel: Channel,
    max_angle: T,
    rate_limit: T,
    angle: T,
}

#[derive(Debug, Clone)]
struct Thruster<T: Real> {
    channel: Channel,
    body: BodyId,
    point: Vector3<T>,
    direction: Vector3<T>,
    max_thrust: T,
    vectored: bool,
}

#[derive(Debug, Clone, Copy)]
enum ActuatorSlot {
    Servo(usize),
    Vector,
    Thruster(usize),
}

#[derive(Debug, Clone)]
struct Sensors<T: Real> {
    nav_body: BodyId,
    nav_offset: Vector3<T>,
    gyro_body: BodyId,
    gyro_cutoff_hz: f64,
    gyro_filtered: Vector3<T>,
    airspeed_body: BodyId,
    airspeed_enabled: bool,
}

/// What the flight controller sees, plus a few ground-truth extras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading<T: Real> {
    pub nav: NavState<T>,
    /// Body-frame angular velocity of the gyro body, rad/s.
    pub gyro: Vector3<T>,
    pub position: Vector3<T>,
    /// World-frame angular velocity of the navigation body, rad/s.
    pub hull_rate: Vector3<T>,
    /// The same rate in the navigation body's own frame.
    pub hull_body_rate: Vector3<T>,
    /// Ground-truth velocity relative to the air, ENU.
    pub air_velocity: Vector3<T>,
}

/// Scale factors currently applied to the hull attachments and buoyancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InflationState<T: Real> {
    /// Buoyancy scale; 1 is fully inflated.
    pub level: T,
    pub stiffness_scale: T,
    pub free_play_scale: T,
    pub buoyancy_scale: T,
    /// Sag of the hull attachments along their joint z axis, m.
    pub offset: T,
}

impl<T: Real> Default for InflationState<T> {
    fn default() -> Self {
        Self {
            level: T::one(),
            stiffness_scale: T::one(),
            free_play_scale: T::one(),
            buoyancy_scale: T::one(),
            offset: T::zero(),
        }
    }
}

/// Explicit deflation: each effect is given directly rather than derived from
/// one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deflation {
    pub free_play_scale: f64,
    pub offset: f64,
    pub stiffness_scale: f64,
    pub buoyancy_scale: f64,
}

impl InflationLaw {
    pub fn scales<T: Real>(&self, s: T) -> InflationState<T> {
        let one = T::one();
        InflationState {
            level: s,
            stiffness_scale: s.powf(T::lit(self.stiffness_exponent)),
            free_play_scale: one + T::lit(self.free_play_slope) * (one - s),
            buoyancy_scale: s.powf(T::lit(self.buoyancy_exponent)),
            offset: T::zero(),
        }
    }
}

/// Net static forces of a vehicle at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimReport {
    pub mass: f64,
    pub weight: f64,
    pub buoyancy: f64,
    /// Buoyancy minus weight, N.
    pub net_vertical_force: f64,
    pub center_of_mass: Vec3,
    pub center_of_buoyancy: Vec3,
}

/// Deflection of one joint away from its rest configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDeflection<T: Real> {
    pub name: String,
    pub linear: Vector3<T>,
    pub angular: Vector3<T>,
}

/// An assembled vehicle.
#[derive(Debug, Clone)]
pub struct Vehicle<T: Real> {
    pub world: World<T>,
    aero: Vec<AeroBinding<T>>,
    buoyancy: Vec<BuoyancySection<T>>,
    servos: Vec<Servo<T>>,
    vector: Option<VectorServo<T>>,
    thrusters: Vec<Thruster<T>>,
    slots: Vec<ActuatorSlot>,
    sensors: Sensors<T>,
    gains: ControllerGains<T>,
    hull_joints: Vec<bool>,
    nominal_joints: Vec<JointSpec<T>>,
    nominal_buoyancy: Vec<T>,
    law: InflationLaw,
    inflation: InflationState<T>,
    air_density: T,
    name: String,
    placement: Isometry3<f64>,
    initial: Vec<BodyState<T>>,
    scratch: Vec<Wrench<T>>,
}

/// Parses, validates and assembles a vehicle at the origin.
pub fn load_vehicle<T: Real>(document: &str) -> Result<(Vehicle<T>, TrimReport), VehicleError> {
    let config = VehicleConfig::from_json(document)?;
    let vehicle = Vehicle::assemble(&config, Isometry3::identity())?;
    let trim = vehicle.trim_report();
    Ok((vehicle, trim))
}

impl<T: Real> Vehicle<T> {
    /// Builds the vehicle with its vehicle frame at `placement` (world frame).
    pub fn assemble(config: &VehicleConfig, placement: Isometry3<f64>) -> Result<Self, VehicleError> {
        config.validate()?;
        let mut world = World::default();
        let mut body_poses = Vec::with_capacity(config.bodies.len());
        for b in &config.bodies {
            let primitive = BodyPrimitive::principal(b.name.clone(), T::lit(b.mass), v3(&b.inertia), b.shape)?;
            let pose = placement * pose_of(&b.position, &b.rpy);
            let state = BodyState::at_rest(pose.translation.vector.cast::<T>(), pose.rotation.cast::<T>());
            world.add_body(primitive, state)?;
            body_poses.push(pose);
        }
        let ids: HashMap<&str, BodyId> =
            config.bodies.iter().enumerate().map(|(i, b)| (b.name.as_str(), BodyId(i))).collect();
        let id = |name: &str| ids[name];

        let mut hull_joints = Vec::new();
        for j in &config.joints {
            let (parent, child) = (id(&j.parent), id(&j.child));
            let joint_pose = placement * pose_of(&j.anchor, &j.rpy);
            let spec = JointSpec {
                name: j.name.clone(),
                parent,
                child,
                parent_frame: cast_pose(&(body_poses[parent.0].inverse() * joint_pose)),
                child_frame: cast_pose(&(body_poses[child.0].inverse() * joint_pose)),
                linear_stiffness: v3(&j.linear_stiffness),
                linear_damping: v3(&j.linear_damping),
                rotational_stiffness: v3(&j.rotational_stiffness),
                rotational_damping: v3(&j.rotational_damping),
                linear_free_play: v3(&j.linear_free_play),
                rotational_free_play: v3(&j.rotational_free_play),
                rest_rotation: Vector3::zeros(),
                rest_offset: Vector3::zeros(),
            };
            world.add_joint(spec)?;
            hull_joints.push(j.hull_attachment);
        }

        let aero = config
            .aero
            .iter()
            .map(|a| {
                let primitive = AeroPrimitive {
                    kind: a.kind,
                    area: T::lit(a.area),
                    cl0: T::lit(a.cl0),
                    cd0: T::lit(a.cd0),
                    cd1: T::lit(a.cd1),
                    alpha_stall: T::lit(a.alpha_stall),
                    k_q: T::lit(a.k_q),
                };
                primitive.validate()?;
                Ok(AeroBinding {
                    name: a.name.clone(),
                    body: id(&a.body),
                    primitive,
                    offset: v3(&a.offset),
                    rotation: rpy_rotation(&a.rpy).cast::<T>(),
                })
            })
            .collect::<Result<Vec<_>, AeroError>>()?;

        let buoyancy: Vec<_> = config
            .buoyancy
            .iter()
            .map(|s| BuoyancySection {
                body: id(&s.body),
                volume: T::lit(s.volume),
                coefficient: T::lit(s.coefficient),
                center: v3(&s.center),
            })
            .collect();

        let joint_index = |name: &str| config.joints.iter().position(|j| j.name == name).expect("validated joint");
        let mut servos = Vec::new();
        let mut vector = None;
        let mut thrusters = Vec::new();
        let mut slots = Vec::new();
        for a in &config.actuators {
            match a {
                ActuatorConfig::Servo { channel, joint, axis, max_angle, rate_limit, gain } => {
                    slots.push(ActuatorSlot::Servo(servos.len()));
                    servos.push(Servo {
                        channel: *channel,
                        joint: joint_index(joint),
                        axis: *axis,
                        max_angle: T::lit(*max_angle),
                        rate_limit: T::lit(*rate_limit),
                        gain: T::lit(*gain),
                        angle: T::zero(),
                    });
                }
                ActuatorConfig::VectorServo { channel, max_angle, rate_limit } => {
                    slots.push(ActuatorSlot::Vector);
                    vector = Some(VectorServo {
                        channel: *channel,
                        max_angle: T::lit(*max_angle),
                        rate_limit: T::lit(*rate_limit),
                        angle: T::zero(),
                    });
                }
                ActuatorConfig::Thruster { channel, body, point, direction, max_thrust, vectored } => {
                    slots.push(ActuatorSlot::Thruster(thrusters.len()));
                    thrusters.push(Thruster {
                        channel: *channel,
                        body: id(body),
                        point: v3(point),
                        direction: v3::<T>(direction).normalize(),
                        max_thrust: T::lit(*max_thrust),
                        vectored: *vectored,
                    });
                }
            }
        }

        let s = &config.sensors;
        let sensors = Sensors {
            nav_body: id(&s.nav_body),
            nav_offset: v3(&s.nav_offset),
            gyro_body: id(&s.gyro_body),
            gyro_cutoff_hz: s.gyro_cutoff_hz,
            gyro_filtered: Vector3::zeros(),
            airspeed_body: id(&s.airspeed.body),
            airspeed_enabled: s.airspeed.enabled,
        };

        let initial = world.bodies().iter().map(|b| b.state).collect();
        let nominal_joints = world.joints.clone();
        let nominal_buoyancy = buoyancy.iter().map(|b| b.coefficient).collect();
        Ok(Self {
            world,
            aero,
            buoyancy,
            servos,
            vector,
            thrusters,
            slots,
            sensors,
            gains: convert_gains(&config.gains),
            hull_joints,
            nominal_joints,
            nominal_buoyancy,
            law: config.inflation,
            inflation: InflationState::default(),
            air_density: T::lit(crate::aero::AIR_DENSITY),
            name: config.name.clone(),
            placement,
            initial,
            scratch: Vec::new(),
        })
    }

    pub fn gains(&self) -> &ControllerGains<T> {
        &self.gains
    }

    pub fn aero_bindings(&self) -> &[AeroBinding<T>] {
        &self.aero
    }

    pub fn buoyancy_sections(&self) -> &[BuoyancySection<T>] {
        &self.buoyancy
    }

    pub fn inflation(&self) -> InflationState<T> {
        self.inflation
    }

    /// Indices of the joints that soften with deflation.
    pub fn hull_attachments(&self) -> impl Iterator<Item = usize> + '_ {
        self.hull_joints.iter().enumerate().filter(|(_, h)| **h).map(|(i, _)| i)
    }

    /// Current servo angles by channel, rad.
    pub fn servo_angles(&self) -> Vec<(Channel, T)> {
        let mut out: Vec<_> = self.servos.iter().map(|s| (s.channel, s.angle)).collect();
        if let Some(v) = &self.vector {
            out.push((v.channel, v.angle));
        }
        out
    }

    /// Current thrust-vector angle, rad.
    pub fn vector_angle(&self) -> T {
        self.vector.as_ref().map_or(T::zero(), |v| v.angle)
    }

    /// Sets the inflation level `s ∈ [0, 1]` through the configured scale
    /// laws. Takes effect on the next step.
    pub fn set_inflation(&mut self, s: T) -> Result<(), VehicleError> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(VehicleError::OutOfRange { what: "inflation level", value: s.to_f64_lossy() });
        }
        let state = self.law.scales(s);
        self.apply_inflation(state);
        Ok(())
    }

    /// Applies explicit deflation scales.
    pub fn deflate(&mut self, d: &Deflation) -> Result<(), VehicleError> {
        let checks = [
            ("free play scale", d.free_play_scale),
            ("stiffness scale", d.stiffness_scale),
            ("buoyancy scale", d.buoyancy_scale),
        ];
        for (what, value) in checks {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(VehicleError::OutOfRange { what, value });
            }
        }
        if !d.offset.is_finite() {
            return Err(VehicleError::OutOfRange { what: "offset", value: d.offset });
        }
        self.apply_inflation(InflationState {
            level: T::lit(d.buoyancy_scale),
            stiffness_scale: T::lit(d.stiffness_scale),
            free_play_scale: T::lit(d.free_play_scale),
            buoyancy_scale: T::lit(d.buoyancy_scale),
            offset: T::lit(d.offset),
        });
        Ok(())
    }

    fn apply_inflation(&mut self, state: InflationState<T>) {
        for (i, nominal) in self.nominal_joints.iter().enumerate() {
            if !self.hull_joints[i] {
                continue;
            }
            let j = &mut self.world.joints[i];
            let k = state.stiffness_scale;
            let f = state.free_play_scale;
            j.linear_stiffness = nominal.linear_stiffness * k;
            j.linear_damping = nominal.linear_damping * k;
            j.rotational_stiffness = nominal.rotational_stiffness * k;
            j.rotational_damping = nominal.rotational_damping * k;
            j.linear_free_play = nominal.linear_free_play * f;
            j.rotational_free_play = nominal.rotational_free_play * f;
            j.rest_offset = if state.offset == T::zero() {
                nominal.rest_offset
            } else {
                nominal.rest_offset - Vector3::z() * state.offset
            };
        }
        for (section, nominal) in self.buoyancy.iter_mut().zip(&self.nominal_buoyancy) {
            section.coefficient = *nominal * state.buoyancy_scale;
        }
        self.inflation = state;
    }

    /// Advances servos by `dt` and returns the thrust wrenches for `cmds`.
    pub fn actuate(&mut self, cmds: &ActuatorCommands<T>, dt: T) -> Vec<Wrench<T>> {
        let mut out = Vec::new();
        self.actuate_into(cmds, dt, &mut out);
        out
    }

    fn actuate_into(&mut self, cmds: &ActuatorCommands<T>, dt: T, out: &mut Vec<Wrench<T>>) {
        let one = T::one();
        for s in &mut self.servos {
            let target = s.gain * cmds.get(s.channel).clamp_to(-one, one) * s.max_angle;
            s.angle = slew(s.angle, target, s.rate_limit, dt);
            self.world.joints[s.joint].rest_rotation[s.axis] = s.angle;
        }
        if let Some(v) = &mut self.vector {
            let target = cmds.get(v.channel).clamp_to(-one, one) * v.max_angle;
            v.angle = slew(v.angle, target, v.rate_limit, dt);
        }
        let tilt = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -self.vector_angle());
        for t in &self.thrusters {
            let state = self.world.state(t.body);
            let direction = if t.vectored { tilt * t.direction } else { t.direction };
            let force = state.orientation * direction * (cmds.get(t.channel).clamp_to(-one, one) * t.max_thrust);
            let point = state.position + state.orientation * t.point;
            out.push(Wrench::at_point(t.body, force, &point, &state.position));
        }
    }

    /// Aerodynamic wrenches for a uniform wind (ENU).
    pub fn aero_wrenches(&self, wind: &Vector3<T>) -> Vec<Wrench<T>> {
        let mut out = Vec::new();
        self.aero_into(wind, &mut out);
        out
    }

    fn aero_into(&self, wind: &Vector3<T>, out: &mut Vec<Wrench<T>>) {
        for a in &self.aero {
            let state = self.world.state(a.body);
            let frame = state.orientation * a.rotation;
            let flow = frame.inverse() * (wind - state.point_velocity(&a.offset));
            let force = frame * aero_force(&a.primitive, &flow).total();
            let point = state.position + state.orientation * a.offset;
            out.push(Wrench::at_point(a.body, force, &point, &state.position));
        }
    }

    pub fn buoyancy_wrenches(&self) -> Vec<Wrench<T>> {
        let mut out = Vec::new();
        self.buoyancy_into(&mut out);
        out
    }

    fn buoyancy_into(&self, out: &mut Vec<Wrench<T>>) {
        let g = T::lit(GRAVITY);
        for s in &self.buoyancy {
            out.push(buoyancy_wrench(s, self.world.state(s.body), self.air_density, g));
        }
    }

    /// One physics step: actuation, aerodynamics, buoyancy, integration.
    pub fn step(&mut self, dt: T, wind: &Vector3<T>, cmds: &ActuatorCommands<T>) -> Result<(), MultibodyError> {
        let mut wrenches = std::mem::take(&mut self.scratch);
        wrenches.clear();
        self.actuate_into(cmds, dt, &mut wrenches);
        self.aero_into(wind, &mut wrenches);
        self.buoyancy_into(&mut wrenches);
        let result = self.world.step(dt, &wrenches);
        self.scratch = wrenches;
        self.filter_gyro(dt);
        result
    }

    fn filter_gyro(&mut self, dt: T) {
        let s = &mut self.sensors;
        let raw = self.world.state(s.gyro_body).angular_velocity;
        if s.gyro_cutoff_hz <= 0.0 {
            s.gyro_filtered = raw;
            return;
        }
        let alpha = T::one() - (-T::lit(std::f64::consts::TAU * s.gyro_cutoff_hz) * dt).exp();
        s.gyro_filtered += (raw - s.gyro_filtered) * alpha;
    }

    /// Navigation state from ground truth, gyro from the sensor body.
    pub fn read_sensors(&self, wind: &Vector3<T>) -> SensorReading<T> {
        let s = &self.sensors;
        let nav = self.world.state(s.nav_body);
        let position = nav.position + nav.orientation * s.nav_offset;
        let velocity = nav.point_velocity(&s.nav_offset);
        let air = self.world.state(s.airspeed_body);
        let airspeed = s
            .airspeed_enabled
            .then(|| (air.velocity - wind).dot(&(air.orientation * Vector3::x())));
        SensorReading {
            nav: NavState { velocity, airspeed, attitude: attitude(&nav.orientation) },
            gyro: s.gyro_filtered,
            position,
            hull_rate: nav.world_angular_velocity(),
            hull_body_rate: nav.angular_velocity,
            air_velocity: velocity - wind,
        }
    }

    pub fn set_airspeed_enabled(&mut self, enabled: bool) {
        self.sensors.airspeed_enabled = enabled;
    }

    /// Static force balance in the current configuration.
    pub fn trim_report(&self) -> TrimReport {
        let mass = self.world.total_mass().to_f64_lossy();
        let weight = mass * GRAVITY;
        let mut lift = 0.0;
        let mut moment = Vector3::<f64>::zeros();
        for (s, w) in self.buoyancy.iter().zip(self.buoyancy_wrenches()) {
            let state = self.world.state(s.body);
            let point = (state.position + state.orientation * s.center).map(|c| c.to_f64_lossy());
            lift += w.force.z.to_f64_lossy();
            moment += point * w.force.z.to_f64_lossy();
        }
        let cob = if lift > 0.0 { moment / lift } else { Vector3::zeros() };
        TrimReport {
            mass,
            weight,
            buoyancy: lift,
            net_vertical_force: lift - weight,
            center_of_mass: arr(&self.world.center_of_mass()),
            center_of_buoyancy: [cob.x, cob.y, cob.z],
        }
    }

    /// Displacement of every joint away from its rest configuration.
    pub fn joint_deflections(&self) -> Vec<JointDeflection<T>> {
        self.world
            .joints
            .iter()
            .map(|j| {
                let (lin, ang) = joint_displacement(j, self.world.state(j.parent), self.world.state(j.child));
                JointDeflection { name: j.name.clone(), linear: lin - j.rest_offset, angular: ang - j.rest_rotation }
            })
            .collect()
    }

    /// Reconstructs the description from the assembled, nominal vehicle.
    pub fn to_config(&self) -> VehicleConfig {
        let local = self.placement.inverse();
        let pose64 = |s: &BodyState<T>| local * pose_to_f64(&s.pose());
        let world = &self.world;
        let bodies = world
            .bodies()
            .iter()
            .zip(&self.initial)
            .map(|(b, s)| {
                let pose = pose64(s);
                let inertia = b.primitive.inertia;
                BodyConfig {
                    name: b.primitive.name.clone(),
                    mass: b.primitive.mass.to_f64_lossy(),
                    inertia: [inertia[(0, 0)], inertia[(1, 1)], inertia[(2, 2)]].map(|x| x.to_f64_lossy()),
                    shape: b.primitive.shape,
                    position: arr(&pose.translation.vector),
                    rpy: rotation_rpy(&pose.rotation),
                }
            })
            .collect();
        let name_of = |id: BodyId| world.body(id).primitive.name.clone();
        let joints = self
            .nominal_joints
            .iter()
            .zip(&self.hull_joints)
            .map(|(j, hull)| {
                let frame = pose64(&self.initial[j.parent.0]) * pose_to_f64(&j.parent_frame);
                JointConfig {
                    name: j.name.clone(),
                    parent: name_of(j.parent),
                    child: name_of(j.child),
                    anchor: arr(&frame.translation.vector),
                    rpy: rotation_rpy(&frame.rotation),
                    linear_stiffness: arr(&j.linear_stiffness),
                    linear_damping: arr(&j.linear_damping),
                    rotational_stiffness: arr(&j.rotational_stiffness),
                    rotational_damping: arr(&j.rotational_damping),
                    linear_free_play: arr(&j.linear_free_play),
                    rotational_free_play: arr(&j.rotational_free_play),
                    hull_attachment: *hull,
                }
            })
            .collect();
        let aero = self
            .aero
            .iter()
            .map(|a| AeroConfig {
                name: a.name.clone(),
                body: name_of(a.body),
                kind: a.primitive.kind,
                area: a.primitive.area.to_f64_lossy(),
                cl0: a.primitive.cl0.to_f64_lossy(),
                cd0: a.primitive.cd0.to_f64_lossy(),
                cd1: a.primitive.cd1.to_f64_lossy(),
                alpha_stall: a.primitive.alpha_stall.to_f64_lossy(),
                k_q: a.primitive.k_q.to_f64_lossy(),
                offset: arr(&a.offset),
                rpy: rotation_rpy(&quat_to_f64(&a.rotation)),
            })
            .collect();
        let buoyancy = self
            .buoyancy
            .iter()
            .zip(&self.nominal_buoyancy)
            .map(|(s, c)| BuoyancyConfig {
                body: name_of(s.body),
                volume: s.volume.to_f64_lossy(),
                coefficient: c.to_f64_lossy(),
                center: arr(&s.center),
            })
            .collect();
        let actuators = self
            .slots
            .iter()
            .map(|slot| match *slot {
                ActuatorSlot::Servo(i) => {
                    let s = &self.servos[i];
                    ActuatorConfig::Servo {
                        channel: s.channel,
                        joint: self.nominal_joints[s.joint].name.clone(),
                        axis: s.axis,
                        max_angle: s.max_angle.to_f64_lossy(),
                        rate_limit: s.rate_limit.to_f64_lossy(),
                        gain: s.gain.to_f64_lossy(),
                    }
                }
                ActuatorSlot::Vector => {
                    let v = self.vector.as_ref().expect("vector servo slot");
                    ActuatorConfig::VectorServo {
                        channel: v.channel,
                        max_angle: v.max_angle.to_f64_lossy(),
                        rate_limit: v.rate_limit.to_f64_lossy(),
                    }
                }
                ActuatorSlot::Thruster(i) => {
                    let t = &self.thrusters[i];
                    ActuatorConfig::Thruster {
                        channel: t.channel,
                        body: name_of(t.body),
                        point: arr(&t.point),
                        direction: arr(&t.direction),
                        max_thrust: t.max_thrust.to_f64_lossy(),
                        vectored: t.vectored,
                    }
                }
            })
            .collect();
        let s = &self.sensors;
        VehicleConfig {
            name: self.name.clone(),
            bodies,
            joints,
            aero,
            buoyancy,
            actuators,
            sensors: SensorConfig {
                nav_body: name_of(s.nav_body),
                nav_offset: arr(&s.nav_offset),
                gyro_body: name_of(s.gyro_body),
                gyro_cutoff_hz: s.gyro_cutoff_hz,
                airspeed: AirspeedSensorConfig { body: name_of(s.airspeed_body), enabled: s.airspeed_enabled },
            },
            gains: convert_gains(&self.gains),
            inflation: self.law,
        }
    }
}

#[cfg(test)]
mod tests;
