//! Cascaded PI flight control.
//!
//! The outer loop turns a world-frame velocity setpoint into four virtual
//! setpoints (pitch, yaw rate, thrust, thrust-vector angle) after compensating
//! for the estimated wind. Inner PI loops track pitch rate and yaw rate, and a
//! mixing matrix maps the virtual axes onto the eight actuators.
//!
//! Attitude at this boundary is `[roll, pitch, yaw]` with pitch positive nose
//! up and yaw counter-clockwise from east. Body rates come from the gyro in
//! the sensor body's x-forward, y-left, z-up frame.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Below this horizontal speed (m/s) the course angle is undefined.
const DIRECTION_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState<T: Real> {
    /// Velocity over ground, ENU, m/s.
    pub velocity: Vector3<T>,
    /// Indicated airspeed, absent when no airspeed sensor is fitted.
    pub airspeed: Option<T>,
    /// `[roll, pitch, yaw]`, rad.
    pub attitude: Vector3<T>,
}

/// Wind estimate and the velocity relative to the air derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirData<T: Real> {
    pub flow: Vector3<T>,
    pub air_velocity: Vector3<T>,
}

/// Unit forward axis of the vehicle in ENU.
pub fn forward_axis<T: Real>(attitude: &Vector3<T>) -> Vector3<T> {
    let (pitch, yaw) = (attitude.y, attitude.z);
    Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
}

/// Wrap to `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut x = a % two_pi;
    if x <= -T::pi() {
        x += two_pi;
    } else if x > T::pi() {
        x -= two_pi;
    }
    x
}

/// Estimates the wind as the ground velocity minus the airspeed rotated onto
/// the forward axis. Without an airspeed sensor the forward component of the
/// ground velocity stands in for it.
pub fn estimate_flow<T: Real>(velocity: &Vector3<T>, attitude: &Vector3<T>, airspeed: Option<T>) -> AirData<T> {
    let forward = forward_axis(attitude);
    let v_i = airspeed.unwrap_or_else(|| velocity.dot(&forward));
    let flow = velocity - forward * v_i;
    AirData { flow, air_velocity: velocity - flow }
}

/// Which branch of the setpoint correction produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetpointCase {
    /// Setpoint air velocity raised to `v_min`.
    Min,
    /// Setpoint used as is.
    Nominal,
    /// Setpoint air velocity capped at `v_max`.
    Max,
    /// Wind stronger than `v_max` along every admissible scale; the scale
    /// closest to the requested ground track is used.
    Unreachable,
    /// Zero ground-velocity setpoint.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedSetpoint<T: Real> {
    pub air_setpoint: Vector3<T>,
    pub scale: T,
    pub case: SetpointCase,
}

/// Largest non-negative `b` with `|b v − f| = limit`.
fn scale_for_airspeed<T: Real>(v: &Vector3<T>, f: &Vector3<T>, limit: T) -> Option<T> {
    let a = v.norm_squared();
    let half_b = -v.dot(f);
    let c = f.norm_squared() - limit * limit;
    let disc = half_b * half_b - a * c;
    if disc < T::zero() {
        return None;
    }
    let root = (-half_b + disc.sqrt()) / a;
    (root >= T::zero()).then_some(root)
}

/// Scales the ground-velocity setpoint so that the air-relative setpoint
/// `b v_S − f` stays within `[v_min, v_max]`.
///
/// `heading` is the fallback course (rad, CCW from east) used when both the
/// setpoint and the wind estimate are zero.
pub fn correct_setpoint<T: Real>(
    setpoint: &Vector3<T>,
    flow: &Vector3<T>,
    v_min: T,
    v_max: T,
    heading: T,
) -> CorrectedSetpoint<T> {
    let v_sq = setpoint.norm_squared();
    if v_sq == T::zero() {
        let f_norm = flow.norm();
        let air_setpoint = if f_norm > T::zero() {
            -flow * (f_norm.clamp_to(v_min, v_max) / f_norm)
        } else {
            Vector3::new(heading.cos(), heading.sin(), T::zero()) * v_min
        };
        return CorrectedSetpoint { air_setpoint, scale: T::zero(), case: SetpointCase::Degenerate };
    }

    let air = (setpoint - flow).norm();
    let (scale, case) = if air < v_min {
        // At b = 1 the air speed is below v_min, so a root above 1 exists.
        (scale_for_airspeed(setpoint, flow, v_min).unwrap_or(T::one()), SetpointCase::Min)
    } else if air <= v_max {
        (T::one(), SetpointCase::Nominal)
    } else {
        match scale_for_airspeed(setpoint, flow, v_max) {
            Some(b) => (b, SetpointCase::Max),
            None => ((setpoint.dot(flow) / v_sq).max(T::zero()), SetpointCase::Unreachable),
        }
    };
    CorrectedSetpoint { air_setpoint: setpoint * scale - flow, scale, case }
}

/// Signed angle (CCW positive) rotating `from` onto `to`. Exactly opposite
/// vectors give `+π`.
pub fn signed_angle<T: Real>(from: &Vector2<T>, to: &Vector2<T>) -> T {
    let cross = from.x * to.y - from.y * to.x;
    let dot = from.dot(to);
    if cross == T::zero() && dot < T::zero() {
        T::pi()
    } else {
        cross.atan2(dot)
    }
}

/// Integral accumulator hard-clamped to `±limit` after every update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PiState<T: Real> {
    pub accumulator: T,
}

impl<T: Real> PiState<T> {
    pub fn accumulate(&mut self, increment: T, limit: T) -> T {
        self.accumulator = (self.accumulator + increment).clamp_to(-limit, limit);
        self.accumulator
    }

    pub fn reset(&mut self) {
        self.accumulator = T::zero();
    }
}

/// Proportional + clamped-integral gain set for one loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PiGains<T: Real> {
    pub kp: T,
    pub ki: T,
    pub limit: T,
}

impl<T: Real> PiGains<T> {
    pub fn new(kp: f64, ki: f64, limit: f64) -> Self {
        Self { kp: T::lit(kp), ki: T::lit(ki), limit: T::lit(limit) }
    }

    pub fn run(&self, state: &mut PiState<T>, error: T, dt: T) -> T {
        self.kp * error + state.accumulate(self.ki * error * dt, self.limit)
    }
}

/// Every tunable of the outer and inner loops.
///
/// Defaults come from our own tuning in simulation on the reference vehicle;
/// none of them are published values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct ControllerGains<T: Real> {
    /// Yaw rate per radian of course error, 1/s.
    pub yaw_rate_kp: T,
    /// Yaw-rate setpoint limit, rad/s.
    pub turn_rate_limit: T,
    /// Climb loop: pitch per m/s of vertical air-velocity error.
    pub climb: PiGains<T>,
    /// Pitch setpoint safety clamp, rad.
    pub pitch_limit: T,
    /// Airspeed loop: thrust per m/s of airspeed error.
    pub speed: PiGains<T>,
    /// Thrust per radian of pitch setpoint.
    pub pitch_thrust_kp: T,
    /// Thrust-vector angle per radian of pitch setpoint.
    pub vector_kp: T,
    pub v_min: T,
    pub v_max: T,
    /// Outer pitch attitude loop: pitch rate per radian of pitch error, 1/s.
    pub pitch_kp: T,
    /// Pitch-rate setpoint limit, rad/s.
    pub pitch_rate_limit: T,
    pub pitch_rate: PiGains<T>,
    pub yaw_rate: PiGains<T>,
    /// Rows: actuator channels. Columns: pitch, yaw, thrust virtual axes.
    pub mixer: [[T; 3]; 8],
    /// Control period, s.
    pub period: T,
}

impl<T: Real> Default for ControllerGains<T> {
    fn default() -> Self {
        Self {
            yaw_rate_kp: T::lit(0.3),
            turn_rate_limit: T::lit(10f64.to_radians()),
            climb: PiGains::new(0.4, 0.05, 0.3),
            pitch_limit: T::lit(0.35),
            speed: PiGains::new(0.6, 0.1, 0.5),
            pitch_thrust_kp: T::lit(1.0),
            vector_kp: T::lit(4.0),
            v_min: T::lit(1.0),
            v_max: T::lit(2.0),
            pitch_kp: T::lit(1.0),
            pitch_rate_limit: T::lit(0.3),
            pitch_rate: PiGains::new(2.0, 0.5, 0.5),
            yaw_rate: PiGains::new(0.7, 1.0, 1.0),
            mixer: default_mixer(),
            period: T::lit(0.02),
        }
    }
}

/// Unit-weight mixing: pitch on both elevators, yaw on both rudders and the
/// yaw thruster, thrust on both main thrusters. No differential thrust.
pub fn default_mixer<T: Real>() -> [[T; 3]; 8] {
    let (o, z) = (T::one(), T::zero());
    let mut m = [[z; 3]; 8];
    m[Channel::YawThruster as usize] = [z, o, z];
    m[Channel::TopRudder as usize] = [z, o, z];
    m[Channel::BottomRudder as usize] = [z, o, z];
    m[Channel::LeftElevator as usize] = [o, z, z];
    m[Channel::RightElevator as usize] = [o, z, z];
    m[Channel::LeftThruster as usize] = [z, z, o];
    m[Channel::RightThruster as usize] = [z, z, o];
    m
}

impl<T: Real> ControllerGains<T> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.v_min > T::zero()) {
            return Err("gains.v_min must be positive".into());
        }
        if !(self.v_max > self.v_min) {
            return Err("gains.v_max must exceed v_min".into());
        }
        let clamps = [
            self.turn_rate_limit,
            self.climb.limit,
            self.speed.limit,
            self.pitch_limit,
            self.pitch_rate_limit,
            self.pitch_rate.limit,
            self.yaw_rate.limit,
            self.period,
        ];
        if clamps.iter().any(|c| !(*c > T::zero())) {
            return Err("gains: clamps, limits and the control period must be positive".into());
        }
        Ok(())
    }
}

/// Course controller: yaw-rate setpoint from the horizontal angle between
/// the current and the commanded air velocity.
pub fn direction_cmd<T: Real>(air_setpoint: &Vector3<T>, air_velocity: &Vector3<T>, gains: &ControllerGains<T>) -> T {
    let sp = air_setpoint.xy();
    let cur = air_velocity.xy();
    let eps = T::lit(DIRECTION_EPS);
    if sp.norm() < eps || cur.norm() < eps {
        return T::zero();
    }
    let limit = gains.turn_rate_limit;
    (gains.yaw_rate_kp * signed_angle(&cur, &sp)).clamp_to(-limit, limit)
}

/// Climb-rate controller: pitch setpoint.
pub fn climb_cmd<T: Real>(
    air_setpoint: &Vector3<T>,
    air_velocity: &Vector3<T>,
    gains: &ControllerGains<T>,
    pi: &mut PiState<T>,
    dt: T,
) -> T {
    let error = air_setpoint.z - air_velocity.z;
    gains.climb.run(pi, error, dt).clamp_to(-gains.pitch_limit, gains.pitch_limit)
}

/// Airspeed controller with the pitch cross-feed: thrust in `[-1, 1]`.
pub fn thrust_cmd<T: Real>(
    air_setpoint: &Vector3<T>,
    air_velocity: &Vector3<T>,
    pitch: T,
    gains: &ControllerGains<T>,
    pi: &mut PiState<T>,
    dt: T,
) -> T {
    let error = air_setpoint.norm() - air_velocity.norm();
    (gains.speed.run(pi, error, dt) + gains.pitch_thrust_kp * pitch).clamp_to(-T::one(), T::one())
}

/// Thrust-vector angle in `[0, π/2]`.
pub fn thrust_vector_cmd<T: Real>(pitch: T, gains: &ControllerGains<T>) -> T {
    (gains.vector_kp * pitch).clamp_to(T::zero(), T::frac_pi_2())
}

/// Virtual control axes, each nominally in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirtualAxes<T: Real> {
    pub pitch: T,
    pub yaw: T,
    pub thrust: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RateLoopState<T: Real> {
    pub pitch_rate: PiState<T>,
    pub yaw_rate: PiState<T>,
}

/// Inner loops. Pitch: P on attitude producing a pitch-rate setpoint, then PI
/// on pitch rate. Yaw: PI on yaw rate. `gyro` must come from the sensor body.
pub fn rate_loops<T: Real>(
    yaw_rate_sp: T,
    pitch_sp: T,
    thrust: T,
    gyro: &Vector3<T>,
    attitude: &Vector3<T>,
    gains: &ControllerGains<T>,
    state: &mut RateLoopState<T>,
    dt: T,
) -> VirtualAxes<T> {
    let rate_limit = gains.pitch_rate_limit;
    let pitch_rate_sp = (gains.pitch_kp * (pitch_sp - attitude.y)).clamp_to(-rate_limit, rate_limit);
    // Nose-up pitch rate is rotation about -y in the body frame.
    let pitch_rate = -gyro.y;
    let one = T::one();
    let pitch = gains.pitch_rate.run(&mut state.pitch_rate, pitch_rate_sp - pitch_rate, dt).clamp_to(-one, one);
    let yaw = gains.yaw_rate.run(&mut state.yaw_rate, yaw_rate_sp - gyro.z, dt).clamp_to(-one, one);
    VirtualAxes { pitch, yaw, thrust }
}

/// Actuator channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    YawThruster = 0,
    TopRudder = 1,
    BottomRudder = 2,
    LeftElevator = 3,
    RightElevator = 4,
    ThrustVector = 5,
    LeftThruster = 6,
    RightThruster = 7,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::YawThruster,
        Channel::TopRudder,
        Channel::BottomRudder,
        Channel::LeftElevator,
        Channel::RightElevator,
        Channel::ThrustVector,
        Channel::LeftThruster,
        Channel::RightThruster,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::YawThruster => "yaw_thruster",
            Channel::TopRudder => "top_rudder",
            Channel::BottomRudder => "bottom_rudder",
            Channel::LeftElevator => "left_elevator",
            Channel::RightElevator => "right_elevator",
            Channel::ThrustVector => "thrust_vector",
            Channel::LeftThruster => "left_thruster",
            Channel::RightThruster => "right_thruster",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Normalized actuator commands, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorCommands<T: Real>(pub [T; 8]);

impl<T: Real> ActuatorCommands<T> {
    /// Clamps every channel; reports whether anything was out of range.
    pub fn saturated(values: [T; 8]) -> (Self, bool) {
        let one = T::one();
        let mut clipped = false;
        let out = values.map(|v| {
            let c = v.clamp_to(-one, one);
            clipped |= c != v;
            c
        });
        (Self(out), clipped)
    }

    pub fn get(&self, channel: Channel) -> T {
        self.0[channel as usize]
    }
}

/// Linear mix of the virtual axes, thrust-vector angle on its servo channel
/// (`γ / (π/2)`), then per-channel saturation.
pub fn mix<T: Real>(axes: &VirtualAxes<T>, gamma: T, gains: &ControllerGains<T>) -> ActuatorCommands<T> {
    let mut out = [T::zero(); 8];
    for (value, row) in out.iter_mut().zip(gains.mixer.iter()) {
        *value = row[0] * axes.pitch + row[1] * axes.yaw + row[2] * axes.thrust;
    }
    out[Channel::ThrustVector as usize] += gamma / T::frac_pi_2();
    ActuatorCommands::saturated(out).0
}

/// Virtual setpoints produced by the outer loop on one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoints<T: Real> {
    pub velocity: Vector3<T>,
    pub air_velocity: Vector3<T>,
    pub scale: T,
    pub pitch: T,
    pub yaw_rate: T,
    pub thrust: T,
    pub gamma: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput<T: Real> {
    pub air: AirData<T>,
    pub setpoints: Setpoints<T>,
    pub axes: VirtualAxes<T>,
    pub commands: ActuatorCommands<T>,
}

/// The full cascade with its integrator state.
#[derive(Debug, Clone)]
pub struct Controller<T: Real> {
    gains: ControllerGains<T>,
    climb: PiState<T>,
    speed: PiState<T>,
    rates: RateLoopState<T>,
}

impl<T: Real> Controller<T> {
    pub fn new(gains: ControllerGains<T>) -> Self {
        Self { gains, climb: PiState::default(), speed: PiState::default(), rates: RateLoopState::default() }
    }

    pub fn gains(&self) -> &ControllerGains<T> {
        &self.gains
    }

    /// Swaps gains between ticks; integrators are re-clamped to the new limits.
    pub fn set_gains(&mut self, gains: ControllerGains<T>) {
        self.climb.accumulate(T::zero(), gains.climb.limit);
        self.speed.accumulate(T::zero(), gains.speed.limit);
        self.rates.pitch_rate.accumulate(T::zero(), gains.pitch_rate.limit);
        self.rates.yaw_rate.accumulate(T::zero(), gains.yaw_rate.limit);
        self.gains = gains;
    }

    pub fn reset(&mut self) {
        self.climb.reset();
        self.speed.reset();
        self.rates = RateLoopState::default();
    }

    /// `(climb, speed, pitch rate, yaw rate)` accumulators.
    pub fn integrators(&self) -> [T; 4] {
        [self.climb.accumulator, self.speed.accumulator, self.rates.pitch_rate.accumulator, self.rates.yaw_rate.accumulator]
    }

    /// One control tick from a ground-velocity setpoint.
    pub fn update(&mut self, nav: &NavState<T>, gyro: &Vector3<T>, velocity_sp: &Vector3<T>) -> ControlOutput<T> {
        let g = &self.gains;
        let dt = g.period;
        let air = estimate_flow(&nav.velocity, &nav.attitude, nav.airspeed);
        let corrected = correct_setpoint(velocity_sp, &air.flow, g.v_min, g.v_max, nav.attitude.z);
        let yaw_rate = direction_cmd(&corrected.air_setpoint, &air.air_velocity, g);
        let pitch = climb_cmd(&corrected.air_setpoint, &air.air_velocity, g, &mut self.climb, dt);
        let thrust = thrust_cmd(&corrected.air_setpoint, &air.air_velocity, pitch, g, &mut self.speed, dt);
        let gamma = thrust_vector_cmd(pitch, g);
        let axes = rate_loops(yaw_rate, pitch, thrust, gyro, &nav.attitude, g, &mut self.rates, dt);
        let commands = mix(&axes, gamma, g);
        ControlOutput {
            air,
            setpoints: Setpoints {
                velocity: *velocity_sp,
                air_velocity: corrected.air_setpoint,
                scale: corrected.scale,
                pitch,
                yaw_rate,
                thrust,
                gamma,
            },
            axes,
            commands,
        }
    }
}
