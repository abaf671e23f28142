use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Mode, ScenarioError};
use crate::control::{Channel, ControlOutput};
use crate::num::Real;
use crate::vehicle::SensorReading;

/// One control tick. Column names carry their units; the order is part of
/// the file format.
///
/// Positions and velocities are ENU. Attitude is roll, pitch (nose up
/// positive), yaw (counter-clockwise from east). `gyro_*` is the body-frame
/// rate of the sensor body; `hull_*` that of the navigation body. `ref_*` is
/// the guidance reference point (loiter point, or the nearest point of the
/// active path segment), `wp_*` the point being flown to. Commands are
/// normalized to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub t_s: f64,
    pub mode_id: u8,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub roll_rad: f64,
    pub pitch_rad: f64,
    pub yaw_rad: f64,
    pub vx_m_s: f64,
    pub vy_m_s: f64,
    pub vz_m_s: f64,
    pub air_vx_m_s: f64,
    pub air_vy_m_s: f64,
    pub air_vz_m_s: f64,
    pub airspeed_m_s: f64,
    pub wind_x_m_s: f64,
    pub wind_y_m_s: f64,
    pub wind_z_m_s: f64,
    pub sp_vx_m_s: f64,
    pub sp_vy_m_s: f64,
    pub sp_vz_m_s: f64,
    pub sp_air_vx_m_s: f64,
    pub sp_air_vy_m_s: f64,
    pub sp_air_vz_m_s: f64,
    pub sp_scale_ratio: f64,
    pub sp_pitch_rad: f64,
    pub sp_yaw_rate_rad_s: f64,
    pub sp_thrust_norm: f64,
    pub sp_gamma_rad: f64,
    pub cmd_yaw_thruster_norm: f64,
    pub cmd_top_rudder_norm: f64,
    pub cmd_bottom_rudder_norm: f64,
    pub cmd_left_elevator_norm: f64,
    pub cmd_right_elevator_norm: f64,
    pub cmd_thrust_vector_norm: f64,
    pub cmd_left_thruster_norm: f64,
    pub cmd_right_thruster_norm: f64,
    pub gyro_x_rad_s: f64,
    pub gyro_y_rad_s: f64,
    pub gyro_z_rad_s: f64,
    pub hull_p_rad_s: f64,
    pub hull_q_rad_s: f64,
    pub hull_r_rad_s: f64,
    pub inflation_level_ratio: f64,
    pub segment_index: u32,
    pub ref_x_m: f64,
    pub ref_y_m: f64,
    pub ref_z_m: f64,
    pub wp_x_m: f64,
    pub wp_y_m: f64,
    pub wp_z_m: f64,
    pub cross_track_m: f64,
}

/// The frozen CSV header.
pub const CSV_HEADER: &str = "t_s,mode_id,x_m,y_m,z_m,roll_rad,pitch_rad,yaw_rad,vx_m_s,vy_m_s,vz_m_s,\
air_vx_m_s,air_vy_m_s,air_vz_m_s,airspeed_m_s,wind_x_m_s,wind_y_m_s,wind_z_m_s,\
sp_vx_m_s,sp_vy_m_s,sp_vz_m_s,sp_air_vx_m_s,sp_air_vy_m_s,sp_air_vz_m_s,sp_scale_ratio,sp_pitch_rad,\
sp_yaw_rate_rad_s,sp_thrust_norm,sp_gamma_rad,cmd_yaw_thruster_norm,cmd_top_rudder_norm,\
cmd_bottom_rudder_norm,cmd_left_elevator_norm,cmd_right_elevator_norm,cmd_thrust_vector_norm,\
cmd_left_thruster_norm,cmd_right_thruster_norm,gyro_x_rad_s,gyro_y_rad_s,gyro_z_rad_s,\
hull_p_rad_s,hull_q_rad_s,hull_r_rad_s,inflation_level_ratio,segment_index,ref_x_m,ref_y_m,ref_z_m,\
wp_x_m,wp_y_m,wp_z_m,cross_track_m";

fn f<T: Real>(x: T) -> f64 {
    x.to_f64_lossy()
}

impl TelemetryFrame {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn new<T: Real>(
        t: f64,
        mode: Mode,
        r: &SensorReading<T>,
        wind: &Vector3<T>,
        out: &ControlOutput<T>,
        inflation: T,
        segment: usize,
        reference: &Vector3<T>,
        target: &Vector3<T>,
        cross_track: T,
    ) -> Self {
        let sp = &out.setpoints;
        let c = |ch: Channel| f(out.commands.get(ch));
        Self {
            t_s: t,
            mode_id: mode.id(),
            x_m: f(r.position.x),
            y_m: f(r.position.y),
            z_m: f(r.position.z),
            roll_rad: f(r.nav.attitude.x),
            pitch_rad: f(r.nav.attitude.y),
            yaw_rad: f(r.nav.attitude.z),
            vx_m_s: f(r.nav.velocity.x),
            vy_m_s: f(r.nav.velocity.y),
            vz_m_s: f(r.nav.velocity.z),
            air_vx_m_s: f(r.air_velocity.x),
            air_vy_m_s: f(r.air_velocity.y),
            air_vz_m_s: f(r.air_velocity.z),
            airspeed_m_s: f(r.air_velocity.norm()),
            wind_x_m_s: f(wind.x),
            wind_y_m_s: f(wind.y),
            wind_z_m_s: f(wind.z),
            sp_vx_m_s: f(sp.velocity.x),
            sp_vy_m_s: f(sp.velocity.y),
            sp_vz_m_s: f(sp.velocity.z),
            sp_air_vx_m_s: f(sp.air_velocity.x),
            sp_air_vy_m_s: f(sp.air_velocity.y),
            sp_air_vz_m_s: f(sp.air_velocity.z),
            sp_scale_ratio: f(sp.scale),
            sp_pitch_rad: f(sp.pitch),
            sp_yaw_rate_rad_s: f(sp.yaw_rate),
            sp_thrust_norm: f(sp.thrust),
            sp_gamma_rad: f(sp.gamma),
            cmd_yaw_thruster_norm: c(Channel::YawThruster),
            cmd_top_rudder_norm: c(Channel::TopRudder),
            cmd_bottom_rudder_norm: c(Channel::BottomRudder),
            cmd_left_elevator_norm: c(Channel::LeftElevator),
            cmd_right_elevator_norm: c(Channel::RightElevator),
            cmd_thrust_vector_norm: c(Channel::ThrustVector),
            cmd_left_thruster_norm: c(Channel::LeftThruster),
            cmd_right_thruster_norm: c(Channel::RightThruster),
            gyro_x_rad_s: f(r.gyro.x),
            gyro_y_rad_s: f(r.gyro.y),
            gyro_z_rad_s: f(r.gyro.z),
            hull_p_rad_s: f(r.hull_body_rate.x),
            hull_q_rad_s: f(r.hull_body_rate.y),
            hull_r_rad_s: f(r.hull_body_rate.z),
            inflation_level_ratio: f(inflation),
            segment_index: segment as u32,
            ref_x_m: f(reference.x),
            ref_y_m: f(reference.y),
            ref_z_m: f(reference.z),
            wp_x_m: f(target.x),
            wp_y_m: f(target.y),
            wp_z_m: f(target.z),
            cross_track_m: f(cross_track),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x_m, self.y_m, self.z_m)
    }

    pub fn reference(&self) -> Vector3<f64> {
        Vector3::new(self.ref_x_m, self.ref_y_m, self.ref_z_m)
    }

    pub fn waypoint(&self) -> Vector3<f64> {
        Vector3::new(self.wp_x_m, self.wp_y_m, self.wp_z_m)
    }

    /// Actuator commands in channel order.
    pub fn commands(&self) -> [f64; 8] {
        [
            self.cmd_yaw_thruster_norm,
            self.cmd_top_rudder_norm,
            self.cmd_bottom_rudder_norm,
            self.cmd_left_elevator_norm,
            self.cmd_right_elevator_norm,
            self.cmd_thrust_vector_norm,
            self.cmd_left_thruster_norm,
            self.cmd_right_thruster_norm,
        ]
    }

    /// Nose-up pitch rate of the hull, rad/s.
    pub fn hull_pitch_rate(&self) -> f64 {
        -self.hull_q_rad_s
    }
}

/// Appends frames to a CSV stream, header first.
pub struct TelemetryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(out: W) -> Result<Self, ScenarioError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(CSV_HEADER.split(','))?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, frame: &TelemetryFrame) -> Result<(), ScenarioError> {
        Ok(self.inner.serialize(frame)?)
    }

    pub fn flush(&mut self) -> Result<(), ScenarioError> {
        Ok(self.inner.flush()?)
    }
}

pub fn write_csv<W: Write>(out: W, frames: &[TelemetryFrame]) -> Result<(), ScenarioError> {
    let mut w = TelemetryWriter::new(out)?;
    for f in frames {
        w.push(f)?;
    }
    w.flush()
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TelemetryFrame>, ScenarioError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(ScenarioError::Invalid("telemetry header does not match this version's column layout".into()));
    }
    r.deserialize().map(|row| row.map_err(ScenarioError::from)).collect()
}
