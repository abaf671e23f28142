//! Velocity setpoints for station keeping and waypoint circuits.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("segment {0} has coincident endpoints")]
    DegenerateSegment(usize),
    #[error("a path needs at least two waypoints")]
    TooFewWaypoints,
    #[error("segment index {0} out of range")]
    BadSegment(usize),
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LoiterSpec<T: Real> {
    pub hold: Vector3<T>,
    /// 1/s.
    pub gain: T,
}

/// `v_S = k (P₀ − P)`. Speed limits are applied downstream by the controller.
pub fn loiter_setpoint<T: Real>(position: &Vector3<T>, spec: &LoiterSpec<T>) -> Vector3<T> {
    (spec.hold - position) * spec.gain
}

/// How the cross-track term of the path law is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossTrackForm {
    /// `k (p_b (p_a · p̂_b) − p_a)`, with the unnormalized segment vector.
    #[default]
    Literal,
    /// `k (p̂_b (p_a · p̂_b) − p_a)`: the true perpendicular error.
    Projection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PathSpec<T: Real> {
    pub waypoints: Vec<Vector3<T>>,
    /// Desired speed along the path, m/s.
    pub speed: T,
    /// Cross-track gain, 1/s.
    pub gain: T,
    /// Distance to the segment end that counts as reaching it, m.
    pub acceptance_radius: T,
    #[serde(default)]
    pub cross_track: CrossTrackForm,
}

impl<T: Real> PathSpec<T> {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        if self.waypoints.len() < 2 {
            return Err(GuidanceError::TooFewWaypoints);
        }
        if !(self.speed > T::zero()) {
            return Err(GuidanceError::Invalid("path speed must be positive"));
        }
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i)?;
            if a == b {
                return Err(GuidanceError::DegenerateSegment(i));
            }
        }
        Ok(())
    }

    /// Number of segments of the closed circuit.
    pub fn segment_count(&self) -> usize {
        self.waypoints.len()
    }

    /// Start and end of segment `i`; the last segment closes the circuit.
    pub fn segment(&self, i: usize) -> Result<(Vector3<T>, Vector3<T>), GuidanceError> {
        let n = self.waypoints.len();
        if i >= n {
            return Err(GuidanceError::BadSegment(i));
        }
        Ok((self.waypoints[i], self.waypoints[(i + 1) % n]))
    }
}

/// Along-track setpoint plus cross-track correction for the active segment.
pub fn path_setpoint<T: Real>(position: &Vector3<T>, spec: &PathSpec<T>, segment: usize) -> Result<Vector3<T>, GuidanceError> {
    let (start, end) = spec.segment(segment)?;
    let along = end - start;
    let length = along.norm();
    if length == T::zero() {
        return Err(GuidanceError::DegenerateSegment(segment));
    }
    let dir = along / length;
    let offset = position - start;
    let progress = offset.dot(&dir);
    let projected = match spec.cross_track {
        CrossTrackForm::Literal => along * progress,
        CrossTrackForm::Projection => dir * progress,
    };
    Ok(dir * spec.speed + (projected - offset) * spec.gain)
}

/// Next segment index: advances once the vehicle is past the segment end
/// along track or within the acceptance radius of it, wrapping at the end.
pub fn advance_waypoint<T: Real>(position: &Vector3<T>, spec: &PathSpec<T>, segment: usize) -> Result<usize, GuidanceError> {
    let (start, end) = spec.segment(segment)?;
    let along = end - start;
    let length = along.norm();
    if length == T::zero() {
        return Err(GuidanceError::DegenerateSegment(segment));
    }
    let progress = (position - start).dot(&along) / length;
    if progress >= length || (position - end).norm() < spec.acceptance_radius {
        Ok((segment + 1) % spec.segment_count())
    } else {
        Ok(segment)
    }
}

/// Perpendicular distance to the segment's line and the foot point on the
/// segment (clamped to its ends).
pub fn cross_track<T: Real>(position: &Vector3<T>, spec: &PathSpec<T>, segment: usize) -> Result<(T, Vector3<T>), GuidanceError> {
    let (start, end) = spec.segment(segment)?;
    let along = end - start;
    let length = along.norm();
    if length == T::zero() {
        return Err(GuidanceError::DegenerateSegment(segment));
    }
    let dir = along / length;
    let offset = position - start;
    let progress = offset.dot(&dir);
    let distance = (offset - dir * progress).norm();
    let foot = start + dir * progress.clamp_to(T::zero(), length);
    Ok((distance, foot))
}
