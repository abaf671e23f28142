use serde::{Deserialize, Serialize};

use super::{Mode, TelemetryFrame};
use crate::spectrum::{welch, Spectrum};

/// Welch segment length, samples.
pub const WELCH_SEGMENT: usize = 1024;
/// Lower edge of the yaw high-frequency band, Hz.
pub const HF_BAND_HZ: f64 = 1.0;
/// Spectral peaks are searched at or above this frequency, Hz.
const PEAK_MIN_HZ: f64 = 0.1;
/// Start-up transient left out of the pre-change phase statistics, s.
pub const SETTLE_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub start_s: f64,
    pub end_s: f64,
    pub samples: usize,
    pub altitude_error_rms_m: f64,
    pub altitude_error_std_m: f64,
    /// Strongest hull pitch-rate frequency, Hz.
    pub pitch_rate_peak_hz: Option<f64>,
    /// (rad/s)²/Hz.
    pub pitch_rate_peak_density: Option<f64>,
    /// Strongest fin-gyro yaw-rate frequency, Hz.
    pub yaw_gyro_peak_hz: Option<f64>,
    /// Fin-gyro yaw-rate power above `HF_BAND_HZ`, (rad/s)².
    pub yaw_gyro_hf_power: Option<f64>,
}

/// Leaving a path segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointTransition {
    pub t_s: f64,
    /// Segment that was completed.
    pub segment_index: u32,
    /// Distance to that segment's end point on the first frame after the
    /// switch, m.
    pub miss_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Distance to the guidance reference point.
    pub position_error_rms_m: f64,
    pub position_error_max_m: f64,
    pub horizontal_error_rms_m: f64,
    /// Height above the reference point.
    pub altitude_error_rms_m: f64,
    pub altitude_error_std_m: f64,
    pub altitude_error_max_m: f64,
    pub mean_airspeed_m_s: f64,
    pub mean_abs_yaw_rate_rad_s: f64,
    /// Over frames flown in path mode.
    pub cross_track_rms_m: Option<f64>,
    /// Time of the first inflation change, s.
    pub inflation_change_s: Option<f64>,
    /// Before the first inflation change (the whole run if there is none),
    /// after the first `SETTLE_S` seconds.
    pub pre: PhaseStats,
    pub post: Option<PhaseStats>,
    /// Post-change density at the post-change pitch-rate peak over the
    /// pre-change density at that frequency, dB.
    pub pitch_peak_rise_db: Option<f64>,
    /// Post over pre yaw high-frequency band power, dB.
    pub yaw_hf_rise_db: Option<f64>,
    pub waypoint_transitions: Vec<WaypointTransition>,
}

fn rms(x: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    rms(x.iter().map(|v| v - mean))
}

fn altitude_error(f: &TelemetryFrame) -> f64 {
    f.z_m - f.ref_z_m
}

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

fn spectra(frames: &[TelemetryFrame], rate: f64) -> (Option<Spectrum>, Option<Spectrum>) {
    let pitch: Vec<f64> = frames.iter().map(TelemetryFrame::hull_pitch_rate).collect();
    let yaw: Vec<f64> = frames.iter().map(|f| f.gyro_z_rad_s).collect();
    // Both phases use the same segment length so their bins line up.
    (welch(&pitch, rate, WELCH_SEGMENT), welch(&yaw, rate, WELCH_SEGMENT))
}

fn phase(frames: &[TelemetryFrame], rate: f64) -> (PhaseStats, Option<Spectrum>, Option<Spectrum>) {
    let alt: Vec<f64> = frames.iter().map(altitude_error).collect();
    let (pitch, yaw) = spectra(frames, rate);
    let pitch_peak = pitch.as_ref().and_then(|s| s.peak(PEAK_MIN_HZ).map(|k| (s.frequency[k], s.density[k])));
    let stats = PhaseStats {
        start_s: frames.first().map_or(0.0, |f| f.t_s),
        end_s: frames.last().map_or(0.0, |f| f.t_s),
        samples: frames.len(),
        altitude_error_rms_m: rms(alt.iter().copied()),
        altitude_error_std_m: std_dev(&alt),
        pitch_rate_peak_hz: pitch_peak.map(|p| p.0),
        pitch_rate_peak_density: pitch_peak.map(|p| p.1),
        yaw_gyro_peak_hz: yaw.as_ref().and_then(|s| s.peak(PEAK_MIN_HZ).map(|k| s.frequency[k])),
        yaw_gyro_hf_power: yaw.as_ref().map(|s| s.band_power(HF_BAND_HZ, f64::INFINITY)),
    };
    (stats, pitch, yaw)
}

/// Metrics over a telemetry log (or any contiguous slice of one). Returns
/// `None` for an empty log.
pub fn summarize(frames: &[TelemetryFrame]) -> Option<Summary> {
    let first = frames.first()?;
    let last = frames.last()?;
    let rate = if frames.len() > 1 { 1.0 / (frames[1].t_s - first.t_s) } else { 0.0 };
    let n = frames.len() as f64;
    let err: Vec<f64> = frames.iter().map(|f| (f.position() - f.reference()).norm()).collect();
    let alt: Vec<f64> = frames.iter().map(altitude_error).collect();
    let path: Vec<f64> = frames.iter().filter(|f| f.mode_id == Mode::Path.id()).map(|f| f.cross_track_m).collect();

    let split = frames.iter().position(|f| f.inflation_level_ratio != first.inflation_level_ratio);
    let (pre_frames, post_frames) = match split {
        Some(k) => (&frames[..k], Some(&frames[k..])),
        None => (frames, None),
    };
    // Skip the start-up transient unless that would leave too little to analyse.
    let settled = pre_frames.iter().position(|f| f.t_s - first.t_s >= SETTLE_S).unwrap_or(pre_frames.len());
    let pre_frames = if pre_frames.len() - settled >= WELCH_SEGMENT { &pre_frames[settled..] } else { pre_frames };
    let (pre, pre_pitch, _) = phase(pre_frames, rate);
    let post = post_frames.map(|p| phase(p, rate));
    let pitch_peak_rise_db = post.as_ref().and_then(|(stats, _, _)| {
        let (hz, density) = (stats.pitch_rate_peak_hz?, stats.pitch_rate_peak_density?);
        Some(db(density / pre_pitch.as_ref()?.at(hz)))
    });
    let yaw_hf_rise_db =
        post.as_ref().and_then(|(stats, _, _)| Some(db(stats.yaw_gyro_hf_power? / pre.yaw_gyro_hf_power?)));

    let waypoint_transitions = frames
        .windows(2)
        .filter(|w| {
            w[0].mode_id == Mode::Path.id() && w[1].mode_id == Mode::Path.id() && w[0].segment_index != w[1].segment_index
        })
        .map(|w| WaypointTransition {
            t_s: w[0].t_s,
            segment_index: w[0].segment_index,
            miss_distance_m: (w[1].position() - w[0].waypoint()).norm(),
        })
        .collect();

    Some(Summary {
        samples: frames.len(),
        duration_s: last.t_s - first.t_s,
        sample_rate_hz: rate,
        position_error_rms_m: rms(err.iter().copied()),
        position_error_max_m: err.iter().copied().fold(0.0, f64::max),
        horizontal_error_rms_m: rms(frames.iter().map(|f| (f.position() - f.reference()).xy().norm())),
        altitude_error_rms_m: rms(alt.iter().copied()),
        altitude_error_std_m: std_dev(&alt),
        altitude_error_max_m: alt.iter().map(|a| a.abs()).fold(0.0, f64::max),
        mean_airspeed_m_s: frames.iter().map(|f| f.airspeed_m_s).sum::<f64>() / n,
        mean_abs_yaw_rate_rad_s: frames.iter().map(|f| f.hull_r_rad_s.abs()).sum::<f64>() / n,
        cross_track_rms_m: (!path.is_empty()).then(|| rms(path.iter().copied())),
        inflation_change_s: split.map(|k| frames[k].t_s),
        pre,
        post: post.map(|p| p.0),
        pitch_peak_rise_db,
        yaw_hf_rise_db,
        waypoint_transitions,
    })
}
