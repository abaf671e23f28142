//! Wind (mean flow plus Dryden turbulence) and buoyancy.
//!
//! The world frame is ENU: x east, y north, z up. Turbulence is a single
//! point model, so one gust vector applies to every primitive of the vehicle.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::multibody::{BodyId, BodyState, Wrench};
use crate::num::Real;

const FEET_PER_METRE: f64 = 1.0 / 0.3048;
const METRES_PER_KNOT: f64 = 1852.0 / 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindConfig {
    /// Mean wind speed, m/s.
    pub speed: f64,
    /// Compass direction the wind blows from, degrees (0 = north, 90 = east).
    pub from_deg: f64,
    /// Turbulence magnitude on a 0 to 7 scale.
    pub magnitude: f64,
    /// Altitude used for the turbulence length and intensity scales, m.
    pub reference_altitude: f64,
    /// Airspeed the turbulence filters are shaped for, m/s. Using a fixed
    /// value keeps the gust series independent of what the vehicle does.
    pub turbulence_airspeed: f64,
    /// Wind at 20 ft per unit of magnitude, knots.
    pub knots_per_magnitude: f64,
    pub seed: u64,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            speed: 0.0,
            from_deg: 0.0,
            magnitude: 0.0,
            reference_altitude: 50.0,
            turbulence_airspeed: 2.0,
            knots_per_magnitude: 3.0,
            seed: 0,
        }
    }
}

impl WindConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err("wind.speed must be a non-negative number".into());
        }
        if !(0.0..=7.0).contains(&self.magnitude) {
            return Err("wind.magnitude must lie in [0, 7]".into());
        }
        if !(self.reference_altitude > 0.0) || !(self.turbulence_airspeed > 0.0) || !(self.knots_per_magnitude >= 0.0) {
            return Err("wind.reference_altitude, turbulence_airspeed must be positive".into());
        }
        if !self.from_deg.is_finite() {
            return Err("wind.from_deg must be finite".into());
        }
        Ok(())
    }

    /// Mean wind velocity in ENU.
    pub fn mean_velocity<T: Real>(&self) -> Vector3<T> {
        let theta = self.from_deg.to_radians();
        Vector3::new(T::lit(-self.speed * theta.sin()), T::lit(-self.speed * theta.cos()), T::zero())
    }

    /// Reference wind at 20 ft, m/s.
    pub fn w20(&self) -> f64 {
        self.magnitude * self.knots_per_magnitude * METRES_PER_KNOT
    }
}

/// Turbulence intensities (m/s) and length scales (m) for u, v, w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrydenScales {
    pub sigma: [f64; 3],
    pub length: [f64; 3],
}

/// MIL-F-8785C low-altitude intensities and scale lengths.
///
/// `w20` is the wind speed at 20 ft in any velocity unit (the intensities come
/// back in that unit); `altitude` is in metres and is clamped to the model's
/// 10 ft to 1000 ft range.
pub fn low_altitude_scales(w20: f64, altitude: f64) -> DrydenScales {
    let h = (altitude * FEET_PER_METRE).clamp(10.0, 1000.0);
    let base = 0.177 + 0.000823 * h;
    let sigma_w = 0.1 * w20;
    let sigma_uv = sigma_w / base.powf(0.4);
    let l_uv = h / base.powf(1.2) / FEET_PER_METRE;
    let l_w = h / FEET_PER_METRE;
    DrydenScales { sigma: [sigma_uv, sigma_uv, sigma_w], length: [l_uv, l_uv, l_w] }
}

/// Second-order IIR section in transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Biquad<T: Real> {
    b: [T; 3],
    a: [T; 2],
    z: [T; 2],
}

impl<T: Real> Biquad<T> {
    /// Bilinear (Tustin) discretization of `num(s) / den(s)`, both given as
    /// ascending coefficients of degree at most 2.
    pub fn tustin(num: [T; 3], den: [T; 3], dt: T) -> Self {
        let order = if num[2] != T::zero() || den[2] != T::zero() { 2 } else { 1 };
        let c = T::lit(2.0) / dt;
        // (1 - z⁻¹)^i (1 + z⁻¹)^(order - i) in ascending powers of z⁻¹.
        let basis = |i: usize| -> [T; 3] {
            let one = T::one();
            match (order, i) {
                (1, 0) => [one, one, T::zero()],
                (1, 1) => [one, -one, T::zero()],
                (2, 0) => [one, T::lit(2.0), one],
                (2, 1) => [one, T::zero(), -one],
                (2, 2) => [one, -T::lit(2.0), one],
                _ => [T::zero(); 3],
            }
        };
        let map = |p: [T; 3]| {
            let mut out = [T::zero(); 3];
            let mut ci = T::one();
            for (i, coeff) in p.iter().enumerate().take(order + 1) {
                let basis = basis(i);
                for k in 0..3 {
                    out[k] += *coeff * ci * basis[k];
                }
                ci *= c;
            }
            out
        };
        let bz = map(num);
        let az = map(den);
        let a0 = az[0];
        Self { b: [bz[0] / a0, bz[1] / a0, bz[2] / a0], a: [az[1] / a0, az[2] / a0], z: [T::zero(); 2] }
    }

    /// Replaces the coefficients, keeping the internal state.
    pub fn retune(&mut self, other: &Biquad<T>) {
        self.b = other.b;
        self.a = other.a;
    }

    pub fn process(&mut self, x: T) -> T {
        let y = self.b[0] * x + self.z[0];
        self.z[0] = self.b[1] * x - self.a[0] * y + self.z[1];
        self.z[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.z = [T::zero(); 2];
    }
}

/// Dryden shaping filters for unit-intensity white noise (two-sided PSD 1):
///
/// * `H_u(s) = σ_u √(2 L_u / V) / (1 + (L_u/V) s)`
/// * `H_v(s) = σ_v √(L_v / V) (1 + √3 (L_v/V) s) / (1 + (L_v/V) s)²`, same for w.
///
/// Each has output variance σ².
fn shaping_filters<T: Real>(scales: &DrydenScales, airspeed: f64, dt: T) -> [Biquad<T>; 3] {
    let first = {
        let tau = scales.length[0] / airspeed;
        let gain = scales.sigma[0] * (2.0 * tau).sqrt();
        Biquad::tustin([T::lit(gain), T::zero(), T::zero()], [T::one(), T::lit(tau), T::zero()], dt)
    };
    let second = |i: usize| {
        let tau = scales.length[i] / airspeed;
        let gain = scales.sigma[i] * tau.sqrt();
        Biquad::tustin(
            [T::lit(gain), T::lit(gain * 3f64.sqrt() * tau), T::zero()],
            [T::one(), T::lit(2.0 * tau), T::lit(tau * tau)],
            dt,
        )
    };
    [first, second(1), second(2)]
}

/// Filter memories and noise source of the turbulence model.
#[derive(Debug, Clone)]
pub struct DrydenState<T: Real> {
    filters: [Biquad<T>; 3],
    tuned_for: Option<(f64, f64, f64, f64)>,
    rng: ChaCha8Rng,
}

impl<T: Real> DrydenState<T> {
    pub fn new(seed: u64) -> Self {
        Self { filters: [Biquad::default(); 3], tuned_for: None, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Advances the shaping filters by `dt` and returns the gust `(u, v, w)`
    /// along the mean wind, to its left, and up.
    ///
    /// Three normal deviates are drawn per call whatever the magnitude, so the
    /// noise stream stays aligned when the configuration changes mid-run.
    pub fn step(&mut self, dt: T, airspeed: f64, altitude: f64, config: &WindConfig) -> Vector3<T> {
        let airspeed = airspeed.max(1.0);
        let dt_f = dt.to_f64_lossy();
        let key = (airspeed, altitude, config.w20(), dt_f);
        if self.tuned_for != Some(key) {
            let scales = low_altitude_scales(config.w20(), altitude);
            let fresh = shaping_filters(&scales, airspeed, dt);
            for (f, n) in self.filters.iter_mut().zip(fresh.iter()) {
                f.retune(n);
            }
            self.tuned_for = Some(key);
        }
        let scale = 1.0 / dt_f.sqrt();
        let mut out = Vector3::zeros();
        for i in 0..3 {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            out[i] = self.filters[i].process(T::lit(n * scale));
        }
        out
    }
}

/// Rotates a `(u, v, w)` gust from mean-wind axes into ENU.
pub fn gust_to_world<T: Real>(gust: &Vector3<T>, config: &WindConfig) -> Vector3<T> {
    let mean = config.mean_velocity::<f64>();
    let heading = if mean.norm() > 0.0 { mean.y.atan2(mean.x) } else { 0.0 };
    let (s, c) = (T::lit(heading.sin()), T::lit(heading.cos()));
    Vector3::new(c * gust.x - s * gust.y, s * gust.x + c * gust.y, gust.z)
}

/// A spatially uniform, time-varying wind field.
#[derive(Debug, Clone)]
pub struct Environment<T: Real> {
    pub config: WindConfig,
    dryden: DrydenState<T>,
    gust: Vector3<T>,
    step_dt: T,
    time: T,
}

impl<T: Real> Environment<T> {
    pub fn new(config: WindConfig, step_dt: T) -> Self {
        Self { dryden: DrydenState::new(config.seed), config, gust: Vector3::zeros(), step_dt, time: T::zero() }
    }

    /// Changes the mean wind and turbulence magnitude without reseeding.
    pub fn reconfigure(&mut self, speed: f64, from_deg: f64, magnitude: f64) {
        self.config.speed = speed;
        self.config.from_deg = from_deg;
        self.config.magnitude = magnitude;
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Advances turbulence by one step.
    pub fn advance(&mut self) {
        let g = self.dryden.step(self.step_dt, self.config.turbulence_airspeed, self.config.reference_altitude, &self.config);
        self.gust = gust_to_world(&g, &self.config);
        self.time += self.step_dt;
    }

    /// Current gust component, ENU.
    pub fn gust(&self) -> Vector3<T> {
        self.gust
    }

    /// Mean wind plus current gust, ENU.
    pub fn wind(&self) -> Vector3<T> {
        self.config.mean_velocity::<T>() + self.gust
    }

    /// Wind at simulated time `t`, stepping the turbulence forward as needed.
    /// Times earlier than the current one return the current wind.
    pub fn wind_at(&mut self, t: T) -> Vector3<T> {
        let half = self.step_dt / T::lit(2.0);
        while self.time + half <= t {
            self.advance();
        }
        self.wind()
    }
}

/// Buoyant lift of one hull section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuoyancySection<T: Real> {
    pub body: BodyId,
    /// Displaced volume, m³.
    pub volume: T,
    /// Run-time adjustable lift coefficient.
    pub coefficient: T,
    /// Centre of buoyancy, body frame.
    pub center: Vector3<T>,
}

/// Upward force `c_b V ρ g` at the centre of buoyancy.
pub fn buoyancy_wrench<T: Real>(section: &BuoyancySection<T>, state: &BodyState<T>, air_density: T, g: T) -> Wrench<T> {
    let lift = section.coefficient * section.volume * air_density * g;
    let force = Vector3::new(T::zero(), T::zero(), lift);
    let point = state.position + state.orientation * section.center;
    Wrench::at_point(section.body, force, &point, &state.position)
}
