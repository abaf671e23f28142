//! Flight dynamics and control for deformable airships.

pub mod aero;
pub mod control;
pub mod environment;
pub mod guidance;
pub mod multibody;
pub mod num;
pub mod scenario;
pub mod spectrum;
pub mod vehicle;

pub use num::Real;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

pub type Vehicle = vehicle::Vehicle<f64>;
pub type World = multibody::World<f64>;
pub type Environment = environment::Environment<f64>;
pub type Controller = control::Controller<f64>;
pub type ControllerGains = control::ControllerGains<f64>;
pub type Simulation = scenario::Simulation<f64>;

/// Single-precision variants.
pub mod f32 {
    use super::*;

    pub type Vehicle = vehicle::Vehicle<f32>;
    pub type World = multibody::World<f32>;
    pub type Environment = environment::Environment<f32>;
    pub type Controller = control::Controller<f32>;
    pub type ControllerGains = control::ControllerGains<f32>;
    pub type Simulation = scenario::Simulation<f32>;
}
