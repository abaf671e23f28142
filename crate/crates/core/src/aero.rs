//! Lift and drag of a single aerodynamic primitive.
//!
//! Flow `f` is the velocity of the air relative to the primitive, in the
//! primitive frame (x forward, y left, z up). Flying forward through still air
//! gives `f.x < 0`; climbing gives `f.z < 0`. With this convention the drag
//! force `q A f̂_d c_d` points along the relative air velocity, i.e. it opposes
//! the primitive's motion through the air.
//!
//! Worked example: a flat plate moving forward at 5 m/s sees `f = [-5, 0, 0]`,
//! `α = 0`, `q = 0.6125 · 25`, and drag `q A c_d0` along `-x`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

/// Air velocity relative to a primitive, primitive frame, m/s.
pub type FlowVector<T> = Vector3<T>;

/// Standard sea-level air density, kg/m³.
pub const AIR_DENSITY: f64 = 1.225;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AeroError {
    #[error("hull drag weights are all zero")]
    AllZeroWeights,
    #[error("expected {expected} hull drag weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("hull drag weights must be non-negative and finite")]
    NegativeWeight,
    #[error("at least one hull section is required")]
    NoSections,
    #[error("invalid aero primitive: {0}")]
    InvalidPrimitive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AeroKind {
    /// Plate in the primitive's x-y plane; lateral flow is ignored.
    QuasiPlanar,
    /// Body of revolution about the primitive's x axis.
    QuasiCylindrical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroPrimitive<T: Real> {
    pub kind: AeroKind,
    /// Reference area, m².
    pub area: T,
    /// Peak lift coefficient, reached at the stall angle.
    pub cl0: T,
    /// Drag coefficient for axial flow.
    pub cd0: T,
    /// Drag coefficient for cross flow.
    pub cd1: T,
    pub alpha_stall: T,
    /// Dynamic pressure constant, `q = k_q |f|²`.
    pub k_q: T,
}

impl<T: Real> AeroPrimitive<T> {
    pub fn new(kind: AeroKind, area: T, cl0: T, cd0: T, cd1: T, alpha_stall: T) -> Result<Self, AeroError> {
        let prim = Self { kind, area, cl0, cd0, cd1, alpha_stall, k_q: T::lit(0.5 * AIR_DENSITY) };
        prim.validate()?;
        Ok(prim)
    }

    pub fn validate(&self) -> Result<(), AeroError> {
        if !(self.area > T::zero()) {
            return Err(AeroError::InvalidPrimitive("area must be positive"));
        }
        if !(self.cl0 >= T::zero() && self.cd0 >= T::zero() && self.cd1 >= T::zero() && self.k_q >= T::zero()) {
            return Err(AeroError::InvalidPrimitive("coefficients must be non-negative"));
        }
        if !(self.alpha_stall > T::zero() && self.alpha_stall < T::frac_pi_2()) {
            return Err(AeroError::InvalidPrimitive("stall angle must lie in (0, pi/2)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroResult<T: Real> {
    pub alpha: T,
    pub dynamic_pressure: T,
    pub lift: Vector3<T>,
    pub drag: Vector3<T>,
    pub drag_dir: Vector3<T>,
    pub lift_dir: Vector3<T>,
}

impl<T: Real> AeroResult<T> {
    pub fn total(&self) -> Vector3<T> {
        self.lift + self.drag
    }
}

/// Rotates lateral flow of a body of revolution into its x-z plane:
/// `[f_x, 0, |f_y| + |f_z|]`. Also returns `φ = atan2(f_y, f_z)`, the angle
/// about x that maps the rotated z axis back onto the lateral flow direction.
pub fn rotate_cylindrical_flow<T: Real>(f: &FlowVector<T>) -> (FlowVector<T>, T) {
    let phi = f.y.atan2(f.z);
    (Vector3::new(f.x, T::zero(), f.y.abs() + f.z.abs()), phi)
}

/// `α = arctan(f_z / f_x)`, in `[-π/2, π/2]`.
pub fn angle_of_attack<T: Real>(f: &FlowVector<T>) -> T {
    if f.x == T::zero() {
        f.z.sign0() * T::frac_pi_2()
    } else {
        (f.z / f.x).atan()
    }
}

/// Piecewise-linear lift coefficient: rises to `cl0` at the stall angle and
/// falls back to zero at ±π/2.
pub fn lift_coefficient<T: Real>(alpha: T, prim: &AeroPrimitive<T>) -> T {
    let a = alpha.abs();
    if a <= prim.alpha_stall {
        prim.cl0 * (a / prim.alpha_stall)
    } else {
        let two = T::lit(2.0);
        prim.cl0 * (T::pi() - two * a) / (T::pi() - two * prim.alpha_stall)
    }
}

/// Linear blend from `cd0` (axial flow) to `cd1` (cross flow).
pub fn drag_coefficient<T: Real>(alpha: T, prim: &AeroPrimitive<T>) -> T {
    let blend = T::lit(2.0) * alpha.abs() / T::pi();
    prim.cd0 * (T::one() - blend) + prim.cd1 * blend
}

/// Lift and drag on a primitive in its own frame.
pub fn aero_force<T: Real>(prim: &AeroPrimitive<T>, f: &FlowVector<T>) -> AeroResult<T> {
    let (planar, back_map) = match prim.kind {
        AeroKind::QuasiPlanar => (Vector3::new(f.x, T::zero(), f.z), None),
        AeroKind::QuasiCylindrical => {
            let (rotated, phi) = rotate_cylindrical_flow(f);
            (rotated, Some(phi))
        }
    };

    let speed_sq = planar.x * planar.x + planar.z * planar.z;
    if speed_sq == T::zero() {
        let zero = Vector3::zeros();
        return AeroResult { alpha: T::zero(), dynamic_pressure: T::zero(), lift: zero, drag: zero, drag_dir: zero, lift_dir: zero };
    }

    let alpha = angle_of_attack(&planar);
    let q = prim.k_q * speed_sq;
    let drag_dir = planar / speed_sq.sqrt();
    // f̂_d × [0, sgn α, 0]; zero at α = 0 where c_l vanishes anyway.
    let s = alpha.sign0();
    let lift_dir = Vector3::new(-drag_dir.z * s, T::zero(), drag_dir.x * s);

    let lift = lift_dir * (q * prim.area * lift_coefficient(alpha, prim));
    let drag = drag_dir * (q * prim.area * drag_coefficient(alpha, prim));

    let map = |v: Vector3<T>| match back_map {
        None => v,
        Some(phi) => Vector3::new(v.x, v.z * phi.sin(), v.z * phi.cos()),
    };
    AeroResult {
        alpha,
        dynamic_pressure: q,
        lift: map(lift),
        drag: map(drag),
        drag_dir: map(drag_dir),
        lift_dir: map(lift_dir),
    }
}

/// Splits a whole-hull axial drag coefficient over `n` sections in
/// proportion to `weights` so that the section coefficients sum to
/// `hull_cd`. An empty weight list means equal weights.
pub fn distribute_hull_drag<T: Real>(n: usize, hull_cd: T, weights: &[T]) -> Result<Vec<T>, AeroError> {
    if n == 0 {
        return Err(AeroError::NoSections);
    }
    if weights.is_empty() {
        let share = hull_cd / T::from_usize(n).unwrap();
        return Ok(vec![share; n]);
    }
    if weights.len() != n {
        return Err(AeroError::WeightCount { expected: n, got: weights.len() });
    }
    if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
        return Err(AeroError::NegativeWeight);
    }
    let total = weights.iter().fold(T::zero(), |a, w| a + *w);
    if total == T::zero() {
        return Err(AeroError::AllZeroWeights);
    }
    Ok(weights.iter().map(|w| hull_cd * *w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn plate(cl0: f64, cd0: f64, cd1: f64, stall: f64) -> AeroPrimitive<f64> {
        AeroPrimitive::new(AeroKind::QuasiPlanar, 1.0, cl0, cd0, cd1, stall).unwrap()
    }

    #[test]
    fn cylindrical_rotation_examples() {
        let (r, _) = rotate_cylindrical_flow(&Vector3::new(1.0, 2.0, -3.0));
        assert_eq!(r, Vector3::new(1.0, 0.0, 5.0));
        let (r, _) = rotate_cylindrical_flow(&Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(r, Vector3::new(1.0, 0.0, 0.0));
        let (r, phi) = rotate_cylindrical_flow(&Vector3::new(0.0, -2.0, 0.0));
        assert_eq!(r, Vector3::new(0.0, 0.0, 2.0));
        assert_relative_eq!(phi, -FRAC_PI_2);
    }

    #[test]
    fn angle_of_attack_examples() {
        assert_relative_eq!(angle_of_attack(&Vector3::new(1.0, 0.0, 1.0)), FRAC_PI_4);
        assert_eq!(angle_of_attack(&Vector3::new(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(angle_of_attack(&Vector3::new(0.0, 0.0, -2.0)), -FRAC_PI_2);
        assert_eq!(angle_of_attack(&Vector3::<f64>::zeros()), 0.0);
    }

    #[test]
    fn lift_coefficient_examples() {
        let p = plate(1.2, 0.05, 1.0, 0.3);
        assert_eq!(lift_coefficient(0.3, &p), 1.2);
        assert_eq!(lift_coefficient(0.0, &p), 0.0);
        assert_relative_eq!(lift_coefficient(FRAC_PI_2, &p), 0.0, epsilon = 1e-15);
        assert_relative_eq!(lift_coefficient(0.15, &p), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn drag_coefficient_examples() {
        let p = plate(1.2, 0.05, 1.0, 0.3);
        assert_eq!(drag_coefficient(0.0, &p), 0.05);
        assert_relative_eq!(drag_coefficient(FRAC_PI_2, &p), 1.0, epsilon = 1e-15);
        assert_relative_eq!(drag_coefficient(-FRAC_PI_4, &p), 0.525, epsilon = 1e-15);
    }

    #[test]
    fn zero_flow_zero_force() {
        let r = aero_force(&plate(1.0, 0.1, 1.0, 0.3), &Vector3::zeros());
        assert_eq!(r.lift, Vector3::zeros());
        assert_eq!(r.drag, Vector3::zeros());
    }

    #[test]
    fn pure_forward_motion_drag() {
        let r = aero_force(&plate(1.0, 0.1, 1.0, 0.3), &Vector3::new(-5.0, 0.0, 0.0));
        assert_relative_eq!(r.drag, Vector3::new(-0.6125 * 25.0 * 0.1, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(r.drag.norm(), 1.531, epsilon = 1e-3);
        assert_eq!(r.lift, Vector3::zeros());
    }

    #[test]
    fn climbing_plate_lift_points_down() {
        let p = plate(1.0, 0.1, 1.0, 0.3);
        let f = Vector3::new(-5.0, 0.0, -0.5);
        let r = aero_force(&p, &f);
        assert!(r.alpha > 0.0);
        assert!(r.lift.z < 0.0);
        // Scalar recomputation: |F_l| = k (fx² + fz²) A c_l(atan(0.1)).
        let alpha: f64 = (0.1f64).atan();
        let cl = alpha / 0.3;
        assert_relative_eq!(r.lift.norm(), 0.6125 * 25.25 * cl, epsilon = 1e-12);
        assert_relative_eq!(r.lift.dot(&r.drag), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn plate_ignores_lateral_flow() {
        let p = plate(1.0, 0.1, 1.0, 0.3);
        let a = aero_force(&p, &Vector3::new(-3.0, 7.0, 1.0));
        let b = aero_force(&p, &Vector3::new(-3.0, 0.0, 1.0));
        assert_eq!(a, b);
    }

    #[test]
    fn cylinder_side_flow_maps_back_laterally() {
        let p = AeroPrimitive::new(AeroKind::QuasiCylindrical, 2.0, 0.3, 0.05, 0.8, 0.4).unwrap();
        let r = aero_force(&p, &Vector3::new(0.0, 3.0, 0.0));
        assert_relative_eq!(r.drag, Vector3::new(0.0, 0.6125 * 9.0 * 2.0 * 0.8, 0.0), epsilon = 1e-12);
        assert_relative_eq!(r.lift.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hull_drag_distribution() {
        assert_eq!(distribute_hull_drag(1, 0.3, &[]).unwrap(), vec![0.3]);
        let split = distribute_hull_drag(3, 0.21, &[1.0, 0.1, 1.0]).unwrap();
        assert_relative_eq!(split[0], 0.1, epsilon = 1e-15);
        assert_relative_eq!(split[1], 0.01, epsilon = 1e-15);
        assert_relative_eq!(split[2], 0.1, epsilon = 1e-15);
        assert!((split.iter().sum::<f64>() - 0.21).abs() < 1e-12);
        assert_eq!(distribute_hull_drag(2, 0.2, &[0.0, 0.0]), Err(AeroError::AllZeroWeights));
        assert_eq!(distribute_hull_drag::<f64>(0, 0.2, &[]), Err(AeroError::NoSections));
        assert!(matches!(distribute_hull_drag(2, 0.2, &[1.0]), Err(AeroError::WeightCount { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let p = AeroPrimitive::<f32>::new(AeroKind::QuasiPlanar, 1.0, 1.2, 0.05, 1.0, 0.3).unwrap();
        assert!((lift_coefficient(0.15f32, &p) - 0.6).abs() < 1e-6);
        let r = aero_force(&p, &Vector3::new(-5.0f32, 0.0, 0.0));
        assert!((r.drag.x + 0.765_625).abs() < 1e-5);
    }

    #[test]
    fn primitive_validation() {
        assert!(AeroPrimitive::new(AeroKind::QuasiPlanar, 0.0, 1.0, 0.1, 1.0, 0.3).is_err());
        assert!(AeroPrimitive::new(AeroKind::QuasiPlanar, 1.0, 1.0, 0.1, 1.0, FRAC_PI_2).is_err());
        assert!(AeroPrimitive::new(AeroKind::QuasiPlanar, 1.0, -1.0, 0.1, 1.0, 0.3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn prim() -> impl Strategy<Value = AeroPrimitive<f64>> {
            (0.01..5.0f64, 0.0..2.0f64, 0.0..0.5f64, 0.0..2.0f64, 0.05..1.5f64, any::<bool>()).prop_map(
                |(area, cl0, cd0, cd1, stall, cyl)| {
                    let kind = if cyl { AeroKind::QuasiCylindrical } else { AeroKind::QuasiPlanar };
                    AeroPrimitive::new(kind, area, cl0, cd0, cd1, stall).unwrap()
                },
            )
        }

        proptest! {
            #[test]
            fn lift_curve_shape(p in prim(), a in -FRAC_PI_2..FRAC_PI_2) {
                let cl = lift_coefficient(a, &p);
                prop_assert!((cl - lift_coefficient(-a, &p)).abs() < 1e-12);
                prop_assert!(cl <= p.cl0 + 1e-12 && cl >= -1e-12);
                let eps = 1e-9;
                prop_assert!((lift_coefficient(a + eps, &p) - cl).abs() < 1e-6);
            }

            #[test]
            fn drag_curve_between_endpoints(p in prim(), a in -FRAC_PI_2..FRAC_PI_2) {
                let cd = drag_coefficient(a, &p);
                let (lo, hi) = if p.cd0 < p.cd1 { (p.cd0, p.cd1) } else { (p.cd1, p.cd0) };
                prop_assert!(cd >= lo - 1e-12 && cd <= hi + 1e-12);
                prop_assert_eq!(cd, drag_coefficient(-a, &p));
            }

            #[test]
            fn lift_orthogonal_to_drag(p in prim(), f in prop::array::uniform3(-20.0..20.0f64)) {
                let r = aero_force(&p, &Vector3::from(f));
                let scale = (r.lift.norm() * r.drag.norm()).max(1e-300);
                prop_assert!(r.lift.dot(&r.drag).abs() <= 1e-9 * scale);
                // Drag never opposes the relative air velocity.
                prop_assert!(r.drag_dir.dot(&Vector3::from(f)) >= -1e-12);
            }

            #[test]
            fn forces_scale_quadratically(p in prim(), f in prop::array::uniform3(-20.0..20.0f64)) {
                let f = Vector3::from(f);
                let one = aero_force(&p, &f);
                let two = aero_force(&p, &(f * 2.0));
                prop_assert!((two.total() - one.total() * 4.0).norm() <= 1e-9 * (1.0 + one.total().norm()));
                let mut wide = p;
                wide.area *= 3.0;
                let three = aero_force(&wide, &f);
                prop_assert!((three.total() - one.total() * 3.0).norm() <= 1e-9 * (1.0 + one.total().norm()));
            }

            #[test]
            fn hull_drag_sums_to_total(total in 0.0..2.0f64, w in prop::collection::vec(0.0..10.0f64, 1..12)) {
                prop_assume!(w.iter().any(|x| *x > 0.0));
                let split = distribute_hull_drag(w.len(), total, &w).unwrap();
                prop_assert!((split.iter().sum::<f64>() - total).abs() < 1e-12);
            }
        }
    }
}
