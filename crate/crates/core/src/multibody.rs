//! Fixed-step rigid-body dynamics for bodies coupled by spring-damper joints.
//!
//! Every body carries its own 6-DOF state. Joints are not constraints: they are
//! stiff, heavily damped springs between a frame on the parent and a frame on
//! the child, with an optional dead zone (free play) per axis. External
//! wrenches (aerodynamics, buoyancy, thrust) are supplied by the caller on each
//! step. Integration is semi-implicit Euler at a fixed time step.

use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultibodyError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("non-finite state in body `{body}` at t = {time} s")]
    NonFiniteState { body: String, time: f64 },
    #[error("body `{0}`: mass must be positive")]
    NonPositiveMass(String),
    #[error("body `{0}`: inertia must be symmetric positive definite")]
    BadInertia(String),
    #[error("duplicate body name `{0}`")]
    DuplicateBody(String),
    #[error("joint `{joint}` references unknown body index {index}")]
    DanglingBody { joint: String, index: usize },
    #[error("joint `{0}`: stiffness, damping and free play must be non-negative")]
    NegativeJointParameter(String),
}

/// Index of a body inside a [`World`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BodyId(pub usize);

/// Geometric shape descriptor, dimensions in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box { size: [f64; 3] },
    /// Axis along body x.
    Cylinder { radius: f64, length: f64 },
    Ellipsoid { semi_axes: [f64; 3] },
}

impl Shape {
    /// Principal moments of a homogeneous solid of this shape.
    pub fn solid_inertia(&self, mass: f64) -> [f64; 3] {
        match *self {
            Shape::Box { size: [a, b, c] } => [
                mass * (b * b + c * c) / 12.0,
                mass * (a * a + c * c) / 12.0,
                mass * (a * a + b * b) / 12.0,
            ],
            Shape::Cylinder { radius: r, length: l } => {
                let across = mass * (3.0 * r * r + l * l) / 12.0;
                [0.5 * mass * r * r, across, across]
            }
            Shape::Ellipsoid { semi_axes: [a, b, c] } => [
                mass * (b * b + c * c) / 5.0,
                mass * (a * a + c * c) / 5.0,
                mass * (a * a + b * b) / 5.0,
            ],
        }
    }
}

/// A rigid component with mass properties. The body frame sits at the centre
/// of mass and is aligned with the principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyPrimitive<T: Real> {
    pub name: String,
    pub mass: T,
    pub inertia: Matrix3<T>,
    pub shape: Shape,
    inverse_inertia: Matrix3<T>,
}

impl<T: Real> BodyPrimitive<T> {
    pub fn new(
        name: impl Into<String>,
        mass: T,
        inertia: Matrix3<T>,
        shape: Shape,
    ) -> Result<Self, MultibodyError> {
        let name = name.into();
        if !(mass > T::zero()) {
            return Err(MultibodyError::NonPositiveMass(name));
        }
        let symmetric = (inertia - inertia.transpose()).abs().max() <= T::lit(1e-12) * inertia.abs().max();
        let inverse_inertia = match inertia.cholesky() {
            Some(chol) if symmetric => chol.inverse(),
            _ => return Err(MultibodyError::BadInertia(name)),
        };
        Ok(Self { name, mass, inertia, shape, inverse_inertia })
    }

    /// Body with a diagonal (principal) inertia tensor.
    pub fn principal(
        name: impl Into<String>,
        mass: T,
        moments: Vector3<T>,
        shape: Shape,
    ) -> Result<Self, MultibodyError> {
        Self::new(name, mass, Matrix3::from_diagonal(&moments), shape)
    }

    pub fn inverse_inertia(&self) -> &Matrix3<T> {
        &self.inverse_inertia
    }
}

/// Kinematic state. Angular velocity is expressed in the body frame, the rest
/// in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState<T: Real> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
    pub velocity: Vector3<T>,
    pub angular_velocity: Vector3<T>,
}

impl<T: Real> Default for BodyState<T> {
    fn default() -> Self {
        Self::at_rest(Vector3::zeros(), UnitQuaternion::identity())
    }
}

impl<T: Real> BodyState<T> {
    pub fn at_rest(position: Vector3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self {
            position,
            orientation,
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }

    pub fn pose(&self) -> Isometry3<T> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// Angular velocity in the world frame.
    pub fn world_angular_velocity(&self) -> Vector3<T> {
        self.orientation * self.angular_velocity
    }

    /// World-frame velocity of a point given in body coordinates.
    pub fn point_velocity(&self, local_point: &Vector3<T>) -> Vector3<T> {
        self.velocity + self.world_angular_velocity().cross(&(self.orientation * local_point))
    }

    pub fn is_finite(&self) -> bool {
        let q = self.orientation.as_ref().coords;
        self.position.iter().chain(self.velocity.iter()).chain(self.angular_velocity.iter()).chain(q.iter()).all(|c| c.is_finite())
    }
}

/// Force and torque acting on one body. Torque is about the body's centre of
/// mass; both are in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench<T: Real> {
    pub body: BodyId,
    pub force: Vector3<T>,
    pub torque: Vector3<T>,
}

impl<T: Real> Wrench<T> {
    pub fn zero(body: BodyId) -> Self {
        Self { body, force: Vector3::zeros(), torque: Vector3::zeros() }
    }

    /// Force applied at a world-frame point on a body whose centre of mass is
    /// at `com`.
    pub fn at_point(body: BodyId, force: Vector3<T>, point: &Vector3<T>, com: &Vector3<T>) -> Self {
        Self { body, force, torque: (point - com).cross(&force) }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|c| c.is_finite())
    }
}

/// Spring-damper coupling between two bodies.
///
/// The joint frame on the parent is the reference: displacements and relative
/// velocities are expressed in it. Rotation is measured as intrinsic XYZ
/// angles of the child joint frame relative to the parent joint frame, which is
/// adequate for the small deflections the joints see (|angle| < 0.5 rad).
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec<T: Real> {
    pub name: String,
    pub parent: BodyId,
    pub child: BodyId,
    pub parent_frame: Isometry3<T>,
    pub child_frame: Isometry3<T>,
    pub linear_stiffness: Vector3<T>,
    pub linear_damping: Vector3<T>,
    pub rotational_stiffness: Vector3<T>,
    pub rotational_damping: Vector3<T>,
    pub linear_free_play: Vector3<T>,
    pub rotational_free_play: Vector3<T>,
    /// Spring rest angles; servos drive these.
    pub rest_rotation: Vector3<T>,
    /// Spring rest translation in the parent joint frame.
    pub rest_offset: Vector3<T>,
}

impl<T: Real> JointSpec<T> {
    /// A joint with isotropic constants and no free play.
    pub fn uniform(
        name: impl Into<String>,
        parent: BodyId,
        child: BodyId,
        parent_frame: Isometry3<T>,
        child_frame: Isometry3<T>,
        linear: (T, T),
        rotational: (T, T),
    ) -> Self {
        Self {
            name: name.into(),
            parent,
            child,
            parent_frame,
            child_frame,
            linear_stiffness: Vector3::repeat(linear.0),
            linear_damping: Vector3::repeat(linear.1),
            rotational_stiffness: Vector3::repeat(rotational.0),
            rotational_damping: Vector3::repeat(rotational.1),
            linear_free_play: Vector3::zeros(),
            rotational_free_play: Vector3::zeros(),
            rest_rotation: Vector3::zeros(),
            rest_offset: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<(), MultibodyError> {
        let ok = [
            &self.linear_stiffness,
            &self.linear_damping,
            &self.rotational_stiffness,
            &self.rotational_damping,
            &self.linear_free_play,
            &self.rotational_free_play,
        ]
        .iter()
        .all(|v| v.iter().all(|c| *c >= T::zero()));
        if ok {
            Ok(())
        } else {
            Err(MultibodyError::NegativeJointParameter(self.name.clone()))
        }
    }
}

/// Part of `x` outside the symmetric dead zone `[-half, half]`.
#[inline]
pub fn dead_zone<T: Real>(x: T, half: T) -> T {
    if x > half {
        x - half
    } else if x < -half {
        x + half
    } else {
        T::zero()
    }
}

/// Intrinsic X-Y-Z angles `(a, b, c)` with `R = Rx(a) Ry(b) Rz(c)`.
pub fn intrinsic_xyz_angles<T: Real>(rotation: &UnitQuaternion<T>) -> Vector3<T> {
    let m = rotation.to_rotation_matrix();
    let m = m.matrix();
    let sb = m[(0, 2)].clamp_to(-T::one(), T::one());
    Vector3::new((-m[(1, 2)]).atan2(m[(2, 2)]), sb.asin(), (-m[(0, 1)]).atan2(m[(0, 0)]))
}

/// Relative displacement of a joint: translation and intrinsic XYZ angles of
/// the child joint frame, both expressed in the parent joint frame.
pub fn joint_displacement<T: Real>(
    joint: &JointSpec<T>,
    parent: &BodyState<T>,
    child: &BodyState<T>,
) -> (Vector3<T>, Vector3<T>) {
    let frame_p = parent.pose() * joint.parent_frame;
    let frame_c = child.pose() * joint.child_frame;
    let lin = frame_p.rotation.inverse() * (frame_c.translation.vector - frame_p.translation.vector);
    let rel = frame_p.rotation.inverse() * frame_c.rotation;
    (lin, intrinsic_xyz_angles(&rel))
}

/// Spring-damper wrenches `(on_parent, on_child)`.
///
/// Both forces act at the midpoint of the two joint anchors, so the pair is
/// equal and opposite as forces and as torques about any common point. The
/// damper acts inside the free-play dead zone; the spring does not.
pub fn joint_wrench<T: Real>(
    joint: &JointSpec<T>,
    parent: &BodyState<T>,
    child: &BodyState<T>,
) -> (Wrench<T>, Wrench<T>) {
    let frame_p = parent.pose() * joint.parent_frame;
    let frame_c = child.pose() * joint.child_frame;
    let rot_p = frame_p.rotation;
    let inv_p = rot_p.inverse();
    let anchor_p = frame_p.translation.vector;
    let anchor_c = frame_c.translation.vector;

    let lin = inv_p * (anchor_c - anchor_p) - joint.rest_offset;
    let angles = intrinsic_xyz_angles(&(inv_p * frame_c.rotation)) - joint.rest_rotation;

    let vel_p = parent.point_velocity(&joint.parent_frame.translation.vector);
    let vel_c = child.point_velocity(&joint.child_frame.translation.vector);
    let rel_vel = inv_p * (vel_c - vel_p);
    let rel_rate = inv_p * (child.world_angular_velocity() - parent.world_angular_velocity());

    let mut force_j = Vector3::zeros();
    let mut torque_j = Vector3::zeros();
    for i in 0..3 {
        force_j[i] = -joint.linear_stiffness[i] * dead_zone(lin[i], joint.linear_free_play[i])
            - joint.linear_damping[i] * rel_vel[i];
        torque_j[i] = -joint.rotational_stiffness[i] * dead_zone(angles[i], joint.rotational_free_play[i])
            - joint.rotational_damping[i] * rel_rate[i];
    }
    let force = rot_p * force_j;
    let torque = rot_p * torque_j;
    let two = T::lit(2.0);
    let midpoint = (anchor_p + anchor_c) / two;

    let on_child = Wrench {
        body: joint.child,
        force,
        torque: (midpoint - child.position).cross(&force) + torque,
    };
    let on_parent = Wrench {
        body: joint.parent,
        force: -force,
        torque: (midpoint - parent.position).cross(&(-force)) - torque,
    };
    (on_parent, on_child)
}

/// Elastic energy stored in a joint's springs.
pub fn joint_potential<T: Real>(joint: &JointSpec<T>, parent: &BodyState<T>, child: &BodyState<T>) -> T {
    let (lin, angles) = joint_displacement(joint, parent, child);
    let lin = lin - joint.rest_offset;
    let angles = angles - joint.rest_rotation;
    let half = T::lit(0.5);
    (0..3).fold(T::zero(), |acc, i| {
        let dl = dead_zone(lin[i], joint.linear_free_play[i]);
        let da = dead_zone(angles[i], joint.rotational_free_play[i]);
        acc + half * (joint.linear_stiffness[i] * dl * dl + joint.rotational_stiffness[i] * da * da)
    })
}

/// One-sided vertical spring-damper acting on any body whose centre of mass
/// dips below `height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundContact<T: Real> {
    pub height: T,
    pub stiffness: T,
    pub damping: T,
}

#[derive(Debug, Clone)]
pub struct Body<T: Real> {
    pub primitive: BodyPrimitive<T>,
    pub state: BodyState<T>,
}

/// Bodies, joints and the simulation clock.
#[derive(Debug, Clone)]
pub struct World<T: Real> {
    bodies: Vec<Body<T>>,
    pub joints: Vec<JointSpec<T>>,
    pub gravity: Vector3<T>,
    pub ground: Option<GroundContact<T>>,
    time: T,
    force_scratch: Vec<(Vector3<T>, Vector3<T>)>,
}

impl<T: Real> Default for World<T> {
    fn default() -> Self {
        Self::new(Vector3::new(T::zero(), T::zero(), -T::lit(crate::GRAVITY)))
    }
}

impl<T: Real> World<T> {
    pub fn new(gravity: Vector3<T>) -> Self {
        Self {
            bodies: Vec::new(),
            joints: Vec::new(),
            gravity,
            ground: None,
            time: T::zero(),
            force_scratch: Vec::new(),
        }
    }

    pub fn add_body(&mut self, primitive: BodyPrimitive<T>, state: BodyState<T>) -> Result<BodyId, MultibodyError> {
        if self.body_id(&primitive.name).is_some() {
            return Err(MultibodyError::DuplicateBody(primitive.name));
        }
        self.bodies.push(Body { primitive, state });
        Ok(BodyId(self.bodies.len() - 1))
    }

    pub fn add_joint(&mut self, joint: JointSpec<T>) -> Result<usize, MultibodyError> {
        joint.validate()?;
        for id in [joint.parent, joint.child] {
            if id.0 >= self.bodies.len() {
                return Err(MultibodyError::DanglingBody { joint: joint.name.clone(), index: id.0 });
            }
        }
        self.joints.push(joint);
        Ok(self.joints.len() - 1)
    }

    pub fn body_id(&self, name: &str) -> Option<BodyId> {
        self.bodies.iter().position(|b| b.primitive.name == name).map(BodyId)
    }

    pub fn bodies(&self) -> &[Body<T>] {
        &self.bodies
    }

    pub fn body(&self, id: BodyId) -> &Body<T> {
        &self.bodies[id.0]
    }

    pub fn state(&self, id: BodyId) -> &BodyState<T> {
        &self.bodies[id.0].state
    }

    pub fn state_mut(&mut self, id: BodyId) -> &mut BodyState<T> {
        &mut self.bodies[id.0].state
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn total_mass(&self) -> T {
        self.bodies.iter().fold(T::zero(), |acc, b| acc + b.primitive.mass)
    }

    pub fn center_of_mass(&self) -> Vector3<T> {
        let weighted = self
            .bodies
            .iter()
            .fold(Vector3::zeros(), |acc, b| acc + b.state.position * b.primitive.mass);
        weighted / self.total_mass()
    }

    /// All joint wrenches, two per joint.
    pub fn joint_wrenches(&self) -> Vec<Wrench<T>> {
        let mut out = Vec::with_capacity(self.joints.len() * 2);
        for joint in &self.joints {
            let (p, c) = joint_wrench(joint, &self.bodies[joint.parent.0].state, &self.bodies[joint.child.0].state);
            out.push(p);
            out.push(c);
        }
        out
    }

    /// Advances every body one semi-implicit Euler step.
    pub fn step(&mut self, dt: T, external: &[Wrench<T>]) -> Result<(), MultibodyError> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(MultibodyError::InvalidTimeStep(dt.to_f64_lossy()));
        }
        let n = self.bodies.len();
        let mut acc = std::mem::take(&mut self.force_scratch);
        acc.clear();
        acc.extend(self.bodies.iter().map(|b| (self.gravity * b.primitive.mass, Vector3::zeros())));

        for joint in &self.joints {
            let (p, c) = joint_wrench(joint, &self.bodies[joint.parent.0].state, &self.bodies[joint.child.0].state);
            for w in [p, c] {
                acc[w.body.0].0 += w.force;
                acc[w.body.0].1 += w.torque;
            }
        }
        for w in external {
            if w.body.0 < n {
                acc[w.body.0].0 += w.force;
                acc[w.body.0].1 += w.torque;
            }
        }
        if let Some(ground) = self.ground {
            for (i, body) in self.bodies.iter().enumerate() {
                let depth = ground.height - body.state.position.z;
                if depth > T::zero() {
                    let push = (ground.stiffness * depth - ground.damping * body.state.velocity.z).max(T::zero());
                    acc[i].0.z += push;
                }
            }
        }

        for (body, (force, torque)) in self.bodies.iter_mut().zip(acc.iter()) {
            let state = &mut body.state;
            let prim = &body.primitive;
            state.velocity += force * (dt / prim.mass);
            state.position += state.velocity * dt;

            let torque_body = state.orientation.inverse() * torque;
            let w = state.angular_velocity;
            let gyro = w.cross(&(prim.inertia * w));
            state.angular_velocity += prim.inverse_inertia() * (torque_body - gyro) * dt;
            let delta = UnitQuaternion::from_scaled_axis(state.angular_velocity * dt);
            state.orientation = state.orientation * delta;
            state.orientation.renormalize();
        }
        self.force_scratch = acc;
        self.time += dt;

        if let Some(bad) = self.bodies.iter().find(|b| !b.state.is_finite()) {
            return Err(MultibodyError::NonFiniteState {
                body: bad.primitive.name.clone(),
                time: self.time.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Total linear momentum and angular momentum about the world origin.
    pub fn total_momentum(&self) -> (Vector3<T>, Vector3<T>) {
        self.bodies.iter().fold((Vector3::zeros(), Vector3::zeros()), |(lin, ang), b| {
            let p = b.state.velocity * b.primitive.mass;
            let spin = b.state.orientation * (b.primitive.inertia * b.state.angular_velocity);
            (lin + p, ang + b.state.position.cross(&p) + spin)
        })
    }

    pub fn kinetic_energy(&self) -> T {
        let half = T::lit(0.5);
        self.bodies.iter().fold(T::zero(), |acc, b| {
            let w = b.state.angular_velocity;
            acc + half * b.primitive.mass * b.state.velocity.norm_squared() + half * w.dot(&(b.primitive.inertia * w))
        })
    }

    /// Kinetic + joint elastic + gravitational potential energy.
    pub fn mechanical_energy(&self) -> T {
        let elastic = self.joints.iter().fold(T::zero(), |acc, j| {
            acc + joint_potential(j, &self.bodies[j.parent.0].state, &self.bodies[j.child.0].state)
        });
        let gravitational = self
            .bodies
            .iter()
            .fold(T::zero(), |acc, b| acc - b.primitive.mass * self.gravity.dot(&b.state.position));
        self.kinetic_energy() + elastic + gravitational
    }
}
